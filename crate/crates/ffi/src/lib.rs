//! C ABI over the `boojum` library.
//!
//! Every function returns a [`BoojumStatus`]; results go through out-pointers. On failure the
//! message is available from [`boojum_last_error_message`] on the same thread. `lambda = inf`
//! is passed as `INFINITY`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use boojum::closedform_inf::d_inf_exact;
use boojum::geodesic::trace_t;
use boojum::profile1d::{d_lambda_director, Grid1D, SolveOptions};
use boojum::recovery::{
    energy_report_inf, FinConstruction, QuadratureSettings, RecoveryParamsFin, RecoveryParamsInf, RegionEnergyReport,
};
use boojum::sphere::{integrate_d_sphere, BoundaryCondition, DensitySource, QuadratureSpec};
use boojum::{Director, Error, Lambda};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoojumStatus {
    Ok = 0,
    InvalidArgument = 1,
    NotConverged = 2,
    NullPointer = 3,
    Panic = 4,
    Io = 5,
}

impl From<&Error> for BoojumStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NewtonFailed { .. }
            | Error::NotConverged(_)
            | Error::QuadratureNotConverged { .. }
            | Error::InterfaceMismatch { .. } => Self::NotConverged,
            Error::NodeFailed { source, .. } => Self::from(source.as_ref()),
            Error::Io(_) | Error::Json(_) => Self::Io,
            _ => Self::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|e| {
        let mut bytes = e.into_vec();
        bytes.retain(|&b| b != 0);
        CString::new(bytes).expect("interior NULs removed")
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Fail(BoojumStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(BoojumStatus::from(&e), e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(BoojumStatus::NullPointer, format!("{name} must not be NULL"))
}

/// Runs `f`, recording the error message and turning panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BoojumStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BoojumStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            BoojumStatus::Panic
        }
    }
}

/// Writes `value` through `out` after checking it.
///
/// # Safety
/// `out` must be NULL or valid for a write of `T`.
unsafe fn put<T>(out: *mut T, name: &str, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(name));
    }
    // SAFETY: non-null and valid per the caller's contract.
    unsafe { out.write(value) };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn boojum_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn boojum_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Closed-form `D_inf` for the director `(-sqrt(1 - v3^2), 0, v3)`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn boojum_d_inf_exact(v3: f64, out: *mut f64) -> BoojumStatus {
    guard(|| {
        let v = Director::from_v3(v3)?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, "out", d_inf_exact(&v)) }
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BoojumDLambda {
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimal transition energy of the uniaxial boundary tensor with director
/// `(-sqrt(1 - v3^2), 0, v3)` on a grid of `n_nodes` nodes over `[0, t_max]`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `BoojumDLambda`.
#[no_mangle]
pub unsafe extern "C" fn boojum_d_lambda(
    lambda: f64,
    v3: f64,
    t_max: f64,
    n_nodes: usize,
    out: *mut BoojumDLambda,
) -> BoojumStatus {
    guard(|| {
        let lambda = Lambda::finite(lambda)?;
        let grid = Grid1D::new(t_max, n_nodes)?;
        let d = d_lambda_director(&Director::from_v3(v3)?, lambda, &grid, &SolveOptions::default())?;
        let r = BoojumDLambda {
            value: d.value,
            grad_norm: d.report.grad_norm,
            iterations: d.report.iterations,
            converged: d.converged,
        };
        // SAFETY: forwarded caller contract.
        unsafe { put(out, "out", r) }
    })
}

/// Sphere integral of `D_lambda` for longitudinal boundary data. `exact` selects the closed-form
/// density, which needs `lambda = INFINITY`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn boojum_sphere_longitudinal(lambda: f64, exact: bool, out: *mut f64) -> BoojumStatus {
    guard(|| {
        let lambda = Lambda::finite(lambda)?;
        let source = if exact { DensitySource::Exact } else { DensitySource::minimized_default() };
        let r = integrate_d_sphere(lambda, &BoundaryCondition::Longitudinal, &QuadratureSpec::default(), &source)?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, "out", r.value) }
    })
}

/// `tr(Q*(alpha, beta)^3)` in the frame of a director with third component `v3`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn boojum_trace_t(alpha: f64, beta: f64, v3: f64, out: *mut f64) -> BoojumStatus {
    guard(|| {
        if !(alpha.is_finite() && beta.is_finite() && v3.abs() < 1.0) {
            return Err(Fail(BoojumStatus::InvalidArgument, "need finite angles and |v3| < 1".into()));
        }
        // SAFETY: forwarded caller contract.
        unsafe { put(out, "out", trace_t(alpha, beta, v3)) }
    })
}

/// Rescaled region energies of a recovery construction.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BoojumRegionEnergies {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub omega4: f64,
    pub total: f64,
    pub lower_bound_ref: f64,
    /// NaN for the `lambda = inf` construction.
    pub lipschitz_hat: f64,
    pub extension_lipschitz_scaled: f64,
}

impl From<&RegionEnergyReport> for BoojumRegionEnergies {
    fn from(r: &RegionEnergyReport) -> Self {
        let e = |n: &str| r.region(n).unwrap_or(f64::NAN);
        Self {
            omega1: e("omega1"),
            omega2: e("omega2"),
            omega3: e("omega3"),
            omega4: e("omega4"),
            total: r.total,
            lower_bound_ref: r.lower_bound_ref,
            lipschitz_hat: r.lipschitz_hat.unwrap_or(f64::NAN),
            extension_lipschitz_scaled: r.extension_lipschitz_scaled,
        }
    }
}

/// Region energies of the `lambda = inf` construction at layer thickness `eta`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `BoojumRegionEnergies`.
#[no_mangle]
pub unsafe extern "C" fn boojum_recovery_inf(eta: f64, out: *mut BoojumRegionEnergies) -> BoojumStatus {
    guard(|| {
        let r = energy_report_inf(&RecoveryParamsInf::new(eta)?)?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, "out", BoojumRegionEnergies::from(&r)) }
    })
}

/// Opaque finite-lambda construction, reusable across layer thicknesses.
pub struct BoojumFin {
    inner: FinConstruction,
}

/// Builds the finite-lambda construction for partition width `h`, mollifier width `eps` and
/// field ratio `lambda`, with profiles on `n_nodes` nodes over `[0, t_max]`. Free the handle
/// with [`boojum_fin_free`].
///
/// # Safety
/// `out` must be NULL or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn boojum_fin_new(
    h: f64,
    eps: f64,
    lambda: f64,
    t_max: f64,
    n_nodes: usize,
    out: *mut *mut BoojumFin,
) -> BoojumStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = RecoveryParamsFin::at_ratio(ETA_PROBE, h, eps, lambda)?.with_grid(Grid1D::new(t_max, n_nodes)?);
        let inner = FinConstruction::build(&p)?;
        // SAFETY: checked non-null above; caller guarantees validity.
        unsafe { put(out, "out", Box::into_raw(Box::new(BoojumFin { inner }))) }
    })
}

/// Placeholder thickness for parameter validation; the construction itself does not depend on it.
const ETA_PROBE: f64 = 0.1;

/// Releases a handle from [`boojum_fin_new`]. NULL is ignored.
///
/// # Safety
/// `fin` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn boojum_fin_free(fin: *mut BoojumFin) {
    if !fin.is_null() {
        // SAFETY: created by Box::into_raw in boojum_fin_new and not freed before.
        drop(unsafe { Box::from_raw(fin) });
    }
}

/// # Safety
/// `fin` must be NULL or a live handle.
unsafe fn handle<'a>(fin: *const BoojumFin) -> Result<&'a FinConstruction, Fail> {
    // SAFETY: forwarded caller contract.
    unsafe { fin.as_ref() }.map(|f| &f.inner).ok_or_else(|| null("fin"))
}

/// Region energies at layer thickness `eta` and bulk length `xi` (`INFINITY` allowed).
///
/// # Safety
/// `fin` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn boojum_fin_report(
    fin: *const BoojumFin,
    eta: f64,
    xi: f64,
    out: *mut BoojumRegionEnergies,
) -> BoojumStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let c = unsafe { handle(fin) }?;
        let r = c.energy_report(eta, xi, &QuadratureSettings::default())?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, "out", BoojumRegionEnergies::from(&r)) }
    })
}

/// The full report as a JSON string; release it with [`boojum_string_free`].
///
/// # Safety
/// `fin` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn boojum_fin_report_json(
    fin: *const BoojumFin,
    eta: f64,
    xi: f64,
    out: *mut *mut c_char,
) -> BoojumStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let c = unsafe { handle(fin) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = c.energy_report(eta, xi, &QuadratureSettings::default())?;
        let json = serde_json::to_string(&r).map_err(Error::from)?;
        let s = CString::new(json).map_err(|e| Fail(BoojumStatus::Io, e.to_string()))?;
        // SAFETY: checked non-null above.
        unsafe { put(out, "out", s.into_raw()) }
    })
}

/// Field value at `(r, phi)` for layer thickness `eta`, written as `Q11, Q12, Q13, Q22, Q23`.
///
/// # Safety
/// `fin` must be NULL or a live handle; `out` must be NULL or writable for five doubles.
#[no_mangle]
pub unsafe extern "C" fn boojum_fin_tensor(
    fin: *const BoojumFin,
    eta: f64,
    r: f64,
    phi: f64,
    out: *mut [f64; 5],
) -> BoojumStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let c = unsafe { handle(fin) }?;
        let q = c.tensor(eta, r, phi)?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, "out", q.upper()) }
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn boojum_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses_follow_error_kinds() {
        assert_eq!(BoojumStatus::from(&Error::NotConverged("x".into())), BoojumStatus::NotConverged);
        assert_eq!(BoojumStatus::from(&Error::InvalidArgument("x".into())), BoojumStatus::InvalidArgument);
        let nested = Error::NodeFailed { index: 0, phi: 0.0, source: Box::new(Error::NotConverged("x".into())) };
        assert_eq!(BoojumStatus::from(&nested), BoojumStatus::NotConverged);
    }

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, BoojumStatus::Panic);
        let msg = unsafe { std::ffi::CStr::from_ptr(boojum_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn interior_nul_is_stripped() {
        set_error("a\0b".into());
        let msg = unsafe { std::ffi::CStr::from_ptr(boojum_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "ab");
    }
}
