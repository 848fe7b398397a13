//! The `lambda = inf` construction, a unit director field `n = (-sin Phi, 0, cos Phi)`
//! described by its angle `Phi(r, phi)` to `e3`.
//!
//! Upper half (`phi <= pi/2`), with `eta` the layer thickness:
//! - `Omega1 = {2 eta < phi}`: the exact half-line profile in `t = (r - 1)/eta` started at angle
//!   `pi/2 - phi`;
//! - `Omega2 = {r > 1 + 2 eta, phi < 2 eta}`: the angle at `phi = 2 eta` scaled linearly to `0`
//!   on the axis;
//! - `Omega3 = {r < 1 + eta, phi < eta}`: the boojum `atan2(tau, s) - phi` in `s = (r - 1)/eta`,
//!   `tau = phi/eta`;
//! - `Omega4`: the rest, split into three rectangles filled by Coons patches of the traces.
//!
//! The lower half is the mirror image through `x3 = 0`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::coons::{linear, Coons};
use super::quad::{duffy_unit_square, rect_rule, refine, QuadratureSettings};
use super::{angle_density, RecoveryMode, RegionEnergy, RegionEnergyReport, EDGE_SAMPLES};
use crate::closedform_inf::{angle_exact, KAPPA};
use crate::error::{Error, Result};
use crate::lambda::Lambda;
use crate::sphere::{integrate_d_sphere, BoundaryCondition, DensitySource, QuadratureSpec};
use crate::SCHEMA_VERSION;

pub const INF_INTERFACE_TOL: f64 = 1e-10;
/// Truncation of `t = (r - 1)/eta`; the profile is within `exp(-kappa T/2)` of `e3` beyond it.
pub const T_MAX: f64 = 40.0;
/// Largest admissible layer thickness.
pub const ETA_MAX: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryParamsInf {
    eta: f64,
    quad: QuadratureSettings,
}

impl RecoveryParamsInf {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= ETA_MAX) {
            return Err(Error::InvalidArgument(format!("eta = {eta} must lie in (0, {ETA_MAX}]")));
        }
        Ok(Self { eta, quad: QuadratureSettings::default() })
    }

    pub fn with_quadrature(mut self, quad: QuadratureSettings) -> Result<Self> {
        quad.validate()?;
        self.quad = quad;
        Ok(self)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn quadrature(&self) -> &QuadratureSettings {
        &self.quad
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfRegion {
    Omega1,
    Omega2,
    Omega3,
    Omega4,
}

/// `Phi` and its partial derivatives in `(r, phi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleSample {
    pub value: f64,
    pub d_r: f64,
    pub d_phi: f64,
}

impl From<super::coons::Jet<f64>> for AngleSample {
    fn from(j: super::coons::Jet<f64>) -> Self {
        Self { value: j.value, d_r: j.d_r, d_phi: j.d_phi }
    }
}

pub struct InfConstruction {
    params: RecoveryParamsInf,
    /// `[1, 1+eta] x [eta, 2eta]`, `[1+eta, 1+2eta] x [eta, 2eta]`, `[1+eta, 1+2eta] x [0, eta]`.
    patches: [Coons<'static, f64>; 3],
}

fn layer(eta: f64, r: f64, phi: f64) -> AngleSample {
    let j = angle_exact((r - 1.0) / eta, FRAC_PI_2 - phi);
    AngleSample { value: j.value, d_r: j.d_t / eta, d_phi: -j.d_varphi }
}

fn column(eta: f64, r: f64, phi: f64) -> AngleSample {
    let b = layer(eta, r, 2.0 * eta);
    let k = phi / (2.0 * eta);
    AngleSample { value: k * b.value, d_r: k * b.d_r, d_phi: b.value / (2.0 * eta) }
}

fn boojum(eta: f64, r: f64, phi: f64) -> AngleSample {
    let (s, tau) = ((r - 1.0) / eta, phi / eta);
    let rho2 = s * s + tau * tau;
    AngleSample { value: tau.atan2(s) - phi, d_r: -tau / rho2 / eta, d_phi: s / rho2 / eta - 1.0 }
}

impl InfConstruction {
    pub fn new(params: RecoveryParamsInf) -> Self {
        let eta = params.eta;
        let top_mid = layer(eta, 1.0 + eta, 2.0 * eta).value;
        let right_end = layer(eta, 1.0 + 2.0 * eta, 2.0 * eta).value;
        let core = FRAC_PI_4 - eta;
        let a = Coons::new(
            (1.0, 1.0 + eta),
            (eta, 2.0 * eta),
            Box::new(move |v: f64| (FRAC_PI_2 - eta * (1.0 + v), -eta)),
            linear(core, top_mid),
            Box::new(move |u: f64| (1f64.atan2(u) - eta, -1.0 / (1.0 + u * u))),
            Box::new(move |u: f64| {
                let s = layer(eta, 1.0 + eta * u, 2.0 * eta);
                (s.value, s.d_r * eta)
            }),
        );
        let b = Coons::new(
            (1.0 + eta, 1.0 + 2.0 * eta),
            (eta, 2.0 * eta),
            linear(core, top_mid),
            Box::new(move |v: f64| (0.5 * (1.0 + v) * right_end, 0.5 * right_end)),
            linear(core, 0.5 * right_end),
            Box::new(move |u: f64| {
                let s = layer(eta, 1.0 + eta * (1.0 + u), 2.0 * eta);
                (s.value, s.d_r * eta)
            }),
        );
        let c = Coons::new(
            (1.0 + eta, 1.0 + 2.0 * eta),
            (0.0, eta),
            Box::new(move |v: f64| (v.atan() - eta * v, 1.0 / (1.0 + v * v) - eta)),
            Box::new(move |v: f64| (0.5 * v * right_end, 0.5 * right_end)),
            Box::new(|_| (0.0, 0.0)),
            linear(core, 0.5 * right_end),
        );
        Self { params, patches: [a, b, c] }
    }

    pub fn params(&self) -> &RecoveryParamsInf {
        &self.params
    }

    fn eta(&self) -> f64 {
        self.params.eta
    }

    /// Region containing `(r, phi)` after folding `phi` into the upper half.
    pub fn region_of(&self, r: f64, phi: f64) -> InfRegion {
        let eta = self.eta();
        let phi = phi.min(PI - phi);
        if phi >= 2.0 * eta {
            InfRegion::Omega1
        } else if r >= 1.0 + 2.0 * eta {
            InfRegion::Omega2
        } else if r <= 1.0 + eta && phi <= eta {
            InfRegion::Omega3
        } else {
            InfRegion::Omega4
        }
    }

    fn upper(&self, r: f64, phi: f64) -> AngleSample {
        let eta = self.eta();
        match self.region_of(r, phi) {
            InfRegion::Omega1 => layer(eta, r, phi),
            InfRegion::Omega2 => column(eta, r, phi),
            InfRegion::Omega3 => boojum(eta, r, phi),
            InfRegion::Omega4 => {
                let k = if r <= 1.0 + eta { 0 } else if phi >= eta { 1 } else { 2 };
                self.patches[k].eval(r, phi).into()
            }
        }
    }

    /// `Phi(r, phi)` for `r >= 1`, `phi` in `[0, pi]`. The lower half uses `pi - Phi(r, pi - phi)`,
    /// the same line field as the mirror image of the upper half.
    pub fn angle(&self, r: f64, phi: f64) -> Result<AngleSample> {
        if !(r >= 1.0 && (0.0..=PI).contains(&phi)) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("(r, phi) = ({r}, {phi}) is outside r >= 1, 0 <= phi <= pi")));
        }
        if phi <= FRAC_PI_2 {
            return Ok(self.upper(r, phi));
        }
        let m = self.upper(r, PI - phi);
        Ok(AngleSample { value: PI - m.value, d_r: -m.d_r, d_phi: m.d_phi })
    }

    pub fn director(&self, r: f64, phi: f64) -> Result<Vector3<f64>> {
        let a = self.angle(r, phi)?.value;
        Ok(Vector3::new(-a.sin(), 0.0, a.cos()))
    }

    /// Largest mismatch over all shared edges, boundary traces and the axis.
    pub fn check_interfaces(&self) -> Result<f64> {
        let eta = self.eta();
        let a = &self.patches;
        let at = |k: usize| (k as f64 + 0.5) / EDGE_SAMPLES as f64;
        // Line fields: angles are compared modulo pi.
        let gap = |x: f64, y: f64| (x - y).sin().abs();
        type Side<'s> = Box<dyn Fn(f64, f64) -> f64 + 's>;
        type EdgeSpec<'e, 's> = (&'e str, &'e Side<'s>, &'e Side<'s>, (f64, f64), (f64, f64));
        let l1: Side = Box::new(move |r, p| layer(eta, r, p).value);
        let l2: Side = Box::new(move |r, p| column(eta, r, p).value);
        let l3: Side = Box::new(move |r, p| boojum(eta, r, p).value);
        let pa: Side = Box::new(|r, p| a[0].eval(r, p).value);
        let pb: Side = Box::new(|r, p| a[1].eval(r, p).value);
        let pc: Side = Box::new(|r, p| a[2].eval(r, p).value);
        let data: Side = Box::new(|_, p| FRAC_PI_2 - p);
        let axis: Side = Box::new(|_, _| 0.0);
        let mirror: Side = Box::new(|r, p| {
            let m = self.upper(r, PI - p);
            PI - m.value
        });
        let e = 2.0 * eta;
        let r_far = 1.0 + T_MAX * eta;
        // (name, first side, second side, edge start, edge end) with edges as segments in (r, phi).
        let edges: Vec<EdgeSpec> = vec![
            ("omega1|omega2", &l1, &l2, (1.0 + e, e), (r_far, e)),
            ("omega1|omega4a", &l1, &pa, (1.0, e), (1.0 + eta, e)),
            ("omega1|omega4b", &l1, &pb, (1.0 + eta, e), (1.0 + e, e)),
            ("omega2|omega4b", &l2, &pb, (1.0 + e, eta), (1.0 + e, e)),
            ("omega2|omega4c", &l2, &pc, (1.0 + e, 0.0), (1.0 + e, eta)),
            ("omega3|omega4a", &l3, &pa, (1.0, eta), (1.0 + eta, eta)),
            ("omega3|omega4c", &l3, &pc, (1.0 + eta, 0.0), (1.0 + eta, eta)),
            ("omega4a|omega4b", &pa, &pb, (1.0 + eta, eta), (1.0 + eta, e)),
            ("omega4b|omega4c", &pb, &pc, (1.0 + eta, eta), (1.0 + e, eta)),
            ("boundary omega1", &l1, &data, (1.0, e), (1.0, FRAC_PI_2)),
            ("boundary omega4a", &pa, &data, (1.0, eta), (1.0, e)),
            ("boundary omega3", &l3, &data, (1.0, 0.0), (1.0, eta)),
            ("axis omega2", &l2, &axis, (1.0 + e, 0.0), (r_far, 0.0)),
            ("axis omega4c", &pc, &axis, (1.0 + eta, 0.0), (1.0 + e, 0.0)),
            ("axis omega3", &l3, &axis, (1.0, 0.0), (1.0 + eta, 0.0)),
            ("equator", &l1, &mirror, (1.0, FRAC_PI_2), (r_far, FRAC_PI_2)),
        ];
        let mut worst = 0.0f64;
        for (name, f, g, (r0, p0), (r1, p1)) in edges {
            let m = (0..EDGE_SAMPLES)
                .map(|k| {
                    let s = at(k);
                    let (r, p) = (r0 + s * (r1 - r0), p0 + s * (p1 - p0));
                    gap(f(r, p), g(r, p))
                })
                .fold(0.0, f64::max);
            if !(m <= INF_INTERFACE_TOL) {
                return Err(Error::InterfaceMismatch { edge: name.into(), mismatch: m });
            }
            worst = worst.max(m);
        }
        Ok(worst)
    }

    /// Largest difference quotient of `Phi` over a 41 x 41 lattice on each matching patch,
    /// multiplied by `eta`.
    pub fn extension_lipschitz_scaled(&self) -> f64 {
        let n = 41;
        let mut worst = 0.0f64;
        for c in &self.patches {
            let node = |i: usize, j: usize| {
                let r = c.r.0 + (c.r.1 - c.r.0) * i as f64 / (n - 1) as f64;
                let p = c.p.0 + (c.p.1 - c.p.0) * j as f64 / (n - 1) as f64;
                (r, p, c.eval(r, p).value)
            };
            let vals: Vec<Vec<(f64, f64, f64)>> = (0..n).map(|i| (0..n).map(|j| node(i, j)).collect()).collect();
            for i in 0..n {
                for j in 0..n {
                    let (r, p, v) = vals[i][j];
                    for (di, dj) in [(1, 0), (0, 1)] {
                        if i + di < n && j + dj < n {
                            let (r2, p2, v2) = vals[i + di][j + dj];
                            worst = worst.max((v2 - v).abs() / (r2 - r).hypot(p2 - p));
                        }
                    }
                }
            }
        }
        worst * self.eta()
    }

    /// Upper-half energies of the four regions at quadrature level `level`.
    fn region_energy(&self, region: InfRegion, n: usize) -> f64 {
        let eta = self.eta();
        let e = 2.0 * eta;
        let sum = |rule: Vec<(f64, f64, f64)>, f: &dyn Fn(f64, f64) -> f64| -> f64 {
            rule.into_iter().map(|(x, y, w)| w * f(x, y)).sum()
        };
        match region {
            InfRegion::Omega1 => sum(rect_rule(n, (0.0, T_MAX), (e, FRAC_PI_2)), &|t, p| {
                let r = 1.0 + eta * t;
                eta * angle_density(r, p, &layer(eta, r, p), eta)
            }),
            InfRegion::Omega2 => sum(rect_rule(n, (2.0, T_MAX), (0.0, e)), &|t, p| {
                let r = 1.0 + eta * t;
                eta * angle_density(r, p, &column(eta, r, p), eta)
            }),
            InfRegion::Omega3 => sum(duffy_unit_square(n), &|s, tau| {
                let (r, p) = (1.0 + eta * s, eta * tau);
                eta * eta * angle_density(r, p, &boojum(eta, r, p), eta)
            }),
            InfRegion::Omega4 => self
                .patches
                .iter()
                .map(|c| sum(rect_rule(n, c.r, c.p), &|r, p| angle_density(r, p, &c.eval(r, p).into(), eta)))
                .sum(),
        }
    }

    pub fn energy_report(&self) -> Result<RegionEnergyReport> {
        let mismatch = self.check_interfaces()?;
        let quad = self.params.quad;
        let names = [
            (InfRegion::Omega1, "omega1"),
            (InfRegion::Omega2, "omega2"),
            (InfRegion::Omega3, "omega3"),
            (InfRegion::Omega4, "omega4"),
        ];
        let computed = crate::parallel::ordered_map(&names, |_, &(region, name)| {
            refine(name, &quad, |level| {
                let n = quad.order << level;
                Ok((self.region_energy(region, n), n * n))
            })
        })?;
        let mut regions = Vec::with_capacity(4);
        for ((_, name), c) in names.iter().zip(computed) {
            let c = c?;
            regions.push(RegionEnergy {
                region: (*name).into(),
                energy: 2.0 * c.value,
                mirrored: true,
                nodes: 2 * c.nodes,
                refinement_change: c.change,
            });
        }
        let total = regions.iter().map(|r| r.energy).sum();
        let lower = integrate_d_sphere(
            Lambda::Infinite,
            &BoundaryCondition::Longitudinal,
            &QuadratureSpec::default(),
            &DensitySource::Exact,
        )?;
        Ok(RegionEnergyReport {
            schema_version: SCHEMA_VERSION,
            mode: RecoveryMode::Inf,
            eta: self.eta(),
            xi: None,
            h: None,
            eps: None,
            lambda: Lambda::Infinite,
            regions,
            total,
            lower_bound_ref: lower.value,
            omega1_ref: Some(omega1_reference(self.eta())),
            a_terms: None,
            lipschitz_hat: None,
            extension_lipschitz_scaled: self.extension_lipschitz_scaled(),
            interface_mismatch: mismatch,
            segments: None,
        })
    }
}

/// `2 * 2 pi int_{2 eta}^{pi/2} kappa (1 - sin phi) sin phi dphi`.
pub fn omega1_reference(eta: f64) -> f64 {
    let a = 2.0 * eta;
    4.0 * PI * KAPPA * (a.cos() - FRAC_PI_4 + 0.5 * a - 0.25 * (2.0 * a).sin())
}

pub fn energy_report_inf(p: &RecoveryParamsInf) -> Result<RegionEnergyReport> {
    InfConstruction::new(*p).energy_report()
}
