//! Exact minimizers of the uniaxially constrained half-line problem.
//!
//! For a director starting at angle `varphi` from `e3`, the minimizing connection stays in
//! the plane spanned by the start and `e3`, and its angle to `e3` is
//! `Phi(t) = 2 atan(tan(varphi / 2) exp(-kappa t / 2))`, equivalently
//! `n3 = (A - e^{-kappa t}) / (A + e^{-kappa t})` with `A = (1 + cos varphi) / (1 - cos varphi)`.

use std::sync::OnceLock;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qtensor::Director;

/// `24^{1/4}`.
pub const KAPPA: f64 = 2.213_363_839_400_643;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfProfileParams {
    varphi: f64,
    kappa: f64,
}

impl InfProfileParams {
    /// `varphi` in `[0, pi)`; `varphi = pi` (start at `-e3`) is rejected.
    pub fn new(varphi: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::PI).contains(&varphi) {
            return Err(Error::InvalidArgument(format!(
                "varphi = {varphi} must lie in [0, pi)"
            )));
        }
        Ok(Self { varphi, kappa: KAPPA })
    }

    /// Angle between `v` and `e3`, after choosing the sign of `v` with `v3 >= 0`.
    pub fn for_director(v: &Director) -> Self {
        let varphi = v.z().abs().min(1.0).acos();
        Self { varphi, kappa: KAPPA }
    }

    pub fn varphi(&self) -> f64 {
        self.varphi
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `(1 + cos varphi) / (1 - cos varphi)`; infinite at `varphi = 0`.
    pub fn a_factor(&self) -> f64 {
        let c = self.varphi.cos();
        (1.0 + c) / (1.0 - c)
    }
}

/// Angle to `e3` along the exact profile, with its partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleJet {
    pub value: f64,
    pub d_t: f64,
    pub d_varphi: f64,
}

pub fn angle_exact(t: f64, varphi: f64) -> AngleJet {
    let half = 0.5 * varphi;
    let decay = (-0.5 * KAPPA * t).exp();
    let x = half.tan() * decay;
    let denom = 1.0 + x * x;
    let sec2 = 1.0 / (half.cos() * half.cos());
    AngleJet {
        value: 2.0 * x.atan(),
        d_t: -KAPPA * x / denom,
        d_varphi: sec2 * decay / denom,
    }
}

pub fn n3_exact(t: f64, p: &InfProfileParams) -> f64 {
    angle_exact(t, p.varphi).value.cos()
}

/// `(-sqrt(1 - n3^2), 0, n3)` at distance `t` from the boundary.
pub fn n_exact(t: f64, p: &InfProfileParams) -> Director {
    let phi = angle_exact(t, p.varphi).value;
    Director::normalize(Vector3::new(-phi.sin(), 0.0, phi.cos())).unwrap_or(Director::E3)
}

/// The exact profile started at an arbitrary director: the normal form rotated about `e3`
/// into the azimuth of `v`, with `v` replaced by `-v` if `v3 < 0`.
pub fn n_exact_from(v: &Director, t: f64) -> Director {
    let mut w = *v.as_vector();
    if w.z < 0.0 {
        w = -w;
    }
    let rho = (w.x * w.x + w.y * w.y).sqrt();
    if rho == 0.0 {
        return Director::E3;
    }
    let p = InfProfileParams::for_director(v);
    let phi = angle_exact(t, p.varphi).value;
    let s = phi.sin() / rho;
    Director::normalize(Vector3::new(w.x * s, w.y * s, phi.cos())).unwrap_or(Director::E3)
}

/// `kappa (1 - |v3|)`.
pub fn d_inf_exact(v: &Director) -> f64 {
    KAPPA * (1.0 - v.z().abs().min(1.0))
}

/// The constant `C` in `|n1|^2, |dn/dt|^2, |dn/dvarphi|^2 <= C exp(-kappa t)`, calibrated
/// as four times the sampled supremum (at least one) over `t in [0, 30]`, `varphi in (0, pi/2]`.
pub fn decay_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let mut sup: f64 = 1.0;
        for i in 1..=64 {
            let varphi = std::f64::consts::FRAC_PI_2 * i as f64 / 64.0;
            for j in 0..=600 {
                let t = 0.05 * j as f64;
                let jet = angle_exact(t, varphi);
                let e = (KAPPA * t).exp();
                let n1 = jet.value.sin();
                sup = sup.max(e * n1 * n1).max(e * jet.d_t * jet.d_t).max(e * jet.d_varphi * jet.d_varphi);
            }
        }
        4.0 * sup
    })
}

pub fn decay_envelope(t: f64) -> f64 {
    decay_constant() * (-KAPPA * t).exp()
}
