//! Explicit competitors around a unit sphere with tangent boundary data, evaluated at finite
//! parameters, and their rescaled energies region by region.
//!
//! Fields are axially symmetric and evaluated in the meridian half-plane `theta = 0` in polar
//! coordinates `(r, phi)`. Each construction covers the outer layer of thickness `O(eta)` with
//! four regions: a boundary-layer region away from the poles, a polar column region, a small
//! boojum core at the pole and a matching region in between.

mod coons;
mod fin;
mod inf;
mod mollifier;
mod quad;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::qtensor::{bulk_f, field_g, PotentialParams, S0Tensor, SQRT_3_2};

pub use fin::{energy_report_fin, FinConstruction, Partition, RecoveryParamsFin, SegmentInfo, FIN_INTERFACE_TOL};
pub use inf::{energy_report_inf, omega1_reference, AngleSample, InfConstruction, InfRegion, RecoveryParamsInf, ETA_MAX, INF_INTERFACE_TOL, T_MAX};
pub use mollifier::{bump, bump_cdf, bump_mass, smooth_cutoff, Mollifier};
pub use quad::QuadratureSettings;

/// Samples per shared edge in the interface checks.
pub const EDGE_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMode {
    Inf,
    Fin,
}

/// Rescaled energy `eta E` over one region, including its mirror image where there is one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionEnergy {
    pub region: String,
    pub energy: f64,
    pub mirrored: bool,
    pub nodes: usize,
    pub refinement_change: f64,
}

/// The five contributions over the boundary-layer region of the finite-lambda construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ATerms {
    pub a_r: f64,
    pub a_phi: f64,
    pub a_theta: f64,
    pub a_f: f64,
    pub a_g: f64,
    /// `2 pi int int lambda^2 f(Q) sin(phi)`, the value `a_f` tends to as `eta -> 0`.
    pub a_f_limit: f64,
}

impl ATerms {
    pub fn sum(&self) -> f64 {
        self.a_r + self.a_phi + self.a_theta + self.a_f + self.a_g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionEnergyReport {
    pub schema_version: u32,
    pub mode: RecoveryMode,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// `"inf"` or the finite value.
    pub lambda: crate::Lambda,
    pub regions: Vec<RegionEnergy>,
    pub total: f64,
    /// Sphere integral of the limiting density for the longitudinal boundary data.
    pub lower_bound_ref: f64,
    /// The reference restricted to the part of the sphere covered by the boundary-layer region.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega1_ref: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_terms: Option<ATerms>,
    /// Finite-difference estimate of the Lipschitz constant of `phi -> D_lambda(Q_b(phi))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz_hat: Option<f64>,
    /// Discrete Lipschitz constant of the matching-region field times its length scale.
    pub extension_lipschitz_scaled: f64,
    pub interface_mismatch: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentInfo>>,
}

impl RegionEnergyReport {
    pub fn region(&self, name: &str) -> Option<f64> {
        self.regions.iter().find(|r| r.region == name).map(|r| r.energy)
    }
}

/// Rescaled energy density `2 pi eta (...)` for a director at angle `Phi` from `e3` in the
/// meridian plane, `n = (-sin Phi, 0, cos Phi)`, in polar coordinates `(r, phi)`.
pub(crate) fn angle_density(r: f64, phi: f64, a: &AngleSample, eta: f64) -> f64 {
    let s = phi.sin();
    let sp2 = a.value.sin().powi(2);
    let r2 = r * r;
    2.0 * PI * eta * (r2 * s * a.d_r * a.d_r + s * a.d_phi * a.d_phi + sp2 / s + r2 * s * SQRT_3_2 * sp2 / (eta * eta))
}

/// A tensor with its partial derivatives in `(r, phi)`.
pub(crate) type TensorJet = coons::Jet<S0Tensor>;

/// Rescaled tensor energy density; `lam2 = (eta / xi)^2` weights the bulk potential.
pub(crate) fn tensor_density(r: f64, phi: f64, j: &TensorJet, eta: f64, lam2: f64, params: &PotentialParams) -> f64 {
    let s = phi.sin();
    let r2 = r * r;
    let grad = 0.5 * r2 * s * j.d_r.norm_sq() + 0.5 * s * j.d_phi.norm_sq();
    let theta = 0.5 * j.value.azimuthal_derivative().norm_sq() / s;
    let bulk = r2 * s * (lam2 * bulk_f(&j.value, params) + field_g(&j.value)) / (eta * eta);
    2.0 * PI * eta * (grad + theta + bulk)
}

/// Least-squares slope of `y = c x` through the origin with the centred coefficient of
/// determination of that fit.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let c = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    (c, 1.0 - ss_res / ss_tot)
}
