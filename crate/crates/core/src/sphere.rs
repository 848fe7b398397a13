//! Boundary fields on the unit sphere, sphere integrals of the density `D_lambda(Q_b)`, and
//! scans over tangent directions.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::closedform_inf;
use crate::error::{Error, Result};
use crate::lambda::Lambda;
use crate::numerics::{gauss_legendre_on, KahanSum};
use crate::parallel;
use crate::profile1d::{self, Grid1D, SolveOptions};
use crate::qtensor::{self, Director, S0Tensor};
use crate::SCHEMA_VERSION;

const POLE_SIN_MIN: f64 = 1e-12;
const TANGENCY_TOL: f64 = 1e-10;

/// A point `(theta, phi)` of the unit sphere with azimuth `theta` and polar angle `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    theta: f64,
    phi: f64,
    omega: Vector3<f64>,
}

impl SurfacePoint {
    /// Wraps `theta` into `[0, 2 pi)`; `phi` must lie in `[0, pi]`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..=PI).contains(&phi) {
            return Err(Error::InvalidArgument(format!(
                "surface point needs finite theta and phi in [0, pi] (got theta = {theta}, phi = {phi})"
            )));
        }
        let theta = theta.rem_euclid(2.0 * PI);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Ok(Self { theta, phi, omega: Vector3::new(sp * ct, sp * st, cp) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn omega(&self) -> &Vector3<f64> {
        &self.omega
    }

    pub fn is_pole(&self) -> bool {
        self.phi.sin() < POLE_SIN_MIN
    }

    /// `(cos theta cos phi, sin theta cos phi, -sin phi)`.
    pub fn e_phi(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(ct * cp, st * cp, -sp)
    }

    /// `(-sin theta, cos theta, 0)`.
    pub fn e_theta(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        Vector3::new(-st, ct, 0.0)
    }
}

pub type DirectorField = Arc<dyn Fn(&SurfacePoint) -> Option<Vector3<f64>> + Send + Sync>;

/// Boundary director fields. The tangent kinds are anchoring conditions; `RadialReference`
/// and `Uniform` are comparison fields without the tangency requirement.
#[derive(Clone)]
pub enum BoundaryCondition {
    /// `-e_phi`, the meridian direction.
    Longitudinal,
    /// `cos psi e_phi + sin psi e_theta`.
    FixedFrame { psi: f64 },
    /// The outward normal `omega`.
    RadialReference,
    Uniform(Director),
    /// A tangent field given pointwise; `None` marks points where it is undefined.
    User { label: String, field: DirectorField },
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl BoundaryCondition {
    pub fn label(&self) -> String {
        match self {
            Self::Longitudinal => "longitudinal".into(),
            Self::FixedFrame { psi } => format!("fixed_frame({psi})"),
            Self::RadialReference => "radial_reference".into(),
            Self::Uniform(v) => format!("uniform({}, {}, {})", v.x(), v.y(), v.z()),
            Self::User { label, .. } => format!("user({label})"),
        }
    }

    pub fn is_tangent(&self) -> bool {
        matches!(self, Self::Longitudinal | Self::FixedFrame { .. } | Self::User { .. })
    }

    /// Whether the density is independent of the azimuth.
    pub fn is_equivariant(&self) -> bool {
        match self {
            Self::Longitudinal | Self::FixedFrame { .. } | Self::RadialReference => true,
            Self::Uniform(v) => v.x() == 0.0 && v.y() == 0.0,
            Self::User { .. } => false,
        }
    }

    /// The boundary director at `p`, checked for tangency where required.
    pub fn director(&self, p: &SurfacePoint) -> Result<Director> {
        let undefined = || Error::UndefinedField { theta: p.theta, phi: p.phi };
        let v = match self {
            Self::Longitudinal => {
                if p.is_pole() {
                    return Err(undefined());
                }
                -p.e_phi()
            }
            Self::FixedFrame { psi } => {
                if p.is_pole() {
                    return Err(undefined());
                }
                p.e_phi() * psi.cos() + p.e_theta() * psi.sin()
            }
            Self::RadialReference => p.omega,
            Self::Uniform(v) => *v.as_vector(),
            Self::User { field, .. } => field(p).ok_or_else(undefined)?,
        };
        let d = Director::new(v).map_err(|_| undefined())?;
        if self.is_tangent() {
            let dot = d.as_vector().dot(&p.omega);
            if dot.abs() > TANGENCY_TOL {
                return Err(Error::NotTangent { theta: p.theta, phi: p.phi, dot });
            }
        }
        Ok(d)
    }
}

/// `Q_b = s* (v v^T - I/3)` for the boundary director at `p`.
pub fn boundary_tensor(p: &SurfacePoint, bc: &BoundaryCondition, s_star: f64) -> Result<S0Tensor> {
    Ok(qtensor::uniaxial(&bc.director(p)?, s_star))
}

/// How the density `D_lambda(Q_b)` is evaluated at a quadrature node.
#[derive(Clone, Debug, PartialEq)]
pub enum DensitySource {
    /// `kappa (1 - |v3|)`, valid for `lambda = inf` only.
    Exact,
    Minimized { grid: Grid1D, opts: SolveOptions },
}

impl DensitySource {
    pub fn minimized_default() -> Self {
        Self::Minimized { grid: Grid1D::default(), opts: SolveOptions::default() }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Minimized { .. } => "minimized",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct DensityValue {
    value: f64,
    converged: bool,
}

fn density_at(v: &Director, lambda: Lambda, source: &DensitySource) -> Result<DensityValue> {
    match source {
        DensitySource::Exact => {
            if !lambda.is_infinite() {
                return Err(Error::InvalidArgument(
                    "the exact density is only available for lambda = inf".into(),
                ));
            }
            Ok(DensityValue { value: closedform_inf::d_inf_exact(v), converged: true })
        }
        DensitySource::Minimized { grid, opts } => {
            let d = profile1d::d_lambda_director(v, lambda, grid, opts)?;
            Ok(DensityValue { value: d.value, converged: d.converged })
        }
    }
}

/// Density `D_lambda(Q_b(p))` for a single surface point.
pub fn density(p: &SurfacePoint, lambda: Lambda, bc: &BoundaryCondition, source: &DensitySource) -> Result<f64> {
    Ok(density_at(&bc.director(p)?, lambda, source)?.value)
}

/// Gauss-Legendre orders in the polar angle (per hemisphere) and trapezoid nodes in azimuth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes_per_hemisphere: usize,
    /// Used only for fields that are not azimuthally equivariant.
    pub n_theta: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes_per_hemisphere: 32, n_theta: 64 }
    }
}

impl QuadratureSpec {
    pub fn doubled(&self) -> Self {
        Self { nodes_per_hemisphere: 2 * self.nodes_per_hemisphere, n_theta: 2 * self.n_theta }
    }

    /// Nodes `(phi, weight)` for `int_0^pi (.) sin(phi) dphi`.
    pub fn polar_nodes(&self) -> Vec<(f64, f64)> {
        let n = self.nodes_per_hemisphere;
        gauss_legendre_on(n, 0.0, FRAC_PI_2)
            .into_iter()
            .chain(gauss_legendre_on(n, FRAC_PI_2, PI))
            .map(|(phi, w)| (phi, w * phi.sin()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeValue {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
    pub density: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphereReport {
    pub schema_version: u32,
    pub lambda: Lambda,
    pub bc: String,
    pub density: String,
    pub equivariant: bool,
    pub n_nodes: usize,
    pub value: f64,
    pub converged: bool,
    pub per_node: Vec<NodeValue>,
}

/// `int_{S^2} D_lambda(Q_b(omega)) d omega`. Equivariant fields use `2 pi` times a polar rule
/// at `theta = 0`; other fields use a product rule.
pub fn integrate_d_sphere(
    lambda: Lambda,
    bc: &BoundaryCondition,
    quad: &QuadratureSpec,
    source: &DensitySource,
) -> Result<SphereReport> {
    if quad.nodes_per_hemisphere < 1 {
        return Err(Error::InvalidArgument("at least one polar node per hemisphere is required".into()));
    }
    let equivariant = bc.is_equivariant();
    let polar = quad.polar_nodes();
    let thetas: Vec<(f64, f64)> = if equivariant {
        vec![(0.0, 2.0 * PI)]
    } else {
        if quad.n_theta < 1 {
            return Err(Error::InvalidArgument("at least one azimuthal node is required".into()));
        }
        let m = quad.n_theta;
        (0..m).map(|k| (2.0 * PI * k as f64 / m as f64, 2.0 * PI / m as f64)).collect()
    };
    let nodes: Vec<(f64, f64, f64)> = thetas
        .iter()
        .flat_map(|&(theta, wt)| polar.iter().map(move |&(phi, wp)| (theta, phi, wt * wp)))
        .collect();
    let values = parallel::ordered_map(&nodes, |i, &(theta, phi, _)| {
        let wrap = |e: Error| Error::NodeFailed { index: i, phi, source: Box::new(e) };
        let p = SurfacePoint::new(theta, phi).map_err(wrap)?;
        let v = bc.director(&p).map_err(wrap)?;
        density_at(&v, lambda, source).map_err(wrap)
    })?;
    let mut sum = KahanSum::new();
    let mut per_node = Vec::with_capacity(nodes.len());
    for (&(theta, phi, weight), value) in nodes.iter().zip(values) {
        let d = value?;
        sum.add(weight * d.value);
        per_node.push(NodeValue { theta, phi, weight, density: d.value, converged: d.converged });
    }
    Ok(SphereReport {
        schema_version: SCHEMA_VERSION,
        lambda,
        bc: bc.label(),
        density: source.label().into(),
        equivariant,
        n_nodes: per_node.len(),
        value: sum.value(),
        converged: per_node.iter().all(|n| n.converged),
        per_node,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub psi: f64,
    pub density: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub schema_version: u32,
    pub theta: f64,
    pub phi: f64,
    pub lambda: Lambda,
    /// Angle from `e_phi` towards `e_theta`; `psi = 0` is the longitudinal direction.
    pub best_psi: f64,
    pub best_density: f64,
    pub table: Vec<ScanRow>,
}

impl ScanResult {
    /// Distance of `best_psi` to the longitudinal direction modulo `pi`.
    pub fn distance_to_longitudinal(&self) -> f64 {
        let r = self.best_psi.rem_euclid(PI);
        r.min(PI - r)
    }
}

/// `D_lambda` over tangent directions `psi_k = k pi / n_dirs`, `k < n_dirs`.
pub fn optimal_tangent_scan(
    p: &SurfacePoint,
    lambda: Lambda,
    n_dirs: usize,
    source: &DensitySource,
) -> Result<ScanResult> {
    if p.is_pole() {
        return Err(Error::InvalidArgument("tangent scans are undefined at the poles".into()));
    }
    if n_dirs < 8 {
        return Err(Error::InvalidArgument(format!("n_dirs = {n_dirs} must be at least 8")));
    }
    let psis: Vec<f64> = (0..n_dirs).map(|k| PI * k as f64 / n_dirs as f64).collect();
    let values = parallel::ordered_map(&psis, |_, &psi| {
        let v = BoundaryCondition::FixedFrame { psi }.director(p)?;
        density_at(&v, lambda, source)
    })?;
    let table = psis
        .iter()
        .zip(values)
        .map(|(&psi, d)| d.map(|d| ScanRow { psi, density: d.value, converged: d.converged }))
        .collect::<Result<Vec<_>>>()?;
    let best = table
        .iter()
        .min_by(|a, b| a.density.total_cmp(&b.density))
        .expect("n_dirs >= 8");
    Ok(ScanResult {
        schema_version: SCHEMA_VERSION,
        theta: p.theta,
        phi: p.phi,
        lambda,
        best_psi: best.psi,
        best_density: best.density,
        table: table.clone(),
    })
}

/// Exact sphere integrals of the reference densities.
pub fn longitudinal_inf_exact() -> f64 {
    PI * (4.0 - PI) * closedform_inf::KAPPA
}

pub fn radial_inf_exact() -> f64 {
    2.0 * PI * closedform_inf::KAPPA
}
