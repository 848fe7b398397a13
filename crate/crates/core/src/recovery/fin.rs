//! The finite-lambda construction, a tensor field on the outer layer of the sphere.
//!
//! With `q = h eta`:
//! - `Omega1 = {r > 1 + 2q}`: in `rt = (r - 1 - 2q)/eta + 1`, the mollified step function
//!   `sum_i w_i(phi) Q_i(rt)` of per-segment near-minimizing profiles `Q_i`;
//! - `Omega2 = {r < 1 + 2q, 2q < phi < pi - 2q}`: linear blend in `r` from the boundary data to
//!   the inner trace of `Omega1`;
//! - `Omega3 = {r < 1 + q, phi < q}`: the uniaxial boojum on scale `q`;
//! - `Omega4`: the rest of `[1, 1 + 2q] x [0, 2q]`, three Coons patches of the traces.
//!
//! The caps near `phi = pi` are mirror images through `x3 = 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::coons::{linear, Coons, Jet};
use super::inf::ETA_MAX;
use super::mollifier::{smooth_cutoff, Mollifier};
use super::quad::{composite_rule, duffy_unit_square, refine, QuadratureSettings};
use super::{tensor_density, ATerms, RecoveryMode, RegionEnergy, RegionEnergyReport, TensorJet, EDGE_SAMPLES};
use crate::closedform_inf::KAPPA;
use crate::error::{Error, Result};
use crate::lambda::Lambda;
use crate::numerics::{gauss_legendre_on, KahanSum};
use crate::parallel::ordered_map;
use crate::profile1d::{d_lambda, energy_f_lambda, Grid1D, Profile, SolveOptions};
use crate::qtensor::{bulk_f, field_g, q_inf, PotentialParams, S0Tensor};
use crate::sphere::{integrate_d_sphere, BoundaryCondition, DensitySource, QuadratureSpec};
use crate::SCHEMA_VERSION;

pub const FIN_INTERFACE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryParamsFin {
    eta: f64,
    xi: f64,
    h: f64,
    eps: f64,
    lambda: f64,
    grid: Grid1D,
    solve: SolveOptions,
    quad: QuadratureSettings,
}

impl RecoveryParamsFin {
    /// `xi = inf` is allowed and means `eta / xi = 0`.
    pub fn new(eta: f64, xi: f64, h: f64, eps: f64, lambda: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(eta > 0.0 && eta <= ETA_MAX) {
            return bad(format!("eta = {eta} must lie in (0, {ETA_MAX}]"));
        }
        if !(xi > 0.0) {
            return bad(format!("xi = {xi} must be positive"));
        }
        if !(h > 0.0 && h < 1.0) {
            return bad(format!("h = {h} must lie in (0, 1)"));
        }
        if !(eps > 0.0 && eps < 0.25 * h) {
            return bad(format!("eps = {eps} must lie in (0, h/4)"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return bad(format!("lambda = {lambda} must be finite and nonnegative"));
        }
        Ok(Self {
            eta,
            xi,
            h,
            eps,
            lambda,
            grid: Grid1D::default(),
            solve: SolveOptions::default(),
            quad: QuadratureSettings::default(),
        })
    }

    /// Parameters with `eta / xi` equal to the target `lambda`.
    pub fn at_ratio(eta: f64, h: f64, eps: f64, lambda: f64) -> Result<Self> {
        let xi = if lambda > 0.0 { eta / lambda } else { f64::INFINITY };
        Self::new(eta, xi, h, eps, lambda)
    }

    pub fn with_grid(mut self, grid: Grid1D) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_solve_options(mut self, solve: SolveOptions) -> Self {
        self.solve = solve;
        self
    }

    pub fn with_quadrature(mut self, quad: QuadratureSettings) -> Result<Self> {
        quad.validate()?;
        self.quad = quad;
        Ok(self)
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        let xi = if self.xi.is_finite() { self.xi * eta / self.eta } else { self.xi };
        let fresh = Self::new(eta, xi, self.h, self.eps, self.lambda)?;
        Ok(Self { grid: self.grid, solve: self.solve.clone(), quad: self.quad, ..fresh })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
    pub fn quadrature(&self) -> &QuadratureSettings {
        &self.quad
    }

    /// `eta / xi`, the effective `lambda` weighting the bulk potential.
    pub fn ratio(&self) -> f64 {
        self.eta / self.xi
    }
}

/// `phi_k = k pi / I` for `k = 0..=I` with `I = ceil(pi/h) + 1`, so all spacings are below `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    nodes: Vec<f64>,
}

impl Partition {
    pub fn new(h: f64) -> Self {
        let count = (PI / h).ceil() as usize + 1;
        Self { nodes: (0..=count).map(|k| PI * k as f64 / count as f64).collect() }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        PI / self.segments() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub index: usize,
    pub phi: f64,
    pub d_lambda: f64,
    pub converged: bool,
    /// `F_lambda` of the profile after blending it into `Q_inf` at finite range.
    pub cutoff_energy: f64,
}

/// `n = (-sin a, 0, cos a)` at angle `a` to `e3`, lifted to `s (n n^T - I/3)` with derivatives.
fn angle_jet(a: f64, d_r: f64, d_phi: f64, s: f64) -> TensorJet {
    let n = Vector3::new(-a.sin(), 0.0, a.cos());
    let dn = Vector3::new(-a.cos(), 0.0, -a.sin());
    let sym: Matrix3<f64> = dn * n.transpose() + n * dn.transpose();
    let dq = S0Tensor::from_matrix(&(sym * s));
    Jet { value: S0Tensor::from_matrix(&(n * n.transpose() * s)), d_r: dq * d_r, d_phi: dq * d_phi }
}

/// Boundary data `s (n n^T - I/3)` with `n = -e_phi = (-cos phi, 0, sin phi)` and its
/// derivative in `phi`.
fn boundary_jet(phi: f64, s: f64) -> (S0Tensor, S0Tensor) {
    let j = angle_jet(FRAC_PI_2 - phi, 0.0, -1.0, s);
    (j.value, j.d_phi)
}

/// The boojum on scale `q`: angle `atan2(tau, s) - phi` with `s = (r-1)/q`, `tau = phi/q`.
fn boojum_jet(q: f64, r: f64, phi: f64, s_star: f64) -> TensorJet {
    let (s, tau) = ((r - 1.0) / q, phi / q);
    let rho2 = s * s + tau * tau;
    angle_jet(tau.atan2(s) - phi, -tau / rho2 / q, s / rho2 / q - 1.0, s_star)
}

/// Active mollified segment weights at one angle.
struct Weights {
    seg: Vec<(usize, f64, f64)>,
    inf: (f64, f64),
}

/// Per-angle radial integrals of the boundary-layer region; `*_m[k]` carries the factor `x^k`
/// with `x = rt - 1 + 2h`, so that `(1 + eta x)^2 = r^2` can be applied afterwards.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    grad: [f64; 3],
    f: [f64; 3],
    g: [f64; 3],
    dphi: f64,
    theta: f64,
}

pub struct FinConstruction {
    h: f64,
    eps: f64,
    lambda: f64,
    params: PotentialParams,
    grid: Grid1D,
    partition: Partition,
    moll: Mollifier,
    /// Cut-off profiles of segments `1..=I-2`; entry `j` belongs to segment `j + 1`.
    profiles: Vec<Vec<S0Tensor>>,
    segments: Vec<SegmentInfo>,
    /// `D_lambda` of the boundary data at every partition node, poles included.
    node_d: Vec<f64>,
    cutoff_radius: f64,
    sphere_integral: f64,
}

impl FinConstruction {
    /// Solves the per-segment profiles and the reference sphere integral. Nothing here depends
    /// on `eta` or `xi`, so one construction serves a whole `eta` sweep.
    pub fn build(p: &RecoveryParamsFin) -> Result<Self> {
        let partition = Partition::new(p.h);
        let lambda = Lambda::finite(p.lambda)?;
        let s_star = p.solve.params.s_star;
        let grid = p.grid;
        let cutoff_radius = (6.0 / KAPPA + 2.0 / p.h).min(1.0 + grid.t_max());
        if cutoff_radius < 2.0 {
            return Err(Error::InvalidArgument(format!(
                "grid length {} leaves no room for the cutoff",
                grid.t_max()
            )));
        }
        let solved = ordered_map(partition.nodes(), |_, &phi| {
            d_lambda(&boundary_jet(phi, s_star).0, lambda, &grid, &p.solve)
        })?;
        let solved: Vec<_> = solved.into_iter().collect::<Result<_>>()?;
        let node_d: Vec<f64> = solved.iter().map(|d| d.value).collect();
        let count = partition.segments();
        let nodes = grid.nodes();
        let mut profiles = Vec::with_capacity(count.saturating_sub(2));
        let mut segments = Vec::with_capacity(count.saturating_sub(2));
        for (i, d) in solved.iter().enumerate().take(count - 1).skip(1) {
            let raw = d
                .profile
                .as_ref()
                .ok_or_else(|| Error::NotConverged(format!("segment {i} returned no profile")))?
                .tensors();
            let cut: Vec<S0Tensor> = raw
                .iter()
                .zip(&nodes)
                .map(|(&q, &t)| {
                    let (chi, _) = smooth_cutoff(1.0 + t, cutoff_radius - 1.0, cutoff_radius);
                    q_inf() + (q - q_inf()) * chi
                })
                .collect();
            let cutoff_energy = energy_f_lambda(&Profile::tensor(grid, cut.clone())?, lambda, &p.solve.params)?;
            if cutoff_energy > d.value + p.h {
                return Err(Error::NotConverged(format!(
                    "segment {i}: cut-off energy {cutoff_energy} exceeds D + h = {}",
                    d.value + p.h
                )));
            }
            segments.push(SegmentInfo {
                index: i,
                phi: partition.nodes()[i],
                d_lambda: d.value,
                converged: d.converged,
                cutoff_energy,
            });
            profiles.push(cut);
        }
        let sphere_integral = integrate_d_sphere(
            lambda,
            &BoundaryCondition::Longitudinal,
            &QuadratureSpec::default(),
            &DensitySource::Minimized { grid, opts: p.solve.clone() },
        )?
        .value;
        Ok(Self {
            h: p.h,
            eps: p.eps,
            lambda: p.lambda,
            params: p.solve.params,
            grid,
            partition,
            moll: Mollifier::new(p.eps),
            profiles,
            segments,
            node_d,
            cutoff_radius,
            sphere_integral,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn segments(&self) -> &[SegmentInfo] {
        &self.segments
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    /// `int_{S^2} D_lambda(Q_b)` for the longitudinal data.
    pub fn sphere_integral(&self) -> f64 {
        self.sphere_integral
    }

    fn s_star(&self) -> f64 {
        self.params.s_star
    }

    /// Largest difference quotient of `phi -> D_lambda(Q_b(phi))` over the partition nodes.
    pub fn lipschitz_hat(&self) -> f64 {
        let dphi = self.partition.spacing();
        self.node_d.windows(2).map(|w| (w[1] - w[0]).abs() / dphi).fold(0.0, f64::max)
    }

    fn weights(&self, phi: f64) -> Weights {
        let nodes = self.partition.nodes();
        let eps = self.eps;
        let mut seg = Vec::with_capacity(3);
        let (mut sw, mut sdw) = (0.0, 0.0);
        for (j, w) in nodes[1..nodes.len() - 1].windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            if phi <= a - eps || phi >= b + eps {
                continue;
            }
            let wt = self.moll.cdf(phi - a) - self.moll.cdf(phi - b);
            let dw = self.moll.density(phi - a) - self.moll.density(phi - b);
            if wt != 0.0 || dw != 0.0 {
                seg.push((j, wt, dw));
                sw += wt;
                sdw += dw;
            }
        }
        Weights { seg, inf: (1.0 - sw, -sdw) }
    }

    fn mix(&self, w: &Weights, k: impl Fn(usize) -> S0Tensor) -> (S0Tensor, S0Tensor) {
        let qi = q_inf();
        w.seg.iter().fold((qi * w.inf.0, qi * w.inf.1), |(v, d), &(j, wt, dw)| {
            let q = k(j);
            (v + q * wt, d + q * dw)
        })
    }

    /// Inner trace of the boundary-layer region, `Q^{h,eps}(1, phi)`, with its `phi` derivative.
    pub fn inner_trace(&self, phi: f64) -> (S0Tensor, S0Tensor) {
        self.mix(&self.weights(phi), |j| self.profiles[j][0])
    }

    /// `Q^{h,eps}(rt, phi)`, interpolating the profiles linearly between grid nodes.
    pub fn layer_value(&self, rt: f64, phi: f64) -> S0Tensor {
        let t = rt - 1.0;
        let hgrid = self.grid.spacing();
        let last = self.grid.n_nodes() - 1;
        if t >= self.grid.t_max() {
            return q_inf();
        }
        let k = ((t / hgrid).floor() as usize).min(last - 1);
        let s = (t - k as f64 * hgrid) / hgrid;
        self.mix(&self.weights(phi), |j| self.profiles[j][k] * (1.0 - s) + self.profiles[j][k + 1] * s).0
    }

    fn blend_jet(&self, q: f64, r: f64, phi: f64) -> TensorJet {
        let u = (r - 1.0) / (2.0 * q);
        let (m, dm) = self.inner_trace(phi);
        let (b, db) = boundary_jet(phi, self.s_star());
        Jet { value: m * u + b * (1.0 - u), d_r: (m - b) * (0.5 / q), d_phi: dm * u + db * (1.0 - u) }
    }

    /// The three matching patches of the upper cap on scale `q`.
    fn patches(&self, q: f64) -> [Coons<'_, S0Tensor>; 3] {
        let s = self.s_star();
        let core = boojum_jet(q, 1.0 + q, q, s).value;
        let top_mid = self.blend_jet(q, 1.0 + q, 2.0 * q).value;
        let right_mid = self.inner_trace(q).0;
        let a = Coons::new(
            (1.0, 1.0 + q),
            (q, 2.0 * q),
            Box::new(move |v: f64| {
                let (b, db) = boundary_jet(q * (1.0 + v), s);
                (b, db * q)
            }),
            linear(core, top_mid),
            Box::new(move |u: f64| {
                let j = boojum_jet(q, 1.0 + q * u, q, s);
                (j.value, j.d_r * q)
            }),
            Box::new(move |u: f64| {
                let j = self.blend_jet(q, 1.0 + q * u, 2.0 * q);
                (j.value, j.d_r * q)
            }),
        );
        let b = Coons::new(
            (1.0 + q, 1.0 + 2.0 * q),
            (q, 2.0 * q),
            linear(core, top_mid),
            Box::new(move |v: f64| {
                let (m, dm) = self.inner_trace(q * (1.0 + v));
                (m, dm * q)
            }),
            linear(core, right_mid),
            Box::new(move |u: f64| {
                let j = self.blend_jet(q, 1.0 + q * (1.0 + u), 2.0 * q);
                (j.value, j.d_r * q)
            }),
        );
        let c = Coons::new(
            (1.0 + q, 1.0 + 2.0 * q),
            (0.0, q),
            Box::new(move |v: f64| {
                let j = boojum_jet(q, 1.0 + q, q * v, s);
                (j.value, j.d_phi * q)
            }),
            Box::new(move |v: f64| {
                let (m, dm) = self.inner_trace(q * v);
                (m, dm * q)
            }),
            Box::new(|_| (q_inf(), S0Tensor::ZERO)),
            linear(core, right_mid),
        );
        [a, b, c]
    }

    fn check_eta(&self, eta: f64) -> Result<f64> {
        if !(eta > 0.0 && eta <= ETA_MAX) {
            return Err(Error::InvalidArgument(format!("eta = {eta} must lie in (0, {ETA_MAX}]")));
        }
        let q = self.h * eta;
        let room = self.partition.nodes()[1] - self.eps;
        if 2.0 * q > room {
            return Err(Error::InvalidArgument(format!(
                "2 h eta = {} must not exceed phi_1 - eps = {room}; decrease eta",
                2.0 * q
            )));
        }
        Ok(q)
    }

    /// The field at `(r, phi)` for layer thickness `eta`.
    pub fn tensor(&self, eta: f64, r: f64, phi: f64) -> Result<S0Tensor> {
        let q = self.check_eta(eta)?;
        if !(r >= 1.0 && r.is_finite() && (0.0..=PI).contains(&phi)) {
            return Err(Error::InvalidArgument(format!("(r, phi) = ({r}, {phi}) is outside r >= 1, 0 <= phi <= pi")));
        }
        Ok(self.tensor_unchecked(q, eta, r, phi))
    }

    fn tensor_unchecked(&self, q: f64, eta: f64, r: f64, phi: f64) -> S0Tensor {
        if r >= 1.0 + 2.0 * q {
            return self.layer_value((r - 1.0 - 2.0 * q) / eta + 1.0, phi);
        }
        if (2.0 * q..=PI - 2.0 * q).contains(&phi) {
            return self.blend_jet(q, r, phi).value;
        }
        if phi > FRAC_PI_2 {
            return self.cap(q, r, PI - phi).reflect_x3();
        }
        self.cap(q, r, phi)
    }

    fn cap(&self, q: f64, r: f64, phi: f64) -> S0Tensor {
        if r <= 1.0 + q && phi <= q {
            return boojum_jet(q, r, phi, self.s_star()).value;
        }
        let k = if r <= 1.0 + q { 0 } else if phi >= q { 1 } else { 2 };
        self.patches(q)[k].eval(r, phi).value
    }

    /// Largest Frobenius mismatch over shared edges, boundary traces, the axis and the mirror.
    pub fn check_interfaces(&self, eta: f64) -> Result<f64> {
        let q = self.check_eta(eta)?;
        let s = self.s_star();
        let pt = self.patches(q);
        let e = 2.0 * q;
        type Side<'s> = Box<dyn Fn(f64, f64) -> S0Tensor + 's>;
        type EdgeSpec<'e, 's> = (&'e str, &'e Side<'s>, &'e Side<'s>, (f64, f64), (f64, f64));
        let layer: Side = Box::new(|r, p| self.layer_value((r - 1.0 - e) / eta + 1.0, p));
        let blend: Side = Box::new(|r, p| self.blend_jet(q, r, p).value);
        let core: Side = Box::new(|r, p| boojum_jet(q, r, p, s).value);
        let pa: Side = Box::new(|r, p| pt[0].eval(r, p).value);
        let pb: Side = Box::new(|r, p| pt[1].eval(r, p).value);
        let pc: Side = Box::new(|r, p| pt[2].eval(r, p).value);
        let data: Side = Box::new(|_, p| boundary_jet(p, s).0);
        let axis: Side = Box::new(|_, _| q_inf());
        let lower: Side = Box::new(|r, p| self.cap(q, r, PI - p).reflect_x3());
        let r_far = 1.0 + e + eta * self.grid.t_max();
        let edges: Vec<EdgeSpec> = vec![
            ("omega1|omega2", &layer, &blend, (1.0 + e, e), (1.0 + e, PI - e)),
            ("omega1|omega4b", &layer, &pb, (1.0 + e, q), (1.0 + e, e)),
            ("omega1|omega4c", &layer, &pc, (1.0 + e, 0.0), (1.0 + e, q)),
            ("omega2|omega4a", &blend, &pa, (1.0, e), (1.0 + q, e)),
            ("omega2|omega4b", &blend, &pb, (1.0 + q, e), (1.0 + e, e)),
            ("omega3|omega4a", &core, &pa, (1.0, q), (1.0 + q, q)),
            ("omega3|omega4c", &core, &pc, (1.0 + q, 0.0), (1.0 + q, q)),
            ("omega4a|omega4b", &pa, &pb, (1.0 + q, q), (1.0 + q, e)),
            ("omega4b|omega4c", &pb, &pc, (1.0 + q, q), (1.0 + e, q)),
            ("boundary omega2", &blend, &data, (1.0, e), (1.0, PI - e)),
            ("boundary omega4a", &pa, &data, (1.0, q), (1.0, e)),
            ("boundary omega3", &core, &data, (1.0, 0.0), (1.0, q)),
            ("axis omega1", &layer, &axis, (1.0 + e, 0.0), (r_far, 0.0)),
            ("axis omega4c", &pc, &axis, (1.0 + q, 0.0), (1.0 + e, 0.0)),
            ("axis omega3", &core, &axis, (1.0, 0.0), (1.0 + q, 0.0)),
            ("mirror omega2", &blend, &lower, (1.0, PI - e), (1.0 + e, PI - e)),
            ("mirror omega1", &layer, &lower, (1.0 + e, PI - e), (1.0 + e, PI)),
            ("mirror boundary", &data, &lower, (1.0, PI - e), (1.0, PI)),
        ];
        let mut worst = 0.0f64;
        for (name, f, g, (r0, p0), (r1, p1)) in edges {
            let m = (0..EDGE_SAMPLES)
                .map(|k| {
                    let t = (k as f64 + 0.5) / EDGE_SAMPLES as f64;
                    let (r, p) = (r0 + t * (r1 - r0), p0 + t * (p1 - p0));
                    (f(r, p) - g(r, p)).norm()
                })
                .fold(0.0, f64::max);
            if !(m <= FIN_INTERFACE_TOL) {
                return Err(Error::InterfaceMismatch { edge: name.into(), mismatch: m });
            }
            worst = worst.max(m);
        }
        Ok(worst)
    }

    /// Largest difference quotient of any matrix entry over a 41 x 41 lattice on each matching
    /// patch, multiplied by `q = h eta`. Also returns the largest `|tr Q|` seen.
    pub fn extension_lipschitz_scaled(&self, eta: f64) -> Result<(f64, f64)> {
        let q = self.check_eta(eta)?;
        let n = 41;
        let (mut worst, mut trace) = (0.0f64, 0.0f64);
        for c in &self.patches(q) {
            let rs: Vec<f64> = (0..n).map(|i| c.r.0 + (c.r.1 - c.r.0) * i as f64 / (n - 1) as f64).collect();
            let ps: Vec<f64> = (0..n).map(|j| c.p.0 + (c.p.1 - c.p.0) * j as f64 / (n - 1) as f64).collect();
            let vals = c.eval_grid(&rs, &ps);
            for i in 0..n {
                for j in 0..n {
                    let m = vals[i][j].value.to_matrix();
                    trace = trace.max(m.trace().abs());
                    for (di, dj) in [(1, 0), (0, 1)] {
                        if i + di < n && j + dj < n {
                            let m2 = vals[i + di][j + dj].value.to_matrix();
                            let dist = (rs[i + di] - rs[i]).hypot(ps[j + dj] - ps[j]);
                            worst = worst.max((m2 - m).amax() / dist);
                        }
                    }
                }
            }
        }
        Ok((worst * q, trace))
    }

    fn phi_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let nodes = self.partition.nodes();
        let mut b: Vec<f64> = nodes[1..nodes.len() - 1]
            .iter()
            .flat_map(|&p| [p - self.eps, p + self.eps])
            .chain([lo, hi])
            .filter(|&p| (lo..=hi).contains(&p))
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn moments(&self, phi: f64) -> Moments {
        let w = self.weights(phi);
        let ht = self.grid.spacing();
        let tw = self.grid.weights();
        let x0 = 2.0 * self.h;
        let mut m = Moments::default();
        let mut prev: Option<S0Tensor> = None;
        for (k, &wk) in tw.iter().enumerate() {
            let (v, d) = self.mix(&w, |j| self.profiles[j][k]);
            let x = k as f64 * ht + x0;
            if let Some(p) = prev {
                let cell = 0.5 * (v - p).norm_sq() / ht;
                let xm = x - 0.5 * ht;
                m.grad[0] += cell;
                m.grad[1] += cell * xm;
                m.grad[2] += cell * xm * xm;
            }
            prev = Some(v);
            let fk = wk * bulk_f(&v, &self.params);
            let gk = wk * field_g(&v);
            m.f[0] += fk;
            m.f[1] += fk * x;
            m.f[2] += fk * x * x;
            m.g[0] += gk;
            m.g[1] += gk * x;
            m.g[2] += gk * x * x;
            m.dphi += wk * 0.5 * d.norm_sq();
            m.theta += wk * 0.5 * v.azimuthal_derivative().norm_sq();
        }
        m
    }

    fn a_terms(&self, eta: f64, ratio: f64, rule: &[(f64, f64)], moments: &[Moments]) -> ATerms {
        let c = [1.0, 2.0 * eta, eta * eta];
        let dot = |v: &[f64; 3]| c.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let mut sums = [KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new()];
        for (&(phi, w), m) in rule.iter().zip(moments) {
            let s = phi.sin();
            sums[0].add(w * s * dot(&m.grad));
            sums[1].add(w * s * m.dphi);
            sums[2].add(w * m.theta / s);
            sums[3].add(w * s * dot(&m.f));
            sums[4].add(w * s * dot(&m.g));
            sums[5].add(w * s * m.f[0]);
        }
        let tau = 2.0 * PI;
        ATerms {
            a_r: tau * sums[0].value(),
            a_phi: tau * eta * eta * sums[1].value(),
            a_theta: tau * eta * eta * sums[2].value(),
            a_f: tau * ratio * ratio * sums[3].value(),
            a_g: tau * sums[4].value(),
            a_f_limit: tau * self.lambda * self.lambda * sums[5].value(),
        }
    }

    fn omega2_energy(&self, q: f64, eta: f64, lam2: f64, order: usize) -> (f64, usize) {
        let band = composite_rule(order, &self.phi_breaks(2.0 * q, PI - 2.0 * q));
        let radial = gauss_legendre_on(order, 1.0, 1.0 + 2.0 * q);
        let s = self.s_star();
        let sum: f64 = band
            .iter()
            .map(|&(phi, wp)| {
                let (m, dm) = self.inner_trace(phi);
                let (b, db) = boundary_jet(phi, s);
                radial
                    .iter()
                    .map(|&(r, wr)| {
                        let u = (r - 1.0) / (2.0 * q);
                        let j = Jet { value: m * u + b * (1.0 - u), d_r: (m - b) * (0.5 / q), d_phi: dm * u + db * (1.0 - u) };
                        wr * tensor_density(r, phi, &j, eta, lam2, &self.params)
                    })
                    .sum::<f64>()
                    * wp
            })
            .sum();
        (sum, band.len() * radial.len())
    }

    fn omega3_energy(&self, q: f64, eta: f64, lam2: f64, order: usize) -> (f64, usize) {
        let rule = duffy_unit_square(order);
        let s = self.s_star();
        let sum: f64 = rule
            .iter()
            .map(|&(a, b, w)| {
                let (r, phi) = (1.0 + q * a, q * b);
                w * q * q * tensor_density(r, phi, &boojum_jet(q, r, phi, s), eta, lam2, &self.params)
            })
            .sum();
        (sum, rule.len())
    }

    fn omega4_energy(&self, q: f64, eta: f64, lam2: f64, order: usize) -> (f64, usize) {
        let mut total = 0.0;
        for c in &self.patches(q) {
            let rs = gauss_legendre_on(order, c.r.0, c.r.1);
            let ps = gauss_legendre_on(order, c.p.0, c.p.1);
            let xr: Vec<f64> = rs.iter().map(|p| p.0).collect();
            let xp: Vec<f64> = ps.iter().map(|p| p.0).collect();
            let jets = c.eval_grid(&xr, &xp);
            for (i, &(r, wr)) in rs.iter().enumerate() {
                for (j, &(phi, wp)) in ps.iter().enumerate() {
                    total += wr * wp * tensor_density(r, phi, &jets[i][j], eta, lam2, &self.params);
                }
            }
        }
        (total, 3 * order * order)
    }

    /// Region energies at layer thickness `eta` and bulk weight `eta / xi`.
    pub fn energy_report(&self, eta: f64, xi: f64, quad: &QuadratureSettings) -> Result<RegionEnergyReport> {
        quad.validate()?;
        if !(xi > 0.0) {
            return Err(Error::InvalidArgument(format!("xi = {xi} must be positive")));
        }
        let q = self.check_eta(eta)?;
        let mismatch = self.check_interfaces(eta)?;
        let ratio = eta / xi;
        let lam2 = ratio * ratio;

        let breaks = self.phi_breaks(0.0, PI);
        let mut a_terms = None;
        let o1 = refine("omega1", quad, |level| {
            let rule = composite_rule(quad.panel_order << level, &breaks);
            let moments = ordered_map(&rule, |_, &(phi, _)| self.moments(phi))?;
            let a = self.a_terms(eta, ratio, &rule, &moments);
            a_terms = Some(a);
            Ok((a.sum(), rule.len() * self.grid.n_nodes()))
        })?;
        let a_terms = a_terms.expect("at least one level ran");
        let o2 = refine("omega2", quad, |l| Ok(self.omega2_energy(q, eta, lam2, quad.panel_order << l)))?;
        let o3 = refine("omega3", quad, |l| Ok(self.omega3_energy(q, eta, lam2, quad.order << l)))?;
        let o4 = refine("omega4", quad, |l| Ok(self.omega4_energy(q, eta, lam2, quad.order << l)))?;
        let entry = |name: &str, c: super::quad::Refined, mirrored: bool| {
            let k = if mirrored { 2.0 } else { 1.0 };
            RegionEnergy {
                region: name.into(),
                energy: k * c.value,
                mirrored,
                nodes: c.nodes * k as usize,
                refinement_change: c.change,
            }
        };
        let regions = vec![entry("omega1", o1, false), entry("omega2", o2, false), entry("omega3", o3, true), entry("omega4", o4, true)];
        let total = regions.iter().map(|r| r.energy).sum();
        Ok(RegionEnergyReport {
            schema_version: SCHEMA_VERSION,
            mode: RecoveryMode::Fin,
            eta,
            xi: Some(xi),
            h: Some(self.h),
            eps: Some(self.eps),
            lambda: Lambda::Finite(self.lambda),
            regions,
            total,
            lower_bound_ref: self.sphere_integral,
            omega1_ref: None,
            a_terms: Some(a_terms),
            lipschitz_hat: Some(self.lipschitz_hat()),
            extension_lipschitz_scaled: self.extension_lipschitz_scaled(eta)?.0,
            interface_mismatch: mismatch,
            segments: Some(self.segments.clone()),
        })
    }

    /// Samples of the field on an `nr x nphi` lattice of `[1, r_max] x [0, pi]` for plotting.
    pub fn sample(&self, eta: f64, r_max: f64, nr: usize, nphi: usize) -> Result<Vec<(f64, f64, S0Tensor)>> {
        let q = self.check_eta(eta)?;
        if nr < 2 || nphi < 2 || !(r_max > 1.0) {
            return Err(Error::InvalidArgument("sampling needs r_max > 1 and at least 2 x 2 nodes".into()));
        }
        Ok((0..nr)
            .flat_map(|i| (0..nphi).map(move |j| (i, j)))
            .map(|(i, j)| {
                let r = 1.0 + (r_max - 1.0) * i as f64 / (nr - 1) as f64;
                let phi = PI * j as f64 / (nphi - 1) as f64;
                (r, phi, self.tensor_unchecked(q, eta, r, phi))
            })
            .collect())
    }
}

pub fn energy_report_fin(p: &RecoveryParamsFin) -> Result<RegionEnergyReport> {
    FinConstruction::build(p)?.energy_report(p.eta, p.xi, &p.quad)
}

#[cfg(test)]
mod tests {
    use std::sync::OnceLock;

    use super::*;
    use crate::sphere::{boundary_tensor, SurfacePoint};

    const H: f64 = 0.4;
    const EPS: f64 = 0.08;

    fn params(eta: f64) -> RecoveryParamsFin {
        RecoveryParamsFin::at_ratio(eta, H, EPS, 1.0).unwrap().with_grid(Grid1D::new(12.0, 481).unwrap())
    }

    fn construction() -> &'static FinConstruction {
        static C: OnceLock<FinConstruction> = OnceLock::new();
        C.get_or_init(|| FinConstruction::build(&params(0.1)).unwrap())
    }

    #[test]
    fn params_are_validated() {
        assert!(RecoveryParamsFin::new(0.1, 0.1, 0.2, 0.04, 1.0).is_ok());
        assert!(RecoveryParamsFin::new(0.1, f64::INFINITY, 0.2, 0.04, 1.0).is_ok());
        assert!(RecoveryParamsFin::new(0.0, 0.1, 0.2, 0.04, 1.0).is_err());
        assert!(RecoveryParamsFin::new(0.1, 0.1, 0.2, 0.05, 1.0).is_err());
        assert!(RecoveryParamsFin::new(0.1, 0.1, 1.0, 0.04, 1.0).is_err());
        assert!(RecoveryParamsFin::new(0.1, -1.0, 0.2, 0.04, 1.0).is_err());
        assert!(RecoveryParamsFin::new(0.1, 0.1, 0.2, 0.04, f64::NAN).is_err());
    }

    #[test]
    fn partition_is_finer_than_h() {
        for h in [0.9, 0.4, 0.2, 0.05] {
            let p = Partition::new(h);
            assert!(p.spacing() < h);
            assert_eq!(p.nodes()[0], 0.0);
            assert!((p.nodes()[p.segments()] - PI).abs() < 1e-15);
        }
    }

    #[test]
    fn polar_segments_hold_q_inf() {
        let c = construction();
        for phi in [0.0, 0.5 * EPS, EPS, PI - EPS] {
            for rt in [1.0, 1.5, 4.0] {
                assert!((c.layer_value(rt, phi) - q_inf()).norm() < 1e-14, "{phi} {rt}");
            }
        }
    }

    #[test]
    fn cutoff_profiles_stay_within_h() {
        let c = construction();
        assert_eq!(c.segments().len(), c.partition().segments() - 2);
        for s in c.segments() {
            assert!(s.cutoff_energy <= s.d_lambda + H, "{s:?}");
        }
        let far = c.layer_value(c.cutoff_radius() + 0.01, FRAC_PI_2);
        assert!((far - q_inf()).norm() < 1e-14);
    }

    #[test]
    fn interfaces_match_and_trace_vanishes() {
        let c = construction();
        for eta in [0.2, 0.1, 0.05] {
            assert!(c.check_interfaces(eta).unwrap() <= FIN_INTERFACE_TOL);
            let (lip, trace) = c.extension_lipschitz_scaled(eta).unwrap();
            assert!(lip.is_finite() && lip > 0.0);
            assert!(trace < 1e-12);
        }
    }

    #[test]
    fn boundary_trace_is_the_data() {
        let c = construction();
        let s = c.s_star();
        for phi in [0.0, PI] {
            assert!((c.tensor(0.1, 1.0, phi).unwrap() - q_inf()).norm() < 1e-14);
        }
        for phi in [0.003, 0.02, 0.3, 1.2, FRAC_PI_2, 2.5, PI - 0.01] {
            let q = c.tensor(0.1, 1.0, phi).unwrap();
            let b = boundary_tensor(&SurfacePoint::new(0.0, phi).unwrap(), &BoundaryCondition::Longitudinal, s).unwrap();
            assert!((q - b).norm() < 1e-10, "{phi}: {}", (q - b).norm());
        }
    }

    #[test]
    fn eta_above_mirror_limit_is_rejected() {
        let c = construction();
        assert!(c.tensor(0.5, 1.0, 0.1).is_err() || 2.0 * H * 0.5 <= c.partition().nodes()[1] - EPS);
        assert!(c.tensor(0.6, 1.0, 0.1).is_err());
    }

    #[test]
    fn report_terms_scale_as_expected() {
        let c = construction();
        let quad = QuadratureSettings::default();
        let a = c.energy_report(0.1, 0.1, &quad).unwrap();
        let b = c.energy_report(0.05, 0.05, &quad).unwrap();
        let (ta, tb) = (a.a_terms.unwrap(), b.a_terms.unwrap());
        let slope = ((ta.a_phi + ta.a_theta) / (tb.a_phi + tb.a_theta)).log2();
        assert!((slope - 2.0).abs() < 0.3, "{slope}");
        assert!((ta.a_f_limit - tb.a_f_limit).abs() < 1e-12);
        let (da, db) = (ta.a_f - ta.a_f_limit, tb.a_f - tb.a_f_limit);
        assert!(da > db && db > 0.0 && (da / db - 2.0).abs() < 0.3, "{da} {db}");
        for r in [&a, &b] {
            let sum: f64 = r.regions.iter().map(|x| x.energy).sum();
            assert!((sum - r.total).abs() < 1e-12);
            assert!(r.regions.iter().all(|x| x.energy >= 0.0));
            assert!((r.region("omega1").unwrap() - r.a_terms.unwrap().sum()).abs() < 1e-12);
        }
        assert!(b.total < a.total);
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<RegionEnergyReport>(&json).unwrap(), b);
    }
}
