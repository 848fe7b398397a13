//! Reduced description of half-line minimizers through an amplitude `N` and two angles
//! `(alpha, beta)`: `Q = N Q*` with
//! `Q* = cos a cos b Qv + sin a cos b Qinf + sin b Qmix` in an orthonormal frame.

mod io;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{KahanSum, Tridiagonal};
use crate::profile1d::{Grid1D, Profile};
use crate::qtensor::{self, q_inf_bar, Director, PotentialParams, S0Tensor, SQRT_2_3};

pub use io::{abmap, read_angle_path_csv, write_abmap_csv, write_angle_path_csv, AbmapCell, AnglePathHeader};

const FRAME_CROSS_MIN: f64 = 1e-8;
const BETA_COS_MIN: f64 = 1e-8;
pub const INV_SQRT_6: f64 = 0.408_248_290_463_863;

/// Orthonormal triple spanning the reduction subspace for a director `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    q_v_bar: S0Tensor,
    q_inf_bar: S0Tensor,
    q_mix_bar: S0Tensor,
    v: Director,
}

impl Frame {
    pub fn q_v_bar(&self) -> &S0Tensor {
        &self.q_v_bar
    }

    pub fn q_inf_bar(&self) -> &S0Tensor {
        &self.q_inf_bar
    }

    pub fn q_mix_bar(&self) -> &S0Tensor {
        &self.q_mix_bar
    }

    pub fn v(&self) -> &Director {
        &self.v
    }

    pub fn v3(&self) -> f64 {
        self.v.z()
    }

    /// Gram matrix of `(Qv, Qinf, Qmix)`.
    pub fn gram(&self) -> [[f64; 3]; 3] {
        let b = [self.q_v_bar, self.q_inf_bar, self.q_mix_bar];
        std::array::from_fn(|i| std::array::from_fn(|j| b[i].dot(&b[j])))
    }

    /// Components of `q` along `(Qv, Qinf, Qmix)`.
    pub fn coords(&self, q: &S0Tensor) -> [f64; 3] {
        [q.dot(&self.q_v_bar), q.dot(&self.q_inf_bar), q.dot(&self.q_mix_bar)]
    }

    /// `(alpha, beta)` of the normalized projection of `q` onto the frame span.
    pub fn angles_of(&self, q: &S0Tensor) -> Option<(f64, f64)> {
        let [x, y, z] = self.coords(q);
        let r = (x * x + y * y + z * z).sqrt();
        (r > 0.0).then(|| (y.atan2(x), (z / r).clamp(-1.0, 1.0).asin()))
    }

    /// Starting angle `alpha0 = asin((3 v3^2 - 1) / 2)` of `Q_v / |Q_v|`.
    pub fn alpha0(&self) -> f64 {
        alpha0(self.v3())
    }
}

pub fn alpha0(v3: f64) -> f64 {
    ((3.0 * v3 * v3 - 1.0) / 2.0).clamp(-1.0, 1.0).asin()
}

/// Gram-Schmidt of `Q_v` and `v e3 + e3 v - (2/3) v3 I` against `Qinf`.
pub fn build_frame(v: &Director) -> Result<Frame> {
    let vv = v.as_vector();
    let cross = vv.cross(&nalgebra::Vector3::z()).norm();
    if cross < FRAME_CROSS_MIN {
        return Err(Error::DegenerateFrame { cross });
    }
    let qb = q_inf_bar();
    let q_v = qtensor::uniaxial(v, 1.0);
    let q_v_bar = (q_v - qb * q_v.dot(&qb))
        .normalized()
        .ok_or(Error::DegenerateFrame { cross })?;
    let e3 = nalgebra::Vector3::z();
    let m = vv * e3.transpose() + e3 * vv.transpose();
    let q_mix = S0Tensor::from_matrix(&m);
    let q_mix_bar = (q_mix - qb * q_mix.dot(&qb) - q_v_bar * q_mix.dot(&q_v_bar))
        .normalized()
        .ok_or(Error::DegenerateFrame { cross })?;
    Ok(Frame { q_v_bar, q_inf_bar: qb, q_mix_bar, v: *v })
}

/// Unit vector `(cos a cos b, sin a cos b, sin b)` of frame coordinates.
fn unit_coords(alpha: f64, beta: f64) -> [f64; 3] {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    [ca * cb, sa * cb, sb]
}

pub fn q_star(alpha: f64, beta: f64, frame: &Frame) -> S0Tensor {
    let [x, y, z] = unit_coords(alpha, beta);
    frame.q_v_bar * x + frame.q_inf_bar * y + frame.q_mix_bar * z
}

/// Coefficients of `tr(Q*^3)` as a cubic form in `(x, y, z) = unit_coords(alpha, beta)`.
#[derive(Clone, Copy, Debug)]
struct CubicForm {
    xxx: f64,
    yyy: f64,
    xxy: f64,
    zzz: f64,
    xxz: f64,
    yzz: f64,
    xzz: f64,
    xyz: f64,
}

impl CubicForm {
    fn new(v3: f64) -> Self {
        let s = (1.0 - v3 * v3).max(0.0).sqrt();
        let d = 3.0 * v3 * v3 + 1.0;
        let d32 = d * d.sqrt();
        let r2 = std::f64::consts::SQRT_2;
        let r6 = 6f64.sqrt();
        Self {
            yyy: 1.0 / r6,
            xzz: -(3.0 * r2 / 4.0) * (9.0 * v3 * v3 - 1.0) * s / d32,
            xxy: (r6 / 2.0) * (3.0 * v3 * v3 - 1.0) / d,
            zzz: -(3.0 * r2 / 2.0) * v3 * s * s / d32,
            xxz: -3.0 * r2 * v3 * (3.0 * v3 * v3 - 1.0) / d32,
            yzz: (r6 / 4.0) * (1.0 - 9.0 * v3 * v3) / d,
            xxx: 3.0 * r2 * v3 * v3 * s / d32,
            xyz: 3.0 * r6 * v3 * s / d,
        }
    }

    fn value(&self, [x, y, z]: [f64; 3]) -> f64 {
        self.xxx * x * x * x
            + self.yyy * y * y * y
            + self.xxy * x * x * y
            + self.zzz * z * z * z
            + self.xxz * x * x * z
            + self.yzz * y * z * z
            + self.xzz * x * z * z
            + self.xyz * x * y * z
    }

    fn gradient(&self, [x, y, z]: [f64; 3]) -> [f64; 3] {
        [
            3.0 * self.xxx * x * x + 2.0 * self.xxy * x * y + 2.0 * self.xxz * x * z + self.xzz * z * z + self.xyz * y * z,
            3.0 * self.yyy * y * y + self.xxy * x * x + self.yzz * z * z + self.xyz * x * z,
            3.0 * self.zzz * z * z + self.xxz * x * x + 2.0 * self.yzz * y * z + 2.0 * self.xzz * x * z + self.xyz * x * y,
        ]
    }

    fn hessian(&self, [x, y, z]: [f64; 3]) -> [[f64; 3]; 3] {
        let xx = 6.0 * self.xxx * x + 2.0 * self.xxy * y + 2.0 * self.xxz * z;
        let xy = 2.0 * self.xxy * x + self.xyz * z;
        let xz = 2.0 * self.xxz * x + 2.0 * self.xzz * z + self.xyz * y;
        let yy = 6.0 * self.yyy * y;
        let yz = 2.0 * self.yzz * z + self.xyz * x;
        let zz = 6.0 * self.zzz * z + 2.0 * self.yzz * y + 2.0 * self.xzz * x;
        [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]]
    }
}

/// `T` and its angle derivatives. `d_alpha_reduced = d_alpha / cos(beta)`, which stays
/// defined at `cos(beta) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceJet {
    pub value: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
    pub d_alpha_reduced: f64,
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `tr(Q*(alpha, beta)^3)` in the frame of any director with third component `v3`.
pub fn trace_t(alpha: f64, beta: f64, v3: f64) -> f64 {
    CubicForm::new(v3).value(unit_coords(alpha, beta))
}

pub fn trace_t_jet(alpha: f64, beta: f64, v3: f64) -> TraceJet {
    let form = CubicForm::new(v3);
    let u = unit_coords(alpha, beta);
    let g = form.gradient(u);
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let d_alpha_reduced = -sa * g[0] + ca * g[1];
    TraceJet {
        value: form.value(u),
        d_alpha: cb * d_alpha_reduced,
        d_beta: dot3(g, [-ca * sb, -sa * sb, cb]),
        d_alpha_reduced,
    }
}

/// Second derivative of `T` in `alpha`.
fn trace_t_aa(alpha: f64, beta: f64, form: &CubicForm) -> f64 {
    let u = unit_coords(alpha, beta);
    let (sa, ca) = alpha.sin_cos();
    let cb = beta.cos();
    let ua = [-sa * cb, ca * cb, 0.0];
    let h = form.hessian(u);
    let hua = [dot3(h[0], ua), dot3(h[1], ua), dot3(h[2], ua)];
    dot3(ua, hua) - dot3(form.gradient(u), [u[0], u[1], 0.0])
}

/// Frobenius norm of
/// `(T_a / cos b)(-sin a Qv + cos a Qinf) + T_b (cos b Qmix - sin b (cos a Qv + sin a Qinf))
///  - (3 Q*^2 - 3 T Q* - I)`,
/// which vanishes identically when `T` is the exact cubic trace on the frame span.
pub fn identity_check(alpha: f64, beta: f64, v3: f64) -> Result<f64> {
    let cb = beta.cos();
    if cb.abs() < BETA_COS_MIN {
        return Err(Error::SingularBeta { cos_beta: cb });
    }
    let frame = build_frame(&Director::from_v3(v3)?)?;
    let jet = trace_t_jet(alpha, beta, v3);
    let (sa, ca) = alpha.sin_cos();
    let sb = beta.sin();
    let (qv, qi, qm) = (frame.q_v_bar, frame.q_inf_bar, frame.q_mix_bar);
    let tangential = (qv * (-sa) + qi * ca) * (jet.d_alpha / cb)
        + (qm * cb - (qv * ca + qi * sa) * sb) * jet.d_beta;
    let qs = q_star(alpha, beta, &frame).to_matrix();
    let gradient = qs * qs * 3.0 - qs * (3.0 * jet.value) - nalgebra::Matrix3::identity();
    Ok((tangential.to_matrix() - gradient).norm())
}

/// Sampled `(alpha, beta, N)` path on a [`Grid1D`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnglePath {
    pub grid: Grid1D,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub amplitude: Vec<f64>,
}

impl AnglePath {
    pub fn new(grid: Grid1D, alpha: Vec<f64>, beta: Vec<f64>, amplitude: Vec<f64>) -> Result<Self> {
        let n = grid.n_nodes();
        if alpha.len() != n || beta.len() != n || amplitude.len() != n {
            return Err(Error::InvalidArgument(format!(
                "angle path needs {n} nodes per field (got {}, {}, {})",
                alpha.len(),
                beta.len(),
                amplitude.len()
            )));
        }
        Ok(Self { grid, alpha, beta, amplitude })
    }

    /// Angles and amplitudes of a tensor profile relative to `frame`; components outside
    /// the frame span are dropped.
    pub fn from_profile(profile: &Profile, frame: &Frame) -> Self {
        let tensors = profile.tensors();
        let mut alpha = Vec::with_capacity(tensors.len());
        let mut beta = Vec::with_capacity(tensors.len());
        let mut amplitude = Vec::with_capacity(tensors.len());
        for q in &tensors {
            let (a, b) = frame.angles_of(q).unwrap_or((FRAC_PI_2, 0.0));
            alpha.push(a);
            beta.push(b);
            amplitude.push(q.norm());
        }
        Self { grid: *profile.grid(), alpha, beta, amplitude }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn tensors(&self, frame: &Frame) -> Vec<S0Tensor> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .zip(&self.amplitude)
            .map(|((&a, &b), &n)| q_star(a, b, frame) * n)
            .collect()
    }

    /// Full-tensor profile `N Q*` with the last node snapped to `Q_inf`.
    pub fn to_profile(&self, frame: &Frame) -> Result<Profile> {
        let mut values = self.tensors(frame);
        *values.last_mut().expect("nodes") = qtensor::q_inf();
        Profile::tensor(self.grid, values)
    }

    fn check_amplitude(&self) -> Result<()> {
        match self.amplitude.iter().position(|&n| !(n > 0.0)) {
            Some(node) => Err(Error::NonPositiveAmplitude { node, value: self.amplitude[node] }),
            None => Ok(()),
        }
    }

    /// Discrete `F_lambda` of `N Q*`; the same value the tensor discretization assigns.
    pub fn energy(&self, v3: f64, lambda: f64, params: &PotentialParams) -> f64 {
        let h = self.grid.spacing();
        let w = self.grid.weights();
        let form = CubicForm::new(v3);
        let coords: Vec<[f64; 3]> =
            self.alpha.iter().zip(&self.beta).map(|(&a, &b)| unit_coords(a, b)).collect();
        let n = &self.amplitude;
        let lam2 = lambda * lambda;
        let mut sum = KahanSum::new();
        for i in 0..self.len() - 1 {
            let (u, v) = (coords[i], coords[i + 1]);
            let chord = (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2) + (u[2] - v[2]).powi(2);
            sum.add(((n[i] - n[i + 1]).powi(2) + n[i] * n[i + 1] * chord) / (2.0 * h));
        }
        for i in 0..self.len() {
            let f = if lam2 > 0.0 { lam2 * reduced_f(n[i], form.value(coords[i]), params) } else { 0.0 };
            sum.add(w[i] * (f + SQRT_2_3 * (1.0 - coords[i][1])));
        }
        sum.value()
    }
}

/// `f(N Q*)` with `|Q*| = 1` and `tr Q*^3 = t`.
fn reduced_f(n: f64, t: f64, p: &PotentialParams) -> f64 {
    let n2 = n * n;
    p.offset - 0.5 * p.a * n2 - (p.b / 3.0) * n2 * n * t + 0.25 * p.c * n2 * n2
}

/// Node-wise residuals of the angle Euler-Lagrange equations, zero at the pinned ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Residuals {
    pub fn max_abs(&self) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        (m(&self.alpha), m(&self.beta))
    }
}

/// Discrete residuals of
/// `(N^2 a' cos^2 b)' + lambda^2 (b/3) N^3 T_a + sqrt(2/3) cos a cos b` and
/// `(N^2 b')' + N^2 a'^2 sin b cos b + lambda^2 (b/3) N^3 T_b - sqrt(2/3) sin a sin b`,
/// taken as the negative energy gradient divided by the quadrature weight.
pub fn el_residuals(
    path: &AnglePath,
    frame: &Frame,
    lambda: f64,
    params: &PotentialParams,
) -> Result<Residuals> {
    path.check_amplitude()?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be finite and >= 0")));
    }
    let n_nodes = path.len();
    let h = path.grid.spacing();
    let w = path.grid.weights();
    let nn = &path.amplitude;
    let bulk = lambda * lambda * params.b / 3.0;
    let coords: Vec<[f64; 3]> =
        path.alpha.iter().zip(&path.beta).map(|(&a, &b)| unit_coords(a, b)).collect();
    let mut res = Residuals { alpha: vec![0.0; n_nodes], beta: vec![0.0; n_nodes] };
    for i in 1..n_nodes - 1 {
        let (a, b) = (path.alpha[i], path.beta[i]);
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        let ua = [-sa * cb, ca * cb, 0.0];
        let ub = [-ca * sb, -sa * sb, cb];
        let mut ka = 0.0;
        let mut kb = 0.0;
        for j in [i - 1, i + 1] {
            let c = nn[i] * nn[j] / h;
            ka += c * dot3(ua, coords[j]);
            kb += c * dot3(ub, coords[j]);
        }
        let jet = trace_t_jet(a, b, frame.v3());
        let n3 = nn[i].powi(3);
        res.alpha[i] = ka / w[i] + bulk * n3 * jet.d_alpha + SQRT_2_3 * ca * cb;
        res.beta[i] = kb / w[i] + bulk * n3 * jet.d_beta - SQRT_2_3 * sa * sb;
    }
    Ok(res)
}

/// Damped Newton settings shared by the angle and amplitude steps.
const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_MAX_HALVINGS: usize = 40;

/// Planar (`beta = 0`) alpha equation with optional bulk coupling `lambda^2 (b/3) N^3 T_a`.
struct AlphaSystem<'a> {
    amplitude: &'a [f64],
    h: f64,
    w: Vec<f64>,
    bulk: f64,
    form: CubicForm,
}

impl AlphaSystem<'_> {
    /// Residual `R_i = -dE/da_i / w_i` at interior nodes.
    fn residual(&self, alpha: &[f64]) -> Vec<f64> {
        let n = alpha.len();
        let nn = self.amplitude;
        (1..n - 1)
            .map(|i| {
                let k: f64 = [i - 1, i + 1]
                    .iter()
                    .map(|&j| nn[i] * nn[j] / self.h * (alpha[j] - alpha[i]).sin())
                    .sum();
                let ta = if self.bulk != 0.0 {
                    let u = unit_coords(alpha[i], 0.0);
                    let g = self.form.gradient(u);
                    -u[1] * g[0] + u[0] * g[1]
                } else {
                    0.0
                };
                k / self.w[i] + self.bulk * nn[i].powi(3) * ta + SQRT_2_3 * alpha[i].cos()
            })
            .collect()
    }

    /// Jacobian of the residual, scaled by `-w_i` so it is the energy Hessian.
    fn hessian(&self, alpha: &[f64]) -> Tridiagonal {
        let n = alpha.len();
        let m = n - 2;
        let nn = self.amplitude;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            let mut d = 0.0;
            for j in [i - 1, i + 1] {
                let c = nn[i] * nn[j] / self.h * (alpha[j] - alpha[i]).cos();
                d += c;
                if j == i - 1 && k > 0 {
                    lower[k] = -c;
                }
                if j == i + 1 && k + 1 < m {
                    upper[k] = -c;
                }
            }
            let taa = if self.bulk != 0.0 { trace_t_aa(alpha[i], 0.0, &self.form) } else { 0.0 };
            diag[k] = d + self.w[i] * (SQRT_2_3 * alpha[i].sin() - self.bulk * nn[i].powi(3) * taa);
        }
        Tridiagonal::new(lower, diag, upper)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn weighted_norm(r: &[f64], w: &[f64]) -> f64 {
    r.iter().zip(&w[1..]).map(|(x, wi)| wi * x * x).sum::<f64>().sqrt()
}

fn alpha_newton(system: &AlphaSystem, mut alpha: Vec<f64>) -> Result<Vec<f64>> {
    let mut r = system.residual(&alpha);
    let mut merit = weighted_norm(&r, &system.w);
    for _ in 0..NEWTON_MAX_ITER {
        if max_abs(&r) <= NEWTON_TOL {
            return Ok(alpha);
        }
        let rhs: Vec<f64> = r.iter().zip(&system.w[1..]).map(|(x, wi)| x * wi).collect();
        let step = system.hessian(&alpha).solve(&rhs).ok_or_else(|| Error::NewtonFailed {
            iterations: 0,
            residual: max_abs(&r),
            last_iterate: alpha.clone(),
        })?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let trial: Vec<f64> = alpha
                .iter()
                .enumerate()
                .map(|(i, &a)| if i == 0 || i + 1 == alpha.len() { a } else { a + scale * step[i - 1] })
                .collect();
            let rt = system.residual(&trial);
            let mt = weighted_norm(&rt, &system.w);
            if mt.is_finite() && mt < merit {
                alpha = trial;
                r = rt;
                merit = mt;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if max_abs(&r) <= NEWTON_TOL {
        return Ok(alpha);
    }
    Err(Error::NewtonFailed { iterations: NEWTON_MAX_ITER, residual: max_abs(&r), last_iterate: alpha })
}

fn default_alpha_guess(alpha0: f64, grid: &Grid1D) -> Vec<f64> {
    let rate = 0.5 * crate::closedform_inf::KAPPA;
    let mut a: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&t| FRAC_PI_2 + (alpha0 - FRAC_PI_2) * (-rate * t).exp())
        .collect();
    a[0] = alpha0;
    *a.last_mut().expect("nodes") = FRAC_PI_2;
    a
}

fn check_alpha_inputs(amplitude: &[f64], alpha0: f64, grid: &Grid1D) -> Result<()> {
    if amplitude.len() != grid.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "amplitude has {} nodes, grid has {}",
            amplitude.len(),
            grid.n_nodes()
        )));
    }
    if let Some(node) = amplitude.iter().position(|&n| !(n > 0.0)) {
        return Err(Error::NonPositiveAmplitude { node, value: amplitude[node] });
    }
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&alpha0) {
        return Err(Error::InvalidArgument(format!("alpha0 = {alpha0} is outside [-pi/2, pi/2]")));
    }
    Ok(())
}

/// Coupling of the planar alpha equation to the bulk term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BulkCoupling {
    pub lambda: f64,
    pub params: PotentialParams,
    pub v3: f64,
}

/// Solves the planar alpha equation for fixed `N` with `alpha(0) = alpha0`, `alpha(T) = pi/2`.
/// `coupling = None` is the `lambda = 0` equation `(N^2 a')' = -sqrt(2/3) cos a`.
pub fn solve_alpha(
    amplitude: &[f64],
    alpha0: f64,
    grid: &Grid1D,
    coupling: Option<&BulkCoupling>,
    start: Option<&[f64]>,
) -> Result<AnglePath> {
    check_alpha_inputs(amplitude, alpha0, grid)?;
    let (bulk, v3) = coupling
        .map(|c| (c.lambda * c.lambda * c.params.b / 3.0, c.v3))
        .unwrap_or((0.0, 0.0));
    let system = AlphaSystem {
        amplitude,
        h: grid.spacing(),
        w: grid.weights(),
        bulk,
        form: CubicForm::new(v3),
    };
    let mut guess = match start {
        Some(s) if s.len() == grid.n_nodes() => s.to_vec(),
        _ => default_alpha_guess(alpha0, grid),
    };
    guess[0] = alpha0;
    *guess.last_mut().expect("nodes") = FRAC_PI_2;
    let alpha = alpha_newton(&system, guess)?;
    AnglePath::new(*grid, alpha, vec![0.0; grid.n_nodes()], amplitude.to_vec())
}

pub fn solve_alpha_lambda0(amplitude: &[f64], alpha0: f64, grid: &Grid1D) -> Result<AnglePath> {
    solve_alpha(amplitude, alpha0, grid, None, None)
}

/// Minimizes the planar energy over `N` for fixed `alpha` with `N` pinned at both ends.
fn solve_amplitude(path: &AnglePath, lambda: f64, params: &PotentialParams, v3: f64) -> Result<Vec<f64>> {
    let n_nodes = path.len();
    let m = n_nodes - 2;
    let h = path.grid.spacing();
    let w = path.grid.weights();
    let lam2 = lambda * lambda;
    let form = CubicForm::new(v3);
    let cosd: Vec<f64> = path.alpha.windows(2).map(|p| (p[1] - p[0]).cos()).collect();
    let t: Vec<f64> = path.alpha.iter().map(|&a| form.value(unit_coords(a, 0.0))).collect();
    let mut nn = path.amplitude.clone();
    let gradient = |nn: &[f64]| -> Vec<f64> {
        (1..n_nodes - 1)
            .map(|i| {
                let k = (2.0 * nn[i] - cosd[i - 1] * nn[i - 1] - cosd[i] * nn[i + 1]) / h;
                let b = if lam2 > 0.0 {
                    let x = nn[i];
                    lam2 * (-params.a * x - params.b * x * x * t[i] + params.c * x * x * x)
                } else {
                    0.0
                };
                k + w[i] * b
            })
            .collect()
    };
    let mut g = gradient(&nn);
    let scaled = |g: &[f64]| g.iter().zip(&w[1..]).map(|(x, wi)| (x / wi).abs()).fold(0.0, f64::max);
    for _ in 0..NEWTON_MAX_ITER {
        if scaled(&g) <= NEWTON_TOL {
            return Ok(nn);
        }
        let lower: Vec<f64> = (0..m).map(|k| if k > 0 { -cosd[k] / h } else { 0.0 }).collect();
        let upper: Vec<f64> = (0..m).map(|k| if k + 1 < m { -cosd[k + 1] / h } else { 0.0 }).collect();
        let diag: Vec<f64> = (0..m)
            .map(|k| {
                let x = nn[k + 1];
                let b = if lam2 > 0.0 {
                    lam2 * (-params.a - 2.0 * params.b * x * t[k + 1] + 3.0 * params.c * x * x)
                } else {
                    0.0
                };
                2.0 / h + w[k + 1] * b
            })
            .collect();
        let step = Tridiagonal::new(lower, diag, upper).solve(&g).ok_or_else(|| Error::NewtonFailed {
            iterations: 0,
            residual: scaled(&g),
            last_iterate: nn.clone(),
        })?;
        let merit = g.iter().map(|x| x * x).sum::<f64>();
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let mut trial = nn.clone();
            for (k, s) in step.iter().enumerate() {
                trial[k + 1] -= scale * s;
            }
            let gt = gradient(&trial);
            let mt = gt.iter().map(|x| x * x).sum::<f64>();
            if trial.iter().all(|&x| x > 0.0) && mt < merit {
                nn = trial;
                g = gt;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if scaled(&g) <= NEWTON_TOL {
        return Ok(nn);
    }
    Err(Error::NewtonFailed { iterations: NEWTON_MAX_ITER, residual: scaled(&g), last_iterate: nn })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedSolution {
    pub path: AnglePath,
    pub energy: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    pub energy_history: Vec<f64>,
}

pub const ALTERNATING_REL_TOL: f64 = 1e-10;
pub const ALTERNATING_MAX_ITER: usize = 200;

/// Alternating minimization of the planar energy over `alpha` and `N` with `beta = 0`,
/// `N(0) = N(T) = sqrt(2/3) s*` and `alpha(0) = alpha0(v3)`.
pub fn minimize_planar(
    v: &Director,
    lambda: f64,
    params: &PotentialParams,
    grid: &Grid1D,
) -> Result<ReducedSolution> {
    build_frame(v)?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be finite and >= 0")));
    }
    let v3 = v.z();
    let a0 = alpha0(v3);
    let n_end = SQRT_2_3 * params.s_star;
    let coupling = BulkCoupling { lambda, params: *params, v3 };
    let coupling = (lambda > 0.0).then_some(&coupling);
    let mut path = solve_alpha(&vec![n_end; grid.n_nodes()], a0, grid, coupling, None)?;
    let mut energy = path.energy(v3, lambda, params);
    let mut history = vec![energy];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < ALTERNATING_MAX_ITER {
        iterations += 1;
        let amplitude = solve_amplitude(&path, lambda, params, v3)?;
        path = solve_alpha(&amplitude, a0, grid, coupling, Some(&path.alpha))?;
        let next = path.energy(v3, lambda, params);
        history.push(next);
        let change = (energy - next).abs() / next.abs().max(f64::MIN_POSITIVE);
        energy = next;
        if change <= ALTERNATING_REL_TOL {
            converged = true;
            break;
        }
    }
    Ok(ReducedSolution { path, energy, outer_iterations: iterations, converged, energy_history: history })
}

/// `D_0(Q_v)` through the planar reduction.
pub fn minimize_lambda0(v: &Director, grid: &Grid1D) -> Result<ReducedSolution> {
    minimize_planar(v, 0.0, &PotentialParams::default(), grid)
}

/// Planar energy at `lambda = 0` for fixed `N`, the functional minimized by the alpha solve.
pub fn k_n(path: &AnglePath, v3: f64) -> f64 {
    path.energy(v3, 0.0, &PotentialParams::default())
}

#[cfg(test)]
mod tests;
