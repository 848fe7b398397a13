//! Half-line transition profiles: the truncated energy `F_lambda`, its minimization with
//! pinned endpoints, and the boundary-layer density `D_lambda(Q0)`.

mod energy;
pub mod io;
pub(crate) mod solver;

use serde::{Deserialize, Serialize};

use crate::closedform_inf::{self, KAPPA};
use crate::error::{Error, Result};
use crate::lambda::Lambda;
use crate::qtensor::{self, q_inf, q_inf_bar, Director, PotentialParams, S0Tensor};

pub(crate) use energy::{DirectorProblem, TensorProblem};

/// Uniform grid on `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    t_max: f64,
    n_nodes: usize,
}

impl Grid1D {
    pub const DEFAULT_T: f64 = 12.0;
    pub const DEFAULT_NODES: usize = 1537;

    pub fn new(t_max: f64, n_nodes: usize) -> Result<Self> {
        if n_nodes < 16 {
            return Err(Error::InvalidArgument(format!("grid needs at least 16 nodes, got {n_nodes}")));
        }
        if !(t_max.is_finite() && t_max >= 6.0 / KAPPA) {
            return Err(Error::InvalidArgument(format!(
                "truncation length {t_max} is below 6/kappa = {:.4}",
                6.0 / KAPPA
            )));
        }
        Ok(Self { t_max, n_nodes })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn spacing(&self) -> f64 {
        self.t_max / (self.n_nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes {
            self.t_max
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_nodes];
        w[0] = 0.5 * h;
        w[self.n_nodes - 1] = 0.5 * h;
        w
    }

    /// Same length with half the spacing.
    pub fn refined(&self) -> Self {
        Self { t_max: self.t_max, n_nodes: 2 * self.n_nodes - 1 }
    }

    /// Same spacing on a domain twice as long.
    pub fn extended(&self) -> Self {
        Self { t_max: 2.0 * self.t_max, n_nodes: 2 * self.n_nodes - 1 }
    }
}

impl Default for Grid1D {
    fn default() -> Self {
        Self { t_max: Self::DEFAULT_T, n_nodes: Self::DEFAULT_NODES }
    }
}

/// Nodal values of a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProfileValues {
    Tensor { values: Vec<S0Tensor> },
    /// Uniaxial profile `s (n n^T - I/3)` with a fixed amplitude.
    Director { directors: Vec<Director>, amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    grid: Grid1D,
    values: ProfileValues,
}

impl Profile {
    /// Full-tensor profile. The last value must be `Q_inf` to within `1e-12` and is then
    /// stored exactly.
    pub fn tensor(grid: Grid1D, mut values: Vec<S0Tensor>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        let last = values.last_mut().expect("grid has nodes");
        if (*last - q_inf()).norm() > 1e-12 {
            return Err(Error::InvalidArgument("profile must end at Q_inf".into()));
        }
        *last = q_inf();
        if values.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidArgument("non-finite profile value".into()));
        }
        Ok(Self { grid, values: ProfileValues::Tensor { values } })
    }

    /// Uniaxial profile; the last director must be `+-e3` and is stored as `e3`.
    pub fn director(grid: Grid1D, mut directors: Vec<Director>, amplitude: f64) -> Result<Self> {
        if directors.len() != grid.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "{} directors for {} nodes",
                directors.len(),
                grid.n_nodes()
            )));
        }
        let last = directors.last_mut().expect("grid has nodes");
        if (last.z().abs() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("profile must end at e3".into()));
        }
        *last = Director::E3;
        Ok(Self { grid, values: ProfileValues::Director { directors, amplitude } })
    }

    pub fn constant_inf(grid: Grid1D) -> Self {
        Self { grid, values: ProfileValues::Tensor { values: vec![q_inf(); grid.n_nodes()] } }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &ProfileValues {
        &self.values
    }

    pub fn is_director_mode(&self) -> bool {
        matches!(self.values, ProfileValues::Director { .. })
    }

    pub fn tensors(&self) -> Vec<S0Tensor> {
        match &self.values {
            ProfileValues::Tensor { values } => values.clone(),
            ProfileValues::Director { directors, amplitude } => {
                directors.iter().map(|n| qtensor::uniaxial(n, *amplitude)).collect()
            }
        }
    }

    pub fn start(&self) -> S0Tensor {
        match &self.values {
            ProfileValues::Tensor { values } => values[0],
            ProfileValues::Director { directors, amplitude } => {
                qtensor::uniaxial(&directors[0], *amplitude)
            }
        }
    }

    /// Converts a uniaxial profile into the equivalent full-tensor one.
    pub fn to_tensor_mode(&self) -> Self {
        Self { grid: self.grid, values: ProfileValues::Tensor { values: self.tensors() } }
    }
}

/// Discrete `F_lambda`: gradient energy on cells, potentials by the trapezoid rule.
/// Uniaxial profiles use the director difference `s^2 |n_{i+1} - n_i|^2 / h`.
pub fn energy_f_lambda(p: &Profile, lambda: Lambda, params: &PotentialParams) -> Result<f64> {
    match (&p.values, lambda) {
        (ProfileValues::Tensor { .. }, Lambda::Infinite) => Err(Error::ModeMismatch),
        (ProfileValues::Tensor { values }, Lambda::Finite(l)) => {
            Ok(energy::tensor_energy(&p.grid, values, l * l, params).0)
        }
        (ProfileValues::Director { directors, amplitude }, l) => {
            Ok(energy::director_energy(&p.grid, directors, *amplitude, l.squared(), params))
        }
    }
}

/// Tensor-mode `F_lambda` and its gradient with respect to the interior node values; the two
/// end nodes are fixed and get zero rows.
pub fn energy_gradient(p: &Profile, lambda: f64, params: &PotentialParams) -> Result<(f64, Vec<S0Tensor>)> {
    let ProfileValues::Tensor { values } = &p.values else {
        return Err(Error::ModeMismatch);
    };
    let lambda = Lambda::finite(lambda)?;
    let lam2 = lambda.squared().ok_or_else(|| Error::InvalidArgument("gradient needs finite lambda".into()))?;
    let mut problem = TensorProblem::new(p.grid, values[0], lam2, *params);
    let x = problem.pack(values);
    let mut g = vec![0.0; x.len()];
    let e = solver::DescentProblem::value_and_gradient(&mut problem, &x, &mut g);
    let mut out = vec![S0Tensor::default(); values.len()];
    for (slot, c) in out[1..values.len() - 1].iter_mut().zip(g.chunks_exact(5)) {
        *slot = S0Tensor([c[0], c[1], c[2], c[3], c[4]]);
    }
    Ok((e, out))
}

/// Starting profile for the descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// `Q_inf + (Q0 - Q_inf) exp(-kappa t)`.
    ExpBlend,
    /// The exact uniaxially constrained minimizer, corrected to start at `Q0`.
    ClosedForm,
    /// Amplitude and angle relaxing from `Q0` to `Q_inf` inside the plane through `Q0` and `Q_inf`.
    Geodesic,
    /// Director turning uniformly in angle towards `e3`, `Phi(t) = Phi0 exp(-rate t)`.
    Slerp { rate: f64 },
    /// A seeded random smooth perturbation of the exponential blend.
    Random { seed: u64 },
    Custom(Box<Profile>),
}

impl InitialGuess {
    pub fn label(&self) -> String {
        match self {
            Self::ExpBlend => "exp_blend".into(),
            Self::ClosedForm => "closed_form".into(),
            Self::Geodesic => "geodesic".into(),
            Self::Slerp { rate } => format!("slerp({rate})"),
            Self::Random { seed } => format!("random({seed})"),
            Self::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub params: PotentialParams,
    /// `None` picks the slerp start for `lambda = inf` and the exponential blend otherwise.
    pub init: Option<InitialGuess>,
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50_000,
            params: PotentialParams::default(),
            init: None,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate_g_evals: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_history: Option<Vec<f64>>,
}

/// Director of a tensor required to be uniaxial with amplitude `s`.
fn uniaxial_start(q0: &S0Tensor, s: f64) -> Result<Director> {
    let fit = qtensor::uniaxial_fit(q0, s);
    if fit.distance > 1e-8 {
        return Err(Error::NotUniaxial { distance: fit.distance });
    }
    Ok(fit.director)
}

fn smooth_bump(t: f64, t_max: f64, k: usize) -> f64 {
    (std::f64::consts::PI * (k as f64) * t / t_max).sin()
}

fn initial_tensor_values(
    q0: &S0Tensor,
    grid: &Grid1D,
    init: &InitialGuess,
    params: &PotentialParams,
) -> Result<Vec<S0Tensor>> {
    let qi = q_inf();
    let ts = grid.nodes();
    let blend = |t: f64| qi + (*q0 - qi) * (-KAPPA * t).exp();
    let mut values: Vec<S0Tensor> = match init {
        InitialGuess::ExpBlend => ts.iter().map(|&t| blend(t)).collect(),
        InitialGuess::ClosedForm => {
            let fit = qtensor::uniaxial_fit(q0, params.s_star);
            let q_uni = qtensor::uniaxial(&fit.director, params.s_star);
            let corr = *q0 - q_uni;
            ts.iter()
                .map(|&t| {
                    let n = closedform_inf::n_exact_from(&fit.director, t);
                    qtensor::uniaxial(&n, params.s_star) + corr * (-KAPPA * t).exp()
                })
                .collect()
        }
        InitialGuess::Geodesic => {
            let n0 = q0.norm();
            let n_inf = qi.norm();
            let qb = q_inf_bar();
            match q0.normalized() {
                None => ts.iter().map(|&t| blend(t)).collect(),
                Some(w) => {
                    let c = w.dot(&qb).clamp(-1.0, 1.0);
                    let perp = (w - qb * c).normalized();
                    let alpha0 = c.asin();
                    ts.iter()
                        .map(|&t| {
                            let decay = (-KAPPA * t).exp();
                            let a = std::f64::consts::FRAC_PI_2
                                + (alpha0 - std::f64::consts::FRAC_PI_2) * (-0.5 * KAPPA * t).exp();
                            let n = n_inf + (n0 - n_inf) * decay;
                            match perp {
                                Some(u) => (u * a.cos() + qb * a.sin()) * n,
                                None => blend(t),
                            }
                        })
                        .collect()
                }
            }
        }
        InitialGuess::Slerp { rate } => {
            let n = uniaxial_start(q0, params.s_star)
                .or_else(|_| Ok::<_, Error>(qtensor::uniaxial_fit(q0, params.s_star).director))?;
            let dirs = slerp_directors(&n, grid, *rate);
            let corr = *q0 - qtensor::uniaxial(&n, params.s_star);
            dirs.iter()
                .zip(&ts)
                .map(|(d, &t)| qtensor::uniaxial(d, params.s_star) + corr * (-KAPPA * t).exp())
                .collect()
        }
        InitialGuess::Random { seed } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let modes: Vec<[f64; 5]> =
                (1..=6).map(|_| std::array::from_fn(|_| rng.gen_range(-0.3..0.3))).collect();
            ts.iter()
                .map(|&t| {
                    let mut q = blend(t);
                    for (k, m) in modes.iter().enumerate() {
                        q += S0Tensor(*m) * (smooth_bump(t, grid.t_max(), k + 1) * (-0.3 * t).exp());
                    }
                    q
                })
                .collect()
        }
        InitialGuess::Custom(p) => {
            if p.grid() != grid {
                return Err(Error::InvalidArgument("custom start lives on another grid".into()));
            }
            p.tensors()
        }
    };
    values[0] = *q0;
    *values.last_mut().expect("nodes") = qi;
    Ok(values)
}

fn slerp_directors(n0: &Director, grid: &Grid1D, rate: f64) -> Vec<Director> {
    let mut v = *n0.as_vector();
    if v.z < 0.0 {
        v = -v;
    }
    let phi0 = v.z.clamp(-1.0, 1.0).acos();
    let rho = (v.x * v.x + v.y * v.y).sqrt();
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i + 1 == grid.n_nodes() || rho == 0.0 {
                return Director::E3;
            }
            let phi = phi0 * (-rate * t).exp();
            let s = phi.sin() / rho;
            Director::normalize(nalgebra::Vector3::new(v.x * s, v.y * s, phi.cos()))
                .unwrap_or(Director::E3)
        })
        .collect()
}

fn initial_directors(
    n0: &Director,
    grid: &Grid1D,
    init: &InitialGuess,
    params: &PotentialParams,
) -> Result<Vec<Director>> {
    let mut dirs = match init {
        InitialGuess::ClosedForm => grid
            .nodes()
            .iter()
            .map(|&t| closedform_inf::n_exact_from(n0, t))
            .collect::<Vec<_>>(),
        InitialGuess::Slerp { rate } => slerp_directors(n0, grid, *rate),
        InitialGuess::Custom(p) => match p.values() {
            ProfileValues::Director { directors, .. } if p.grid() == grid => directors.clone(),
            _ => {
                return Err(Error::InvalidArgument(
                    "custom start for lambda = inf must be a director profile on the same grid".into(),
                ))
            }
        },
        InitialGuess::Random { seed } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let base = slerp_directors(n0, grid, 1.0);
            let modes: Vec<[f64; 3]> =
                (1..=6).map(|_| std::array::from_fn(|_| rng.gen_range(-0.4..0.4))).collect();
            base.iter()
                .zip(grid.nodes())
                .map(|(d, t)| {
                    let mut v = *d.as_vector();
                    for (k, m) in modes.iter().enumerate() {
                        let b = smooth_bump(t, grid.t_max(), k + 1) * (-0.3 * t).exp();
                        v += nalgebra::Vector3::new(m[0], m[1], m[2]) * b;
                    }
                    Director::normalize(v).unwrap_or(*d)
                })
                .collect()
        }
        other => {
            let tensors = initial_tensor_values(&qtensor::uniaxial(n0, params.s_star), grid, other, params)?;
            tensors
                .iter()
                .map(|q| qtensor::uniaxial_fit(q, params.s_star).director)
                .collect()
        }
    };
    dirs[0] = *n0;
    *dirs.last_mut().expect("nodes") = Director::E3;
    Ok(dirs)
}

/// Minimizes `F_lambda` over profiles on `grid` starting at `q0` and ending at `Q_inf`.
/// For `lambda = inf` the descent runs over director-valued nodes.
pub fn minimize_profile(
    q0: &S0Tensor,
    lambda: Lambda,
    grid: &Grid1D,
    opts: &SolveOptions,
) -> Result<(Profile, SolveReport)> {
    if !q0.is_finite() {
        return Err(Error::InvalidArgument("boundary tensor is not finite".into()));
    }
    let settings = solver::NcgSettings {
        tol: opts.tol,
        max_iter: opts.max_iter,
        record_history: opts.record_history,
    };
    match lambda {
        Lambda::Infinite => {
            let n0 = uniaxial_start(q0, opts.params.s_star)?;
            let init = opts.init.clone().unwrap_or(InitialGuess::Slerp { rate: 1.0 });
            let dirs = initial_directors(&n0, grid, &init, &opts.params)?;
            let mut problem = DirectorProblem::new(*grid, n0, opts.params.s_star, None, opts.params);
            let x0 = problem.pack(&dirs);
            let out = solver::minimize(&mut problem, x0, &settings);
            let directors = problem.unpack(&out.x);
            let profile = Profile::director(*grid, directors, opts.params.s_star)?;
            let report = SolveReport {
                energy: out.energy,
                grad_norm: out.grad_norm,
                iterations: out.iterations,
                converged: out.converged,
                degenerate_g_evals: 0,
                energy_history: opts.record_history.then_some(out.history),
            };
            Ok((profile, report))
        }
        Lambda::Finite(l) => {
            let init = opts.init.clone().unwrap_or(InitialGuess::ExpBlend);
            let values = initial_tensor_values(q0, grid, &init, &opts.params)?;
            let mut problem = TensorProblem::new(*grid, *q0, l * l, opts.params);
            let x0 = problem.pack(&values);
            let out = solver::minimize(&mut problem, x0, &settings);
            let values = problem.unpack(&out.x);
            let degenerate = problem.degenerate_count(&values);
            let profile = Profile::tensor(*grid, values)?;
            let report = SolveReport {
                energy: out.energy,
                grad_norm: out.grad_norm,
                iterations: out.iterations,
                converged: out.converged,
                degenerate_g_evals: degenerate,
                energy_history: opts.record_history.then_some(out.history),
            };
            Ok((profile, report))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: String,
    pub energy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DLambda {
    /// Lowest energy among the converged starts (or among all, if none converged).
    pub value: f64,
    pub converged: bool,
    pub starts: Vec<StartOutcome>,
    pub best_start: usize,
    #[serde(skip)]
    pub profile: Option<Profile>,
    pub report: SolveReport,
}

/// Starts used by [`d_lambda`].
pub fn default_starts(lambda: Lambda) -> Vec<InitialGuess> {
    match lambda {
        Lambda::Infinite => vec![InitialGuess::ClosedForm, InitialGuess::Slerp { rate: 1.0 }],
        Lambda::Finite(_) => {
            vec![InitialGuess::ExpBlend, InitialGuess::ClosedForm, InitialGuess::Geodesic]
        }
    }
}

/// `D_lambda(q0)` by multi-start minimization; every start's energy is reported.
pub fn d_lambda(q0: &S0Tensor, lambda: Lambda, grid: &Grid1D, opts: &SolveOptions) -> Result<DLambda> {
    let starts = match &opts.init {
        Some(i) => vec![i.clone()],
        None => default_starts(lambda),
    };
    d_lambda_with_starts(q0, lambda, grid, opts, &starts)
}

pub fn d_lambda_with_starts(
    q0: &S0Tensor,
    lambda: Lambda,
    grid: &Grid1D,
    opts: &SolveOptions,
    starts: &[InitialGuess],
) -> Result<DLambda> {
    if starts.is_empty() {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    let mut outcomes = Vec::with_capacity(starts.len());
    let mut best: Option<(usize, Profile, SolveReport)> = None;
    for (k, init) in starts.iter().enumerate() {
        let local = SolveOptions { init: Some(init.clone()), ..opts.clone() };
        let (profile, report) = minimize_profile(q0, lambda, grid, &local)?;
        outcomes.push(StartOutcome {
            start: init.label(),
            energy: report.energy,
            converged: report.converged,
            iterations: report.iterations,
            grad_norm: report.grad_norm,
        });
        let better = match &best {
            None => true,
            Some((_, _, b)) => {
                (report.converged && !b.converged)
                    || (report.converged == b.converged && report.energy < b.energy)
            }
        };
        if better {
            best = Some((k, profile, report));
        }
    }
    let (best_start, profile, report) = best.expect("at least one start");
    Ok(DLambda {
        value: report.energy,
        converged: report.converged,
        starts: outcomes,
        best_start,
        profile: Some(profile),
        report,
    })
}

/// `D_lambda` of the uniaxial tensor `s* (v v^T - I/3)`.
pub fn d_lambda_director(v: &Director, lambda: Lambda, grid: &Grid1D, opts: &SolveOptions) -> Result<DLambda> {
    d_lambda(&qtensor::uniaxial(v, opts.params.s_star), lambda, grid, opts)
}

#[cfg(test)]
mod tests;
