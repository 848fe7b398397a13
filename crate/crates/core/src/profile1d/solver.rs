//! Preconditioned nonlinear conjugate gradients on a product of flat and spherical factors.

use crate::numerics::KahanSum;

/// A smooth objective on a (possibly constrained) coordinate space.
pub(crate) trait DescentProblem {
    fn dim(&self) -> usize;

    /// Energy and its Euclidean gradient.
    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64;

    /// Projects `v` onto the tangent space at `x`.
    fn to_tangent(&self, _x: &[f64], _v: &mut [f64]) {}

    /// Moves from `x` along `d` by `alpha`, writing the new point and the velocity of the
    /// retraction curve at `alpha`.
    fn step(&self, x: &[f64], d: &[f64], alpha: f64, out: &mut [f64], velocity: &mut [f64]) {
        for k in 0..x.len() {
            out[k] = x[k] + alpha * d[k];
            velocity[k] = d[k];
        }
    }

    fn precondition(&self, g: &[f64], out: &mut [f64]);

    /// Grid-independent dual norm of a tangent gradient.
    fn gradient_norm(&self, g: &[f64]) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct NcgSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub record_history: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct NcgOutcome {
    pub x: Vec<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Relative energy slack tolerated by the line search for round-off.
pub(crate) const ENERGY_NOISE: f64 = 1e-14;

const C1: f64 = 1e-4;
const C2: f64 = 0.1;
const MAX_TRIALS: usize = 60;
/// Consecutive steps without energy decrease beyond round-off after which the descent stops.
const STALL_LIMIT: usize = 25;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).collect::<KahanSum>().value()
}

struct Trial {
    alpha: f64,
    energy: f64,
    slope: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
    velocity: Vec<f64>,
}

struct LineSearch<'a, P: DescentProblem> {
    problem: &'a mut P,
    x: &'a [f64],
    d: &'a [f64],
}

impl<P: DescentProblem> LineSearch<'_, P> {
    fn eval(&mut self, alpha: f64) -> Trial {
        let n = self.x.len();
        let mut x = vec![0.0; n];
        let mut velocity = vec![0.0; n];
        let mut grad = vec![0.0; n];
        self.problem.step(self.x, self.d, alpha, &mut x, &mut velocity);
        let energy = self.problem.value_and_gradient(&x, &mut grad);
        let slope = dot(&grad, &velocity);
        Trial { alpha, energy, slope, x, grad, velocity }
    }

    /// Strong-Wolfe search whose sufficient-decrease test is relaxed to the round-off
    /// level `eps`, so that derivative information still drives steps once energy
    /// differences drop below machine precision.
    fn run(&mut self, e0: f64, slope0: f64, alpha0: f64, eps: f64) -> Option<Trial> {
        let mut lo = (0.0, e0, slope0);
        let mut hi: Option<(f64, f64, f64)> = None;
        let mut best: Option<Trial> = None;
        let mut alpha = alpha0;
        for _ in 0..MAX_TRIALS {
            let t = self.eval(alpha);
            let finite = t.energy.is_finite() && t.slope.is_finite();
            let armijo = finite && t.energy <= e0 + C1 * alpha * slope0;
            let noise_ok = finite && t.energy <= e0 + eps;
            if (armijo || noise_ok) && t.slope.abs() <= C2 * slope0.abs() {
                return Some(t);
            }
            if !finite || !(armijo || noise_ok) || t.slope >= 0.0 {
                hi = Some((alpha, t.energy, if finite { t.slope } else { f64::INFINITY }));
            } else {
                lo = (alpha, t.energy, t.slope);
            }
            if noise_ok && best.as_ref().is_none_or(|b| t.energy < b.energy) {
                best = Some(t);
            }
            alpha = match hi {
                None => {
                    let (a, _, s) = lo;
                    let ext = if s > slope0 { a - s * a / (s - slope0) } else { 4.0 * a };
                    ext.clamp(1.5 * a, 10.0 * a)
                }
                Some(h) => {
                    let (a, b) = (lo.0, h.0);
                    let w = b - a;
                    if w.abs() <= 1e-16 * b.abs().max(1e-300) {
                        break;
                    }
                    let guess = if h.2.is_finite() && lo.2 < 0.0 && h.2 > 0.0 {
                        a - lo.2 * w / (h.2 - lo.2)
                    } else {
                        cubic_min(lo, h).unwrap_or(a + 0.5 * w)
                    };
                    let margin = 0.01 * w;
                    if guess.is_finite() {
                        guess.clamp(a + margin, b - margin)
                    } else {
                        a + 0.5 * w
                    }
                }
            };
        }
        best.filter(|b| b.alpha > 0.0)
    }
}

fn cubic_min(a: (f64, f64, f64), b: (f64, f64, f64)) -> Option<f64> {
    if !(b.1.is_finite() && b.2.is_finite()) {
        return None;
    }
    let (x0, f0, d0) = a;
    let (x1, f1, d1) = b;
    let t1 = d0 + d1 - 3.0 * (f0 - f1) / (x0 - x1);
    let disc = t1 * t1 - d0 * d1;
    if disc < 0.0 {
        return None;
    }
    let t2 = (x1 - x0).signum() * disc.sqrt();
    let x = x1 - (x1 - x0) * (d1 + t2 - t1) / (d1 - d0 + 2.0 * t2);
    x.is_finite().then_some(x)
}

/// Polak-Ribiere+ conjugate gradients with Sobolev preconditioning. Falls back to a
/// Barzilai-Borwein-scaled steepest-descent step when the conjugate direction fails.
pub(crate) fn minimize<P: DescentProblem>(
    problem: &mut P,
    x0: Vec<f64>,
    s: &NcgSettings,
) -> NcgOutcome {
    let n = problem.dim();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut e = problem.value_and_gradient(&x, &mut g);
    problem.to_tangent(&x, &mut g);
    let mut z = vec![0.0; n];
    problem.precondition(&g, &mut z);
    problem.to_tangent(&x, &mut z);
    let mut gz = dot(&g, &z);
    let mut d: Vec<f64> = z.iter().map(|v| -v).collect();
    let mut history = Vec::new();
    if s.record_history {
        history.push(e);
    }
    let mut grad_norm = problem.gradient_norm(&g);
    let mut alpha_prev = 1.0;
    let mut slope_prev = -gz;
    let mut bb_step: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = grad_norm <= s.tol;
    let mut stalled = 0;

    while !converged && iterations < s.max_iter {
        let mut slope = dot(&g, &d);
        let mut steepest = false;
        if !(slope < 0.0) {
            d.iter_mut().zip(&z).for_each(|(di, zi)| *di = -zi);
            slope = -gz;
            steepest = true;
        }
        if !(slope < 0.0) {
            break;
        }
        let eps = ENERGY_NOISE * e.abs();
        let alpha0 = if iterations == 0 {
            1.0
        } else {
            (alpha_prev * slope_prev / slope).clamp(1e-12, 1e6)
        };
        let trial = LineSearch { problem: &mut *problem, x: &x, d: &d }.run(e, slope, alpha0, eps);
        let trial = match trial {
            Some(t) => t,
            None if !steepest => {
                d.iter_mut().zip(&z).for_each(|(di, zi)| *di = -zi);
                let a0 = bb_step.unwrap_or(1.0);
                match (LineSearch { problem: &mut *problem, x: &x, d: &d }).run(e, -gz, a0, eps) {
                    Some(t) => t,
                    None => break,
                }
            }
            None => break,
        };
        iterations += 1;
        let used_slope = dot(&g, &d);
        let s_vec: Vec<f64> = trial.x.iter().zip(&x).map(|(a, b)| a - b).collect();

        let mut g_new = trial.grad;
        problem.to_tangent(&trial.x, &mut g_new);
        let mut g_old = g.clone();
        problem.to_tangent(&trial.x, &mut g_old);
        let y: Vec<f64> = g_new.iter().zip(&g_old).map(|(a, b)| a - b).collect();
        let sy = dot(&s_vec, &y);
        bb_step = (sy > 0.0).then(|| dot(&s_vec, &s_vec) / sy).filter(|v| v.is_finite());

        let mut z_new = vec![0.0; n];
        problem.precondition(&g_new, &mut z_new);
        problem.to_tangent(&trial.x, &mut z_new);
        let gz_new = dot(&g_new, &z_new);
        let beta = (dot(&y, &z_new) / gz).max(0.0);
        let mut d_old = trial.velocity;
        problem.to_tangent(&trial.x, &mut d_old);
        for k in 0..n {
            d[k] = -z_new[k] + if beta.is_finite() { beta * d_old[k] } else { 0.0 };
        }

        stalled = if e - trial.energy <= eps { stalled + 1 } else { 0 };
        alpha_prev = trial.alpha;
        slope_prev = used_slope;
        x = trial.x;
        e = trial.energy;
        g = g_new;
        z = z_new;
        gz = gz_new;
        grad_norm = problem.gradient_norm(&g);
        converged = grad_norm <= s.tol;
        if s.record_history {
            history.push(e);
        }
        if stalled >= STALL_LIMIT {
            break;
        }
    }

    NcgOutcome { x, energy: e, grad_norm, iterations, converged, history }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Anisotropic quadratic plus quartic bowl.
    struct Bowl {
        scales: Vec<f64>,
    }

    impl DescentProblem for Bowl {
        fn dim(&self) -> usize {
            self.scales.len()
        }
        fn value_and_gradient(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
            let mut e = 0.0;
            for k in 0..x.len() {
                let xk = x[k] - 1.0;
                e += 0.5 * self.scales[k] * xk * xk + 0.25 * xk.powi(4);
                g[k] = self.scales[k] * xk + xk.powi(3);
            }
            e
        }
        fn precondition(&self, g: &[f64], out: &mut [f64]) {
            out.copy_from_slice(g);
        }
        fn gradient_norm(&self, g: &[f64]) -> f64 {
            g.iter().map(|v| v * v).sum::<f64>().sqrt()
        }
    }

    /// Points on the unit circle minimizing the height: a spherical factor.
    struct Circle;

    impl DescentProblem for Circle {
        fn dim(&self) -> usize {
            2
        }
        fn value_and_gradient(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
            g[0] = 0.0;
            g[1] = 1.0;
            x[1]
        }
        fn to_tangent(&self, x: &[f64], v: &mut [f64]) {
            let p = x[0] * v[0] + x[1] * v[1];
            v[0] -= p * x[0];
            v[1] -= p * x[1];
        }
        fn step(&self, x: &[f64], d: &[f64], a: f64, out: &mut [f64], vel: &mut [f64]) {
            let y = [x[0] + a * d[0], x[1] + a * d[1]];
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            out[0] = y[0] / r;
            out[1] = y[1] / r;
            let p = out[0] * d[0] + out[1] * d[1];
            vel[0] = (d[0] - p * out[0]) / r;
            vel[1] = (d[1] - p * out[1]) / r;
        }
        fn precondition(&self, g: &[f64], out: &mut [f64]) {
            out.copy_from_slice(g);
        }
        fn gradient_norm(&self, g: &[f64]) -> f64 {
            (g[0] * g[0] + g[1] * g[1]).sqrt()
        }
    }

    #[test]
    fn minimizes_ill_conditioned_bowl() {
        let mut p = Bowl { scales: (0..50).map(|k| 1.0 + k as f64 * 4.0).collect() };
        let s = NcgSettings { tol: 1e-10, max_iter: 5000, record_history: true };
        let out = minimize(&mut p, vec![0.0; 50], &s);
        assert!(out.converged, "grad {}", out.grad_norm);
        assert!(out.x.iter().all(|v| (v - 1.0).abs() < 1e-9));
        assert!(out.history.windows(2).all(|w| w[1] <= w[0] + ENERGY_NOISE * w[0].abs()));
    }

    #[test]
    fn minimizes_on_circle() {
        let s = NcgSettings { tol: 1e-12, max_iter: 500, record_history: false };
        let out = minimize(&mut Circle, vec![0.6, 0.8], &s);
        assert!(out.converged);
        assert!((out.x[1] + 1.0).abs() < 1e-12 && out.x[0].abs() < 1e-6);
    }

    #[test]
    fn cubic_interpolation_finds_quadratic_minimum() {
        let f = |x: f64| (x - 0.3) * (x - 0.3);
        let df = |x: f64| 2.0 * (x - 0.3);
        let m = cubic_min((0.0, f(0.0), df(0.0)), (1.0, f(1.0), df(1.0))).unwrap();
        assert!((m - 0.3).abs() < 1e-12);
    }
}
