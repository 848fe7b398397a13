use nalgebra::Vector3;

use super::solver::DescentProblem;
use super::Grid1D;
use crate::numerics::{KahanSum, Tridiagonal, TridiagonalFactor};
use crate::qtensor::{
    bulk_f, bulk_f_grad, field_g_eval, field_g_grad, q_inf, uniaxial, Director, PotentialParams,
    S0Tensor, SQRT_3_2,
};

/// Energy of a full-tensor profile and the number of nodes where `g` was degenerate.
pub(crate) fn tensor_energy(
    grid: &Grid1D,
    values: &[S0Tensor],
    lam2: f64,
    params: &PotentialParams,
) -> (f64, usize) {
    let h = grid.spacing();
    let w = grid.weights();
    let mut sum = KahanSum::new();
    let mut degenerate = 0;
    for pair in values.windows(2) {
        sum.add((pair[1] - pair[0]).norm_sq() / (2.0 * h));
    }
    for (q, wi) in values.iter().zip(&w) {
        let g = field_g_eval(q);
        degenerate += usize::from(g.degenerate);
        let f = if lam2 > 0.0 { lam2 * bulk_f(q, params) } else { 0.0 };
        sum.add(wi * (f + g.value));
    }
    (sum.value(), degenerate)
}

fn g_director(n: &Director) -> f64 {
    SQRT_3_2 * (1.0 - n.z() * n.z()).max(0.0)
}

pub(crate) fn director_energy(
    grid: &Grid1D,
    dirs: &[Director],
    amplitude: f64,
    lam2: Option<f64>,
    params: &PotentialParams,
) -> f64 {
    let h = grid.spacing();
    let w = grid.weights();
    let s2 = amplitude * amplitude;
    let mut sum = KahanSum::new();
    for pair in dirs.windows(2) {
        sum.add(s2 * (pair[1].as_vector() - pair[0].as_vector()).norm_squared() / h);
    }
    let f_uni = match lam2 {
        Some(l2) if l2 > 0.0 => l2 * bulk_f(&uniaxial(&Director::E3, amplitude), params),
        _ => 0.0,
    };
    let g_of = |n: &Director| if amplitude > 0.0 { g_director(n) } else { crate::qtensor::field_g(&uniaxial(n, amplitude)) };
    for (n, wi) in dirs.iter().zip(&w) {
        sum.add(wi * (f_uni + g_of(n)));
    }
    sum.value()
}

fn sobolev_factor(n_free: usize, h: f64, stiffness: f64, sigma: f64) -> TridiagonalFactor {
    let off = -stiffness / h;
    let diag = 2.0 * stiffness / h + sigma * h;
    let t = Tridiagonal::new(vec![off; n_free], vec![diag; n_free], vec![off; n_free]);
    TridiagonalFactor::new(&t).expect("Sobolev matrix is positive definite")
}

/// Free variables: basis coefficients of the interior nodes.
pub(crate) struct TensorProblem {
    grid: Grid1D,
    h: f64,
    w: Vec<f64>,
    q0: S0Tensor,
    lam2: f64,
    params: PotentialParams,
    factor: TridiagonalFactor,
}

impl TensorProblem {
    pub fn new(grid: Grid1D, q0: S0Tensor, lam2: f64, params: PotentialParams) -> Self {
        let h = grid.spacing();
        let n_free = grid.n_nodes() - 2;
        let sigma = 2.5 + 3.0 * lam2;
        Self {
            grid,
            h,
            w: grid.weights(),
            q0,
            lam2,
            params,
            factor: sobolev_factor(n_free, h, 1.0, sigma),
        }
    }

    pub fn pack(&self, values: &[S0Tensor]) -> Vec<f64> {
        values[1..values.len() - 1].iter().flat_map(|q| q.0).collect()
    }

    pub fn unpack(&self, x: &[f64]) -> Vec<S0Tensor> {
        let mut v = Vec::with_capacity(self.grid.n_nodes());
        v.push(self.q0);
        v.extend(x.chunks_exact(5).map(|c| S0Tensor([c[0], c[1], c[2], c[3], c[4]])));
        v.push(q_inf());
        v
    }

    pub fn degenerate_count(&self, values: &[S0Tensor]) -> usize {
        values.iter().filter(|q| field_g_eval(q).degenerate).count()
    }
}

impl DescentProblem for TensorProblem {
    fn dim(&self) -> usize {
        5 * (self.grid.n_nodes() - 2)
    }

    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let values = self.unpack(x);
        let n = values.len();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut sum = KahanSum::new();
        let inv_h = 1.0 / self.h;
        for i in 0..n - 1 {
            let diff = values[i + 1] - values[i];
            sum.add(diff.norm_sq() * 0.5 * inv_h);
            if i >= 1 {
                let k = 5 * (i - 1);
                for c in 0..5 {
                    grad[k + c] -= diff.0[c] * inv_h;
                }
            }
            if i < n - 2 {
                let k = 5 * i;
                for c in 0..5 {
                    grad[k + c] += diff.0[c] * inv_h;
                }
            }
        }
        for (i, q) in values.iter().enumerate() {
            let gv = field_g_eval(q);
            let f = if self.lam2 > 0.0 { self.lam2 * bulk_f(q, &self.params) } else { 0.0 };
            sum.add(self.w[i] * (f + gv.value));
            if i == 0 || i == n - 1 {
                continue;
            }
            let mut gq = field_g_grad(q).unwrap_or(S0Tensor::ZERO);
            if self.lam2 > 0.0 {
                gq += bulk_f_grad(q, &self.params) * self.lam2;
            }
            let k = 5 * (i - 1);
            for c in 0..5 {
                grad[k + c] += self.w[i] * gq.0[c];
            }
        }
        sum.value()
    }

    fn precondition(&self, g: &[f64], out: &mut [f64]) {
        out.copy_from_slice(g);
        for c in 0..5 {
            self.factor.solve_strided(out, 5, c);
        }
    }

    fn gradient_norm(&self, g: &[f64]) -> f64 {
        let inv_w = 1.0 / self.h;
        (g.iter().map(|v| v * v).sum::<f64>() * inv_w).sqrt()
    }
}

/// Free variables: Cartesian components of the interior directors, kept on the unit sphere.
pub(crate) struct DirectorProblem {
    grid: Grid1D,
    h: f64,
    w: Vec<f64>,
    n0: Director,
    amplitude: f64,
    lam2: Option<f64>,
    params: PotentialParams,
    factor: TridiagonalFactor,
}

impl DirectorProblem {
    pub fn new(
        grid: Grid1D,
        n0: Director,
        amplitude: f64,
        lam2: Option<f64>,
        params: PotentialParams,
    ) -> Self {
        let h = grid.spacing();
        let n_free = grid.n_nodes() - 2;
        let stiffness = 2.0 * amplitude * amplitude;
        Self {
            grid,
            h,
            w: grid.weights(),
            n0,
            amplitude,
            lam2,
            params,
            factor: sobolev_factor(n_free, h, stiffness.max(1e-12), 2.5),
        }
    }

    pub fn pack(&self, dirs: &[Director]) -> Vec<f64> {
        dirs[1..dirs.len() - 1].iter().flat_map(|d| [d.x(), d.y(), d.z()]).collect()
    }

    pub fn unpack(&self, x: &[f64]) -> Vec<Director> {
        let mut v = Vec::with_capacity(self.grid.n_nodes());
        v.push(self.n0);
        v.extend(x.chunks_exact(3).map(|c| {
            Director::normalize(Vector3::new(c[0], c[1], c[2])).unwrap_or(Director::E3)
        }));
        v.push(Director::E3);
        v
    }

    fn node(&self, x: &[f64], i: usize) -> Vector3<f64> {
        let n = self.grid.n_nodes();
        if i == 0 {
            *self.n0.as_vector()
        } else if i == n - 1 {
            Vector3::z()
        } else {
            let k = 3 * (i - 1);
            Vector3::new(x[k], x[k + 1], x[k + 2])
        }
    }
}

impl DescentProblem for DirectorProblem {
    fn dim(&self) -> usize {
        3 * (self.grid.n_nodes() - 2)
    }

    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.grid.n_nodes();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let s2 = self.amplitude * self.amplitude;
        let c = s2 / self.h;
        let mut sum = KahanSum::new();
        for i in 0..n - 1 {
            let diff = self.node(x, i + 1) - self.node(x, i);
            sum.add(c * diff.norm_squared());
            if i >= 1 {
                let k = 3 * (i - 1);
                for j in 0..3 {
                    grad[k + j] -= 2.0 * c * diff[j];
                }
            }
            if i < n - 2 {
                let k = 3 * i;
                for j in 0..3 {
                    grad[k + j] += 2.0 * c * diff[j];
                }
            }
        }
        let f_uni = match self.lam2 {
            Some(l2) if l2 > 0.0 => l2 * bulk_f(&uniaxial(&Director::E3, self.amplitude), &self.params),
            _ => 0.0,
        };
        for i in 0..n {
            let v = self.node(x, i);
            sum.add(self.w[i] * (f_uni + SQRT_3_2 * (1.0 - v.z * v.z).max(0.0)));
            if i > 0 && i < n - 1 {
                grad[3 * (i - 1) + 2] -= self.w[i] * 2.0 * SQRT_3_2 * v.z;
            }
        }
        sum.value()
    }

    fn to_tangent(&self, x: &[f64], v: &mut [f64]) {
        for (xi, vi) in x.chunks_exact(3).zip(v.chunks_exact_mut(3)) {
            let p = xi[0] * vi[0] + xi[1] * vi[1] + xi[2] * vi[2];
            for j in 0..3 {
                vi[j] -= p * xi[j];
            }
        }
    }

    fn step(&self, x: &[f64], d: &[f64], alpha: f64, out: &mut [f64], velocity: &mut [f64]) {
        for k in (0..x.len()).step_by(3) {
            let y = [x[k] + alpha * d[k], x[k + 1] + alpha * d[k + 1], x[k + 2] + alpha * d[k + 2]];
            let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
            let u = [y[0] / r, y[1] / r, y[2] / r];
            let p = u[0] * d[k] + u[1] * d[k + 1] + u[2] * d[k + 2];
            for j in 0..3 {
                out[k + j] = u[j];
                velocity[k + j] = (d[k + j] - p * u[j]) / r;
            }
        }
    }

    fn precondition(&self, g: &[f64], out: &mut [f64]) {
        out.copy_from_slice(g);
        for c in 0..3 {
            self.factor.solve_strided(out, 3, c);
        }
    }

    fn gradient_norm(&self, g: &[f64]) -> f64 {
        (g.iter().map(|v| v * v).sum::<f64>() / self.h).sqrt()
    }
}
