//! Tensor-product Gauss-Legendre rules with refinement by order doubling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::gauss_legendre_on;

/// Absolute slack added to the relative refinement test, for regions with tiny energy.
const ABS_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Nodes per axis on single-rectangle regions.
    pub order: usize,
    /// Nodes per panel on composite rules split at mollifier transitions.
    pub panel_order: usize,
    /// Accepted relative change between an order and its double.
    pub rel_tol: f64,
    pub max_doublings: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { order: 128, panel_order: 24, rel_tol: 1e-6, max_doublings: 4 }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || self.panel_order < 2 {
            return Err(Error::InvalidArgument("quadrature orders must be at least 2".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidArgument(format!("rel_tol = {} must lie in (0, 1)", self.rel_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Refined {
    pub value: f64,
    pub nodes: usize,
    pub change: f64,
}

/// Calls `eval(level)` for `level = 0, 1, ...` (each level doubling the order) until two
/// consecutive values agree. `eval` returns the value and the node count used.
pub(crate) fn refine<F>(region: &str, s: &QuadratureSettings, mut eval: F) -> Result<Refined>
where
    F: FnMut(u32) -> Result<(f64, usize)>,
{
    let (mut prev, mut nodes) = eval(0)?;
    let mut change = f64::INFINITY;
    for level in 1..=s.max_doublings {
        let (v, n) = eval(level)?;
        let diff = (v - prev).abs();
        change = diff / v.abs().max(f64::MIN_POSITIVE);
        nodes = n;
        if diff <= s.rel_tol * v.abs() + ABS_FLOOR {
            return Ok(Refined { value: v, nodes, change });
        }
        prev = v;
    }
    Err(Error::QuadratureNotConverged { region: region.into(), change, nodes })
}

/// Tensor-product rule on `[a, b] x [c, d]` as `(x, y, weight)`.
pub(crate) fn rect_rule(n: usize, (a, b): (f64, f64), (c, d): (f64, f64)) -> Vec<(f64, f64, f64)> {
    let xs = gauss_legendre_on(n, a, b);
    let ys = gauss_legendre_on(n, c, d);
    xs.iter().flat_map(|&(x, wx)| ys.iter().map(move |&(y, wy)| (x, y, wx * wy))).collect()
}

/// Rule on the unit square `(s, tau)` that absorbs a `1/rho` singularity at the origin:
/// each of the two triangles split by the diagonal is mapped from a square with Jacobian `u`.
pub(crate) fn duffy_unit_square(n: usize) -> Vec<(f64, f64, f64)> {
    let g = gauss_legendre_on(n, 0.0, 1.0);
    let mut out = Vec::with_capacity(2 * n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let w = wu * wv * u;
            out.push((u, u * v, w));
            out.push((u * v, u, w));
        }
    }
    out
}

/// Composite rule with `n` nodes on each interval between consecutive sorted breakpoints.
pub(crate) fn composite_rule(n: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .flat_map(|w| gauss_legendre_on(n, w[0], w[1]))
        .collect()
}
