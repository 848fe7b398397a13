//! The compactly supported bump `exp(-1/(1 - x^2))` on `[-1, 1]`, its scaled versions and CDFs.

use std::sync::OnceLock;

use crate::numerics::{composite_gl, gauss_legendre_on};

fn raw(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Integral of the raw bump, computed once.
pub fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| composite_gl(40, 16, -1.0, 1.0).iter().map(|&(x, w)| w * raw(x)).sum())
}

/// Unit-mass bump on `[-1, 1]`.
pub fn bump(x: f64) -> f64 {
    raw(x) / bump_mass()
}

/// `int_{-1}^x bump`, clamped to `0` and `1` outside the support.
pub fn bump_cdf(x: f64) -> f64 {
    if x <= -1.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // Integrate from the nearer end; the bump is flat at both ends.
    let (a, b, flip) = if x <= 0.0 { (-1.0, x, false) } else { (x, 1.0, true) };
    let mid = 0.5 * (a + b);
    let part: f64 = gauss_legendre_on(40, a, mid)
        .into_iter()
        .chain(gauss_legendre_on(40, mid, b))
        .map(|(y, w)| w * raw(y))
        .sum::<f64>()
        / bump_mass();
    if flip {
        1.0 - part
    } else {
        part
    }
}

/// `phi_eps(x) = bump(x / eps) / eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mollifier {
    eps: f64,
}

impl Mollifier {
    pub fn new(eps: f64) -> Self {
        Self { eps }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn density(&self, x: f64) -> f64 {
        bump(x / self.eps) / self.eps
    }

    pub fn cdf(&self, x: f64) -> f64 {
        bump_cdf(x / self.eps)
    }
}

/// Smooth step from `1` at `x <= a` to `0` at `x >= b`, with derivative.
pub fn smooth_cutoff(x: f64, a: f64, b: f64) -> (f64, f64) {
    let u = 2.0 * (x - a) / (b - a) - 1.0;
    (1.0 - bump_cdf(u), -bump(u) * 2.0 / (b - a))
}
