//! Small numerical building blocks shared by the solvers and quadratures.

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(xi, wi)| (c + r * xi, r * wi)).collect()
}

/// Composite Gauss-Legendre rule with `panels` equal panels on `[a, b]`.
pub fn composite_gl(order: usize, panels: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|k| gauss_legendre_on(order, a + k as f64 * h, a + (k + 1) as f64 * h))
        .collect()
}

/// Pre-factored tridiagonal system with constant coefficients along the diagonal bands.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[i]` couples row `i` to `i - 1` (ignored for `i = 0`), `upper[i]` couples row `i` to `i + 1`.
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert!(lower.len() == diag.len() && upper.len() == diag.len());
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Thomas algorithm. Returns `None` on a vanishing or non-finite pivot.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return Some(Vec::new());
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        c[0] = self.upper[0] / piv;
        d[0] = rhs[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - self.lower[i] * c[i - 1];
            if piv == 0.0 || !piv.is_finite() {
                return None;
            }
            c[i] = self.upper[i] / piv;
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Some(d)
    }

    /// Whether all Thomas pivots are positive, i.e. the symmetric matrix is positive definite.
    pub fn is_positive_definite(&self) -> bool {
        let mut c_prev = 0.0;
        for i in 0..self.len() {
            let piv = if i == 0 { self.diag[0] } else { self.diag[i] - self.lower[i] * c_prev };
            if !(piv > 0.0) {
                return false;
            }
            c_prev = self.upper[i] / piv;
        }
        true
    }
}

/// Reusable Thomas factorization for repeated solves with the same matrix.
#[derive(Clone, Debug)]
pub struct TridiagonalFactor {
    lower: Vec<f64>,
    c: Vec<f64>,
    inv_piv: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn new(t: &Tridiagonal) -> Option<Self> {
        let n = t.len();
        let mut c = vec![0.0; n];
        let mut inv_piv = vec![0.0; n];
        for i in 0..n {
            let piv = if i == 0 { t.diag[0] } else { t.diag[i] - t.lower[i] * c[i - 1] };
            if piv == 0.0 || !piv.is_finite() {
                return None;
            }
            inv_piv[i] = 1.0 / piv;
            c[i] = t.upper[i] * inv_piv[i];
        }
        Some(Self { lower: t.lower.clone(), c, inv_piv })
    }

    /// Solves in place for a right-hand side sampled with the given stride and offset,
    /// so interleaved component vectors can be handled without copying.
    pub fn solve_strided(&self, x: &mut [f64], stride: usize, offset: usize) {
        let n = self.c.len();
        if n == 0 {
            return;
        }
        let at = |i: usize| i * stride + offset;
        x[at(0)] *= self.inv_piv[0];
        for i in 1..n {
            let prev = x[at(i - 1)];
            x[at(i)] = (x[at(i)] - self.lower[i] * prev) * self.inv_piv[i];
        }
        for i in (0..n - 1).rev() {
            let next = x[at(i + 1)];
            x[at(i)] -= self.c[i] * next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 16, 33, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let val: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                assert!((val - exact).abs() < 1e-12, "n={n} deg={deg}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn composite_rule_integrates_sine() {
        let q = composite_gl(8, 4, 0.0, std::f64::consts::PI);
        let v: f64 = q.iter().map(|(x, w)| w * x.sin()).sum();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat_n(1e-16, 10_000));
        assert!((compensated_sum(xs.iter().copied()) - (1.0 + 1e-12)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn thomas_solves_diagonally_dominant(
            vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..40)
        ) {
            let n = vals.len();
            let lower: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let upper: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let diag: Vec<f64> = vals.iter().map(|v| 3.0 + v.2).collect();
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let t = Tridiagonal::new(lower.clone(), diag.clone(), upper.clone());
            let x = t.solve(&rhs).unwrap();
            let mut y = rhs.clone();
            TridiagonalFactor::new(&t).unwrap().solve_strided(&mut y, 1, 0);
            for i in 0..n {
                let mut r = diag[i] * x[i];
                if i > 0 { r += lower[i] * x[i - 1]; }
                if i + 1 < n { r += upper[i] * x[i + 1]; }
                prop_assert!((r - rhs[i]).abs() < 1e-12);
                prop_assert!((x[i] - y[i]).abs() < 1e-12);
            }
        }
    }
}
