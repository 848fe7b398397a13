//! Transfinite (Coons) interpolation of boundary traces on a rectangle.

use std::ops::{Add, Mul, Sub};

/// A boundary trace on `[0, 1]` returning its value and derivative.
pub(crate) type Edge<'a, T> = Box<dyn Fn(f64) -> (T, T) + Sync + 'a>;

/// A patch on `[r0, r1] x [p0, p1]`: `left`/`right` at `r = r0, r1` (parametrized by `phi`),
/// `bottom`/`top` at `phi = p0, p1` (parametrized by `r`).
pub(crate) struct Coons<'a, T> {
    pub r: (f64, f64),
    pub p: (f64, f64),
    pub left: Edge<'a, T>,
    pub right: Edge<'a, T>,
    pub bottom: Edge<'a, T>,
    pub top: Edge<'a, T>,
    corners: [T; 4],
}

/// Value and partial derivatives in `(r, phi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Jet<T> {
    pub value: T,
    pub d_r: T,
    pub d_phi: T,
}

impl<'a, T> Coons<'a, T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    pub fn new(r: (f64, f64), p: (f64, f64), left: Edge<'a, T>, right: Edge<'a, T>, bottom: Edge<'a, T>, top: Edge<'a, T>) -> Self {
        let corners = [bottom(0.0).0, bottom(1.0).0, top(0.0).0, top(1.0).0];
        Self { r, p, left, right, bottom, top, corners }
    }

    pub fn eval(&self, r: f64, phi: f64) -> Jet<T> {
        let u = (r - self.r.0) / (self.r.1 - self.r.0);
        let v = (phi - self.p.0) / (self.p.1 - self.p.0);
        self.eval_with(u, v, (self.left)(v), (self.right)(v), (self.bottom)(u), (self.top)(u))
    }

    /// Evaluation from precomputed edge traces, for tensor-product quadrature.
    pub fn eval_with(&self, u: f64, v: f64, l: (T, T), rt: (T, T), b: (T, T), t: (T, T)) -> Jet<T> {
        Jet::from_corners(u, v, l, rt, b, t, self.corners).scaled(self.r.1 - self.r.0, self.p.1 - self.p.0)
    }

    /// Jets on the tensor grid `rs x ps`, evaluating every edge once per node; entry
    /// `[i][j]` belongs to `(rs[i], ps[j])`.
    pub fn eval_grid(&self, rs: &[f64], ps: &[f64]) -> Vec<Vec<Jet<T>>> {
        let us: Vec<f64> = rs.iter().map(|r| (r - self.r.0) / (self.r.1 - self.r.0)).collect();
        let vs: Vec<f64> = ps.iter().map(|p| (p - self.p.0) / (self.p.1 - self.p.0)).collect();
        let lr: Vec<_> = vs.iter().map(|&v| ((self.left)(v), (self.right)(v))).collect();
        let bt: Vec<_> = us.iter().map(|&u| ((self.bottom)(u), (self.top)(u))).collect();
        us.iter()
            .zip(&bt)
            .map(|(&u, &(b, t))| vs.iter().zip(&lr).map(|(&v, &(l, rt))| self.eval_with(u, v, l, rt, b, t)).collect())
            .collect()
    }
}

impl<T> Jet<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    /// Coons formula in unit coordinates; `c = [B(0), B(1), T(0), T(1)]`.
    pub fn from_corners(u: f64, v: f64, l: (T, T), rt: (T, T), b: (T, T), t: (T, T), c: [T; 4]) -> Self {
        let [b0, b1, t0, t1] = c;
        let bilinear = b0 * ((1.0 - u) * (1.0 - v)) + b1 * (u * (1.0 - v)) + t0 * ((1.0 - u) * v) + t1 * (u * v);
        let value = l.0 * (1.0 - u) + rt.0 * u + b.0 * (1.0 - v) + t.0 * v - bilinear;
        let bl_u = (b1 - b0) * (1.0 - v) + (t1 - t0) * v;
        let bl_v = (t0 - b0) * (1.0 - u) + (t1 - b1) * u;
        let d_u = rt.0 - l.0 + b.1 * (1.0 - v) + t.1 * v - bl_u;
        let d_v = l.1 * (1.0 - u) + rt.1 * u + t.0 - b.0 - bl_v;
        Self { value, d_r: d_u, d_phi: d_v }
    }

    fn scaled(self, wr: f64, wp: f64) -> Self {
        Self { value: self.value, d_r: self.d_r * (1.0 / wr), d_phi: self.d_phi * (1.0 / wp) }
    }
}

/// Straight segment between two values.
pub(crate) fn linear<'a, T>(a: T, b: T) -> Edge<'a, T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Sync + 'a,
{
    Box::new(move |s| (a * (1.0 - s) + b * s, b - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch<'a>() -> Coons<'a, f64> {
        Coons::new(
            (1.0, 2.0),
            (0.0, 0.5),
            Box::new(|v| (v.sin(), v.cos())),
            Box::new(|v| (1.0 + v * v, 2.0 * v)),
            Box::new(|u| (u, 1.0)),
            Box::new(|u| (1f64.sin() * (1.0 - u) + 2.0 * u, 2.0 - 1f64.sin())),
        )
    }

    #[test]
    fn reproduces_edges() {
        let c = patch();
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            assert!((c.eval(1.0, 0.5 * s).value - s.sin()).abs() < 1e-15);
            assert!((c.eval(2.0, 0.5 * s).value - (1.0 + s * s)).abs() < 1e-15);
            assert!((c.eval(1.0 + s, 0.0).value - s).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let c = patch();
        let grid = c.eval_grid(&[1.3, 1.7], &[0.1, 0.2]);
        assert!((grid[0][1].value - c.eval(1.3, 0.2).value).abs() < 1e-15);
        assert!((grid[1][0].d_phi - c.eval(1.7, 0.1).d_phi).abs() < 1e-15);
        let (r, p, d) = (1.3, 0.2, 1e-6);
        let j = c.eval(r, p);
        let fr = (c.eval(r + d, p).value - c.eval(r - d, p).value) / (2.0 * d);
        let fp = (c.eval(r, p + d).value - c.eval(r, p - d).value) / (2.0 * d);
        assert!((j.d_r - fr).abs() < 1e-8);
        assert!((j.d_phi - fp).abs() < 1e-8);
    }
}
