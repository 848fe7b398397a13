//! Traceless symmetric 3x3 tensors, the bulk potential `f` and the field potential `g`.
//!
//! Tensors are stored as coefficients in a fixed orthonormal basis of the space of
//! traceless symmetric matrices, so symmetry and tracelessness hold structurally.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT_2_3: f64 = 0.816_496_580_927_726_1;
pub const SQRT_3_2: f64 = 1.224_744_871_391_589;
const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_6: f64 = 2.449_489_742_783_178;

/// Below this norm `g` is undefined; see [`field_g_eval`].
pub const G_DEGENERATE_NORM: f64 = 1e-9;

/// Coefficients of a traceless symmetric tensor in the basis
/// `E1 = (e1e1 - e2e2)/sqrt2`, `E2 = (e1e2 + e2e1)/sqrt2`, `E3 = (e1e3 + e3e1)/sqrt2`,
/// `E4 = (e2e3 + e3e2)/sqrt2`, `E5 = (2e3e3 - e1e1 - e2e2)/sqrt6`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct S0Tensor(pub [f64; 5]);

impl S0Tensor {
    pub const ZERO: Self = Self([0.0; 5]);

    pub fn from_coeffs(c: [f64; 5]) -> Self {
        Self(c)
    }

    pub fn coeffs(&self) -> &[f64; 5] {
        &self.0
    }

    /// Orthogonal projection of an arbitrary matrix onto the traceless symmetric part.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let s12 = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        let s13 = 0.5 * (m[(0, 2)] + m[(2, 0)]);
        let s23 = 0.5 * (m[(1, 2)] + m[(2, 1)]);
        Self([
            (m[(0, 0)] - m[(1, 1)]) / SQRT_2,
            SQRT_2 * s12,
            SQRT_2 * s13,
            SQRT_2 * s23,
            (2.0 * m[(2, 2)] - m[(0, 0)] - m[(1, 1)]) / SQRT_6,
        ])
    }

    /// Builds a tensor from the upper-triangle entries `Q11, Q12, Q13, Q22, Q23`;
    /// `Q33 = -Q11 - Q22`.
    pub fn from_upper(q11: f64, q12: f64, q13: f64, q22: f64, q23: f64) -> Self {
        let q33 = -q11 - q22;
        Self([
            (q11 - q22) / SQRT_2,
            SQRT_2 * q12,
            SQRT_2 * q13,
            SQRT_2 * q23,
            (2.0 * q33 - q11 - q22) / SQRT_6,
        ])
    }

    /// `Q11, Q12, Q13, Q22, Q23`.
    pub fn upper(&self) -> [f64; 5] {
        let m = self.to_matrix();
        [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 1)], m[(1, 2)]]
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let [c1, c2, c3, c4, c5] = self.0;
        let d = c5 / SQRT_6;
        let m11 = c1 / SQRT_2 - d;
        let m22 = -c1 / SQRT_2 - d;
        let m33 = 2.0 * d;
        let m12 = c2 / SQRT_2;
        let m13 = c3 / SQRT_2;
        let m23 = c4 / SQRT_2;
        Matrix3::new(m11, m12, m13, m12, m22, m23, m13, m23, m33)
    }

    pub fn q33(&self) -> f64 {
        2.0 * self.0[4] / SQRT_6
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }

    /// `R^T Q R`.
    pub fn rotate(&self, r: &Matrix3<f64>) -> Self {
        Self::from_matrix(&(r.transpose() * self.to_matrix() * r))
    }

    /// Traceless part of `Q^2`.
    pub fn square_dev(&self) -> Self {
        let m = self.to_matrix();
        Self::from_matrix(&(m * m))
    }

    /// The commutator `Q J - J Q` with `J` the generator of rotations about `e3`.
    /// Its norm is `|d/dtheta (R_theta^T Q R_theta)|` at `theta = 0`.
    pub fn azimuthal_derivative(&self) -> Self {
        let j = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let m = self.to_matrix();
        Self::from_matrix(&(m * j - j * m))
    }

    /// Reflection through the plane `x3 = 0`.
    pub fn reflect_x3(&self) -> Self {
        let [c1, c2, c3, c4, c5] = self.0;
        Self([c1, c2, -c3, -c4, c5])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for S0Tensor {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|k| self.0[k] + rhs.0[k]))
    }
}

impl Sub for S0Tensor {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|k| self.0[k] - rhs.0[k]))
    }
}

impl Neg for S0Tensor {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|c| -c))
    }
}

impl Mul<f64> for S0Tensor {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self(self.0.map(|c| c * s))
    }
}

impl Mul<S0Tensor> for f64 {
    type Output = S0Tensor;
    fn mul(self, q: S0Tensor) -> S0Tensor {
        q * self
    }
}

impl AddAssign for S0Tensor {
    fn add_assign(&mut self, rhs: Self) {
        self.0.iter_mut().zip(rhs.0).for_each(|(a, b)| *a += b);
    }
}

impl SubAssign for S0Tensor {
    fn sub_assign(&mut self, rhs: Self) {
        self.0.iter_mut().zip(rhs.0).for_each(|(a, b)| *a -= b);
    }
}

/// Frobenius inner product.
pub fn frob_inner(a: &S0Tensor, b: &S0Tensor) -> f64 {
    a.dot(b)
}

/// A unit vector in R^3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Director(Vector3<f64>);

impl Director {
    pub const E1: Self = Self(Vector3::new(1.0, 0.0, 0.0));
    pub const E2: Self = Self(Vector3::new(0.0, 1.0, 0.0));
    pub const E3: Self = Self(Vector3::new(0.0, 0.0, 1.0));

    /// Accepts vectors whose norm is within `1e-6` of one and renormalizes them.
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self(v / norm))
    }

    /// Normalizes any nonzero finite vector.
    pub fn normalize(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self(v / norm))
    }

    pub fn from_components(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vector3::new(x, y, z))
    }

    /// The unit vector with third component `v3` in the `e1`-`e3` half plane `x1 <= 0`,
    /// matching the normal form `(-sqrt(1 - v3^2), 0, v3)`.
    pub fn from_v3(v3: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&v3) {
            return Err(Error::InvalidArgument(format!("v3 = {v3} is outside [-1, 1]")));
        }
        Ok(Self(Vector3::new(-(1.0 - v3 * v3).max(0.0).sqrt(), 0.0, v3)))
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn flipped(&self) -> Self {
        Self(-self.0)
    }
}

/// Coefficients of the bulk potential `f(Q) = C - a/2 |Q|^2 - b/3 tr Q^3 + c/4 |Q|^4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Additive constant making `min f = 0`.
    pub offset: f64,
    pub s_star: f64,
}

impl PotentialParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && c > 0.0) || !(a + b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "potential needs a, b >= 0, c > 0 and a + b > 0 (got a = {a}, b = {b}, c = {c})"
            )));
        }
        let s = (b + (b * b + 24.0 * a * c).sqrt()) / (4.0 * c);
        let s2 = s * s;
        let offset = (a / 2.0) * (2.0 / 3.0) * s2 + (b / 3.0) * (2.0 / 9.0) * s2 * s
            - (c / 4.0) * (4.0 / 9.0) * s2 * s2;
        Ok(Self { a, b, c, offset, s_star: s })
    }
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self { a: 1.0, b: 3.0, c: 3.0, offset: 2.0 / 9.0, s_star: 1.0 }
    }
}

/// `s (v v^T - I/3)`.
pub fn uniaxial(v: &Director, s: f64) -> S0Tensor {
    let v = v.as_vector();
    S0Tensor::from_matrix(&(v * v.transpose() * s))
}

/// The far-field state `e3 e3 - I/3`.
pub fn q_inf() -> S0Tensor {
    S0Tensor([0.0, 0.0, 0.0, 0.0, SQRT_2_3])
}

/// `sqrt(3/2) Q_inf`, the unit-norm far-field direction.
pub fn q_inf_bar() -> S0Tensor {
    S0Tensor([0.0, 0.0, 0.0, 0.0, 1.0])
}

pub fn trace_cubed(q: &S0Tensor) -> f64 {
    let m = q.to_matrix();
    (m * m * m).trace()
}

pub fn bulk_f(q: &S0Tensor, p: &PotentialParams) -> f64 {
    let n2 = q.norm_sq();
    p.offset - 0.5 * p.a * n2 - p.b / 3.0 * trace_cubed(q) + 0.25 * p.c * n2 * n2
}

pub fn bulk_f_grad(q: &S0Tensor, p: &PotentialParams) -> S0Tensor {
    let n2 = q.norm_sq();
    *q * (p.c * n2 - p.a) - q.square_dev() * p.b
}

/// Value of `g` together with a flag raised when `|Q|` is too small for `g` to be defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GValue {
    pub value: f64,
    pub degenerate: bool,
}

pub fn field_g_eval(q: &S0Tensor) -> GValue {
    let n = q.norm();
    if n <= G_DEGENERATE_NORM {
        GValue { value: SQRT_2_3, degenerate: true }
    } else {
        GValue { value: SQRT_2_3 * one_minus_cos_inf(q, n), degenerate: false }
    }
}

/// Squared norm of the part of `q` orthogonal to `Q_inf`.
fn perp_sq(q: &S0Tensor) -> f64 {
    q.0[..4].iter().map(|c| c * c).sum()
}

/// `1 - c5/|Q|` without cancellation near `Q_inf`.
fn one_minus_cos_inf(q: &S0Tensor, n: f64) -> f64 {
    let c5 = q.0[4];
    if c5 > 0.0 {
        perp_sq(q) / (n * (n + c5))
    } else {
        1.0 - c5 / n
    }
}

/// `g(Q) = sqrt(2/3) - Q33/|Q|`; returns `sqrt(2/3)` at `Q = 0`.
pub fn field_g(q: &S0Tensor) -> f64 {
    field_g_eval(q).value
}

/// Gradient of `g` with respect to the basis coefficients; `None` where `g` is degenerate.
pub fn field_g_grad(q: &S0Tensor) -> Option<S0Tensor> {
    let n = q.norm();
    if n <= G_DEGENERATE_NORM {
        return None;
    }
    let n3 = n * n * n;
    let c5 = q.0[4];
    let mut g = *q * (SQRT_2_3 * c5 / n3);
    g.0[4] = -SQRT_2_3 * perp_sq(q) / n3;
    Some(g)
}

/// Dominant director and amplitude of a tensor, with the distance to the closest
/// uniaxial tensor of that director and amplitude `s`.
#[derive(Clone, Copy, Debug)]
pub struct UniaxialFit {
    pub director: Director,
    pub distance: f64,
}

/// Fits `s (n n^T - I/3)` to `q` with `n` the eigenvector of the largest eigenvalue,
/// oriented so that `n3 >= 0`.
pub fn uniaxial_fit(q: &S0Tensor, s: f64) -> UniaxialFit {
    let eig = SymmetricEigen::new(q.to_matrix());
    let k = eig.eigenvalues.imax();
    let mut n: Vector3<f64> = eig.eigenvectors.column(k).into_owned();
    if n.z < 0.0 {
        n = -n;
    }
    let director = Director::normalize(n).unwrap_or(Director::E3);
    let distance = (*q - uniaxial(&director, s)).norm();
    UniaxialFit { director, distance }
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(q: &S0Tensor) -> [f64; 3] {
    let eig = SymmetricEigen::new(q.to_matrix());
    let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn matrix_uniaxial(v: &Vector3<f64>, s: f64) -> Matrix3<f64> {
        (v * v.transpose() - Matrix3::identity() / 3.0) * s
    }

    fn arb_tensor() -> impl Strategy<Value = S0Tensor> {
        prop::array::uniform5(-2.0f64..2.0).prop_map(S0Tensor)
    }

    fn arb_unit() -> impl Strategy<Value = Director> {
        (0.0f64..std::f64::consts::TAU, -1.0f64..1.0).prop_map(|(t, z)| {
            let r = (1.0 - z * z).sqrt();
            Director::new(Vector3::new(r * t.cos(), r * t.sin(), z)).unwrap()
        })
    }

    fn arb_rotation() -> impl Strategy<Value = Matrix3<f64>> {
        prop::array::uniform3(-3.0f64..3.0)
            .prop_map(|w| Rotation3::new(Vector3::new(w[0], w[1], w[2])).into_inner())
    }

    #[test]
    fn basis_roundtrip_matches_matrix() {
        let m = Matrix3::new(0.3, -0.2, 0.7, -0.2, -0.5, 0.1, 0.7, 0.1, 0.2);
        let q = S0Tensor::from_matrix(&m);
        assert!((q.to_matrix() - m).norm() < 1e-15);
        let u = q.upper();
        assert!((S0Tensor::from_upper(u[0], u[1], u[2], u[3], u[4]) - q).norm() < 1e-15);
    }

    #[test]
    fn q_inf_entries() {
        let q = uniaxial(&Director::E3, 1.0);
        let m = q.to_matrix();
        assert!((m[(2, 2)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((m[(0, 0)] + 1.0 / 3.0).abs() < 1e-15);
        assert!((m[(1, 1)] + 1.0 / 3.0).abs() < 1e-15);
        assert!((q - q_inf()).norm() < 1e-15);
        assert_eq!(uniaxial(&Director::E1, 0.0).norm(), 0.0);
    }

    #[test]
    fn frob_inner_examples() {
        assert!((frob_inner(&q_inf(), &q_inf()) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(frob_inner(&q_inf(), &S0Tensor::ZERO), 0.0);
        let qv = uniaxial(&Director::E1, 1.0);
        let val = frob_inner(&(qv * (1.0 / qv.norm())), &(q_inf() * SQRT_3_2));
        assert!((val + 0.5).abs() < 1e-14);
        let a = Matrix3::new(1.0, 2.0, 0.5, 2.0, -3.0, 0.25, 0.5, 0.25, 2.0);
        let b = Matrix3::new(-1.0, 0.3, 0.2, 0.3, 0.4, -0.7, 0.2, -0.7, 0.6);
        let oracle: f64 = a.component_mul(&b).sum();
        let val = frob_inner(&S0Tensor::from_matrix(&a), &S0Tensor::from_matrix(&b));
        assert!((val - oracle).abs() < 1e-13);
    }

    #[test]
    fn potential_examples() {
        let p = PotentialParams::default();
        let derived = PotentialParams::new(1.0, 3.0, 3.0).unwrap();
        assert!((derived.offset - 2.0 / 9.0).abs() < 1e-15);
        assert!((derived.s_star - 1.0).abs() < 1e-15);
        assert!(bulk_f(&q_inf(), &p).abs() < 1e-15);
        assert!((bulk_f(&S0Tensor::ZERO, &p) - 2.0 / 9.0).abs() < 1e-15);
        let m = Matrix3::from_diagonal(&Vector3::new(-2.0 / 3.0, -2.0 / 3.0, 4.0 / 3.0));
        let n2 = m.norm_squared();
        let oracle: f64 = 2.0 / 9.0 - 0.5 * n2 - (m * m * m).trace() + 0.75 * n2 * n2;
        let val = bulk_f(&(q_inf() * 2.0), &p);
        assert!((val - oracle).abs() < 1e-14 && val > 0.0);
    }

    #[test]
    fn g_examples() {
        assert!(field_g(&q_inf()).abs() < 1e-15);
        assert!(field_g(&(q_inf() * 5.0)).abs() < 1e-15);
        let n = Vector3::new(0.48, -0.6, 0.64);
        let q = S0Tensor::from_matrix(&matrix_uniaxial(&n, 1.0));
        assert!((field_g(&q) - SQRT_3_2 * (1.0 - 0.64 * 0.64)).abs() < 1e-14);
        let z = field_g_eval(&S0Tensor::ZERO);
        assert!(z.degenerate && z.value == SQRT_2_3);
        assert!(field_g_grad(&S0Tensor::ZERO).is_none());
    }

    #[test]
    fn trace_cubed_examples() {
        assert!((trace_cubed(&q_inf()) - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(trace_cubed(&S0Tensor::ZERO), 0.0);
        let q = uniaxial(&Director::from_components(0.0, 0.6, 0.8).unwrap(), -1.0);
        let qhat = q * (1.0 / q.norm());
        assert!((trace_cubed(&qhat) + 1.0 / SQRT_6).abs() < 1e-14);
    }

    #[test]
    fn director_rejects_non_unit() {
        assert!(Director::new(Vector3::new(1.0 + 1e-7, 0.0, 0.0)).is_ok());
        assert!(Director::new(Vector3::new(1.1, 0.0, 0.0)).is_err());
        assert!(Director::from_v3(1.5).is_err());
    }

    #[test]
    fn azimuthal_derivative_of_uniaxial() {
        let n = Vector3::new(0.36, 0.48, 0.8);
        let q = S0Tensor::from_matrix(&matrix_uniaxial(&n, 1.0));
        let d = q.azimuthal_derivative().norm_sq();
        assert!((d - 2.0 * (n.x * n.x + n.y * n.y)).abs() < 1e-14);
        let h = 1e-6;
        let rot = |t: f64| Rotation3::from_axis_angle(&Vector3::z_axis(), t).into_inner();
        let fd = (q.rotate(&rot(h)) - q.rotate(&rot(-h))) * (0.5 / h);
        assert!((fd.norm() - d.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn coercivity_constant_is_positive() {
        use rand::{Rng, SeedableRng};
        let p = PotentialParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut c_min = f64::INFINITY;
        for _ in 0..10_000 {
            let q = S0Tensor(std::array::from_fn(|_| rng.gen_range(-1.5..1.5)));
            let d2 = (q - q_inf()).norm_sq();
            if d2 > 1e-12 {
                c_min = c_min.min((bulk_f(&q, &p) + field_g(&q)) / d2);
            }
        }
        assert!(c_min > 0.0, "fitted constant {c_min}");
    }

    proptest! {
        #[test]
        fn traceless_after_arithmetic(a in arb_tensor(), b in arb_tensor(), s in -3.0f64..3.0) {
            let q = (a + b * s - a * 0.5).square_dev() + a;
            prop_assert!(q.to_matrix().trace().abs() <= 1e-14);
            let m = q.to_matrix();
            prop_assert_eq!(m, m.transpose());
        }

        #[test]
        fn unit_uniaxial_invariants(v in arb_unit()) {
            let q = uniaxial(&v, 1.0);
            let oracle = matrix_uniaxial(v.as_vector(), 1.0);
            prop_assert!((q.norm_sq() - 2.0 / 3.0).abs() < 1e-14);
            prop_assert!((trace_cubed(&q) - 2.0 / 9.0).abs() < 1e-14);
            prop_assert!((q.to_matrix() - oracle).norm() < 1e-15);
            prop_assert!((q.norm_sq() - oracle.norm_squared()).abs() < 1e-14);
            prop_assert!((field_g(&q) - SQRT_3_2 * (1.0 - v.z() * v.z())).abs() < 1e-13);
        }

        #[test]
        fn trace_cubed_bound(q in arb_tensor()) {
            prop_assume!(q.norm() > 1e-3);
            let qh = q * (1.0 / q.norm());
            let t = trace_cubed(&qh);
            prop_assert!(t.abs() <= 1.0 / SQRT_6 + 1e-12);
            let ev = eigenvalues(&qh);
            let coincide = (ev[1] - ev[0]).abs().min((ev[2] - ev[1]).abs());
            if coincide < 1e-6 {
                prop_assert!((t.abs() - 1.0 / SQRT_6).abs() < 1e-9);
            }
            if (t.abs() - 1.0 / SQRT_6).abs() < 1e-9 {
                prop_assert!(coincide < 1e-3);
            }
            let oracle: f64 = ev.iter().map(|l| l * l * l).sum();
            prop_assert!((t - oracle).abs() < 1e-12);
        }

        #[test]
        fn f_frame_invariant(q in arb_tensor(), r in arb_rotation()) {
            let p = PotentialParams::default();
            let a = bulk_f(&q, &p);
            let b = bulk_f(&q.rotate(&r), &p);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn f_nonnegative_zero_on_uniaxial(q in arb_tensor(), v in arb_unit()) {
            let p = PotentialParams::default();
            prop_assert!(bulk_f(&q, &p) >= -1e-12);
            prop_assert!(bulk_f(&uniaxial(&v, p.s_star), &p).abs() < 1e-12);
        }

        #[test]
        fn g_axis_rotation_invariant(q in arb_tensor(), t in 0.0f64..6.3, s in 0.01f64..10.0) {
            prop_assume!(q.norm() > 1e-6);
            let r = Rotation3::from_axis_angle(&Vector3::z_axis(), t).into_inner();
            prop_assert!((field_g(&q) - field_g(&q.rotate(&r))).abs() < 1e-12);
            prop_assert!((field_g(&q) - field_g(&(q * s))).abs() < 1e-12);
            prop_assert!(field_g(&q) >= 0.0);
        }

        #[test]
        fn gradients_match_differences(q in arb_tensor()) {
            prop_assume!(q.norm() > 0.1);
            let p = PotentialParams::default();
            let gf = bulk_f_grad(&q, &p);
            let gg = field_g_grad(&q).unwrap();
            let h = 1e-6;
            for k in 0..5 {
                let mut e = [0.0; 5];
                e[k] = h;
                let (qp, qm) = (q + S0Tensor(e), q - S0Tensor(e));
                let df = (bulk_f(&qp, &p) - bulk_f(&qm, &p)) / (2.0 * h);
                let dg = (field_g(&qp) - field_g(&qm)) / (2.0 * h);
                prop_assert!((df - gf.0[k]).abs() < 1e-6 * (1.0 + df.abs()));
                prop_assert!((dg - gg.0[k]).abs() < 1e-6 * (1.0 + dg.abs()));
            }
        }

        #[test]
        fn uniaxial_fit_recovers_director(v in arb_unit()) {
            let fit = uniaxial_fit(&uniaxial(&v, 1.0), 1.0);
            prop_assert!(fit.distance < 1e-12);
            prop_assert!(fit.director.as_vector().dot(v.as_vector()).abs() > 1.0 - 1e-12);
        }
    }
}
