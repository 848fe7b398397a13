use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

use proptest::prelude::*;

use super::*;
use crate::lambda::Lambda;
use crate::profile1d::{self, Grid1D, SolveOptions};
use crate::qtensor::{trace_cubed, uniaxial};

fn grid() -> Grid1D {
    Grid1D::new(10.0, 641).unwrap()
}

/// Independent frame: Gram-Schmidt of raw 5-vectors in the fixed basis.
fn brute_force_frame(v: &Director) -> [[f64; 5]; 3] {
    let raw_v = uniaxial(v, 1.0).0;
    let vv = v.as_vector();
    let mut m = nalgebra::Matrix3::zeros();
    for i in 0..3 {
        m[(i, 2)] += vv[i];
        m[(2, i)] += vv[i];
    }
    let raw_mix = S0Tensor::from_matrix(&m).0;
    let e5 = [0.0, 0.0, 0.0, 0.0, 1.0];
    let dot = |a: &[f64; 5], b: &[f64; 5]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let orth = |x: [f64; 5], basis: &[[f64; 5]]| {
        let mut y = x;
        for b in basis {
            let c = dot(&y, b);
            for k in 0..5 {
                y[k] -= c * b[k];
            }
        }
        let n = dot(&y, &y).sqrt();
        y.map(|c| c / n)
    };
    let qv = orth(raw_v, &[e5]);
    let qm = orth(raw_mix, &[e5, qv]);
    [qv, e5, qm]
}

#[test]
fn frame_for_e1() {
    let f = build_frame(&Director::E1).unwrap();
    let qv = uniaxial(&Director::E1, 1.0);
    let c = qv.normalized().unwrap().dot(f.q_inf_bar());
    assert!((c + 0.5).abs() < 1e-15);
    let expected = (qv - *f.q_inf_bar() * qv.dot(f.q_inf_bar())).normalized().unwrap();
    assert!((expected - *f.q_v_bar()).norm() < 1e-15);
}

#[test]
fn frame_matches_brute_force() {
    let v = Director::from_v3(0.6).unwrap();
    let f = build_frame(&v).unwrap();
    let bf = brute_force_frame(&v);
    for (ours, theirs) in [f.q_v_bar(), f.q_inf_bar(), f.q_mix_bar()].iter().zip(bf) {
        let d = (**ours - S0Tensor(theirs)).norm();
        assert!(d < 1e-13, "{d}");
    }
}

#[test]
fn frame_rejects_poles() {
    assert!(matches!(build_frame(&Director::E3), Err(Error::DegenerateFrame { .. })));
    assert!(matches!(build_frame(&Director::E3.flipped()), Err(Error::DegenerateFrame { .. })));
}

#[test]
fn q_star_special_points() {
    for v3 in [0.0, 0.3, -0.7, 0.95] {
        let f = build_frame(&Director::from_v3(v3).unwrap()).unwrap();
        assert!((q_star(FRAC_PI_2, 0.0, &f) - *f.q_inf_bar()).norm() < 1e-15);
        let qv = uniaxial(f.v(), 1.0).normalized().unwrap();
        assert!((q_star(f.alpha0(), 0.0, &f) - qv).norm() < 1e-14);
        assert!((trace_t(f.alpha0(), 0.0, v3) - INV_SQRT_6).abs() < 1e-12);
        assert!((trace_t(FRAC_PI_2, 0.0, v3) - INV_SQRT_6).abs() < 1e-14);
    }
}

#[test]
fn trace_polynomial_on_a_grid() {
    let mut worst = 0.0f64;
    for &v3 in &[-0.9, -0.4, 0.0, 0.2, 0.5, 0.8, 0.99] {
        let f = build_frame(&Director::from_v3(v3).unwrap()).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let a = -FRAC_PI_2 + PI * i as f64 / 9.0;
                let b = -FRAC_PI_2 + PI * j as f64 / 9.0;
                let d = (trace_t(a, b, v3) - trace_cubed(&q_star(a, b, &f))).abs();
                worst = worst.max(d);
            }
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn trace_derivatives_match_differences() {
    let hd = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..20 {
        for j in 0..20 {
            for &v3 in &[-0.6, -0.1, 0.25, 0.5, 0.9] {
                let a = -1.5 + 3.0 * i as f64 / 19.0;
                let b = -1.5 + 3.0 * j as f64 / 19.0;
                let jet = trace_t_jet(a, b, v3);
                let fa = (trace_t(a + hd, b, v3) - trace_t(a - hd, b, v3)) / (2.0 * hd);
                let fb = (trace_t(a, b + hd, v3) - trace_t(a, b - hd, v3)) / (2.0 * hd);
                let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-2);
                worst = worst.max(rel(jet.d_alpha, fa)).max(rel(jet.d_beta, fb));
                let form = CubicForm::new(v3);
                let faa = (trace_t_jet(a + hd, b, v3).d_alpha - trace_t_jet(a - hd, b, v3).d_alpha) / (2.0 * hd);
                worst = worst.max(rel(trace_t_aa(a, b, &form), faa));
            }
        }
    }
    assert!(worst < 1e-7, "{worst}");
}

#[test]
fn identity_holds_at_examples() {
    assert!(identity_check(FRAC_PI_2, 0.0, 0.5).unwrap() < 1e-10);
    assert!(identity_check(alpha0(0.3), 0.0, 0.3).unwrap() < 1e-10);
    assert!(matches!(identity_check(0.2, FRAC_PI_2, 0.3), Err(Error::SingularBeta { .. })));
}

#[test]
fn planar_stays_in_plane() {
    let f = build_frame(&Director::from_v3(0.4).unwrap()).unwrap();
    for k in 0..50 {
        let a = -FRAC_PI_2 + PI * k as f64 / 49.0;
        assert!(q_star(a, 0.0, &f).dot(f.q_mix_bar()).abs() < 1e-15);
    }
}

#[test]
fn constant_path_has_zero_residual() {
    let g = grid();
    let n = g.n_nodes();
    let f = build_frame(&Director::E1).unwrap();
    let path = AnglePath::new(g, vec![FRAC_PI_2; n], vec![0.0; n], vec![0.7; n]).unwrap();
    let r = el_residuals(&path, &f, 0.0, &PotentialParams::default()).unwrap();
    let (ma, mb) = r.max_abs();
    assert!(ma < 1e-12 && mb < 1e-12, "{ma} {mb}");
    let mut bad = path.clone();
    bad.amplitude[5] = 0.0;
    assert!(matches!(
        el_residuals(&bad, &f, 0.0, &PotentialParams::default()),
        Err(Error::NonPositiveAmplitude { node: 5, .. })
    ));
}

#[test]
fn lambda0_alpha_solution() {
    let g = grid();
    let n = vec![SQRT_2_3; g.n_nodes()];
    let path = solve_alpha_lambda0(&n, -FRAC_PI_6, &g).unwrap();
    let f = build_frame(&Director::from_v3(0.0).unwrap()).unwrap();
    let (ma, mb) = el_residuals(&path, &f, 0.0, &PotentialParams::default()).unwrap().max_abs();
    assert!(ma <= 1e-6 && mb <= 1e-12, "{ma} {mb}");
    assert!(path.alpha.windows(2).all(|p| p[1] - p[0] >= -1e-9));
    assert!(path.alpha.iter().all(|&a| a <= FRAC_PI_2 + 1e-9));

    let fixed = solve_alpha_lambda0(&n, FRAC_PI_2, &g).unwrap();
    assert!(fixed.alpha.iter().all(|&a| (a - FRAC_PI_2).abs() < 1e-12));
}

#[test]
fn residual_grows_with_perturbation() {
    let g = grid();
    let n = vec![SQRT_2_3; g.n_nodes()];
    let path = solve_alpha_lambda0(&n, -FRAC_PI_6, &g).unwrap();
    let f = build_frame(&Director::from_v3(0.0).unwrap()).unwrap();
    let perturbed = |eps: f64| {
        let mut p = path.clone();
        for (i, t) in g.nodes().iter().enumerate() {
            p.alpha[i] += eps * (PI * t / g.t_max()).sin();
        }
        el_residuals(&p, &f, 0.0, &PotentialParams::default()).unwrap().max_abs().0
    };
    let (r1, r2) = (perturbed(1e-4), perturbed(2e-4));
    assert!(r1 > 1e-6);
    assert!((r2 / r1 - 2.0).abs() < 0.05, "{}", r2 / r1);
}

#[test]
fn cutting_lowers_energy() {
    let g = grid();
    let n = vec![SQRT_2_3; g.n_nodes()];
    let a0 = alpha0(0.0);
    let path = solve_alpha_lambda0(&n, a0, &g).unwrap();
    let base = k_n(&path, 0.0);
    for a_phi in [-0.4, 0.0, 0.5, 1.2] {
        let mut cut = path.clone();
        cut.alpha.iter_mut().for_each(|a| *a = a.max(a_phi));
        assert!(k_n(&cut, 0.0) <= base + 1e-12);
        let solved = solve_alpha_lambda0(&n, a_phi, &g).unwrap();
        assert!(k_n(&solved, 0.0) <= base + 1e-12);
    }
}

#[test]
fn reduced_lambda0_matches_full_tensor() {
    let g = grid();
    let v = Director::E1;
    let reduced = minimize_lambda0(&v, &g).unwrap();
    assert!(reduced.converged, "{}", reduced.outer_iterations);
    assert!(reduced.energy > 0.0);
    let full = profile1d::d_lambda_director(&v, Lambda::Finite(0.0), &g, &SolveOptions::default()).unwrap();
    assert!((reduced.energy - full.value).abs() < 1e-4, "{} vs {}", reduced.energy, full.value);
    assert!((reduced.path.amplitude[0] - SQRT_2_3).abs() < 1e-15);

    let fixed_n = solve_alpha_lambda0(&vec![SQRT_2_3; g.n_nodes()], alpha0(0.0), &g).unwrap();
    assert!(k_n(&fixed_n, 0.0) >= full.value - 1e-8);

    let frame = build_frame(&v).unwrap();
    let as_profile = reduced.path.to_profile(&frame).unwrap();
    let e = profile1d::energy_f_lambda(&as_profile, Lambda::Finite(0.0), &PotentialParams::default()).unwrap();
    assert!((e - reduced.energy).abs() < 1e-12);
}

#[test]
fn larger_v3_costs_less_at_lambda0() {
    let g = grid();
    let hi = minimize_lambda0(&Director::from_v3(0.9).unwrap(), &g).unwrap();
    let lo = minimize_lambda0(&Director::from_v3(0.1).unwrap(), &g).unwrap();
    assert!(hi.energy < lo.energy);
    let flipped = minimize_lambda0(&Director::from_v3(0.1).unwrap().flipped(), &g).unwrap();
    assert!((flipped.energy - lo.energy).abs() < 1e-10);
}

#[test]
fn lyuksyutov_alpha_decouples() {
    let g = grid();
    let params = PotentialParams::new(1.0, 0.0, 3.0).unwrap();
    let v = Director::from_v3(0.2).unwrap();
    let coupled = minimize_planar(&v, 1.0, &params, &g).unwrap();
    let plain = solve_alpha_lambda0(&coupled.path.amplitude, alpha0(0.2), &g).unwrap();
    let worst = coupled
        .path
        .alpha
        .iter()
        .zip(&plain.alpha)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn angle_path_csv_roundtrip() {
    let g = Grid1D::new(6.0, 33).unwrap();
    let n = vec![SQRT_2_3; g.n_nodes()];
    let path = solve_alpha_lambda0(&n, -0.3, &g).unwrap();
    let header = AnglePathHeader { schema_version: 1, grid: g, v3: 0.1, lambda: Lambda::Finite(0.0), energy: Some(1.0) };
    let mut buf = Vec::new();
    write_angle_path_csv(&mut buf, &path, &header).unwrap();
    let (h2, p2) = read_angle_path_csv(buf.as_slice()).unwrap();
    assert_eq!(h2, header);
    assert_eq!(p2, path);
}

#[test]
fn abmap_marks_uniaxial_points() {
    let cells = abmap(0.5, 3).unwrap();
    let top = cells.iter().find(|c| c.alpha == FRAC_PI_2 && c.beta == 0.0).unwrap();
    assert!(top.uniaxial);
    assert_eq!(cells.len(), 9);
    assert!(abmap(1.0, 10).is_err());
}

#[test]
fn angles_of_inverts_q_star() {
    let f = build_frame(&Director::from_v3(0.35).unwrap()).unwrap();
    for (a, b) in [(0.3, 0.2), (-1.2, -0.4), (FRAC_PI_3, FRAC_PI_4)] {
        let (a2, b2) = f.angles_of(&q_star(a, b, &f)).unwrap();
        assert!((a - a2).abs() < 1e-13 && (b - b2).abs() < 1e-13);
    }
}

proptest! {
    #[test]
    fn frame_is_orthonormal(theta in 0.0..(2.0 * PI), v3 in -0.999f64..0.999) {
        let s = (1.0 - v3 * v3).sqrt();
        let v = Director::from_components(s * theta.cos(), s * theta.sin(), v3).unwrap();
        let g = build_frame(&v).unwrap().gram();
        for (i, row) in g.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                prop_assert!((x - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_matches_matrix_oracle(a in -PI..PI, b in -FRAC_PI_2..FRAC_PI_2, v3 in -0.999f64..0.999) {
        let f = build_frame(&Director::from_v3(v3).unwrap()).unwrap();
        let qs = q_star(a, b, &f);
        prop_assert!((qs.norm() - 1.0).abs() < 1e-12);
        prop_assert!((trace_t(a, b, v3) - trace_cubed(&qs)).abs() < 1e-10);
    }

    #[test]
    fn identity_vanishes(a in -PI..PI, b in -1.5f64..1.5, v3 in -0.999f64..0.999) {
        prop_assert!(identity_check(a, b, v3).unwrap() < 1e-9);
    }
}
