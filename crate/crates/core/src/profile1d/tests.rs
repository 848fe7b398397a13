use super::*;
use crate::closedform_inf::{d_inf_exact, n_exact, InfProfileParams};
use crate::qtensor::uniaxial;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

fn exact_path(grid: &Grid1D, varphi: f64) -> Profile {
    let p = InfProfileParams::new(varphi).unwrap();
    let mut dirs: Vec<Director> = grid.nodes().iter().map(|&t| n_exact(t, &p)).collect();
    *dirs.last_mut().unwrap() = Director::E3;
    Profile::director(*grid, dirs, 1.0).unwrap()
}

fn random_tensor_profile(grid: &Grid1D, seed: u64) -> Profile {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let q0 = S0Tensor(std::array::from_fn(|_| rng.gen_range(-0.8..0.8)));
    let values = super::initial_tensor_values(
        &q0,
        grid,
        &InitialGuess::Random { seed },
        &PotentialParams::default(),
    )
    .unwrap();
    Profile::tensor(*grid, values).unwrap()
}

#[test]
fn grid_validation() {
    assert!(Grid1D::new(12.0, 15).is_err());
    assert!(Grid1D::new(2.0, 100).is_err());
    let g = Grid1D::default();
    assert_eq!(g.n_nodes(), 1537);
    assert!((g.spacing() - 1.0 / 128.0).abs() < 1e-15);
    let nodes = g.nodes();
    assert_eq!(nodes[0], 0.0);
    assert_eq!(*nodes.last().unwrap(), 12.0);
    assert!(nodes.windows(2).all(|w| ((w[1] - w[0]) - g.spacing()).abs() < 1e-12));
    assert_eq!(g.refined().spacing(), 0.5 * g.spacing());
}

#[test]
fn constant_profile_has_zero_energy() {
    let g = Grid1D::new(8.0, 65).unwrap();
    let p = Profile::constant_inf(g);
    for l in [0.0, 1.0, 3.0] {
        let e = energy_f_lambda(&p, Lambda::Finite(l), &PotentialParams::default()).unwrap();
        assert!(e.abs() < 1e-13, "{e}");
    }
    assert!(matches!(
        energy_f_lambda(&p, Lambda::Infinite, &PotentialParams::default()),
        Err(Error::ModeMismatch)
    ));
}

#[test]
fn closed_form_path_energy() {
    let grid = Grid1D::default();
    let params = PotentialParams::default();
    let e = energy_f_lambda(&exact_path(&grid, FRAC_PI_2), Lambda::Infinite, &params).unwrap();
    assert!((e - KAPPA).abs() < 1e-4, "{e}");
    let flat = Profile::director(grid, vec![Director::E3; grid.n_nodes()], 1.0).unwrap();
    assert_eq!(energy_f_lambda(&flat, Lambda::Infinite, &params).unwrap(), 0.0);
    for varphi in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, FRAC_PI_2] {
        let e = energy_f_lambda(&exact_path(&grid, varphi), Lambda::Infinite, &params).unwrap();
        assert!((e - KAPPA * (1.0 - varphi.cos())).abs() < 1e-4, "varphi {varphi}: {e}");
    }
}

#[test]
fn start_at_q_inf_is_trivial() {
    let grid = Grid1D::new(8.0, 129).unwrap();
    for lambda in [Lambda::Finite(0.0), Lambda::Finite(2.0), Lambda::Infinite] {
        let (p, r) = minimize_profile(&q_inf(), lambda, &grid, &SolveOptions::default()).unwrap();
        assert!(r.converged && r.energy.abs() < 1e-14);
        assert!(p.tensors().iter().all(|q| (*q - q_inf()).norm() < 1e-12));
        let d = d_lambda(&q_inf(), lambda, &grid, &SolveOptions::default()).unwrap();
        assert!(d.value.abs() < 1e-14);
    }
}

#[test]
fn lambda_inf_matches_closed_form() {
    let grid = Grid1D::default();
    for v3 in [0.0, 0.25, 0.5, 0.75] {
        let v = Director::from_v3(v3).unwrap();
        let (p, r) =
            minimize_profile(&uniaxial(&v, 1.0), Lambda::Infinite, &grid, &SolveOptions::default())
                .unwrap();
        let exact = d_inf_exact(&v);
        assert!(r.converged, "v3 {v3}: grad {}", r.grad_norm);
        assert!((r.energy - exact).abs() <= 1e-3 * exact, "v3 {v3}: {} vs {exact}", r.energy);
        assert!(p.is_director_mode());
    }
}

#[test]
fn rejects_non_uniaxial_start_at_infinity() {
    let grid = Grid1D::new(8.0, 65).unwrap();
    let q0 = S0Tensor([0.2, 0.0, 0.1, 0.0, 0.3]);
    assert!(matches!(
        minimize_profile(&q0, Lambda::Infinite, &grid, &SolveOptions::default()),
        Err(Error::NotUniaxial { .. })
    ));
}

#[test]
fn equipartition_at_infinity() {
    let grid = Grid1D::default();
    let v = Director::from_v3(0.0).unwrap();
    let (p, _) =
        minimize_profile(&uniaxial(&v, 1.0), Lambda::Infinite, &grid, &SolveOptions::default()).unwrap();
    let ProfileValues::Director { directors, .. } = p.values() else { panic!("director mode") };
    let h = grid.spacing();
    let mut checked = 0;
    for i in 1..grid.n_nodes() - 1 {
        let t = grid.node(i);
        if !(0.5..=4.0).contains(&t) {
            continue;
        }
        let d = (directors[i + 1].as_vector() - directors[i - 1].as_vector()) / (2.0 * h);
        let n3 = directors[i].z();
        let g = crate::qtensor::SQRT_3_2 * (1.0 - n3 * n3);
        assert!((d.norm_squared() - g).abs() <= 0.02 * g, "t {t}");
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn truncation_stability_at_infinity() {
    let grid = Grid1D::new(12.0, 1537).unwrap();
    let v = Director::from_v3(0.3).unwrap();
    let q0 = uniaxial(&v, 1.0);
    let opts = SolveOptions::default();
    let a = minimize_profile(&q0, Lambda::Infinite, &grid, &opts).unwrap().1.energy;
    let b = minimize_profile(&q0, Lambda::Infinite, &grid.extended(), &opts).unwrap().1.energy;
    assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
}

#[test]
fn refinement_changes_shrink() {
    let v = Director::from_v3(0.3).unwrap();
    let q0 = uniaxial(&v, 1.0);
    let opts = SolveOptions::default();
    let mut grid = Grid1D::new(12.0, 193).unwrap();
    let mut values = Vec::new();
    for _ in 0..4 {
        values.push(d_lambda(&q0, Lambda::Finite(1.0), &grid, &opts).unwrap().value);
        grid = grid.refined();
    }
    let deltas: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for w in deltas.windows(2) {
        assert!(w[1] <= w[0], "{deltas:?}");
        assert!(w[1] / w[0] <= 0.35, "{deltas:?}");
    }
}

#[test]
fn monotone_in_lambda() {
    let grid = Grid1D::default();
    let v = Director::from_v3(0.3).unwrap();
    let q0 = uniaxial(&v, 1.0);
    let opts = SolveOptions::default();
    let mut prev = -1.0;
    for lambda in [0.0, 0.5, 1.0, 2.0, 5.0].map(Lambda::Finite).into_iter().chain([Lambda::Infinite]) {
        let d = d_lambda(&q0, lambda, &grid, &opts).unwrap();
        assert!(d.converged, "lambda {lambda}");
        assert!(d.value >= prev - 1e-4, "lambda {lambda}: {} < {prev}", d.value);
        prev = d.value;
    }
}

#[test]
fn perturbed_closed_form_reconverges() {
    let grid = Grid1D::default();
    let varphi = FRAC_PI_3;
    let exact = exact_path(&grid, varphi);
    let ProfileValues::Director { directors, .. } = exact.values() else { unreachable!() };
    let perturbed: Vec<Director> = directors
        .iter()
        .zip(grid.nodes())
        .map(|(d, t)| {
            let bump = 0.3 * (std::f64::consts::PI * t / grid.t_max()).sin();
            Director::normalize(d.as_vector() + nalgebra::Vector3::new(0.2 * bump, bump, 0.0)).unwrap()
        })
        .collect();
    let start = Profile::director(grid, perturbed, 1.0).unwrap();
    let opts = SolveOptions { init: Some(InitialGuess::Custom(Box::new(start))), ..Default::default() };
    let (p, r) = minimize_profile(&exact.start(), Lambda::Infinite, &grid, &opts).unwrap();
    let target = KAPPA * (1.0 - varphi.cos());
    assert!(r.energy >= target - 1e-4);
    let ProfileValues::Director { directors: got, .. } = p.values() else { unreachable!() };
    let worst = got.iter().zip(directors).map(|(a, b)| (a.z() - b.z()).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn random_starts_end_planar() {
    let grid = Grid1D::new(10.0, 641).unwrap();
    let v = Director::from_components(0.6, 0.48, 0.64).unwrap();
    for seed in 0..3 {
        let opts = SolveOptions { init: Some(InitialGuess::Random { seed }), ..Default::default() };
        let (p, r) = minimize_profile(&uniaxial(&v, 1.0), Lambda::Infinite, &grid, &opts).unwrap();
        assert!(r.converged);
        let ProfileValues::Director { directors, .. } = p.values() else { unreachable!() };
        // component normal to the plane spanned by v and e3
        let normal = nalgebra::Vector3::new(-v.y(), v.x(), 0.0).normalize();
        let off = directors.iter().map(|d| d.as_vector().dot(&normal).abs()).fold(0.0, f64::max);
        assert!(off <= 1e-3, "seed {seed}: {off}");
    }
}

#[test]
fn lambda_zero_degenerate_counter_is_zero_for_uniaxial_start() {
    let grid = Grid1D::new(10.0, 321).unwrap();
    let q0 = uniaxial(&Director::E1, 1.0);
    let (_, r) = minimize_profile(&q0, Lambda::Finite(0.0), &grid, &SolveOptions::default()).unwrap();
    assert!(r.converged);
    assert_eq!(r.degenerate_g_evals, 0);
}

#[test]
fn energy_never_increases() {
    let grid = Grid1D::new(8.0, 257).unwrap();
    let q0 = uniaxial(&Director::from_v3(0.2).unwrap(), 1.0);
    for lambda in [Lambda::Finite(0.5), Lambda::Infinite] {
        let opts = SolveOptions { record_history: true, ..Default::default() };
        let (_, r) = minimize_profile(&q0, lambda, &grid, &opts).unwrap();
        let h = r.energy_history.unwrap();
        assert!(h.windows(2).all(|w| w[1] <= w[0] + solver::ENERGY_NOISE * w[0].abs()));
    }
}

#[test]
fn csv_roundtrip() {
    let grid = Grid1D::new(6.0, 33).unwrap();
    let p = random_tensor_profile(&grid, 4);
    let mut buf = Vec::new();
    io::write_profile_csv(&mut buf, &p, Lambda::Finite(1.5), Some(0.25)).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("# {"));
    assert!(text.lines().nth(1).unwrap() == "t,Q11,Q12,Q13,Q22,Q23");
    let (h, back) = io::read_profile_csv(std::io::Cursor::new(buf)).unwrap();
    assert_eq!(h.lambda, Lambda::Finite(1.5));
    assert_eq!(h.schema_version, crate::SCHEMA_VERSION);
    for (a, b) in back.tensors().iter().zip(p.tensors()) {
        assert!((*a - b).norm() < 1e-15);
    }
}

fn fd_check(problem: &mut dyn solver::DescentProblem, x: &[f64]) -> f64 {
    let n = x.len();
    let mut g = vec![0.0; n];
    problem.value_and_gradient(x, &mut g);
    let mut scratch = vec![0.0; n];
    let mut worst: f64 = 0.0;
    let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for k in (0..n).step_by((n / 40).max(1)) {
        let h = 1e-6 * (1.0 + x[k].abs());
        let mut xp = x.to_vec();
        xp[k] += h;
        let ep = problem.value_and_gradient(&xp, &mut scratch);
        xp[k] -= 2.0 * h;
        let em = problem.value_and_gradient(&xp, &mut scratch);
        let fd = (ep - em) / (2.0 * h);
        worst = worst.max((fd - g[k]).abs() / (g[k].abs().max(1e-3 * scale)));
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn tensor_gradient_matches_differences(seed in 0u64..10_000, li in 0usize..3) {
        let lam = [0.0, 0.5, 2.0][li];
        let grid = Grid1D::new(6.0, 49).unwrap();
        let p = random_tensor_profile(&grid, seed);
        let values = p.tensors();
        let mut problem = TensorProblem::new(grid, values[0], lam * lam, PotentialParams::default());
        let x = problem.pack(&values);
        prop_assert!(fd_check(&mut problem, &x) <= 1e-6);
    }
}
