use bundle_accel::diagnostics::{
    check_ahpe_condition, check_coefficients, check_inner_bound, check_monotone, check_potential,
    check_rate_bound, loglog_slope,
};
use bundle_accel::objectives::{
    make_random_psd_quadratic, make_worst_case, quadratic_optimum, ObjectiveOracle,
    QuadraticObjective,
};
use bundle_accel::rng;
use bundle_accel::solvers::{
    accelerated_pbm, classical_pbm_single_loop, coefficient_sequence, gradient_descent,
    nesterov_agd, pbm, run_solver, BundleParams, RunContext, RunRecord, SolverConfig, SolverKind,
};
use bundle_accel::vecops::{dist_sq, norm};
use bundle_accel::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn ctx_for(f: &QuadraticObjective) -> RunContext {
    RunContext::named("test").with_optimum(quadratic_optimum(f).unwrap().value)
}

fn assert_record_shape(run: &RunRecord, iterations: usize) {
    assert_eq!(run.iterations.len(), iterations + 1);
    for (k, row) in run.iterations.iter().enumerate() {
        assert_eq!(row.k, k);
        if let (Some(gap), Some(fs)) = (row.gap, run.f_star) {
            assert!(gap >= -1e-9 * (1.0 + fs.abs()), "gap {gap} at {k}");
        }
    }
    for pair in run.iterations.windows(2) {
        assert!(pair[1].oracle_calls >= pair[0].oracle_calls);
    }
}

/// `f(x_k) − f⋆` for gradient descent with step `1/ρ`, from the eigen
/// expansion `½ Σ λ_i (1 − λ_i/ρ)^{2k} c_i²` with `c = Vᵀ(x₀ − x⋆)`.
fn spectral_gd_gaps(f: &QuadraticObjective, x0: &[f64], rho: f64, iters: usize) -> Vec<f64> {
    let n = f.dim();
    let eig = DMatrix::from_row_slice(n, n, &f.hessian_dense()).symmetric_eigen();
    let x_star = quadratic_optimum(f).unwrap().point;
    let e0: Vec<f64> = x0.iter().zip(&x_star).map(|(a, b)| a - b).collect();
    let c = eig.eigenvectors.transpose() * DVector::from_vec(e0);
    (0..=iters)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let l = eig.eigenvalues[i];
                    0.5 * l * (1.0 - l / rho).powi(2 * k as i32) * c[i] * c[i]
                })
                .sum()
        })
        .collect()
}

#[test]
fn coefficient_identities_hold_for_a_million_steps() {
    let mut prev = None;
    for (k, c) in coefficient_sequence().take(1_000_001).enumerate() {
        if k >= 1 {
            assert!(c.total_weight >= (k as f64).powi(2) / 4.0);
        }
        let next = c.next_total();
        assert!((next - c.step_weight * c.step_weight).abs() <= 1e-12 * next);
        assert_eq!(next, c.total_weight + c.step_weight);
        if let Some(p) = prev {
            assert_eq!(c.total_weight, p);
        }
        prev = Some(next);
    }
}

#[test]
fn gd_on_worst_case_is_monotone() {
    let f = make_worst_case(500).unwrap();
    let run = gradient_descent(&f, &vec![0.0; 500], 1.0, 1000, &ctx_for(&f)).unwrap();
    assert_record_shape(&run, 1000);
    let gaps = run.gaps().unwrap();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn classical_bundle_on_worst_case_follows_spectral_gd_curve() {
    let f = make_worst_case(500).unwrap();
    let x0 = vec![0.0; 500];
    let run = pbm(&f, &x0, &BundleParams::new(0.5, 1.0, 1.0), 1000, &ctx_for(&f)).unwrap();
    assert_record_shape(&run, 1000);
    assert!(run.iterations[1..].iter().all(|r| r.inner_iterations == 1));
    let oracle = spectral_gd_gaps(&f, &x0, 1.0, 1000);
    let gaps = run.gaps().unwrap();
    for (k, (g, o)) in gaps.iter().zip(&oracle).enumerate() {
        assert!((g - o).abs() <= 1e-7 * o.abs() + 1e-13, "k={k}: {g} vs {o}");
    }
    // The curve is far flatter than 1/k over this window.
    let slope = loglog_slope(&oracle, 100, 1000).unwrap();
    assert!((-0.55..=-0.5).contains(&slope), "{slope}");
    assert!(check_monotone(&run).passed);
}

#[test]
fn accelerated_bundle_on_worst_case_certificates() {
    let f = make_worst_case(500).unwrap();
    let opt = quadratic_optimum(&f).unwrap();
    let x0 = vec![0.0; 500];
    let run = accelerated_pbm(&f, &x0, &BundleParams::new(0.5, 1.0, 1.0), 1000, &ctx_for(&f))
        .unwrap();
    assert_record_shape(&run, 1000);
    assert!(check_ahpe_condition(&run, 1.0).unwrap().passed);
    assert!(check_potential(&run, &f, &opt.point, 1.0).unwrap().passed);
    assert!(check_coefficients(&run).unwrap().passed);
    assert!(check_inner_bound(&run, 1.0, 1.0, 0.5).unwrap().passed);
    assert!(check_rate_bound(&run, dist_sq(&x0, &opt.point), 1.0).unwrap().passed);
    let slope = loglog_slope(&run.gaps().unwrap(), 100, 1000).unwrap();
    assert!(slope <= -1.8, "{slope}");
}

#[test]
fn optimal_start_is_a_fixed_point() {
    let f = make_worst_case(20).unwrap();
    let x0 = quadratic_optimum(&f).unwrap().point;
    let run = accelerated_pbm(&f, &x0, &BundleParams::new(0.5, 1.0, 1.0), 30, &ctx_for(&f))
        .unwrap();
    for row in &run.iterations {
        assert!(dist_sq(&row.x, &x0) < 1e-28);
        if let Some(eps) = row.epsilon {
            assert!(eps.abs() < 1e-15);
        }
    }
    assert!(check_ahpe_condition(&run, 1.0).unwrap().passed);
    let pot = check_potential(&run, &f, &x0, 1.0).unwrap();
    assert!(pot.passed);
}

#[test]
fn small_rho_runs_are_recorded_or_abort_cleanly() {
    let f = make_random_psd_quadratic(100, 7).unwrap();
    let x0 = rng::uniform_vec(&mut rng::stream(7, rng::START_STREAM), 100, 0.0, 1.0);
    for rho in [0.5, 0.1] {
        match accelerated_pbm(&f, &x0, &BundleParams::new(0.5, rho, 1.0), 1000, &ctx_for(&f)) {
            Ok(run) => assert_eq!(run.iterations.len(), 1001),
            Err(Error::RunAborted { partial, cause }) => {
                assert!(cause.is_budget_exhausted());
                assert!(!partial.iterations.is_empty());
            }
            Err(other) => panic!("unexpected {other}"),
        }
    }
}

#[test]
fn run_solver_dispatches_every_kind() {
    let f = make_worst_case(10).unwrap();
    let x0 = vec![0.0; 10];
    for kind in SolverKind::ALL {
        let run = run_solver(&f, &x0, &SolverConfig::new(kind, 1.0, 0.5, 20), &ctx_for(&f)).unwrap();
        assert_eq!(run.solver, kind);
        assert_record_shape(&run, 20);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn apbm_reduces_to_agd(n in 1usize..40, seed: u64) {
        let f = make_random_psd_quadratic(n, seed).unwrap();
        let m = f.smoothness();
        let x0 = rng::uniform_vec(&mut rng::stream(seed, rng::START_STREAM), n, 0.0, 1.0);
        let ctx = RunContext::named("p");
        let agd = nesterov_agd(&f, &x0, 60, &ctx).unwrap();
        let apbm = accelerated_pbm(&f, &x0, &BundleParams::new(0.5, m, m), 60, &ctx).unwrap();
        for (g, b) in agd.iterations.iter().zip(&apbm.iterations) {
            prop_assert!(dist_sq(&g.x, &b.x).sqrt() <= 1e-8 * (1.0 + norm(&g.x)));
            prop_assert_eq!(b.inner_iterations, if b.k == 0 { 0 } else { 1 });
        }
    }

    #[test]
    fn bundle_runs_carry_valid_certificates(
        n in 1usize..30,
        seed: u64,
        beta in 0.05f64..0.95,
        rho_factor in 1.0f64..3.0,
    ) {
        let f = make_random_psd_quadratic(n, seed).unwrap();
        let m = f.smoothness();
        let rho = rho_factor * m;
        let opt = quadratic_optimum(&f).unwrap();
        let x0 = rng::uniform_vec(&mut rng::stream(seed, rng::START_STREAM), n, 0.0, 1.0);
        let ctx = ctx_for(&f);
        let params = BundleParams::new(beta, rho, m);

        let apbm = accelerated_pbm(&f, &x0, &params, 80, &ctx).unwrap();
        prop_assert!(check_ahpe_condition(&apbm, rho).unwrap().passed);
        prop_assert!(check_potential(&apbm, &f, &opt.point, rho).unwrap().passed);
        let x_ref = rng::uniform_vec(&mut rng::stream(seed, 9), n, -2.0, 2.0);
        prop_assert!(check_potential(&apbm, &f, &x_ref, rho).unwrap().passed);
        prop_assert!(check_inner_bound(&apbm, m, rho, beta).unwrap().passed);
        prop_assert!(check_rate_bound(&apbm, dist_sq(&x0, &opt.point), rho).unwrap().passed);

        let double = pbm(&f, &x0, &params, 40, &ctx).unwrap();
        prop_assert!(check_monotone(&double).passed);
        prop_assert!(check_ahpe_condition(&double, rho).unwrap().passed);
        prop_assert!(check_inner_bound(&double, m, rho, beta).unwrap().passed);
        if beta <= 0.5 {
            prop_assert!(double.iterations[1..].iter().all(|r| r.inner_iterations == 1));
        }

        let single = classical_pbm_single_loop(&f, &x0, beta, rho, double.total_inner_iterations(), &ctx).unwrap();
        let (a, b) = (double.descent_iterates(), single.descent_iterates());
        prop_assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            prop_assert!(p.iter().zip(q.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        prop_assert_eq!(double.solves_per_descent(), single.solves_per_descent());
        prop_assert!(check_ahpe_condition(&single, rho).unwrap().passed);
    }

    #[test]
    fn worst_case_single_and_double_loop_agree(n in 2usize..120, beta in 0.5f64..0.99) {
        let f = make_worst_case(n).unwrap();
        let x0 = vec![0.0; n];
        let ctx = RunContext::named("wc");
        let double = pbm(&f, &x0, &BundleParams::new(beta, 1.0, 1.0), 30, &ctx).unwrap();
        let single = classical_pbm_single_loop(&f, &x0, beta, 1.0, double.total_inner_iterations(), &ctx).unwrap();
        prop_assert_eq!(double.solves_per_descent(), single.solves_per_descent());
        let a = double.descent_iterates();
        let b = single.descent_iterates();
        prop_assert!(a.iter().zip(&b).all(|(p, q)| p.iter().zip(q.iter()).all(|(x, y)| x.to_bits() == y.to_bits())));
        prop_assert_eq!(double.final_point(), single.final_point());
    }
}
