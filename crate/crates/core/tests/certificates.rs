mod common;

use lqpadmm::certify::{
    assemble, check_g_lower_bound, check_stepsize_region, correction_identity_error, g_norm_two_ways,
    prediction_vi_min, sample_probes, stepsize_quadratic, verify_h_positive_definite, vi_residual, xi_constants,
    Variant,
};
use lqpadmm::numeric::{self, DenseMatrix, Vector};
use lqpadmm::point::Point;
use lqpadmm::problem::{Block, BlockFunction, NonsmoothH, ProblemSpec, SmoothG, TailFunction, YDomain};
use lqpadmm::solver::{default_params, solve, step, IterateState, SolverParams, TerminationReason};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
    DenseMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn random_spec(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let p = rng.random_range(1..=3);
    let rows = rng.random_range(4..=6);
    let blocks = (0..p)
        .map(|_| {
            let m = rng.random_range(1..=3);
            Block {
                f: BlockFunction::Linear {
                    c: Vector::from_fn(m, |_, _| rng.random_range(0.0..1.0)),
                },
                a: gaussian(rng, rows, m),
            }
        })
        .collect();
    let d = rng.random_range(1..=3);
    let b_mat = gaussian(rng, rows, d);
    let rhs = Vector::from_fn(rows, |_, _| rng.sample(StandardNormal));
    ProblemSpec::new(blocks, TailFunction::zero(), b_mat, rhs, YDomain::Free).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng, spec: &ProblemSpec) -> SolverParams {
    let (alpha, tau) = loop {
        let (a, t) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..2.5));
        if check_stepsize_region(a, t).admissible {
            break (a, t);
        }
    };
    let mu = rng.random_range(0.05..0.95);
    let beta = rng.random_range(0.2..3.0);
    let p = spec.num_blocks();
    let gamma = if p > 1 {
        (p - 1) as f64 / (1.0 - mu) * rng.random_range(1.01..2.0)
    } else {
        rng.random_range(0.1..2.0)
    };
    let r = spec
        .blocks()
        .iter()
        .map(|b| gamma * beta * numeric::gram_norm(&b.a).unwrap() * rng.random_range(1.0..2.0))
        .collect();
    let mut params = default_params(spec, alpha, tau, beta, mu).unwrap();
    params.gamma = gamma;
    params.r = r;
    params.validate(spec).unwrap();
    params
}

#[test]
fn h_is_symmetric_positive_definite_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..50 {
        let spec = random_spec(&mut rng);
        let params = random_params(&mut rng, &spec);
        let mats = assemble(&spec, &params, Variant::Base).unwrap();
        assert!(numeric::asymmetry(&mats.h) <= 1e-12 * (1.0 + mats.h.amax()), "case {case}");
        let check = verify_h_positive_definite(&mats, &spec, &params).unwrap();
        assert!(check.conditions_hold, "case {case}");
        assert!(check.min_eig > 0.0, "case {case}: λ_min(H) = {}", check.min_eig);
        let back = &mats.h * &mats.m;
        assert!((&back - &mats.q).amax() <= 1e-12 * (1.0 + mats.q.amax()), "case {case}");
    }
}

#[test]
fn region_agrees_with_direct_inequalities_on_grid() {
    const N: usize = 200;
    for i in 0..N {
        for j in 0..N {
            let a = -1.1 + 2.2 * i as f64 / (N - 1) as f64;
            let t = -1.1 + 3.1 * j as f64 / (N - 1) as f64;
            let direct = a < 1.0 && a > -1.0 && a + t > 0.0 && 1.0 + a + t - a * t - a * a - t * t > 0.0;
            assert_eq!(check_stepsize_region(a, t).admissible, direct, "({a}, {t})");
        }
    }
}

#[test]
fn tau_supremum_at_zero_alpha_is_golden_ratio() {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let sup = (0..=200_000)
        .map(|k| k as f64 * 1e-5)
        .filter(|&t| check_stepsize_region(0.0, t).admissible)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((sup - golden).abs() < 1e-2, "{sup}");
    assert!(stepsize_quadratic(0.0, golden).abs() < 1e-12);
}

#[test]
fn correction_identity_over_500_iterations() {
    let inst = common::sparse_signal();
    let mut params = default_params(&inst.spec, 0.9, 0.8, 1.0, 0.5).unwrap();
    params.max_iter = 500;
    params.feas_tol = 1e-300;
    let out = solve(&inst.spec, &params, None).unwrap();
    assert_eq!(out.reason, TerminationReason::IterationCap);
    assert_eq!(out.iterations(), 500);
    let mats = assemble(&inst.spec, &params, Variant::Base).unwrap();
    let err = correction_identity_error(&out.iterates, &out.predictors, &mats).unwrap();
    assert!(err <= 1e-10, "{err}");
}

#[test]
fn per_step_inequalities_hold_along_a_run() {
    let inst = common::lp_box_dual();
    let params = default_params(&inst.spec, 0.5, 0.9, 1.0, 0.5).unwrap();
    let out = solve(&inst.spec, &params, None).unwrap();
    let mats = assemble(&inst.spec, &params, Variant::Base).unwrap();
    let xis = xi_constants(&params, inst.spec.num_blocks()).unwrap();
    for (k, slack) in check_g_lower_bound(&inst.spec, &out.iterates, &out.predictors, &mats, &xis)
        .unwrap()
        .into_iter()
        .enumerate()
    {
        assert!(slack >= -1e-10, "step {k}: {slack}");
    }
    let probes = sample_probes(&inst.spec, 50, 3);
    for k in [0, 1, 10, 100] {
        let (wk, wk1, pred) = (&out.iterates[k], &out.iterates[k + 1], &out.predictors[k]);
        let (direct, expanded) = g_norm_two_ways(&mats, wk, wk1, pred);
        assert!((direct - expanded).abs() <= 1e-9 * (1.0 + direct.abs()), "step {k}");
        let vi = prediction_vi_min(&inst.spec, &mats, wk, pred, &probes).unwrap();
        assert!(vi >= -1e-8, "step {k}: prediction VI {vi}");
    }
}

/// Two strictly convex blocks, quadratic tail, free `y`, with the data built around a chosen saddle point.
fn planted_saddle() -> (ProblemSpec, Point) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rows = 4;
    let a1 = gaussian(&mut rng, rows, 2);
    let a2 = gaussian(&mut rng, rows, 3);
    let b_mat = gaussian(&mut rng, rows, 2);
    let p = DenseMatrix::from_diagonal(&Vector::from_row_slice(&[1.0, 2.0]));
    let x = vec![Vector::from_row_slice(&[0.5, 1.5]), Vector::from_row_slice(&[0.2, 0.7, 1.1])];
    let y = Vector::from_row_slice(&[-0.4, 0.9]);
    let lambda = Vector::from_fn(rows, |_, _| rng.sample(StandardNormal));
    let rhs = &a1 * &x[0] + &a2 * &x[1] + &b_mat * &y;
    // Interior x with ∇fᵢ(xᵢ) = Aᵢᵀλ.
    let block = |a: DenseMatrix, x: &Vector| {
        let p_diag = Vector::from_element(x.len(), 0.5);
        let c = a.transpose() * &lambda - p_diag.component_mul(x);
        Block {
            f: BlockFunction::DiagQuadratic { p_diag, c },
            a,
        }
    };
    let blocks = vec![block(a1, &x[0]), block(a2, &x[1])];
    let c = b_mat.transpose() * &lambda - &p * &y;
    let tail = TailFunction::new(SmoothG::Quadratic { p, c }, NonsmoothH::Zero).unwrap();
    let spec = ProblemSpec::new(blocks, tail, b_mat, rhs, YDomain::Free).unwrap();
    (spec, Point { x, y, lambda })
}

#[test]
fn planted_saddle_is_a_fixed_point() {
    let (spec, saddle) = planted_saddle();
    for (a, t) in common::PAIRS {
        let params = default_params(&spec, a, t, 1.0, 0.5).unwrap();
        let state = IterateState::at_point(&spec, saddle.clone(), params.beta, params.tau);
        let next = step(&spec, &params, &state).unwrap();
        assert!((next.flat() - state.flat()).amax() < 1e-9, "({a}, {t})");
        // And the solver started elsewhere finds it.
        let out = solve(&spec, &params, None).unwrap();
        assert_eq!(out.reason, TerminationReason::Converged, "({a}, {t})");
        assert!((out.state.flat() - saddle.flatten()).amax() < 1e-5, "({a}, {t})");
    }
}

#[test]
fn vi_residual_vanishes_only_at_the_saddle() {
    let (spec, saddle) = planted_saddle();
    let probes = sample_probes(&spec, 200, 9);
    let w = saddle.flatten();
    assert!(vi_residual(&spec, &w, &probes).unwrap() <= 1e-6);
    let mut off = saddle.clone();
    off.y[0] += 1.0;
    assert!(vi_residual(&spec, &off.flatten(), &probes).unwrap() > 0.0);
}
