mod common;

use lqpadmm::lqp::{lqp_gradient, lqp_value, solve_block_subproblem, LqpTerm, SubproblemInstance};
use lqpadmm::numeric::{DenseMatrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradient_matches_central_differences_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let m = rng.random_range(1..6);
        let mu = rng.random_range(0.01..0.99);
        let z = Vector::from_fn(m, |_, _| rng.random_range(0.1..5.0));
        let v = Vector::from_fn(m, |_, _| rng.random_range(0.1..5.0));
        let lqp = LqpTerm::new(mu, z.clone(), 1.0).unwrap();
        let grad = lqp_gradient(&lqp, &v).unwrap();
        for j in 0..m {
            let h = 1e-6 * v[j];
            let (mut up, mut down) = (v.clone(), v.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (lqp_value(&lqp, &up).unwrap() - lqp_value(&lqp, &down).unwrap()) / (2.0 * h);
            let rel = (fd - grad[j]).abs() / grad[j].abs().max(1e-3);
            assert!(rel < 1e-5, "component {j}: fd {fd} vs {}", grad[j]);
        }
        assert_eq!(lqp_value(&lqp, &z).unwrap(), 0.0);
        assert!(lqp_value(&lqp, &v).unwrap() >= 0.0);
    }
}

#[test]
fn scalar_instance_matches_closed_form_root() {
    let one = |v: f64| Vector::from_element(1, v);
    let inst = SubproblemInstance::new(
        DenseMatrix::identity(1, 1),
        one(-3.0),
        LqpTerm::new(0.5, one(1.0), 1.0).unwrap(),
    )
    .unwrap();
    let x = solve_block_subproblem(&inst, &one(1.0), 1e-12).unwrap();
    let root = (3.5 + 16.25f64.sqrt()) / 4.0;
    assert!((x[0] - root).abs() < 1e-8);
    assert!((x[0] - 1.88278).abs() < 1e-5);
}

#[test]
fn three_dim_instances_match_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..20 {
        let g = DenseMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let quad = &g * g.transpose();
        let linear = Vector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
        let z = Vector::from_fn(3, |_, _| rng.random_range(0.2..2.0));
        let lqp = LqpTerm::new(rng.random_range(0.1..0.9), z.clone(), rng.random_range(0.5..3.0)).unwrap();
        let inst = SubproblemInstance::new(quad, linear, lqp).unwrap();
        let x = solve_block_subproblem(&inst, &Vector::from_element(3, 1.0), 1e-12).unwrap();
        let oracle = common::grid_search_3d(|v| inst.objective(v), z, 10.0);
        assert!((&x - &oracle).amax() < 1e-3, "case {case}: {x} vs {oracle}");
    }
}
