//! Acceptance checks, one PASS/FAIL line per criterion. Exits nonzero when any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use lqpadmm::certify::{
    assemble, check_contraction, check_stepsize_region, contraction_tolerance, correction_identity_error,
    ergodic_series, nonergodic_series, verify_h_positive_definite, xi_constants, Variant,
};
use lqpadmm::extension::{default_extension_params, proximal_matrix, reference_solution_extended, solve_extended};
use lqpadmm::lqp::{lqp_gradient, lqp_value, solve_block_subproblem, LqpTerm, SubproblemInstance};
use lqpadmm::numeric::{self, Cholesky, DenseMatrix, Vector};
use lqpadmm::point::Layout;
use lqpadmm::problem::{
    evaluate_objective, generate_lasso_composite_instance, generate_lp_box_dual_instance,
    generate_sparse_signal_instance, Block, BlockFunction, LpBoxData, NonsmoothH, ProblemSpec, TailFunction,
    YDomain,
};
use lqpadmm::solver::{default_params, reference_solution, solve, SolveOutput, SolverParams, TerminationReason};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

const PAIRS: [(f64, f64); 4] = [(0.0, 1.0), (0.5, 0.9), (0.9, 0.8), (-0.3, 1.2)];

fn c1_lqp_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(1..6);
        let mu = rng.random_range(0.01..0.99);
        let z = Vector::from_fn(m, |_, _| rng.random_range(0.1..5.0));
        let v = Vector::from_fn(m, |_, _| rng.random_range(0.1..5.0));
        let lqp = LqpTerm::new(mu, z.clone(), 1.0).map_err(|e| e.to_string())?;
        let grad = lqp_gradient(&lqp, &v).map_err(|e| e.to_string())?;
        for j in 0..m {
            let h = 1e-6 * v[j];
            let (mut up, mut down) = (v.clone(), v.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (lqp_value(&lqp, &up).unwrap() - lqp_value(&lqp, &down).unwrap()) / (2.0 * h);
            worst = worst.max((fd - grad[j]).abs() / grad[j].abs().max(1e-3));
        }
        ensure!(lqp_value(&lqp, &z).unwrap() == 0.0, "d(z, z) ≠ 0");
        ensure!(lqp_value(&lqp, &v).unwrap() >= 0.0, "d < 0");
    }
    ensure!(worst < 1e-5, "max relative FD error {worst:e}");
    Ok(format!("max relative FD error {worst:.1e}"))
}

fn grid_search_3d(f: impl Fn(&Vector) -> f64, center: Vector, half_width: f64) -> Vector {
    const POINTS: i32 = 11;
    let mut best = center;
    let mut h = half_width;
    while h > 1e-6 {
        let base = best.clone();
        let mut best_val = f(&best);
        for i in 0..POINTS {
            for j in 0..POINTS {
                for k in 0..POINTS {
                    let offset = |s: i32| h * (2.0 * s as f64 / (POINTS - 1) as f64 - 1.0);
                    let cand = Vector::from_row_slice(&[base[0] + offset(i), base[1] + offset(j), base[2] + offset(k)]);
                    if cand.iter().any(|&v| v <= 0.0) {
                        continue;
                    }
                    let val = f(&cand);
                    if val < best_val {
                        best_val = val;
                        best = cand;
                    }
                }
            }
        }
        h *= 0.7;
    }
    best
}

fn c2_subproblem_oracles() -> Outcome {
    let one = |v: f64| Vector::from_element(1, v);
    let inst = SubproblemInstance::new(DenseMatrix::identity(1, 1), one(-3.0), LqpTerm::new(0.5, one(1.0), 1.0).unwrap())
        .unwrap();
    let x = solve_block_subproblem(&inst, &one(1.0), 1e-12).map_err(|e| e.to_string())?;
    let root = (3.5 + 16.25f64.sqrt()) / 4.0;
    ensure!((x[0] - root).abs() < 1e-8, "scalar root {} vs {root}", x[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let g = DenseMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let linear = Vector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
        let z = Vector::from_fn(3, |_, _| rng.random_range(0.2..2.0));
        let lqp = LqpTerm::new(rng.random_range(0.1..0.9), z.clone(), rng.random_range(0.5..3.0)).unwrap();
        let inst = SubproblemInstance::new(&g * g.transpose(), linear, lqp).unwrap();
        let x = solve_block_subproblem(&inst, &Vector::from_element(3, 1.0), 1e-12).map_err(|e| e.to_string())?;
        let oracle = grid_search_3d(|v| inst.objective(v), z, 10.0);
        worst = worst.max((&x - &oracle).amax());
    }
    ensure!(worst < 1e-3, "grid-search gap {worst:e}");
    Ok(format!("scalar root {:.6}, max grid-search gap {worst:.1e}", x[0]))
}

fn c3_correction_identity() -> Outcome {
    let inst = generate_sparse_signal_instance(40, 5, 3, 0.2, 7).unwrap();
    let mut params = default_params(&inst.spec, 0.9, 0.8, 1.0, 0.5).unwrap();
    params.max_iter = 500;
    params.feas_tol = 1e-300;
    let out = solve(&inst.spec, &params, None).map_err(|e| e.to_string())?;
    ensure!(out.iterations() == 500, "{} iterations", out.iterations());
    let mats = assemble(&inst.spec, &params, Variant::Base).unwrap();
    let err = correction_identity_error(&out.iterates, &out.predictors, &mats).unwrap();
    ensure!(err <= 1e-10, "relative error {err:e}");
    Ok(format!("500 iterations, max relative error {err:.1e}"))
}

fn random_spec(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let p = rng.random_range(1..=3);
    let rows = rng.random_range(4..=6);
    let mut gauss = |r: usize, c: usize| DenseMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal));
    let blocks = (0..p)
        .map(|i| {
            let m = 1 + i % 3;
            Block {
                f: BlockFunction::Linear { c: Vector::from_element(m, 0.5) },
                a: gauss(rows, m),
            }
        })
        .collect();
    let b_mat = gauss(rows, 2);
    let rhs = gauss(rows, 1).column(0).into_owned();
    ProblemSpec::new(blocks, TailFunction::zero(), b_mat, rhs, YDomain::Free).unwrap()
}

fn c4_certificate_matrices() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut min_eig = f64::INFINITY;
    let mut worst_back: f64 = 0.0;
    for case in 0..50 {
        let spec = random_spec(&mut rng);
        let (alpha, tau) = loop {
            let (a, t) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..2.5));
            if check_stepsize_region(a, t).admissible {
                break (a, t);
            }
        };
        let mu = rng.random_range(0.05..0.95);
        let beta = rng.random_range(0.2..3.0);
        let mut params = default_params(&spec, alpha, tau, beta, mu).unwrap();
        let p = spec.num_blocks();
        params.gamma = if p > 1 { (p - 1) as f64 / (1.0 - mu) * rng.random_range(1.01..2.0) } else { rng.random_range(0.1..2.0) };
        params.r = spec
            .blocks()
            .iter()
            .map(|b| params.gamma * beta * numeric::gram_norm(&b.a).unwrap() * rng.random_range(1.0..2.0))
            .collect();
        let mats = assemble(&spec, &params, Variant::Base).map_err(|e| e.to_string())?;
        ensure!(numeric::asymmetry(&mats.h) <= 1e-12 * (1.0 + mats.h.amax()), "case {case}: H asymmetric");
        let check = verify_h_positive_definite(&mats, &spec, &params).map_err(|e| e.to_string())?;
        ensure!(check.conditions_hold, "case {case}: conditions violated by the draw");
        min_eig = min_eig.min(check.min_eig);
        ensure!(check.min_eig > 0.0, "case {case}: λ_min(H) = {}", check.min_eig);
        worst_back = worst_back.max((&mats.h * &mats.m - &mats.q).amax() / (1.0 + mats.q.amax()));
    }
    ensure!(worst_back <= 1e-12, "QM⁻¹M − Q = {worst_back:e}");
    Ok(format!("min λ_min(H) {min_eig:.2e}, max |QM⁻¹M − Q| {worst_back:.1e}"))
}

struct BenchRun {
    label: String,
    spec: ProblemSpec,
    params: SolverParams,
    out: SolveOutput,
    w_star: Vector,
}

fn benchmark_runs() -> Result<(Vec<BenchRun>, LpBoxData, Duration), String> {
    let start = Instant::now();
    let sparse = generate_sparse_signal_instance(40, 5, 3, 0.2, 7).unwrap().spec;
    let lp = generate_lp_box_dual_instance(3, 8, 1).unwrap();
    let mut runs = Vec::new();
    for (name, spec) in [("sparse-signal", sparse), ("lp-box-dual", lp.spec.clone())] {
        for (a, t) in PAIRS {
            let params = default_params(&spec, a, t, 1.0, 0.5).map_err(|e| e.to_string())?;
            let out = solve(&spec, &params, None).map_err(|e| e.to_string())?;
            let w_star = reference_solution(&spec, &params).map_err(|e| e.to_string())?.flatten();
            runs.push(BenchRun {
                label: format!("{name} ({a}, {t})"),
                spec: spec.clone(),
                params,
                out,
                w_star,
            });
        }
    }
    Ok((runs, lp.lp, start.elapsed()))
}

fn c5_contraction(runs: &[BenchRun]) -> Outcome {
    let mut worst_ratio = f64::NEG_INFINITY;
    for r in runs {
        let mats = assemble(&r.spec, &r.params, Variant::Base).unwrap();
        let xis = xi_constants(&r.params, r.spec.num_blocks()).unwrap();
        let tol = contraction_tolerance(&mats, &r.out.iterates[0], &r.w_star);
        let slacks = check_contraction(&r.spec, &r.out.iterates, &mats, &xis, &r.w_star).map_err(|e| e.to_string())?;
        let min = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        ensure!(min >= -tol, "{}: slack {min:e} < −{tol:e}", r.label);
        worst_ratio = worst_ratio.max(-min / tol);
    }
    Ok(format!("{} runs, worst slack/tolerance {worst_ratio:.1e}", runs.len()))
}

/// `min cᵀz  s.t.  Bz = b, l ≤ z ≤ u` over every basis and bound assignment.
fn lp_vertex_enumeration(lp: &LpBoxData) -> f64 {
    let (m, n) = lp.b_mat.shape();
    let mut best = f64::INFINITY;
    let mut basis: Vec<usize> = (0..m).collect();
    loop {
        let nonbasic: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();
        let bb = DenseMatrix::from_fn(m, m, |i, k| lp.b_mat[(i, basis[k])]);
        let lu = bb.clone().lu();
        for mask in 0..(1usize << nonbasic.len()) {
            let mut z = Vector::zeros(n);
            for (bit, &j) in nonbasic.iter().enumerate() {
                z[j] = if mask >> bit & 1 == 1 { lp.u[j] } else { lp.l[j] };
            }
            let rhs = &lp.b - &lp.b_mat * &z;
            let Some(zb) = lu.solve(&rhs) else { continue };
            if (&bb * &zb - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
                continue;
            }
            if basis.iter().zip(zb.iter()).all(|(&j, &v)| v >= lp.l[j] - 1e-9 && v <= lp.u[j] + 1e-9) {
                for (&j, &v) in basis.iter().zip(zb.iter()) {
                    z[j] = v;
                }
                best = best.min(lp.c.dot(&z));
            }
        }
        let Some(i) = (0..m).rev().find(|&i| basis[i] < n - m + i) else { break };
        basis[i] += 1;
        for k in i + 1..m {
            basis[k] = basis[k - 1] + 1;
        }
    }
    best
}

fn c6_global_convergence(runs: &[BenchRun], lp: &LpBoxData) -> Outcome {
    let mut max_iter = 0;
    for r in runs {
        ensure!(r.out.reason == TerminationReason::Converged, "{}: {}", r.label, r.out.reason.as_str());
        ensure!(r.out.iterations() <= 5000, "{}: {} iterations", r.label, r.out.iterations());
        let feas = r.out.trace.last().unwrap().feas_norm;
        ensure!(feas <= 1e-8, "{}: ‖E‖ = {feas:e}", r.label);
        max_iter = max_iter.max(r.out.iterations());
    }
    let opt = lp_vertex_enumeration(lp);
    let mut worst: f64 = 0.0;
    for r in runs.iter().filter(|r| r.label.starts_with("lp")) {
        let obj = evaluate_objective(&r.spec, &r.out.state.x, &r.out.state.y).unwrap();
        worst = worst.max((obj + opt).abs());
    }
    ensure!(worst < 1e-6, "LP dual gap {worst:e} (LP optimum {opt})");
    Ok(format!("all converged within {max_iter} iterations, LP gap {worst:.1e}"))
}

fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn c7_ergodic(runs: &[BenchRun]) -> Outcome {
    let mut steepest_allowed = f64::NEG_INFINITY;
    for r in runs {
        let mats = assemble(&r.spec, &r.params, Variant::Base).unwrap();
        let xis = xi_constants(&r.params, r.spec.num_blocks()).unwrap();
        let tol = contraction_tolerance(&mats, &r.out.iterates[0], &r.w_star);
        let series = ergodic_series(&r.spec, &r.out.iterates, &r.out.predictors, &mats, &xis, 0, &r.w_star)
            .map_err(|e| e.to_string())?;
        for c in &series {
            ensure!(c.lhs <= c.rhs + tol, "{}: T = {}: {} > {}", r.label, c.t, c.lhs, c.rhs);
            ensure!(c.feas_norm <= c.feas_bound, "{}: T = {}: feasibility {} > {}", r.label, c.t, c.feas_norm, c.feas_bound);
        }
        let pts: Vec<(f64, f64)> = series.iter().map(|c| (c.t as f64, c.feas_norm)).collect();
        let slope = log_log_slope(&pts);
        ensure!(slope <= -0.9, "{}: slope {slope}", r.label);
        steepest_allowed = steepest_allowed.max(slope);
    }
    Ok(format!("bounds hold at every window, worst slope {steepest_allowed:.3}"))
}

fn c8_nonergodic(runs: &[BenchRun]) -> Outcome {
    let mut min_margin = f64::INFINITY;
    for r in runs {
        let mats = assemble(&r.spec, &r.params, Variant::Base).unwrap();
        let xis = xi_constants(&r.params, r.spec.num_blocks()).unwrap();
        for (k, v, bound) in nonergodic_series(&r.spec, &r.out.iterates, &mats, &xis, &r.w_star).map_err(|e| e.to_string())? {
            ensure!(v <= bound, "{}: k = {k}: {v} > {bound}", r.label);
            min_margin = min_margin.min((bound - v) / bound);
        }
    }
    Ok(format!("min relative margin {min_margin:.3}"))
}

fn lasso_coordinate_descent(k: &DenseMatrix, q: &Vector, w: f64) -> Vector {
    let d = q.len();
    let mut y = Vector::zeros(d);
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for j in 0..d {
            let t = -((k.row(j) * &y)[0] - k[(j, j)] * y[j] + q[j]);
            let new = t.signum() * (t.abs() - w).max(0.0) / k[(j, j)];
            change = change.max((new - y[j]).abs());
            y[j] = new;
        }
        if change < 1e-15 {
            break;
        }
    }
    y
}

fn c9_extension() -> Outcome {
    let inst = generate_lasso_composite_instance(30, 6, 0.5, 4).unwrap();
    let spec = &inst.spec;
    let b = spec.b_mat();
    let btb = b.transpose() * b;
    let oracle = lasso_coordinate_descent(&(&btb + DenseMatrix::identity(6, 6)), &(-(&btb * &inst.y_ref) - &inst.obs), inst.weight);
    let mut worst_oracle: f64 = 0.0;
    for (a, t) in PAIRS {
        let params = default_extension_params(spec, a, t, 1.0, 0.5).map_err(|e| e.to_string())?;
        let out = solve_extended(spec, &params, None).map_err(|e| e.to_string())?;
        ensure!(out.reason == TerminationReason::Converged, "({a}, {t}): {}", out.reason.as_str());
        worst_oracle = worst_oracle.max((&out.state.y - &oracle).amax());
        let w_star = reference_solution_extended(spec, &params).map_err(|e| e.to_string())?.flatten();
        let mats = assemble(spec, &params.base, Variant::Extension { sigma: params.sigma }).unwrap();
        let xis = xi_constants(&params.base, 1).unwrap();
        let tol = contraction_tolerance(&mats, &out.iterates[0], &w_star);
        let slacks = check_contraction(spec, &out.iterates, &mats, &xis, &w_star).map_err(|e| e.to_string())?;
        let min = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        ensure!(min >= -tol, "({a}, {t}): contraction slack {min:e}");
    }
    ensure!(worst_oracle < 1e-5, "coordinate-descent gap {worst_oracle:e}");

    // h = 0: the linearized update has Hessian βBᵀB + D.
    let plain = ProblemSpec::new(
        spec.blocks().to_vec(),
        TailFunction::new(spec.tail().g.clone(), NonsmoothH::Zero).unwrap(),
        b.clone(),
        spec.rhs().clone(),
        YDomain::Free,
    )
    .unwrap();
    let params = default_extension_params(&plain, 0.5, 0.9, 1.0, 0.5).unwrap();
    let d = proximal_matrix(&plain, 1.0, params.sigma);
    let chol = Cholesky::factor(&numeric::symmetrize(&(&btb + &d))).unwrap();
    let out = solve_extended(&plain, &params, None).map_err(|e| e.to_string())?;
    let layout = Layout::new(&plain);
    let mut worst_direct: f64 = 0.0;
    for k in 0..out.iterations().min(50) {
        let (wk, wk1) = (layout.split(&out.iterates[k]).unwrap(), layout.split(&out.iterates[k + 1]).unwrap());
        let ax = plain.a_times_x(&wk1.x);
        let lh = &wk.lambda - (&ax + b * &wk.y - plain.rhs()) * params.base.alpha;
        let rhs = -(plain.tail().g.gradient(&wk.y) - b.transpose() * &lh + b.transpose() * (&ax - plain.rhs()) - &d * &wk.y);
        let direct = chol.solve(&rhs).unwrap();
        worst_direct = worst_direct.max((&direct - &wk1.y).amax() / (1.0 + direct.amax()));
    }
    ensure!(worst_direct <= 1e-10, "direct minimizer gap {worst_direct:e}");
    Ok(format!("oracle gap {worst_oracle:.1e}, direct-minimizer gap {worst_direct:.1e}"))
}

fn c10_region() -> Outcome {
    const N: usize = 200;
    for i in 0..N {
        for j in 0..N {
            let a = -1.1 + 2.2 * i as f64 / (N - 1) as f64;
            let t = -1.1 + 3.1 * j as f64 / (N - 1) as f64;
            let direct = a < 1.0 && a > -1.0 && a + t > 0.0 && 1.0 + a + t - a * t - a * a - t * t > 0.0;
            ensure!(check_stepsize_region(a, t).admissible == direct, "disagreement at ({a}, {t})");
        }
    }
    let sup = (0..=200_000)
        .map(|k| k as f64 * 1e-5)
        .filter(|&t| check_stepsize_region(0.0, t).admissible)
        .fold(f64::NEG_INFINITY, f64::max);
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    ensure!((sup - golden).abs() < 1e-2, "τ supremum {sup}");
    Ok(format!("grid agrees, τ supremum at α = 0 is {sup:.5}"))
}

fn c11_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("lqpadmm-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut traces = Vec::new();
    for i in 0..2 {
        let path = dir.join(format!("trace{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_lqpadmm"))
            .args(["run", "--generator", "sparse-signal", "--p", "3", "--alpha", "0.5", "--tau", "0.9", "--trace-out"])
            .arg(&path)
            .status()
            .map_err(|e| e.to_string())?;
        ensure!(status.code() == Some(0), "run {i} exited with {status}");
        traces.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure!(traces[0] == traces[1], "trace files differ");
    Ok(format!("{} identical bytes", traces[0].len()))
}

fn report(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome, failed: &mut bool) {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
        (o, _) => o,
    };
    match outcome {
        Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{elapsed:.2?}]"),
        Err(why) => {
            *failed = true;
            println!("criterion {id:>2} FAIL  {name}: {why} [{elapsed:.2?}]");
        }
    }
}

fn main() {
    let mut failed = false;
    let secs = |s| Some(Duration::from_secs(s));
    report(1, "LQP correctness", secs(1), c1_lqp_correctness, &mut failed);
    report(2, "subproblem oracles", secs(10), c2_subproblem_oracles, &mut failed);
    report(3, "correction identity", None, c3_correction_identity, &mut failed);
    report(4, "certificate matrices", None, c4_certificate_matrices, &mut failed);
    match benchmark_runs() {
        Ok((runs, lp, solve_time)) => {
            // The contraction budget covers the benchmark solves it certifies.
            report(5, "contraction", Some(Duration::from_secs(60).saturating_sub(solve_time)), || c5_contraction(&runs), &mut failed);
            report(6, "global convergence", None, || c6_global_convergence(&runs, &lp), &mut failed);
            report(7, "ergodic rate", None, || c7_ergodic(&runs), &mut failed);
            report(8, "nonergodic rate", None, || c8_nonergodic(&runs), &mut failed);
        }
        Err(e) => {
            failed = true;
            for (id, name) in [(5, "contraction"), (6, "global convergence"), (7, "ergodic rate"), (8, "nonergodic rate")] {
                println!("criterion {id:>2} FAIL  {name}: benchmark run failed: {e}");
            }
        }
    }
    report(9, "linearized variant", None, c9_extension, &mut failed);
    report(10, "stepsize region", None, c10_region, &mut failed);
    report(11, "determinism", None, c11_determinism, &mut failed);
    if failed {
        std::process::exit(1);
    }
}
