//! Instances and independent oracles shared by the integration tests.
#![allow(dead_code)]

use lqpadmm::numeric::{DenseMatrix, Vector};
use lqpadmm::problem::{
    generate_lp_box_dual_instance, generate_sparse_signal_instance, LpBoxData, LpBoxDualInstance, ProblemSpec,
    SparseSignalInstance,
};

/// Stepsize pairs covering the classical setting and both sides beyond it.
pub const PAIRS: [(f64, f64); 4] = [(0.0, 1.0), (0.5, 0.9), (0.9, 0.8), (-0.3, 1.2)];

pub fn sparse_signal() -> SparseSignalInstance {
    generate_sparse_signal_instance(40, 5, 3, 0.2, 7).unwrap()
}

pub fn lp_box_dual() -> LpBoxDualInstance {
    generate_lp_box_dual_instance(3, 8, 1).unwrap()
}

pub fn benchmarks() -> Vec<(&'static str, ProblemSpec)> {
    vec![("sparse-signal", sparse_signal().spec), ("lp-box-dual", lp_box_dual().spec)]
}

fn solve_dense(a: &DenseMatrix, b: &Vector) -> Option<Vector> {
    let lu = a.clone().lu();
    let x = lu.solve(b)?;
    ((a * &x - b).amax() <= 1e-9 * (1.0 + b.amax())).then_some(x)
}

/// `min cᵀz  s.t.  Bz = b, l ≤ z ≤ u` by enumerating every basis and every
/// bound assignment of the nonbasic columns.
pub fn lp_vertex_enumeration(lp: &LpBoxData) -> f64 {
    let (m, n) = lp.b_mat.shape();
    let mut best = f64::INFINITY;
    let mut basis: Vec<usize> = (0..m).collect();
    loop {
        let nonbasic: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();
        let bb = DenseMatrix::from_fn(m, m, |i, k| lp.b_mat[(i, basis[k])]);
        for mask in 0..(1usize << nonbasic.len()) {
            let mut z = Vector::zeros(n);
            for (bit, &j) in nonbasic.iter().enumerate() {
                z[j] = if mask >> bit & 1 == 1 { lp.u[j] } else { lp.l[j] };
            }
            let rhs = &lp.b - &lp.b_mat * &z;
            let Some(zb) = solve_dense(&bb, &rhs) else { continue };
            let inside = basis
                .iter()
                .zip(zb.iter())
                .all(|(&j, &v)| v >= lp.l[j] - 1e-9 && v <= lp.u[j] + 1e-9);
            if inside {
                for (&j, &v) in basis.iter().zip(zb.iter()) {
                    z[j] = v;
                }
                best = best.min(lp.c.dot(&z));
            }
        }
        // Next m-subset in lexicographic order.
        let Some(i) = (0..m).rev().find(|&i| basis[i] < n - m + i) else { break };
        basis[i] += 1;
        for k in i + 1..m {
            basis[k] = basis[k - 1] + 1;
        }
    }
    best
}

/// Least-squares slope of `log v` against `log t`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Cyclic coordinate descent for `½yᵀKy + qᵀy + w‖y‖₁`.
pub fn lasso_coordinate_descent(k: &DenseMatrix, q: &Vector, w: f64) -> Vector {
    let d = q.len();
    let mut y = Vector::zeros(d);
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for j in 0..d {
            let rest = (k.row(j) * &y)[0] - k[(j, j)] * y[j] + q[j];
            let t = -rest;
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

/// Minimizes a function over the positive orthant of ℝ³ by a zooming grid.
pub fn grid_search_3d(f: impl Fn(&Vector) -> f64, center: Vector, half_width: f64) -> Vector {
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
                    let cand = Vector::from_row_slice(&[
                        base[0] + offset(i),
                        base[1] + offset(j),
                        base[2] + offset(k),
                    ]);
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
