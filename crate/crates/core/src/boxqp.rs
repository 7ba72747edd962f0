//! Exact minimization of a strictly convex quadratic over a box,
//!
//! ```text
//! min ½ yᵀK y + qᵀy   s.t.  l ≤ y ≤ u
//! ```
//!
//! by a primal active-set method. Bounds may be infinite. With `K ≻ 0` the
//! method terminates finitely at the exact KKT point (up to rounding).

use crate::error::{Error, Result};
use crate::numeric::{Cholesky, DenseMatrix, Vector};
use crate::problem::clip;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Free,
    Lower,
    Upper,
}

/// Returns the minimizer; `start` is projected onto the box first.
pub fn solve_box_qp(k: &DenseMatrix, q: &Vector, l: &Vector, u: &Vector, start: &Vector) -> Result<Vector> {
    let d = q.len();
    if k.shape() != (d, d) || l.len() != d || u.len() != d || start.len() != d {
        return Err(Error::dim("box QP data", d, k.nrows()));
    }
    let mut y = clip(start, l, u);
    // Coordinates sitting on a finite bound start in the working set.
    let mut status: Vec<Status> = (0..d)
        .map(|i| {
            if y[i] == l[i] {
                Status::Lower
            } else if y[i] == u[i] {
                Status::Upper
            } else {
                Status::Free
            }
        })
        .collect();
    let scale = 1.0 + k.amax() + q.amax();
    let cap = 10 * d + 100;
    for _ in 0..cap {
        let free: Vec<usize> = (0..d).filter(|&i| status[i] == Status::Free).collect();
        if !free.is_empty() {
            // Minimize over the free coordinates with the rest fixed.
            let g = k * &y + q;
            let kff = DenseMatrix::from_fn(free.len(), free.len(), |a, b| k[(free[a], free[b])]);
            let gf = Vector::from_fn(free.len(), |a, _| g[free[a]]);
            let step = -Cholesky::factor(&kff)?.solve(&gf)?;
            let mut t = 1.0;
            let mut blocking = None;
            for (a, &i) in free.iter().enumerate() {
                let s = step[a];
                let limit = if s < 0.0 {
                    (l[i] - y[i]) / s
                } else if s > 0.0 {
                    (u[i] - y[i]) / s
                } else {
                    f64::INFINITY
                };
                if limit < t {
                    t = limit.max(0.0);
                    blocking = Some((i, if s < 0.0 { Status::Lower } else { Status::Upper }));
                }
            }
            for (a, &i) in free.iter().enumerate() {
                y[i] += t * step[a];
            }
            if let Some((i, bound)) = blocking {
                y[i] = if bound == Status::Lower { l[i] } else { u[i] };
                status[i] = bound;
                continue;
            }
        }
        // Free subspace is optimal; check the signs of the bound multipliers.
        let g = k * &y + q;
        let mut worst = None;
        let mut worst_val = 1e-13 * scale;
        for i in 0..d {
            let violation = match status[i] {
                Status::Lower => -g[i],
                Status::Upper => g[i],
                Status::Free => continue,
            };
            if violation > worst_val {
                worst_val = violation;
                worst = Some(i);
            }
        }
        match worst {
            Some(i) => status[i] = Status::Free,
            None => return Ok(y),
        }
    }
    Err(Error::NonConvergence {
        what: "box QP active set",
        iterations: cap,
        residual: kkt_residual(k, q, l, u, &y),
    })
}

/// Norm of the projected-gradient map `y − clip(y − (Ky + q))`, zero exactly at the minimizer.
pub fn kkt_residual(k: &DenseMatrix, q: &Vector, l: &Vector, u: &Vector, y: &Vector) -> f64 {
    let g = k * y + q;
    (y - clip(&(y - g), l, u)).norm()
}
