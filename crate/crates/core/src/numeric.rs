//! Dense linear-algebra substrate.
//!
//! Matrices are `nalgebra` dense matrices. Cholesky is hand-rolled so that a
//! failed factorization can report the offending pivot; symmetric eigenvalues
//! and singular values come from `nalgebra`; spectral norms use power
//! iteration on the Gram matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Relative threshold on `σ_min / σ_max` (after unit column scaling) for
    /// the full-column-rank check.
    pub const RANK: f64 = 1e-8;
    /// Accepted asymmetry before a matrix is rejected as non-symmetric.
    pub const ASYMMETRY: f64 = 1e-8;
    /// Relative stopping tolerance of power iteration.
    pub const POWER_ITERATION: f64 = 1e-10;
    /// Iteration cap of power iteration.
    pub const POWER_ITERATION_CAP: usize = 10_000;
    /// Default gradient-norm tolerance of the LQP block subproblem.
    pub const SUBPROBLEM: f64 = 1e-10;
    /// Newton iteration cap of the LQP block subproblem.
    pub const SUBPROBLEM_CAP: usize = 100;
    /// Default feasibility / movement stopping tolerance of the outer loop.
    pub const FEASIBILITY: f64 = 1e-8;
    /// Stopping tolerance of the high-accuracy reference solve.
    pub const REFERENCE_FEASIBILITY: f64 = 1e-12;
    /// Smallest value an LQP-regularized component may take. Components the
    /// barrier drives to zero shrink quadratically from one outer iteration to
    /// the next and would otherwise underflow within a few dozen iterations.
    pub const INTERIOR_FLOOR: f64 = 1e-140;
    /// Violation allowed before an indicator is treated as `+∞`.
    pub const INDICATOR: f64 = 1e-9;
    /// Slack allowed on certificate inequalities, scaled by `1 + ‖w⁰ − w*‖²_H`.
    pub const CERTIFICATE: f64 = 1e-8;
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dim("cholesky (square)", n, a.ncols()));
        }
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::Factorization { pivot: j });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn solve(&self, rhs: &Vector) -> Result<Vector> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::dim("cholesky solve rhs", n, rhs.len()));
        }
        let mut z = rhs.clone();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        Ok(z)
    }
}

/// Solves `A x = rhs` for symmetric positive definite `A`.
pub fn cholesky_solve(a: &DenseMatrix, rhs: &Vector) -> Result<Vector> {
    check_symmetric(a, 1e-10)?;
    Cholesky::factor(a)?.solve(rhs)
}

/// Largest absolute entry of `A − Aᵀ`.
pub fn asymmetry(a: &DenseMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n.min(a.ncols()) {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Rejects `a` when its asymmetry exceeds `guard · (1 + max|aᵢⱼ|)`.
pub fn check_symmetric(a: &DenseMatrix, guard: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::dim("symmetric matrix (square)", a.nrows(), a.ncols()));
    }
    let scale = 1.0 + a.amax();
    let asym = asymmetry(a);
    if asym > guard * scale {
        return Err(Error::Asymmetric(asym));
    }
    Ok(())
}

/// `(X + Xᵀ) / 2`.
pub fn symmetrize(a: &DenseMatrix) -> DenseMatrix {
    (a + a.transpose()) * 0.5
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration.
fn power_iteration_psd(gram: &DenseMatrix) -> Result<f64> {
    let n = gram.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    // Deterministic start with no special alignment to coordinate axes.
    let mut v = Vector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7 + 3) % 11) as f64);
    v /= v.norm();
    let mut estimate = 0.0f64;
    for _ in 0..tol::POWER_ITERATION_CAP {
        let w = gram * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / norm;
        if (next - estimate).abs() <= tol::POWER_ITERATION * next.abs() {
            // The Rayleigh quotient of the refreshed vector is at least as good.
            return Ok(v.dot(&(gram * &v)).max(next));
        }
        estimate = next;
    }
    Err(Error::NonConvergence {
        what: "power iteration",
        iterations: tol::POWER_ITERATION_CAP,
        residual: estimate,
    })
}

/// Spectral norm `‖A‖₂` (largest singular value).
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    let gram = a.transpose() * a;
    Ok(power_iteration_psd(&gram)?.max(0.0).sqrt())
}

/// `‖AᵀA‖₂ = ‖A‖₂²`, computed by power iteration on the Gram matrix.
pub fn gram_norm(a: &DenseMatrix) -> Result<f64> {
    power_iteration_psd(&(a.transpose() * a))
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a symmetric matrix.
pub fn sym_eigen_extremes(a: &DenseMatrix) -> Result<(f64, f64)> {
    let eig = sym_eigenvalues(a)?;
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// All eigenvalues of a symmetric matrix (unsorted).
pub fn sym_eigenvalues(a: &DenseMatrix) -> Result<Vector> {
    check_symmetric(a, tol::ASYMMETRY)?;
    if a.nrows() == 0 {
        return Ok(Vector::zeros(0));
    }
    Ok(SymmetricEigen::new(symmetrize(a)).eigenvalues)
}

/// `σ_min / σ_max` after scaling every column to unit norm. Zero for a
/// matrix with a zero column or more columns than rows.
pub fn column_rank_ratio(a: &DenseMatrix) -> f64 {
    if a.ncols() == 0 {
        return 1.0;
    }
    if a.ncols() > a.nrows() {
        return 0.0;
    }
    let mut scaled = a.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n == 0.0 {
            return 0.0;
        }
        col /= n;
    }
    let sv = scaled.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// `vᵀ X v`.
pub fn quad_form(x: &DenseMatrix, v: &Vector) -> f64 {
    v.dot(&(x * v))
}
