//! Seeded instance generators.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so every
//! generator is a pure function of its arguments.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Block, BlockFunction, NonsmoothH, ProblemSpec, SmoothG, TailFunction, YDomain};
use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, Vector};

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Nonnegative sparse recovery `𝒜x = b` with the columns of `𝒜` split into
/// `p + 1` groups; the last group is the tail variable.
#[derive(Debug, Clone)]
pub struct SparseSignalInstance {
    pub spec: ProblemSpec,
    pub x_planted: Vec<Vector>,
    pub y_planted: Vector,
}

/// `𝒜` has i.i.d. standard normal entries and shape `n_rows × (p+1)·block_size`.
/// The planted signal has `round(sparsity · columns)` nonzeros on a uniformly
/// drawn support, each uniform on `[0.5, 1.5]`. Blocks are `L1Nonneg(1)`, `g` is
/// `𝟙ᵀy`, and `y ≥ 0`.
pub fn generate_sparse_signal_instance(
    n_rows: usize,
    block_size: usize,
    p: usize,
    sparsity: f64,
    seed: u64,
) -> Result<SparseSignalInstance> {
    if n_rows == 0 || block_size == 0 || p == 0 {
        return Err(Error::Parameter(format!(
            "sparse-signal generator needs n_rows, block_size, p ≥ 1 (got {n_rows}, {block_size}, {p})"
        )));
    }
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::Parameter(format!("sparsity must lie in [0, 1], got {sparsity}")));
    }
    let cols = (p + 1) * block_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = gaussian_matrix(&mut rng, n_rows, cols);

    let k = (sparsity * cols as f64).round() as usize;
    let mut planted = Vector::zeros(cols);
    for j in index::sample(&mut rng, cols, k) {
        planted[j] = rng.random_range(0.5..1.5);
    }
    let rhs = &full * &planted;

    let group = |g: usize| full.columns(g * block_size, block_size).into_owned();
    let slice = |g: usize| planted.rows(g * block_size, block_size).into_owned();
    let blocks = (0..p)
        .map(|g| Block {
            f: BlockFunction::L1Nonneg { weight: 1.0 },
            a: group(g),
        })
        .collect();
    let tail = TailFunction::new(
        SmoothG::Linear {
            c: Vector::from_element(block_size, 1.0),
        },
        NonsmoothH::Zero,
    )?;
    let spec = ProblemSpec::new(blocks, tail, group(p), rhs, YDomain::Nonneg)?;
    Ok(SparseSignalInstance {
        spec,
        x_planted: (0..p).map(slice).collect(),
        y_planted: slice(p),
    })
}

/// Primal data of `min cᵀz  s.t.  B z = b,  l ≤ z ≤ u` with `B` of size `m × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpBoxData {
    pub c: Vector,
    pub b_mat: DenseMatrix,
    pub b: Vector,
    pub l: Vector,
    pub u: Vector,
}

impl LpBoxData {
    pub fn primal_objective(&self, z: &Vector) -> f64 {
        self.c.dot(z)
    }
}

#[derive(Debug, Clone)]
pub struct LpBoxDualInstance {
    pub spec: ProblemSpec,
    pub lp: LpBoxData,
    /// The interior point used to make the primal feasible.
    pub z_feasible: Vector,
}

/// The dual `min uᵀx₁ − lᵀx₂ + bᵀy  s.t.  x₁ − x₂ + Bᵀy = −c,  x₁, x₂ ≥ 0`,
/// whose optimal value is the negated primal optimum.
pub fn lp_box_dual_spec(lp: &LpBoxData) -> Result<ProblemSpec> {
    let n = lp.c.len();
    let m = lp.b.len();
    if lp.b_mat.shape() != (m, n) {
        return Err(Error::dim("LP constraint matrix columns", n, lp.b_mat.ncols()));
    }
    if lp.l.len() != n || lp.u.len() != n {
        return Err(Error::dim("LP bounds", n, lp.l.len().min(lp.u.len())));
    }
    let blocks = vec![
        Block {
            f: BlockFunction::Linear { c: lp.u.clone() },
            a: DenseMatrix::identity(n, n),
        },
        Block {
            f: BlockFunction::Linear { c: -&lp.l },
            a: -DenseMatrix::identity(n, n),
        },
    ];
    let tail = TailFunction::new(SmoothG::Linear { c: lp.b.clone() }, NonsmoothH::Zero)?;
    ProblemSpec::new(blocks, tail, lp.b_mat.transpose(), -&lp.c, YDomain::Free)
}

/// Gaussian `B` (`m × n`), bounds `l = −(0.5 + U)`, `u = 0.5 + U`, a strictly
/// interior `z₀` with `b = Bz₀`, and `c ~ N(0, I)`.
pub fn generate_lp_box_dual_instance(m: usize, n: usize, seed: u64) -> Result<LpBoxDualInstance> {
    if m == 0 || n == 0 || m > n {
        return Err(Error::Parameter(format!(
            "LP-box generator needs 1 ≤ m ≤ n (got m = {m}, n = {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b_mat = gaussian_matrix(&mut rng, m, n);
    let l = Vector::from_fn(n, |_, _| -(0.5 + rng.random::<f64>()));
    let u = Vector::from_fn(n, |_, _| 0.5 + rng.random::<f64>());
    let z0 = Vector::from_fn(n, |j, _| l[j] + (u[j] - l[j]) * rng.random_range(0.1..0.9));
    let b = &b_mat * &z0;
    let c = gaussian_vector(&mut rng, n);
    let lp = LpBoxData { c, b_mat, b, l, u };
    let spec = lp_box_dual_spec(&lp)?;
    Ok(LpBoxDualInstance {
        spec,
        lp,
        z_feasible: z0,
    })
}

/// Composite instance for the linearized variant:
/// `min ½‖x − s𝟙‖² + ½‖y − obs‖² + w‖y‖₁  s.t.  x + By = b,  x ≥ 0`
/// with `b = s𝟙 + By_ref`.
///
/// The shift `s` is large enough that the optimal `x = b − By` is strictly
/// positive, so the problem is equivalent to the Lasso-like objective
/// `½‖B(y − y_ref)‖² + ½‖y − obs‖² + w‖y‖₁`.
#[derive(Debug, Clone)]
pub struct LassoInstance {
    pub spec: ProblemSpec,
    pub obs: Vector,
    pub y_ref: Vector,
    pub weight: f64,
}

pub fn generate_lasso_composite_instance(n: usize, d: usize, weight: f64, seed: u64) -> Result<LassoInstance> {
    if n == 0 || d == 0 || d > n {
        return Err(Error::Parameter(format!(
            "Lasso generator needs 1 ≤ d ≤ n (got n = {n}, d = {d})"
        )));
    }
    if !(weight > 0.0) {
        return Err(Error::Parameter(format!("L1 weight must be positive, got {weight}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b_mat = gaussian_matrix(&mut rng, n, d) / (n as f64).sqrt();
    let obs = gaussian_vector(&mut rng, d);
    let y_ref = gaussian_vector(&mut rng, d);
    // ‖B‖ is O(1) after scaling, so any y near the optimum keeps b − By well
    // inside the orthant with this margin.
    let offset = 10.0 * (1.0 + obs.amax() + weight);
    let rhs = &b_mat * &y_ref + Vector::from_element(n, offset);
    let blocks = vec![Block {
        f: BlockFunction::DiagQuadratic {
            p_diag: Vector::from_element(n, 1.0),
            c: Vector::from_element(n, -offset),
        },
        a: DenseMatrix::identity(n, n),
    }];
    let tail = TailFunction::new(
        SmoothG::Quadratic {
            p: DenseMatrix::identity(d, d),
            c: -&obs,
        },
        NonsmoothH::L1 { weight },
    )?;
    let spec = ProblemSpec::new(blocks, tail, b_mat, rhs, YDomain::Free)?;
    Ok(LassoInstance {
        spec,
        obs,
        y_ref,
        weight,
    })
}
