//! Problem data model for
//!
//! ```text
//! min  Σᵢ fᵢ(xᵢ) + g(y) + h(y)
//! s.t. Σᵢ Aᵢ xᵢ + B y = b,   xᵢ ≥ 0,   y ∈ 𝒴
//! ```
//!
//! The objective catalog is closed: every block term and tail term is one of
//! the variants below, which lets the subproblem solvers rely on smooth,
//! strictly convex interiors.

mod generate;
mod io;

pub use generate::{
    generate_lasso_composite_instance, generate_lp_box_dual_instance,
    generate_sparse_signal_instance, lp_box_dual_spec, LassoInstance, LpBoxData, LpBoxDualInstance,
    SparseSignalInstance,
};
pub use io::{ProblemFile, ProblemFileError};

use crate::error::{Error, Result};
use crate::numeric::{self, tol, DenseMatrix, Vector};

/// Objective term attached to one nonnegative block `xᵢ ∈ ℝ₊^{mᵢ}`.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockFunction {
    /// `cᵀx`
    Linear { c: Vector },
    /// `½ xᵀ diag(p) x + cᵀx` with `p ≥ 0`.
    DiagQuadratic { p_diag: Vector, c: Vector },
    /// `weight · ‖x‖₁`, which equals `weight · 𝟙ᵀx` on the nonnegative orthant.
    L1Nonneg { weight: f64 },
}

impl BlockFunction {
    fn validate(&self, m: usize, block: usize) -> Result<()> {
        let name = |field: &str| format!("block {block} {field}");
        match self {
            BlockFunction::Linear { c } => {
                if c.len() != m {
                    return Err(Error::dim(name("c"), m, c.len()));
                }
            }
            BlockFunction::DiagQuadratic { p_diag, c } => {
                if c.len() != m {
                    return Err(Error::dim(name("c"), m, c.len()));
                }
                if p_diag.len() != m {
                    return Err(Error::dim(name("p_diag"), m, p_diag.len()));
                }
                if p_diag.iter().any(|&v| !(v >= 0.0)) {
                    return Err(Error::Problem(format!(
                        "block {block}: p_diag must be elementwise nonnegative"
                    )));
                }
            }
            BlockFunction::L1Nonneg { weight } => {
                if !(*weight > 0.0) {
                    return Err(Error::Problem(format!(
                        "block {block}: L1 weight must be positive"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(P_diag, c)` such that the term is `½ xᵀ diag(P_diag) x + cᵀx` on `x ≥ 0`.
    pub fn quadratic_parts(&self, m: usize) -> (Vector, Vector) {
        match self {
            BlockFunction::Linear { c } => (Vector::zeros(m), c.clone()),
            BlockFunction::DiagQuadratic { p_diag, c } => (p_diag.clone(), c.clone()),
            BlockFunction::L1Nonneg { weight } => (Vector::zeros(m), Vector::from_element(m, *weight)),
        }
    }

    /// Value at `x`. `L1Nonneg` is `+∞` below the orthant.
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            BlockFunction::Linear { c } => c.dot(x),
            BlockFunction::DiagQuadratic { p_diag, c } => {
                0.5 * x.iter().zip(p_diag.iter()).map(|(v, p)| p * v * v).sum::<f64>() + c.dot(x)
            }
            BlockFunction::L1Nonneg { weight } => {
                if x.iter().any(|&v| v < -tol::INDICATOR) {
                    f64::INFINITY
                } else {
                    weight * x.iter().map(|v| v.abs()).sum::<f64>()
                }
            }
        }
    }

    /// Gradient on the open orthant.
    pub fn gradient(&self, x: &Vector) -> Vector {
        let (p, c) = self.quadratic_parts(x.len());
        p.component_mul(x) + c
    }
}

/// Smooth part `g` of the tail.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothG {
    Zero,
    /// `cᵀy`
    Linear { c: Vector },
    /// `½ yᵀ P y + cᵀy` with `P` symmetric positive semidefinite.
    Quadratic { p: DenseMatrix, c: Vector },
}

impl SmoothG {
    pub fn value(&self, y: &Vector) -> f64 {
        match self {
            SmoothG::Zero => 0.0,
            SmoothG::Linear { c } => c.dot(y),
            SmoothG::Quadratic { p, c } => 0.5 * numeric::quad_form(p, y) + c.dot(y),
        }
    }

    pub fn gradient(&self, y: &Vector) -> Vector {
        match self {
            SmoothG::Zero => Vector::zeros(y.len()),
            SmoothG::Linear { c } => c.clone(),
            SmoothG::Quadratic { p, c } => p * y + c,
        }
    }

    /// Hessian as a dense `d × d` matrix.
    pub fn hessian(&self, d: usize) -> DenseMatrix {
        match self {
            SmoothG::Quadratic { p, .. } => p.clone(),
            _ => DenseMatrix::zeros(d, d),
        }
    }

    /// Linear coefficient `c` (zero for `Zero`).
    pub fn linear_part(&self, d: usize) -> Vector {
        match self {
            SmoothG::Zero => Vector::zeros(d),
            SmoothG::Linear { c } | SmoothG::Quadratic { c, .. } => c.clone(),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            SmoothG::Zero => None,
            SmoothG::Linear { c } | SmoothG::Quadratic { c, .. } => Some(c.len()),
        }
    }

    /// Smallest valid Lipschitz constant of `∇g`.
    pub fn lipschitz(&self) -> Result<f64> {
        match self {
            SmoothG::Quadratic { p, .. } => Ok(numeric::sym_eigen_extremes(p)?.1.max(0.0)),
            _ => Ok(0.0),
        }
    }
}

/// Nonsmooth part `h` of the tail.
#[derive(Debug, Clone, PartialEq)]
pub enum NonsmoothH {
    Zero,
    /// `weight · ‖y‖₁`
    L1 { weight: f64 },
    /// Indicator of `{l ≤ y ≤ u}`.
    IndicatorBox { l: Vector, u: Vector },
    /// Indicator of `{y ≥ 0}`.
    IndicatorNonneg,
}

impl NonsmoothH {
    pub fn value(&self, y: &Vector) -> f64 {
        match self {
            NonsmoothH::Zero => 0.0,
            NonsmoothH::L1 { weight } => weight * y.iter().map(|v| v.abs()).sum::<f64>(),
            NonsmoothH::IndicatorBox { l, u } => {
                let inside = y
                    .iter()
                    .zip(l.iter().zip(u.iter()))
                    .all(|(v, (lo, hi))| *v >= lo - tol::INDICATOR && *v <= hi + tol::INDICATOR);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            NonsmoothH::IndicatorNonneg => {
                if y.iter().all(|&v| v >= -tol::INDICATOR) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Bounds of the indicator's set, if `h` is an indicator.
    pub fn indicator_bounds(&self, d: usize) -> Option<(Vector, Vector)> {
        match self {
            NonsmoothH::IndicatorBox { l, u } => Some((l.clone(), u.clone())),
            NonsmoothH::IndicatorNonneg => {
                Some((Vector::zeros(d), Vector::from_element(d, f64::INFINITY)))
            }
            _ => None,
        }
    }
}

/// Tail `g(y) + h(y)` with the declared Lipschitz constant of `∇g`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFunction {
    pub g: SmoothG,
    pub h: NonsmoothH,
    pub lipschitz_lg: f64,
}

impl TailFunction {
    /// Declares `L_g` as the largest eigenvalue of `P` (zero for affine `g`).
    pub fn new(g: SmoothG, h: NonsmoothH) -> Result<Self> {
        let lipschitz_lg = g.lipschitz()?;
        Ok(TailFunction { g, h, lipschitz_lg })
    }

    /// Uses a caller-declared `L_g`, which must dominate `λ_max(P)`.
    pub fn with_lipschitz(g: SmoothG, h: NonsmoothH, lipschitz_lg: f64) -> Result<Self> {
        let floor = g.lipschitz()?;
        if !(lipschitz_lg >= 0.0) || lipschitz_lg < floor * (1.0 - 1e-12) {
            return Err(Error::Problem(format!(
                "lipschitz_Lg = {lipschitz_lg} is below the largest eigenvalue of P ({floor})"
            )));
        }
        Ok(TailFunction { g, h, lipschitz_lg })
    }

    pub fn zero() -> Self {
        TailFunction {
            g: SmoothG::Zero,
            h: NonsmoothH::Zero,
            lipschitz_lg: 0.0,
        }
    }

    pub fn value(&self, y: &Vector) -> f64 {
        self.g.value(y) + self.h.value(y)
    }
}

/// Constraint set 𝒴 of the tail variable.
#[derive(Debug, Clone, PartialEq)]
pub enum YDomain {
    Free,
    Nonneg,
    Box { l: Vector, u: Vector },
}

impl YDomain {
    /// Elementwise bounds with `±∞` for free coordinates.
    pub fn bounds(&self, d: usize) -> (Vector, Vector) {
        match self {
            YDomain::Free => (
                Vector::from_element(d, f64::NEG_INFINITY),
                Vector::from_element(d, f64::INFINITY),
            ),
            YDomain::Nonneg => (Vector::zeros(d), Vector::from_element(d, f64::INFINITY)),
            YDomain::Box { l, u } => (l.clone(), u.clone()),
        }
    }

    pub fn project(&self, y: &Vector) -> Vector {
        let (l, u) = self.bounds(y.len());
        clip(y, &l, &u)
    }

    pub fn contains(&self, y: &Vector) -> bool {
        let (l, u) = self.bounds(y.len());
        y.iter()
            .zip(l.iter().zip(u.iter()))
            .all(|(v, (lo, hi))| *v >= lo - tol::INDICATOR && *v <= hi + tol::INDICATOR)
    }
}

pub(crate) fn clip(y: &Vector, l: &Vector, u: &Vector) -> Vector {
    Vector::from_fn(y.len(), |i, _| y[i].max(l[i]).min(u[i]))
}

fn check_bounds(l: &Vector, u: &Vector, d: usize, what: &str) -> Result<()> {
    if l.len() != d {
        return Err(Error::dim(format!("{what} lower bound"), d, l.len()));
    }
    if u.len() != d {
        return Err(Error::dim(format!("{what} upper bound"), d, u.len()));
    }
    if l.iter().zip(u.iter()).any(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::Problem(format!("{what} requires l ≤ u elementwise")));
    }
    Ok(())
}

/// One nonnegative block: its objective term and its coupling matrix `Aᵢ` (`n × mᵢ`).
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub f: BlockFunction,
    pub a: DenseMatrix,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }
}

/// The multi-block program. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    blocks: Vec<Block>,
    tail: TailFunction,
    b_mat: DenseMatrix,
    rhs: Vector,
    y_domain: YDomain,
}

impl ProblemSpec {
    /// Validates dimensions, the objective catalog's parameter constraints,
    /// and full column rank of every `Aᵢ` and `B`.
    pub fn new(
        blocks: Vec<Block>,
        tail: TailFunction,
        b_mat: DenseMatrix,
        rhs: Vector,
        y_domain: YDomain,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Problem("at least one block is required (p ≥ 1)".into()));
        }
        let n = rhs.len();
        let d = b_mat.ncols();
        if b_mat.nrows() != n {
            return Err(Error::dim("B rows", n, b_mat.nrows()));
        }
        for (i, block) in blocks.iter().enumerate() {
            if block.a.nrows() != n {
                return Err(Error::dim(format!("block {i} A rows"), n, block.a.nrows()));
            }
            block.f.validate(block.dim(), i)?;
            let ratio = numeric::column_rank_ratio(&block.a);
            if ratio <= tol::RANK {
                return Err(Error::Problem(format!(
                    "block {i}: A does not have full column rank (σ_min/σ_max = {ratio:e})"
                )));
            }
        }
        let ratio = numeric::column_rank_ratio(&b_mat);
        if ratio <= tol::RANK {
            return Err(Error::Problem(format!(
                "B does not have full column rank (σ_min/σ_max = {ratio:e})"
            )));
        }
        if let Some(gd) = tail.g.dim() {
            if gd != d {
                return Err(Error::dim("g linear term", d, gd));
            }
        }
        if let SmoothG::Quadratic { p, .. } = &tail.g {
            if p.nrows() != d || p.ncols() != d {
                return Err(Error::dim("g quadratic matrix", d, p.nrows().max(p.ncols())));
            }
            let (lo, _) = numeric::sym_eigen_extremes(p)?;
            if lo < -1e-10 * (1.0 + p.amax()) {
                return Err(Error::Problem(format!(
                    "g quadratic matrix is not positive semidefinite (λ_min = {lo:e})"
                )));
            }
        }
        match &tail.h {
            NonsmoothH::L1 { weight } if !(*weight > 0.0) => {
                return Err(Error::Problem("h L1 weight must be positive".into()));
            }
            NonsmoothH::IndicatorBox { l, u } => check_bounds(l, u, d, "h indicator box")?,
            _ => {}
        }
        if let YDomain::Box { l, u } = &y_domain {
            check_bounds(l, u, d, "y_domain box")?;
        }
        Ok(ProblemSpec {
            blocks,
            tail,
            b_mat,
            rhs,
            y_domain,
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tail(&self) -> &TailFunction {
        &self.tail
    }

    /// Coupling matrix `B` of the tail variable.
    pub fn b_mat(&self) -> &DenseMatrix {
        &self.b_mat
    }

    /// Right-hand side `b`.
    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    pub fn y_domain(&self) -> &YDomain {
        &self.y_domain
    }

    /// Number of blocks `p`.
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Constraint rows `n`.
    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    /// Tail dimension `d`.
    pub fn y_dim(&self) -> usize {
        self.b_mat.ncols()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::dim).collect()
    }

    /// `A` as one `n × Σmᵢ` matrix.
    pub fn stacked_a(&self) -> DenseMatrix {
        let total: usize = self.block_dims().iter().sum();
        let mut a = DenseMatrix::zeros(self.rows(), total);
        let mut off = 0;
        for block in &self.blocks {
            a.view_mut((0, off), (self.rows(), block.dim())).copy_from(&block.a);
            off += block.dim();
        }
        a
    }

    pub(crate) fn check_point(&self, x: &[Vector], y: &Vector) -> Result<()> {
        if x.len() != self.num_blocks() {
            return Err(Error::dim("number of x blocks", self.num_blocks(), x.len()));
        }
        for (i, (xi, block)) in x.iter().zip(&self.blocks).enumerate() {
            if xi.len() != block.dim() {
                return Err(Error::dim(format!("block {i}"), block.dim(), xi.len()));
            }
        }
        if y.len() != self.y_dim() {
            return Err(Error::dim("y", self.y_dim(), y.len()));
        }
        Ok(())
    }

    /// `Σᵢ Aᵢxᵢ`; panics when the block dimensions do not match.
    pub fn a_times_x(&self, x: &[Vector]) -> Vector {
        let mut acc = Vector::zeros(self.rows());
        for (xi, block) in x.iter().zip(&self.blocks) {
            acc += &block.a * xi;
        }
        acc
    }
}

/// `Σ fᵢ(xᵢ) + g(y) + h(y)`; `+∞` when `y` leaves an indicator's set.
pub fn evaluate_objective(spec: &ProblemSpec, x: &[Vector], y: &Vector) -> Result<f64> {
    spec.check_point(x, y)?;
    let blocks: f64 = spec
        .blocks
        .iter()
        .zip(x)
        .map(|(block, xi)| block.f.value(xi))
        .sum();
    Ok(blocks + spec.tail.value(y))
}

/// `A𝐱 + By − b`.
pub fn primal_residual(spec: &ProblemSpec, x: &[Vector], y: &Vector) -> Result<Vector> {
    spec.check_point(x, y)?;
    Ok(spec.a_times_x(x) + &spec.b_mat * y - &spec.rhs)
}
