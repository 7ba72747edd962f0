//! Logarithmic-quadratic proximal (LQP) regularizer and the interior Newton
//! solver for the block subproblems it induces.
//!
//! For an anchor `z > 0` and `μ ∈ (0, 1)`,
//!
//! ```text
//! d(v, z) = Σⱼ ½(vⱼ − zⱼ)² + μ (zⱼ² ln(zⱼ/vⱼ) + vⱼzⱼ − zⱼ²)
//! ∇ᵥd     = (v − z) + μ (z − z²/v)
//! ```
//!
//! The logarithm blows up at the boundary, so every minimizer of a
//! subproblem carrying `r·d(·, z)` is strictly positive.

use crate::error::{Error, Result};
use crate::numeric::{self, tol, Cholesky, DenseMatrix, Vector};

/// `r · d(·, z)` with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LqpTerm {
    mu: f64,
    anchor: Vector,
    weight: f64,
}

impl LqpTerm {
    pub fn new(mu: f64, anchor: Vector, weight: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Parameter(format!("LQP requires 0 < μ < 1, got {mu}")));
        }
        if !(weight > 0.0) {
            return Err(Error::Parameter(format!("LQP weight r must be positive, got {weight}")));
        }
        if let Some(j) = anchor.iter().position(|&z| !(z > 0.0)) {
            return Err(Error::Domain(format!(
                "LQP anchor must be strictly positive (component {j} is {})",
                anchor[j]
            )));
        }
        Ok(LqpTerm { mu, anchor, weight })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    fn check(&self, v: &Vector) -> Result<()> {
        if v.len() != self.anchor.len() {
            return Err(Error::dim("LQP argument", self.anchor.len(), v.len()));
        }
        if let Some(j) = v.iter().position(|&t| !(t > 0.0)) {
            return Err(Error::Domain(format!(
                "LQP argument must be strictly positive (component {j} is {})",
                v[j]
            )));
        }
        Ok(())
    }

    /// Unweighted `d(v, z)` without validation.
    fn raw_value(&self, v: &Vector) -> f64 {
        v.iter()
            .zip(self.anchor.iter())
            .map(|(&v, &z)| 0.5 * (v - z).powi(2) + self.mu * (z * z * (z / v).ln() + v * z - z * z))
            .sum()
    }

    fn raw_gradient(&self, v: &Vector) -> Vector {
        Vector::from_fn(v.len(), |j, _| {
            let (v, z) = (v[j], self.anchor[j]);
            (v - z) + self.mu * (z - z * z / v)
        })
    }

    /// Diagonal of the unweighted Hessian, `1 + μ z²/v²`.
    fn raw_hessian_diag(&self, v: &Vector) -> Vector {
        Vector::from_fn(v.len(), |j, _| {
            let ratio = self.anchor[j] / v[j];
            1.0 + self.mu * ratio * ratio
        })
    }
}

/// `d(v, z)`; nonpositive `v` is a domain error.
pub fn lqp_value(lqp: &LqpTerm, v: &Vector) -> Result<f64> {
    lqp.check(v)?;
    Ok(lqp.raw_value(v))
}

/// `∇ᵥ d(v, z)`; nonpositive `v` is a domain error.
pub fn lqp_gradient(lqp: &LqpTerm, v: &Vector) -> Result<Vector> {
    lqp.check(v)?;
    Ok(lqp.raw_gradient(v))
}

/// `min_{x > 0}  ½ xᵀ Q x + ℓᵀx + r·d(x, z)` with `Q` symmetric PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemInstance {
    quad: DenseMatrix,
    linear: Vector,
    lqp: LqpTerm,
}

impl SubproblemInstance {
    pub fn new(quad: DenseMatrix, linear: Vector, lqp: LqpTerm) -> Result<Self> {
        let m = lqp.anchor.len();
        if quad.shape() != (m, m) {
            return Err(Error::dim("subproblem quadratic", m, quad.nrows()));
        }
        if linear.len() != m {
            return Err(Error::dim("subproblem linear term", m, linear.len()));
        }
        let asym = numeric::asymmetry(&quad);
        if asym > 1e-12 * (1.0 + quad.amax()) {
            return Err(Error::Asymmetric(asym));
        }
        let shift = 1e-10 * (1.0 + quad.amax());
        Cholesky::factor(&(&quad + DenseMatrix::identity(m, m) * shift))
            .map_err(|_| Error::Problem("subproblem quadratic is not positive semidefinite".into()))?;
        Ok(SubproblemInstance { quad, linear, lqp })
    }

    pub fn lqp(&self) -> &LqpTerm {
        &self.lqp
    }

    /// Objective at an interior point.
    pub fn objective(&self, x: &Vector) -> f64 {
        0.5 * numeric::quad_form(&self.quad, x) + self.linear.dot(x) + self.lqp.weight * self.lqp.raw_value(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.quad * x + &self.linear + self.lqp.raw_gradient(x) * self.lqp.weight
    }

    pub fn hessian(&self, x: &Vector) -> DenseMatrix {
        let mut h = self.quad.clone();
        let diag = self.lqp.raw_hessian_diag(x);
        for j in 0..x.len() {
            h[(j, j)] += self.lqp.weight * diag[j];
        }
        h
    }
}

/// Outcome of the Newton solve, including diagnostics.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub x: Vector,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Objective after each accepted step, starting with the warm start.
    pub objective_history: Vec<f64>,
}

const ARMIJO_C1: f64 = 1e-4;
const BOUNDARY_FRACTION: f64 = 0.99;
const MAX_HALVINGS: usize = 60;

/// Solves to `‖∇‖ ≤ tol` and returns the unique positive minimizer.
pub fn solve_block_subproblem(inst: &SubproblemInstance, warm_start: &Vector, tol: f64) -> Result<Vector> {
    solve_block_subproblem_detailed(inst, warm_start, tol, tol::SUBPROBLEM_CAP).map(|s| s.x)
}

/// Positive root of `a v² + b v − c = 0` with `a > 0`, `c ≥ 0`, computed without cancellation.
fn positive_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b + 4.0 * a * c).sqrt();
    if b >= 0.0 {
        2.0 * c / (b + disc)
    } else {
        (disc - b) / (2.0 * a)
    }
}

impl SubproblemInstance {
    /// One Gauss-Seidel sweep of exact coordinate minimizations. Along
    /// coordinate `j` the stationarity condition times `xⱼ` is a quadratic
    /// with a single positive root.
    fn coordinate_sweep(&self, x: &mut Vector) {
        let (r, mu) = (self.lqp.weight, self.lqp.mu);
        let mut qx = &self.quad * &*x;
        for j in 0..x.len() {
            let z = self.lqp.anchor[j];
            let qjj = self.quad[(j, j)];
            let rest = qx[j] - qjj * x[j] + self.linear[j];
            let root = positive_root(qjj + r, rest - r * z + r * mu * z, r * mu * z * z).max(tol::INTERIOR_FLOOR);
            let delta = root - x[j];
            if delta != 0.0 {
                qx.axpy(delta, &self.quad.column(j).into_owned(), 1.0);
                x[j] = root;
            }
        }
    }

    /// Gradient with the components pinned at the floor (and pushing outward) zeroed.
    fn projected_gradient(&self, x: &Vector, grad: &Vector) -> Vector {
        Vector::from_fn(x.len(), |j, _| if pinned(x[j], grad[j]) { 0.0 } else { grad[j] })
    }
}

fn pinned(xj: f64, gj: f64) -> bool {
    xj <= tol::INTERIOR_FLOOR && gj > 0.0
}

/// Damped Newton with a fraction-to-boundary rule and Armijo backtracking,
/// preceded in every iteration by an exact coordinate sweep. The sweep puts
/// components that the barrier drives towards zero at their scale in one
/// move, which the uniformly damped Newton step cannot do.
///
/// Components are kept at or above [`tol::INTERIOR_FLOOR`] so that the
/// anchor of the next subproblem stays representable.
pub fn solve_block_subproblem_detailed(
    inst: &SubproblemInstance,
    warm_start: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<SubproblemSolution> {
    inst.lqp.check(warm_start)?;
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("subproblem tolerance must be positive, got {tol}")));
    }
    let mut x = warm_start.map(|t| t.max(tol::INTERIOR_FLOOR));
    let mut f = inst.objective(&x);
    let mut history = vec![f];
    let mut grad = inst.gradient(&x);
    for iter in 0..=max_iter {
        let gnorm = inst.projected_gradient(&x, &grad).norm();
        if gnorm <= tol {
            return Ok(SubproblemSolution {
                x,
                iterations: iter,
                gradient_norm: gnorm,
                objective_history: history,
            });
        }
        if iter == max_iter {
            return Err(Error::NonConvergence {
                what: "LQP subproblem Newton",
                iterations: iter,
                residual: gnorm,
            });
        }
        inst.coordinate_sweep(&mut x);
        f = inst.objective(&x).min(f);
        grad = inst.gradient(&x);
        let free: Vec<usize> = (0..x.len()).filter(|&j| !pinned(x[j], grad[j])).collect();
        if !free.is_empty() {
            let hess = inst.hessian(&x);
            let hff = DenseMatrix::from_fn(free.len(), free.len(), |a, b| hess[(free[a], free[b])]);
            let gf = Vector::from_fn(free.len(), |a, _| grad[free[a]]);
            let df = -Cholesky::factor(&hff)?.solve(&gf)?;
            let mut dx = Vector::zeros(x.len());
            for (a, &j) in free.iter().enumerate() {
                dx[j] = df[a];
            }
            let mut t: f64 = 1.0;
            for (xj, dj) in x.iter().zip(dx.iter()) {
                if *dj < 0.0 {
                    t = t.min(BOUNDARY_FRACTION * xj / -dj);
                }
            }
            let slope = grad.dot(&dx);
            // Near the solution the true decrease drops below the rounding level of f.
            let allowance = 64.0 * f64::EPSILON * (1.0 + f.abs());
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial = (&x + &dx * t).map(|v| v.max(tol::INTERIOR_FLOOR));
                let ft = inst.objective(&trial);
                if ft <= f + ARMIJO_C1 * t * slope + allowance {
                    accepted = Some((trial, ft));
                    break;
                }
                t *= 0.5;
            }
            // A rejected Newton direction still leaves the sweep's progress.
            if let Some((trial, ft)) = accepted {
                x = trial;
                f = ft.min(f);
            }
        }
        history.push(f);
        grad = inst.gradient(&x);
    }
    unreachable!("loop returns on its final iteration")
}
