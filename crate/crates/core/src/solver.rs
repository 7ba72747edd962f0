//! The ADMM-LQP outer loop and a plain Gauss-Seidel multi-block ADMM baseline.
//!
//! One iteration, with `E(x, y) = Ax + By − b`:
//!
//! ```text
//! xᵢᵏ⁺¹   = argmin_{xᵢ>0} 𝓛_β(x₁ᵏ..xᵢ..x_pᵏ, yᵏ, λᵏ) + rᵢ d(xᵢ, xᵢᵏ)     (all i, Jacobi)
//! λᵏ⁺¹ᐟ²  = λᵏ − αβ E(xᵏ⁺¹, yᵏ)
//! yᵏ⁺¹    = argmin_{y∈𝒴} 𝓛_β(xᵏ⁺¹, y, λᵏ⁺¹ᐟ²)
//! λᵏ⁺¹    = λᵏ⁺¹ᐟ² − τβ E(xᵏ⁺¹, yᵏ⁺¹)
//! ```

use log::{debug, warn};

use crate::boxqp::solve_box_qp;
use crate::certify::check_stepsize_region;
use crate::error::{Error, Result};
use crate::extension::{self, ExtensionParams};
use crate::lqp::{solve_block_subproblem, LqpTerm, SubproblemInstance};
use crate::numeric::{self, tol, Cholesky, DenseMatrix, Vector};
use crate::point::{Layout, Point};
use crate::problem::{clip, evaluate_objective, NonsmoothH, ProblemSpec};

/// Scalars of the method.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub beta: f64,
    pub alpha: f64,
    pub tau: f64,
    pub mu: f64,
    pub gamma: f64,
    /// LQP weights `rᵢ`, one per block.
    pub r: Vec<f64>,
    pub max_iter: usize,
    pub feas_tol: f64,
    pub subproblem_tol: f64,
}

impl SolverParams {
    /// Checks `(α, τ) ∈ 𝒦`, `γ > (p−1)/(1−μ)` and `rᵢ ≥ γβ‖AᵢᵀAᵢ‖`.
    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        let p = spec.num_blocks();
        if !(self.beta > 0.0) {
            return Err(Error::Parameter(format!("β must be positive, got {}", self.beta)));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::Parameter(format!("μ must lie in (0, 1), got {}", self.mu)));
        }
        let region = check_stepsize_region(self.alpha, self.tau);
        if !region.admissible {
            return Err(Error::Parameter(format!(
                "(α, τ) = ({}, {}) is outside the stepsize region: {}",
                self.alpha,
                self.tau,
                region.failing.join("; ")
            )));
        }
        let gamma_floor = if p > 1 { (p - 1) as f64 / (1.0 - self.mu) } else { 0.0 };
        if !(self.gamma > gamma_floor) {
            return Err(Error::Parameter(format!(
                "γ = {} must exceed (p−1)/(1−μ) = {gamma_floor}",
                self.gamma
            )));
        }
        if self.r.len() != p {
            return Err(Error::dim("LQP weights r", p, self.r.len()));
        }
        for (i, (block, &r)) in spec.blocks().iter().zip(&self.r).enumerate() {
            let bound = self.gamma * self.beta * numeric::gram_norm(&block.a)?;
            if !(r >= bound * (1.0 - 1e-12)) {
                return Err(Error::Parameter(format!(
                    "r[{i}] = {r} is below γβ‖AᵢᵀAᵢ‖ = {bound}"
                )));
            }
        }
        if !(self.feas_tol > 0.0) || !(self.subproblem_tol > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// `γ = 1.05(p−1)/(1−μ)` (1 when `p = 1`) and `rᵢ = γβ‖AᵢᵀAᵢ‖`.
pub fn default_params(spec: &ProblemSpec, alpha: f64, tau: f64, beta: f64, mu: f64) -> Result<SolverParams> {
    let p = spec.num_blocks();
    let gamma = if p > 1 { 1.05 * (p - 1) as f64 / (1.0 - mu) } else { 1.0 };
    let r = spec
        .blocks()
        .iter()
        .map(|b| numeric::gram_norm(&b.a).map(|n| gamma * beta * n))
        .collect::<Result<Vec<_>>>()?;
    let params = SolverParams {
        beta,
        alpha,
        tau,
        mu,
        gamma,
        r,
        max_iter: 5000,
        feas_tol: tol::FEASIBILITY,
        subproblem_tol: tol::SUBPROBLEM,
    };
    params.validate(spec)?;
    Ok(params)
}

/// Iterate `wᵏ` plus the half-step multiplier and the last predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub iter: usize,
    pub x: Vec<Vector>,
    pub y: Vector,
    pub lambda: Vector,
    /// `λᵏ⁻¹ᐟ²`, the multiplier the current `y` was computed against.
    pub lambda_half: Vector,
    /// `w̃ᵏ⁻¹ = (xᵏ, yᵏ, λ̃ᵏ⁻¹)`; absent before the first step.
    pub predictor: Option<Point>,
}

impl IterateState {
    pub fn point(&self) -> Point {
        Point {
            x: self.x.clone(),
            y: self.y.clone(),
            lambda: self.lambda.clone(),
        }
    }

    pub fn flat(&self) -> Vector {
        self.point().flatten()
    }

    /// A state at `w` whose half-step multiplier makes `y` optimal for the
    /// (virtual) previous y-update with the given `τ`.
    pub fn at_point(spec: &ProblemSpec, point: Point, beta: f64, tau: f64) -> Self {
        let e = spec.a_times_x(&point.x) + spec.b_mat() * &point.y - spec.rhs();
        let lambda_half = &point.lambda + e * (tau * beta);
        IterateState {
            iter: 0,
            x: point.x,
            y: point.y,
            lambda: point.lambda,
            lambda_half,
            predictor: None,
        }
    }
}

/// `x⁰ = 𝟙`, `y⁰ = Π(0)` and a multiplier consistent with `y⁰`.
///
/// `λ⁰ = (1−τ)βE⁰ + B(BᵀB)⁻¹∇g(y⁰)` makes `y⁰` satisfy the optimality
/// condition of a y-update against `λ⁻¹ᐟ² = λ⁰ + τβE⁰`, so the per-iteration
/// certificates hold from the very first step.
pub fn initial_state(spec: &ProblemSpec, params: &SolverParams) -> Result<IterateState> {
    let x: Vec<Vector> = spec.block_dims().iter().map(|&m| Vector::from_element(m, 1.0)).collect();
    let d = spec.y_dim();
    let (l, u) = y_bounds(spec);
    let y = clip(&Vector::zeros(d), &l, &u);
    let b = spec.b_mat();
    let grad = spec.tail().g.gradient(&y);
    let coef = numeric::cholesky_solve(&numeric::symmetrize(&(b.transpose() * b)), &grad)?;
    let e = spec.a_times_x(&x) + b * &y - spec.rhs();
    let lambda = &e * ((1.0 - params.tau) * params.beta) + b * coef;
    Ok(IterateState::at_point(spec, Point { x, y, lambda }, params.beta, params.tau))
}

/// Box bounds on `y` from 𝒴 intersected with an indicator `h`.
fn y_bounds(spec: &ProblemSpec) -> (Vector, Vector) {
    let d = spec.y_dim();
    let (mut l, mut u) = spec.y_domain().bounds(d);
    if let Some((hl, hu)) = spec.tail().h.indicator_bounds(d) {
        for i in 0..d {
            l[i] = l[i].max(hl[i]);
            u[i] = u[i].min(hu[i]);
        }
    }
    (l, u)
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// `‖Eᵏ‖`
    pub feas_norm: f64,
    /// `‖AᵢE_{xᵢ}ᵏ‖` per block.
    pub block_moves: Vec<f64>,
    /// `‖BE_yᵏ‖`
    pub y_move: f64,
    pub objective: f64,
    /// `‖wᵏ − w*‖²_H`, filled in when a reference point is available.
    pub h_dist_sq: Option<f64>,
    /// Slack of the contraction inequality for the step ending at this row.
    pub certificate_slack: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    Converged,
    IterationCap,
    SubproblemFailure,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Converged => "converged",
            TerminationReason::IterationCap => "iteration_cap",
            TerminationReason::SubproblemFailure => "subproblem_failure",
        }
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub state: IterateState,
    /// `iterations + 1` rows; row 0 describes the initial point.
    pub trace: Vec<TraceRecord>,
    /// Flat `wᵏ` for `k = 0..=iterations`.
    pub iterates: Vec<Vector>,
    /// Flat `w̃ᵏ` for `k = 0..iterations`.
    pub predictors: Vec<Vector>,
    pub reason: TerminationReason,
    /// The error that stopped a run with `SubproblemFailure`.
    pub failure: Option<Error>,
}

impl SolveOutput {
    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }
}

enum YRule {
    /// Exact minimization of the augmented Lagrangian over the box.
    Exact {
        k: DenseMatrix,
        chol: Option<Cholesky>,
        diagonal: bool,
        lower: Vector,
        upper: Vector,
    },
    /// Linearized `g` plus the proximal term `½‖y − yᵏ‖²_D`, `D = σI − βBᵀB`.
    Linearized { sigma: f64, h: NonsmoothH },
}

/// A solver bound to one problem and one parameter set, with the constant
/// matrices of the subproblems precomputed.
pub struct Solver<'a> {
    spec: &'a ProblemSpec,
    params: SolverParams,
    block_quad: Vec<DenseMatrix>,
    block_linear: Vec<Vector>,
    y_rule: YRule,
}

impl<'a> Solver<'a> {
    /// The exact-y method. `h = L1` needs the linearized variant.
    pub fn new(spec: &'a ProblemSpec, params: &SolverParams) -> Result<Self> {
        params.validate(spec)?;
        if let NonsmoothH::L1 { .. } = spec.tail().h {
            return Err(Error::Configuration(
                "h = L1 has no exact y-update here; use the linearized (eadmm_lqp) variant".into(),
            ));
        }
        let btb = numeric::symmetrize(&(spec.b_mat().transpose() * spec.b_mat()));
        let k = spec.tail().g.hessian(spec.y_dim()) + btb * params.beta;
        let (lower, upper) = y_bounds(spec);
        let unbounded = lower.iter().all(|v| v.is_infinite()) && upper.iter().all(|v| v.is_infinite());
        let diagonal = (0..k.nrows()).all(|i| (0..k.ncols()).all(|j| i == j || k[(i, j)] == 0.0));
        let chol = if unbounded { Some(Cholesky::factor(&k)?) } else { None };
        let y_rule = YRule::Exact {
            k,
            chol,
            diagonal,
            lower,
            upper,
        };
        Ok(Self::assemble(spec, params, y_rule))
    }

    pub(crate) fn linearized(spec: &'a ProblemSpec, params: &ExtensionParams) -> Result<Self> {
        params.validate(spec)?;
        let h = extension::effective_h(spec)?;
        Ok(Self::assemble(
            spec,
            &params.base,
            YRule::Linearized {
                sigma: params.sigma,
                h,
            },
        ))
    }

    fn assemble(spec: &'a ProblemSpec, params: &SolverParams, y_rule: YRule) -> Self {
        let mut block_quad = Vec::with_capacity(spec.num_blocks());
        let mut block_linear = Vec::with_capacity(spec.num_blocks());
        for block in spec.blocks() {
            let (p_diag, c) = block.f.quadratic_parts(block.dim());
            let mut q = numeric::symmetrize(&(block.a.transpose() * &block.a)) * params.beta;
            for j in 0..block.dim() {
                q[(j, j)] += p_diag[j];
            }
            block_quad.push(q);
            block_linear.push(c);
        }
        Solver {
            spec,
            params: params.clone(),
            block_quad,
            block_linear,
            y_rule,
        }
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn initial_state(&self) -> Result<IterateState> {
        initial_state(self.spec, &self.params)
    }

    fn update_blocks(&self, state: &IterateState) -> Result<Vec<Vector>> {
        let spec = self.spec;
        let beta = self.params.beta;
        let ax: Vec<Vector> = spec.blocks().iter().zip(&state.x).map(|(b, x)| &b.a * x).collect();
        let base = ax.iter().fold(spec.b_mat() * &state.y - spec.rhs(), |acc, v| acc + v);
        let mut out = Vec::with_capacity(spec.num_blocks());
        for (i, block) in spec.blocks().iter().enumerate() {
            // Residual of every other block at iteration k.
            let others = &base - &ax[i];
            let linear = &self.block_linear[i] + block.a.transpose() * (others * beta - &state.lambda);
            let lqp = LqpTerm::new(self.params.mu, state.x[i].clone(), self.params.r[i])?;
            let inst = SubproblemInstance::new(self.block_quad[i].clone(), linear, lqp)?;
            out.push(solve_block_subproblem(&inst, &state.x[i], self.params.subproblem_tol)?);
        }
        Ok(out)
    }

    fn update_y(&self, ax_new: &Vector, y: &Vector, lambda_half: &Vector) -> Result<Vector> {
        let spec = self.spec;
        let beta = self.params.beta;
        match &self.y_rule {
            YRule::Exact {
                k,
                chol,
                diagonal,
                lower,
                upper,
            } => {
                let bt = spec.b_mat().transpose();
                let q = spec.tail().g.linear_part(spec.y_dim()) + &bt * ((ax_new - spec.rhs()) * beta - lambda_half);
                if let Some(chol) = chol {
                    return chol.solve(&-q);
                }
                if *diagonal {
                    let free = Vector::from_fn(q.len(), |i, _| -q[i] / k[(i, i)]);
                    return Ok(clip(&free, lower, upper));
                }
                solve_box_qp(k, &q, lower, upper, y)
            }
            YRule::Linearized { sigma, h } => {
                let yc = extension::prox_point_raw(spec, beta, *sigma, ax_new, y, lambda_half);
                Ok(extension::prox_map(h, *sigma, &yc))
            }
        }
    }

    /// One iteration; also records the predictor `w̃ᵏ`.
    pub fn step(&self, state: &IterateState) -> Result<IterateState> {
        let spec = self.spec;
        spec.check_point(&state.x, &state.y)?;
        if state.lambda.len() != spec.rows() {
            return Err(Error::dim("λ", spec.rows(), state.lambda.len()));
        }
        let beta = self.params.beta;
        let x_new = self.update_blocks(state)?;
        let ax_new = spec.a_times_x(&x_new);
        let e_half = &ax_new + spec.b_mat() * &state.y - spec.rhs();
        let lambda_half = &state.lambda - &e_half * (self.params.alpha * beta);
        let y_new = self.update_y(&ax_new, &state.y, &lambda_half)?;
        let e_new = &ax_new + spec.b_mat() * &y_new - spec.rhs();
        let lambda_new = &lambda_half - e_new * (self.params.tau * beta);
        let lambda_tilde = &state.lambda - e_half * beta;
        Ok(IterateState {
            iter: state.iter + 1,
            predictor: Some(Point {
                x: x_new.clone(),
                y: y_new.clone(),
                lambda: lambda_tilde,
            }),
            x: x_new,
            y: y_new,
            lambda: lambda_new,
            lambda_half,
        })
    }

    /// Iterates until the stopping rule or `max_iter`.
    pub fn solve(&self, init: Option<IterateState>) -> Result<SolveOutput> {
        let state = match init {
            Some(s) => s,
            None => self.initial_state()?,
        };
        run_loop(self.spec, state, self.params.max_iter, self.params.feas_tol, |s| self.step(s))
    }
}

fn record(spec: &ProblemSpec, prev: Option<&IterateState>, cur: &IterateState) -> Result<TraceRecord> {
    let feas_norm = (spec.a_times_x(&cur.x) + spec.b_mat() * &cur.y - spec.rhs()).norm();
    let (block_moves, y_move) = match prev {
        Some(prev) => (
            spec.blocks()
                .iter()
                .zip(cur.x.iter().zip(&prev.x))
                .map(|(b, (xn, xo))| (&b.a * (xn - xo)).norm())
                .collect(),
            (spec.b_mat() * (&cur.y - &prev.y)).norm(),
        ),
        None => (vec![0.0; spec.num_blocks()], 0.0),
    };
    Ok(TraceRecord {
        iter: cur.iter,
        feas_norm,
        block_moves,
        y_move,
        objective: evaluate_objective(spec, &cur.x, &cur.y)?,
        h_dist_sq: None,
        certificate_slack: None,
    })
}

fn run_loop(
    spec: &ProblemSpec,
    mut state: IterateState,
    max_iter: usize,
    feas_tol: f64,
    step: impl Fn(&IterateState) -> Result<IterateState>,
) -> Result<SolveOutput> {
    let mut trace = vec![record(spec, None, &state)?];
    let mut iterates = vec![state.flat()];
    let mut predictors = Vec::new();
    let mut reason = TerminationReason::IterationCap;
    let mut failure = None;
    for _ in 0..max_iter {
        let next = match step(&state) {
            Ok(next) => next,
            Err(err) => {
                warn!("iteration {} failed: {err}", state.iter + 1);
                reason = TerminationReason::SubproblemFailure;
                failure = Some(err);
                break;
            }
        };
        let rec = record(spec, Some(&state), &next)?;
        let stop = rec.block_moves.iter().fold(rec.feas_norm.max(rec.y_move), |m, &v| m.max(v));
        if let Some(pred) = &next.predictor {
            predictors.push(pred.flatten());
        }
        iterates.push(next.flat());
        trace.push(rec);
        state = next;
        if stop <= feas_tol {
            reason = TerminationReason::Converged;
            break;
        }
    }
    debug!("run stopped after {} iterations: {}", predictors.len(), reason.as_str());
    Ok(SolveOutput {
        state,
        trace,
        iterates,
        predictors,
        reason,
        failure,
    })
}

/// One exact-y iteration.
pub fn step(spec: &ProblemSpec, params: &SolverParams, state: &IterateState) -> Result<IterateState> {
    Solver::new(spec, params)?.step(state)
}

/// Runs the exact-y method from `init` (or the default initialization).
pub fn solve(spec: &ProblemSpec, params: &SolverParams, init: Option<IterateState>) -> Result<SolveOutput> {
    Solver::new(spec, params)?.solve(init)
}

/// A high-accuracy solution used as `w*` by the certificate monitors:
/// `feas_tol = 10⁻¹²` with ten times the iteration budget.
pub fn reference_solution(spec: &ProblemSpec, params: &SolverParams) -> Result<Point> {
    let mut long = params.clone();
    long.feas_tol = tol::REFERENCE_FEASIBILITY;
    long.max_iter = 10 * params.max_iter.max(5000);
    let out = solve(spec, &long, None)?;
    if out.reason != TerminationReason::Converged {
        warn!(
            "reference run stopped early ({}); final residual {:e}",
            out.reason.as_str(),
            out.trace.last().map_or(f64::NAN, |r| r.feas_norm)
        );
    }
    Ok(out.state.point())
}

/// Mean of `w̃^κ, …, w̃^{κ+T}`.
pub fn ergodic_average(predictors: &[Vector], kappa: usize, t: usize) -> Result<Vector> {
    if t == 0 {
        return Err(Error::Range("ergodic window length T must be positive".into()));
    }
    let end = kappa + t;
    if end >= predictors.len() {
        return Err(Error::Range(format!(
            "window κ..κ+T = {kappa}..{end} exceeds the {} recorded predictors",
            predictors.len()
        )));
    }
    let mut acc = predictors[kappa].clone();
    for w in &predictors[kappa + 1..=end] {
        acc += w;
    }
    Ok(acc / (t + 1) as f64)
}

/// Ridge on the baseline's block quadratics so linear blocks stay strictly convex.
const BASELINE_RIDGE: f64 = 1e-12;

/// Direct Gauss-Seidel extension of ADMM: blocks in order using the newest
/// values, no proximal term, unit dual step. No convergence guarantee.
pub fn baseline_gauss_seidel_admm(spec: &ProblemSpec, beta: f64, max_iter: usize, feas_tol: f64) -> Result<SolveOutput> {
    if !(beta > 0.0) {
        return Err(Error::Parameter(format!("β must be positive, got {beta}")));
    }
    if !(feas_tol > 0.0) {
        return Err(Error::Parameter("tolerances must be positive".into()));
    }
    if let NonsmoothH::L1 { .. } = spec.tail().h {
        return Err(Error::Configuration("the baseline needs an exact y-update; h = L1 is unsupported".into()));
    }
    // Reuse the exact y-update (τ = 1, α = 0 gives the classical dual step).
    let params = SolverParams {
        beta,
        alpha: 0.0,
        tau: 1.0,
        mu: 0.5,
        gamma: f64::INFINITY,
        r: vec![f64::INFINITY; spec.num_blocks()],
        max_iter,
        feas_tol,
        subproblem_tol: tol::SUBPROBLEM,
    };
    let exact = Solver::new(spec, &params)?;
    let blocks: Vec<(DenseMatrix, Vector)> = spec
        .blocks()
        .iter()
        .map(|block| {
            let (p_diag, c) = block.f.quadratic_parts(block.dim());
            let mut k = numeric::symmetrize(&(block.a.transpose() * &block.a)) * beta;
            for j in 0..block.dim() {
                k[(j, j)] += p_diag[j] + BASELINE_RIDGE;
            }
            (k, c)
        })
        .collect();
    let step = |state: &IterateState| -> Result<IterateState> {
        let mut x = state.x.clone();
        for (i, block) in spec.blocks().iter().enumerate() {
            let m = block.dim();
            let others = spec.a_times_x(&x) - &block.a * &x[i] + spec.b_mat() * &state.y - spec.rhs();
            let (k, c) = &blocks[i];
            let q = c + block.a.transpose() * (others * beta - &state.lambda);
            x[i] = solve_box_qp(
                k,
                &q,
                &Vector::zeros(m),
                &Vector::from_element(m, f64::INFINITY),
                &x[i],
            )?;
        }
        let ax = spec.a_times_x(&x);
        let y = exact.update_y(&ax, &state.y, &state.lambda)?;
        let e = &ax + spec.b_mat() * &y - spec.rhs();
        let lambda = &state.lambda - e * beta;
        Ok(IterateState {
            iter: state.iter + 1,
            predictor: None,
            lambda_half: state.lambda.clone(),
            x,
            y,
            lambda,
        })
    };
    let init = exact.initial_state()?;
    run_loop(spec, init, max_iter, feas_tol, step)
}

/// True when every block of every iterate is strictly positive.
pub fn iterates_interior(layout: &Layout, iterates: &[Vector]) -> bool {
    iterates.iter().all(|w| w.rows(0, layout.x_len()).iter().all(|&v| v > 0.0))
}
