//! Linearized variant for a composite tail `g(y) + h(y)` with smooth `g`.
//!
//! The exact y-update is replaced by
//!
//! ```text
//! yᵏ⁺¹ = argmin h(y) + ⟨y, ∇g(yᵏ) − Bᵀλᵏ⁺¹ᐟ²⟩ + (β/2)‖Axᵏ⁺¹ + By − b‖² + ½‖y − yᵏ‖²_D
//! ```
//!
//! which with `D = σI − βBᵀB` collapses to `prox_{h,σ}(y_c)` for the point
//! `y_c = yᵏ − [∇g(yᵏ) − Bᵀλᵏ⁺¹ᐟ² + βBᵀ(Axᵏ⁺¹ + Byᵏ − b)] / σ`.

use crate::error::{Error, Result};
use crate::numeric::{self, DenseMatrix, Vector};
use crate::point::Point;
use crate::problem::{clip, NonsmoothH, ProblemSpec, YDomain};
use crate::solver::{default_params, IterateState, SolveOutput, Solver, SolverParams, TerminationReason};

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionParams {
    pub base: SolverParams,
    pub sigma: f64,
}

/// `β‖BᵀB‖ + (3−α)/(1+α)·L_g`.
pub fn sigma_lower_bound(spec: &ProblemSpec, beta: f64, alpha: f64) -> Result<f64> {
    let btb = numeric::gram_norm(spec.b_mat())?;
    Ok(beta * btb + (3.0 - alpha) / (1.0 + alpha) * spec.tail().lipschitz_lg)
}

/// `D = σI − βBᵀB`.
pub fn proximal_matrix(spec: &ProblemSpec, beta: f64, sigma: f64) -> DenseMatrix {
    let d = spec.y_dim();
    DenseMatrix::identity(d, d) * sigma - numeric::symmetrize(&(spec.b_mat().transpose() * spec.b_mat())) * beta
}

impl ExtensionParams {
    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        self.base.validate(spec)?;
        let bound = sigma_lower_bound(spec, self.base.beta, self.base.alpha)?;
        if !(self.sigma >= bound * (1.0 - 1e-12)) {
            return Err(Error::Parameter(format!(
                "σ = {} is below β‖BᵀB‖ + (3−α)/(1+α)·L_g = {bound}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Base defaults plus `σ` at its lower bound.
pub fn default_extension_params(
    spec: &ProblemSpec,
    alpha: f64,
    tau: f64,
    beta: f64,
    mu: f64,
) -> Result<ExtensionParams> {
    let base = default_params(spec, alpha, tau, beta, mu)?;
    let sigma = sigma_lower_bound(spec, beta, alpha)?;
    Ok(ExtensionParams { base, sigma })
}

/// The nonsmooth term actually used by the prox step; a constrained 𝒴 is
/// folded in as an indicator.
pub(crate) fn effective_h(spec: &ProblemSpec) -> Result<NonsmoothH> {
    let h = &spec.tail().h;
    match (spec.y_domain(), h) {
        (YDomain::Free, _) => Ok(h.clone()),
        (YDomain::Nonneg, NonsmoothH::Zero | NonsmoothH::IndicatorNonneg) => Ok(NonsmoothH::IndicatorNonneg),
        (YDomain::Box { l, u }, NonsmoothH::Zero) => Ok(NonsmoothH::IndicatorBox { l: l.clone(), u: u.clone() }),
        _ => Err(Error::Configuration(
            "the linearized variant takes y ∈ ℝᵈ; express constraints on y through h".into(),
        )),
    }
}

pub(crate) fn prox_point_raw(
    spec: &ProblemSpec,
    beta: f64,
    sigma: f64,
    ax_new: &Vector,
    y: &Vector,
    lambda_half: &Vector,
) -> Vector {
    let b = spec.b_mat();
    let residual = ax_new + b * y - spec.rhs();
    let bracket = spec.tail().g.gradient(y) + b.transpose() * (residual * beta - lambda_half);
    y - bracket / sigma
}

/// `y_c` for the new blocks `x_new`, the current `y` and `λᵏ⁺¹ᐟ²`.
pub fn prox_point(
    spec: &ProblemSpec,
    params: &ExtensionParams,
    x_new: &[Vector],
    y: &Vector,
    lambda_half: &Vector,
) -> Result<Vector> {
    spec.check_point(x_new, y)?;
    if lambda_half.len() != spec.rows() {
        return Err(Error::dim("λ half step", spec.rows(), lambda_half.len()));
    }
    Ok(prox_point_raw(
        spec,
        params.base.beta,
        params.sigma,
        &spec.a_times_x(x_new),
        y,
        lambda_half,
    ))
}

/// Soft thresholding at `w/σ`.
pub fn soft_threshold(v: &Vector, threshold: f64) -> Vector {
    v.map(|t| t.signum() * (t.abs() - threshold).max(0.0))
}

/// `argmin h(y) + (σ/2)‖y − y_c‖²` in closed form.
pub fn prox_map(h: &NonsmoothH, sigma: f64, y_c: &Vector) -> Vector {
    match h {
        NonsmoothH::Zero => y_c.clone(),
        NonsmoothH::L1 { weight } => soft_threshold(y_c, weight / sigma),
        NonsmoothH::IndicatorBox { l, u } => clip(y_c, l, u),
        NonsmoothH::IndicatorNonneg => y_c.map(|t| t.max(0.0)),
    }
}

/// One linearized iteration.
pub fn extended_step(spec: &ProblemSpec, params: &ExtensionParams, state: &IterateState) -> Result<IterateState> {
    Solver::linearized(spec, params)?.step(state)
}

pub fn solve_extended(spec: &ProblemSpec, params: &ExtensionParams, init: Option<IterateState>) -> Result<SolveOutput> {
    Solver::linearized(spec, params)?.solve(init)
}

/// High-accuracy reference for the linearized method.
pub fn reference_solution_extended(spec: &ProblemSpec, params: &ExtensionParams) -> Result<Point> {
    let mut long = params.clone();
    long.base.feas_tol = numeric::tol::REFERENCE_FEASIBILITY;
    long.base.max_iter = 10 * params.base.max_iter.max(5000);
    let out = solve_extended(spec, &long, None)?;
    if out.reason != TerminationReason::Converged {
        log::warn!("linearized reference run stopped early ({})", out.reason.as_str());
    }
    Ok(out.state.point())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Cholesky;
    use crate::problem::{generate_lasso_composite_instance, Block, BlockFunction, SmoothG, TailFunction};

    fn v(data: &[f64]) -> Vector {
        Vector::from_row_slice(data)
    }

    #[test]
    fn prox_catalog() {
        let yc = v(&[0.75, -0.1]);
        assert_eq!(prox_map(&NonsmoothH::Zero, 2.0, &yc), yc);
        let st = prox_map(&NonsmoothH::L1 { weight: 1.0 }, 2.0, &yc);
        assert!((st - v(&[0.25, 0.0])).amax() < 1e-15);
        let boxed = prox_map(
            &NonsmoothH::IndicatorBox {
                l: v(&[0.0, 0.0]),
                u: v(&[1.0, 1.0]),
            },
            1.0,
            &v(&[2.0, -1.0]),
        );
        assert_eq!(boxed, v(&[1.0, 0.0]));
        assert_eq!(prox_map(&NonsmoothH::IndicatorNonneg, 1.0, &v(&[-2.0, 3.0])), v(&[0.0, 3.0]));
    }

    fn scalar_spec(g: SmoothG, rhs: f64) -> ProblemSpec {
        ProblemSpec::new(
            vec![Block {
                f: BlockFunction::L1Nonneg { weight: 1.0 },
                a: DenseMatrix::identity(1, 1),
            }],
            TailFunction::new(g, NonsmoothH::Zero).unwrap(),
            DenseMatrix::identity(1, 1),
            v(&[rhs]),
            YDomain::Free,
        )
        .unwrap()
    }

    #[test]
    fn prox_point_examples() {
        // Zero gradient, zero multiplier, feasible: y_c = y.
        let spec = scalar_spec(SmoothG::Zero, 3.0);
        let params = default_extension_params(&spec, 0.0, 1.0, 1.0, 0.5).unwrap();
        let yc = prox_point(&spec, &params, &[v(&[1.0])], &v(&[2.0]), &v(&[0.0])).unwrap();
        assert_eq!(yc, v(&[2.0]));
        // σ = 2, y = 1, bracket = ∇g = 1: y_c = 0.5.
        let spec = scalar_spec(SmoothG::Linear { c: v(&[1.0]) }, 2.0);
        let mut params = default_extension_params(&spec, 0.0, 1.0, 1.0, 0.5).unwrap();
        params.sigma = 2.0;
        let yc = prox_point(&spec, &params, &[v(&[1.0])], &v(&[1.0]), &v(&[0.0])).unwrap();
        assert!((yc[0] - 0.5).abs() < 1e-15);
        // Affine in the multiplier with slope Bᵀ/σ.
        let y1 = prox_point(&spec, &params, &[v(&[1.0])], &v(&[1.0]), &v(&[0.7])).unwrap();
        assert!((y1[0] - yc[0] - 0.7 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_bound_is_enforced() {
        let inst = generate_lasso_composite_instance(12, 4, 0.3, 5).unwrap();
        let mut params = default_extension_params(&inst.spec, 0.5, 0.9, 1.0, 0.5).unwrap();
        let bound = sigma_lower_bound(&inst.spec, 1.0, 0.5).unwrap();
        assert_eq!(params.sigma, bound);
        assert!(params.validate(&inst.spec).is_ok());
        params.sigma *= 0.99;
        assert!(params.validate(&inst.spec).is_err());
    }

    #[test]
    fn d_dominates_scaled_lipschitz() {
        let inst = generate_lasso_composite_instance(12, 4, 0.3, 5).unwrap();
        for alpha in [-0.3, 0.0, 0.5, 0.9] {
            let params = default_extension_params(&inst.spec, alpha, 0.9, 1.0, 0.5).unwrap();
            let d = proximal_matrix(&inst.spec, 1.0, params.sigma);
            let target = (3.0 - alpha) / (1.0 + alpha) * inst.spec.tail().lipschitz_lg;
            let (lo, _) = numeric::sym_eigen_extremes(&d).unwrap();
            assert!(lo >= target - 1e-9, "{lo} < {target}");
        }
    }

    #[test]
    fn y_update_equals_direct_minimizer() {
        // With h = 0 the linearized objective is a quadratic with Hessian βBᵀB + D = σI.
        let inst = generate_lasso_composite_instance(12, 4, 0.3, 5).unwrap();
        let spec = ProblemSpec::new(
            inst.spec.blocks().to_vec(),
            TailFunction::new(inst.spec.tail().g.clone(), NonsmoothH::Zero).unwrap(),
            inst.spec.b_mat().clone(),
            inst.spec.rhs().clone(),
            YDomain::Free,
        )
        .unwrap();
        let mut params = default_extension_params(&spec, 0.5, 0.9, 1.0, 0.5).unwrap();
        params.sigma *= 1e3;
        let solver = Solver::linearized(&spec, &params).unwrap();
        let state = solver.initial_state().unwrap();
        let next = solver.step(&state).unwrap();
        let beta = params.base.beta;
        let b = spec.b_mat();
        let ax = spec.a_times_x(&next.x);
        let dmat = proximal_matrix(&spec, beta, params.sigma);
        let hess = b.transpose() * b * beta + &dmat;
        let rhs = -(spec.tail().g.gradient(&state.y) - b.transpose() * &next.lambda_half
            + b.transpose() * (&ax - spec.rhs()) * beta
            - &dmat * &state.y);
        let direct = Cholesky::factor(&numeric::symmetrize(&hess)).unwrap().solve(&rhs).unwrap();
        assert!((&direct - &next.y).amax() < 1e-10 * (1.0 + direct.amax()));
        // The x-step does not see σ, so with h = 0 the y-move scales as 1/σ.
        let mut tight = params.clone();
        tight.sigma /= 1e3;
        let base = Solver::linearized(&spec, &tight).unwrap().step(&state).unwrap();
        let (big, small) = ((&base.y - &state.y), (&next.y - &state.y) * 1e3);
        assert!((&big - &small).amax() < 1e-9 * (1.0 + big.amax()));
    }
}
