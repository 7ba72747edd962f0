//! Analysis objects of the prediction-correction framework and numerical
//! checks of the convergence certificates on recorded runs.
//!
//! With `w = (x, y, λ)`, predictor `w̃ᵏ = (xᵏ⁺¹, yᵏ⁺¹, λᵏ − βE(xᵏ⁺¹, yᵏ))` and
//! `wᵏ⁺¹ = wᵏ − M(wᵏ − w̃ᵏ)`:
//!
//! ```text
//! Q = diag(Q₁, Q₂)     Q₁ = [(1+μ)rᵢI on the diagonal, −βAᵢᵀAⱼ off it]
//!                      Q₂ = [[βBᵀB (+D), −αBᵀ], [−B, I/β]]
//! M = [[I, 0, 0], [0, I, 0], [0, −τβB, (α+τ)I]]
//! N = diag(μ rᵢ I, (L_g/2) I for the linearized variant, 0)
//! H = QM⁻¹,  G = Qᵀ + Q − MᵀHM − 2N
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::proximal_matrix;
use crate::numeric::{self, tol, DenseMatrix, Vector};
use crate::point::Layout;
use crate::problem::{clip, evaluate_objective, ProblemSpec};
use crate::solver::SolverParams;

/// Outcome of the stepsize-region test with the violated inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct StepsizeReport {
    pub admissible: bool,
    pub failing: Vec<String>,
}

/// `1 + α + τ − ατ − α² − τ²`
pub fn stepsize_quadratic(alpha: f64, tau: f64) -> f64 {
    1.0 + alpha + tau - alpha * tau - alpha * alpha - tau * tau
}

/// `(α, τ) ∈ 𝒦  ⇔  1 > α > −1,  α + τ > 0,  1 + α + τ − ατ − α² − τ² > 0`.
pub fn check_stepsize_region(alpha: f64, tau: f64) -> StepsizeReport {
    let mut failing = Vec::new();
    if !(alpha < 1.0 && alpha > -1.0) {
        failing.push(format!("1 > α > −1 fails (α = {alpha})"));
    }
    if !(alpha + tau > 0.0) {
        failing.push(format!("α + τ > 0 fails (α + τ = {})", alpha + tau));
    }
    let quad = stepsize_quadratic(alpha, tau);
    if !(quad > 0.0) {
        failing.push(format!("1 + α + τ − ατ − α² − τ² > 0 fails (value {quad})"));
    }
    StepsizeReport {
        admissible: failing.is_empty(),
        failing,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Base,
    /// Linearized y-update with proximal parameter `σ`.
    Extension { sigma: f64 },
}

/// Assembled `Q, M, N, H, G` over the flat layout of `w`.
#[derive(Debug, Clone)]
pub struct CertificateMatrices {
    pub q: DenseMatrix,
    pub m: DenseMatrix,
    pub m_inv: DenseMatrix,
    pub n: DenseMatrix,
    pub h: DenseMatrix,
    pub g: DenseMatrix,
    pub variant: Variant,
    pub layout: Layout,
    /// `ξ₄(D + L_g I)` with `ξ₄ = (1−α)/(1+α)` for the linearized variant.
    ///
    /// The per-iteration decrease of the linearized method needs the extra
    /// Lyapunov term `‖E_yᵏ‖²` in this norm: cross terms `⟨E_yᵏ⁺¹, D E_yᵏ⟩`
    /// only telescope after Cauchy-Schwarz.
    pub y_lyapunov: Option<DenseMatrix>,
}

impl CertificateMatrices {
    pub fn h_norm_sq(&self, v: &Vector) -> f64 {
        numeric::quad_form(&self.h, v)
    }

    pub fn g_norm_sq(&self, v: &Vector) -> f64 {
        numeric::quad_form(&self.g, v)
    }

    pub fn n_norm_sq(&self, v: &Vector) -> f64 {
        numeric::quad_form(&self.n, v)
    }

    fn y_lyapunov_sq(&self, ey: &Vector) -> f64 {
        self.y_lyapunov.as_ref().map_or(0.0, |w| numeric::quad_form(w, ey))
    }
}

fn put(target: &mut DenseMatrix, row: usize, col: usize, block: &DenseMatrix) {
    target.view_mut((row, col), block.shape()).copy_from(block);
}

/// Dense block assembly of the analysis matrices.
pub fn assemble(spec: &ProblemSpec, params: &SolverParams, variant: Variant) -> Result<CertificateMatrices> {
    let (alpha, tau, beta, mu) = (params.alpha, params.tau, params.beta, params.mu);
    if alpha + tau == 0.0 {
        return Err(Error::Parameter("α + τ = 0 makes M singular".into()));
    }
    if params.r.len() != spec.num_blocks() {
        return Err(Error::dim("LQP weights r", spec.num_blocks(), params.r.len()));
    }
    let layout = Layout::new(spec);
    let len = layout.len();
    let (d, n) = (layout.y_dim(), layout.rows());
    let (yo, lo) = (layout.y_offset(), layout.lambda_offset());
    let b = spec.b_mat();
    let bt = b.transpose();
    let btb = numeric::symmetrize(&(&bt * b));
    let eye_n = DenseMatrix::identity(n, n);
    let eye_d = DenseMatrix::identity(d, d);

    let mut q = DenseMatrix::zeros(len, len);
    let mut nmat = DenseMatrix::zeros(len, len);
    for (i, bi) in spec.blocks().iter().enumerate() {
        let oi = layout.block_offset(i);
        for (j, bj) in spec.blocks().iter().enumerate() {
            let oj = layout.block_offset(j);
            if i == j {
                let mi = bi.dim();
                put(&mut q, oi, oi, &(DenseMatrix::identity(mi, mi) * ((1.0 + mu) * params.r[i])));
                put(&mut nmat, oi, oi, &(DenseMatrix::identity(mi, mi) * (mu * params.r[i])));
            } else {
                put(&mut q, oi, oj, &(bi.a.transpose() * &bj.a * -beta));
            }
        }
    }
    let mut qyy = &btb * beta;
    let mut y_lyapunov = None;
    if let Variant::Extension { sigma } = variant {
        let dmat = proximal_matrix(spec, beta, sigma);
        qyy += &dmat;
        let lg = spec.tail().lipschitz_lg;
        put(&mut nmat, yo, yo, &(&eye_d * (0.5 * lg)));
        let xi4 = (1.0 - alpha) / (1.0 + alpha);
        y_lyapunov = Some((dmat + &eye_d * lg) * xi4);
    }
    put(&mut q, yo, yo, &qyy);
    put(&mut q, yo, lo, &(&bt * -alpha));
    put(&mut q, lo, yo, &-b);
    put(&mut q, lo, lo, &(&eye_n / beta));

    let mut m = DenseMatrix::identity(len, len);
    put(&mut m, lo, yo, &(b * (-tau * beta)));
    put(&mut m, lo, lo, &(&eye_n * (alpha + tau)));
    let mut m_inv = DenseMatrix::identity(len, len);
    put(&mut m_inv, lo, yo, &(b * (tau * beta / (alpha + tau))));
    put(&mut m_inv, lo, lo, &(&eye_n / (alpha + tau)));

    let h = &q * &m_inv;
    let g = q.transpose() + &q - m.transpose() * &h * &m - &nmat * 2.0;
    Ok(CertificateMatrices {
        q,
        m,
        m_inv,
        n: nmat,
        h,
        g,
        variant,
        layout,
        y_lyapunov,
    })
}

/// Smallest eigenvalue of `H` and whether the sufficient conditions for `H ≻ 0`
/// (`rᵢ ≥ γβ‖AᵢᵀAᵢ‖`, `γ > (p−1)/(1+μ)`, `α < 1`, `α + τ > 0`) hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HCheck {
    pub min_eig: f64,
    pub conditions_hold: bool,
}

pub fn verify_h_positive_definite(mats: &CertificateMatrices, spec: &ProblemSpec, params: &SolverParams) -> Result<HCheck> {
    numeric::check_symmetric(&mats.h, tol::ASYMMETRY)?;
    let (min_eig, _) = numeric::sym_eigen_extremes(&numeric::symmetrize(&mats.h))?;
    let p = spec.num_blocks() as f64;
    let mut conditions_hold = params.alpha < 1.0 && params.alpha + params.tau > 0.0;
    conditions_hold &= params.gamma > (p - 1.0) / (1.0 + params.mu);
    for (block, &r) in spec.blocks().iter().zip(&params.r) {
        conditions_hold &= r >= params.gamma * params.beta * numeric::gram_norm(&block.a)? * (1.0 - 1e-12);
    }
    Ok(HCheck { min_eig, conditions_hold })
}

/// Smallest eigenvalue of `G`; its sign is not guaranteed.
pub fn g_min_eig(mats: &CertificateMatrices) -> Result<f64> {
    Ok(numeric::sym_eigen_extremes(&numeric::symmetrize(&mats.g))?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiConstants {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

/// `ξ₁ = β(γ(1−μ) − (p−1))`, `ξ₂ = β(2−α−τ−(1−τ)²/(1+α))`, `ξ₃ = β(1−τ)²/(1+α)`.
pub fn xi_constants(params: &SolverParams, p: usize) -> Result<XiConstants> {
    let region = check_stepsize_region(params.alpha, params.tau);
    if !region.admissible {
        return Err(Error::Parameter(region.failing.join("; ")));
    }
    let (a, t, b) = (params.alpha, params.tau, params.beta);
    let xi3 = b * (1.0 - t).powi(2) / (1.0 + a);
    Ok(XiConstants {
        xi1: b * (params.gamma * (1.0 - params.mu) - (p as f64 - 1.0)),
        xi2: b * (2.0 - a - t) - xi3,
        xi3,
    })
}

/// The `p × p` matrix with `γ(1−μ)` on the diagonal and `−1` elsewhere.
pub fn g_bar_10(p: usize, gamma: f64, mu: f64) -> DenseMatrix {
    DenseMatrix::from_fn(p, p, |i, j| if i == j { gamma * (1.0 - mu) } else { -1.0 })
}

/// `𝒥(w) = (−Aᵢᵀλ; −Bᵀλ; Ax + By − b)`.
pub fn j_map(spec: &ProblemSpec, w: &Vector) -> Result<Vector> {
    let layout = Layout::new(spec);
    let pt = layout.split(w)?;
    let mut out = Vector::zeros(layout.len());
    for (i, block) in spec.blocks().iter().enumerate() {
        out.rows_mut(layout.block_offset(i), block.dim())
            .copy_from(&-(block.a.transpose() * &pt.lambda));
    }
    out.rows_mut(layout.y_offset(), layout.y_dim())
        .copy_from(&-(spec.b_mat().transpose() * &pt.lambda));
    out.rows_mut(layout.lambda_offset(), layout.rows())
        .copy_from(&(spec.a_times_x(&pt.x) + spec.b_mat() * &pt.y - spec.rhs()));
    Ok(out)
}

/// `Θ` at the primal part of a flat point.
pub fn theta(spec: &ProblemSpec, w: &Vector) -> Result<f64> {
    let pt = Layout::new(spec).split(w)?;
    evaluate_objective(spec, &pt.x, &pt.y)
}

fn residual_of(spec: &ProblemSpec, layout: &Layout, w: &Vector) -> Vector {
    let x_part = w.rows(0, layout.x_len());
    let a = spec.stacked_a();
    &a * x_part + spec.b_mat() * w.rows(layout.y_offset(), layout.y_dim()) - spec.rhs()
}

/// Per-iteration quantities read off a recorded run.
struct RunQuantities {
    /// `‖Eᵏ‖²`, `k = 0..=K`.
    e_sq: Vec<f64>,
    /// `Σᵢ‖AᵢE_{xᵢ}ᵏ‖²`, `k = 0..=K` (zero at `k = 0`).
    ax_move_sq: Vec<f64>,
    /// `‖E_yᵏ‖²` in the extra Lyapunov norm (zero at `k = 0`).
    ey_lyap: Vec<f64>,
}

fn run_quantities(spec: &ProblemSpec, mats: &CertificateMatrices, iterates: &[Vector]) -> RunQuantities {
    let layout = &mats.layout;
    let e_sq = iterates.iter().map(|w| residual_of(spec, layout, w).norm_squared()).collect();
    let mut ax_move_sq = vec![0.0];
    let mut ey_lyap = vec![0.0];
    for pair in iterates.windows(2) {
        let diff = &pair[1] - &pair[0];
        let moves: f64 = spec
            .blocks()
            .iter()
            .enumerate()
            .map(|(i, b)| (&b.a * diff.rows(layout.block_offset(i), b.dim())).norm_squared())
            .sum();
        ax_move_sq.push(moves);
        ey_lyap.push(mats.y_lyapunov_sq(&diff.rows(layout.y_offset(), layout.y_dim()).into_owned()));
    }
    RunQuantities {
        e_sq,
        ax_move_sq,
        ey_lyap,
    }
}

fn check_lengths(iterates: &[Vector], predictors: Option<&[Vector]>, len: usize) -> Result<()> {
    if let Some(w) = iterates.iter().find(|w| w.len() != len) {
        return Err(Error::dim("iterate", len, w.len()));
    }
    if let Some(preds) = predictors {
        if preds.len() + 1 != iterates.len() {
            return Err(Error::dim("predictor count", iterates.len().saturating_sub(1), preds.len()));
        }
        if let Some(w) = preds.iter().find(|w| w.len() != len) {
            return Err(Error::dim("predictor", len, w.len()));
        }
    }
    Ok(())
}

/// Numerical slack allowed on the contraction checks.
pub fn contraction_tolerance(mats: &CertificateMatrices, w0: &Vector, w_star: &Vector) -> f64 {
    tol::CERTIFICATE * (1.0 + mats.h_norm_sq(&(w0 - w_star)))
}

/// RHS − LHS of
/// `‖wᵏ⁺¹−w*‖²_H + ξ₃‖Eᵏ⁺¹‖² ≤ ‖wᵏ−w*‖²_H + ξ₃‖Eᵏ‖² − ξ₁Σ‖AᵢE_{xᵢ}ᵏ⁺¹‖² − ξ₂‖Eᵏ⁺¹‖²`
/// for each recorded step (plus the `‖E_y‖²` Lyapunov term for the linearized variant).
pub fn check_contraction(
    spec: &ProblemSpec,
    iterates: &[Vector],
    mats: &CertificateMatrices,
    xis: &XiConstants,
    w_star: &Vector,
) -> Result<Vec<f64>> {
    contraction_slacks(spec, iterates, mats, xis, w_star, true)
}

/// The same inequality without the extra Lyapunov term, exactly as stated for the base method.
pub fn check_contraction_literal(
    spec: &ProblemSpec,
    iterates: &[Vector],
    mats: &CertificateMatrices,
    xis: &XiConstants,
    w_star: &Vector,
) -> Result<Vec<f64>> {
    contraction_slacks(spec, iterates, mats, xis, w_star, false)
}

fn contraction_slacks(
    spec: &ProblemSpec,
    iterates: &[Vector],
    mats: &CertificateMatrices,
    xis: &XiConstants,
    w_star: &Vector,
    with_lyapunov: bool,
) -> Result<Vec<f64>> {
    let len = mats.layout.len();
    check_lengths(iterates, None, len)?;
    if w_star.len() != len {
        return Err(Error::dim("reference point", len, w_star.len()));
    }
    let rq = run_quantities(spec, mats, iterates);
    let dist: Vec<f64> = iterates.iter().map(|w| mats.h_norm_sq(&(w - w_star))).collect();
    let lyap = |k: usize| if with_lyapunov { rq.ey_lyap[k] } else { 0.0 };
    Ok((0..iterates.len().saturating_sub(1))
        .map(|k| {
            let lhs = dist[k + 1] + xis.xi3 * rq.e_sq[k + 1] + lyap(k + 1);
            let rhs = dist[k] + xis.xi3 * rq.e_sq[k] + lyap(k) - xis.xi1 * rq.ax_move_sq[k + 1] - xis.xi2 * rq.e_sq[k + 1];
            rhs - lhs
        })
        .collect())
}

/// `‖wᵏ−w*‖²_H − ‖wᵏ−w̃ᵏ‖²_G − ‖wᵏ⁺¹−w*‖²_H` per step.
pub fn check_weak_contraction(
    iterates: &[Vector],
    predictors: &[Vector],
    mats: &CertificateMatrices,
    w_star: &Vector,
) -> Result<Vec<f64>> {
    check_lengths(iterates, Some(predictors), mats.layout.len())?;
    Ok(predictors
        .iter()
        .enumerate()
        .map(|(k, pred)| {
            mats.h_norm_sq(&(&iterates[k] - w_star))
                - mats.g_norm_sq(&(&iterates[k] - pred))
                - mats.h_norm_sq(&(&iterates[k + 1] - w_star))
        })
        .collect())
}

/// `‖wᵏ−w̃ᵏ‖²_G − [ξ₁Σ‖AᵢE_{xᵢ}ᵏ⁺¹‖² + ξ₂‖Eᵏ⁺¹‖² + ξ₃(‖Eᵏ⁺¹‖² − ‖Eᵏ‖²)]` per step.
pub fn check_g_lower_bound(
    spec: &ProblemSpec,
    iterates: &[Vector],
    predictors: &[Vector],
    mats: &CertificateMatrices,
    xis: &XiConstants,
) -> Result<Vec<f64>> {
    check_lengths(iterates, Some(predictors), mats.layout.len())?;
    let rq = run_quantities(spec, mats, iterates);
    Ok(predictors
        .iter()
        .enumerate()
        .map(|(k, pred)| {
            let bound = xis.xi1 * rq.ax_move_sq[k + 1]
                + xis.xi2 * rq.e_sq[k + 1]
                + xis.xi3 * (rq.e_sq[k + 1] - rq.e_sq[k])
                + rq.ey_lyap[k + 1]
                - rq.ey_lyap[k];
            mats.g_norm_sq(&(&iterates[k] - pred)) - bound
        })
        .collect())
}

/// `‖v‖²_G` directly and through `‖wᵏ−w̃‖²_H − ‖wᵏ⁺¹−w̃‖²_H − 2‖wᵏ−w̃‖²_N`.
pub fn g_norm_two_ways(mats: &CertificateMatrices, wk: &Vector, wk1: &Vector, pred: &Vector) -> (f64, f64) {
    let v = wk - pred;
    let direct = mats.g_norm_sq(&v);
    let expanded = mats.h_norm_sq(&v) - mats.h_norm_sq(&(wk1 - pred)) - 2.0 * mats.n_norm_sq(&v);
    (direct, expanded)
}

/// Largest `‖wᵏ⁺¹ − [wᵏ − M(wᵏ − w̃ᵏ)]‖ / (1 + ‖wᵏ‖)` over a run.
pub fn correction_identity_error(iterates: &[Vector], predictors: &[Vector], mats: &CertificateMatrices) -> Result<f64> {
    check_lengths(iterates, Some(predictors), mats.layout.len())?;
    Ok(predictors
        .iter()
        .enumerate()
        .map(|(k, pred)| {
            let wk = &iterates[k];
            let corrected = wk - &mats.m * (wk - pred);
            (&iterates[k + 1] - corrected).norm() / (1.0 + wk.norm())
        })
        .fold(0.0, f64::max))
}

/// Both sides of the ergodic bound for one window, plus the derived
/// feasibility and objective error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicCheck {
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `‖Ax_T + By_T − b‖`
    pub feas_norm: f64,
    /// `δ_ξ / (2(1+T)(‖λ*‖+1))`
    pub feas_bound: f64,
    /// `|Θ(u_T) − Θ(u*)|`
    pub obj_gap: f64,
    /// `δ_ξ / (2(1+T))`
    pub obj_bound: f64,
}

/// `δ_ξ = sup_{‖λ‖≤ξ} ‖(u*−u^κ; λ−λ^κ)‖²_H + ξ₃‖E^κ‖²` with `ξ = 2‖λ*‖ + 1`.
///
/// The `λλ` block of `H` is `ρI`, so the supremum of the convex quadratic sits
/// on the sphere `‖λ‖ = ξ` in the direction of its linear coefficient.
pub fn delta_xi(
    spec: &ProblemSpec,
    mats: &CertificateMatrices,
    xis: &XiConstants,
    w_kappa: &Vector,
    ey_kappa_lyap: f64,
    w_star: &Vector,
) -> f64 {
    let layout = &mats.layout;
    let (lo, n, pl) = (layout.lambda_offset(), layout.rows(), layout.primal_len());
    let lambda_star = w_star.rows(lo, n).into_owned();
    let radius = 2.0 * lambda_star.norm() + 1.0;
    let lambda_k = w_kappa.rows(lo, n).into_owned();
    let a = (w_star.rows(0, pl) - w_kappa.rows(0, pl)).into_owned();
    let rho = mats.h[(lo, lo)];
    let h_lu = mats.h.view((lo, 0), (n, pl)).into_owned();
    let lin = &h_lu * &a - &lambda_k * rho;
    let lambda = if lin.norm() > 0.0 {
        &lin * (radius / lin.norm())
    } else {
        let mut e = Vector::zeros(n);
        e[0] = radius;
        e
    };
    let mut probe = w_star.clone();
    probe.rows_mut(lo, n).copy_from(&lambda);
    mats.h_norm_sq(&(probe - w_kappa))
        + xis.xi3 * residual_of(spec, layout, w_kappa).norm_squared()
        + ey_kappa_lyap
}

/// Ergodic checks for every window `T = 1..` starting at `κ`.
pub fn ergodic_series(
    spec: &ProblemSpec,
    iterates: &[Vector],
    predictors: &[Vector],
    mats: &CertificateMatrices,
    xis: &XiConstants,
    kappa: usize,
    w_ref: &Vector,
) -> Result<Vec<ErgodicCheck>> {
    let layout = &mats.layout;
    check_lengths(iterates, Some(predictors), layout.len())?;
    if kappa >= predictors.len() {
        return Err(Error::Range(format!("κ = {kappa} exceeds {} predictors", predictors.len())));
    }
    let rq = run_quantities(spec, mats, iterates);
    let w_kappa = &iterates[kappa];
    let theta_ref = theta(spec, w_ref)?;
    let j_ref = j_map(spec, w_ref)?;
    let radius_rhs = mats.h_norm_sq(&(w_ref - w_kappa)) + xis.xi3 * rq.e_sq[kappa] + rq.ey_lyap[kappa];
    let delta = delta_xi(spec, mats, xis, w_kappa, rq.ey_lyap[kappa], w_ref);
    let lambda_norm = w_ref.rows(layout.lambda_offset(), layout.rows()).norm();
    let mut sum = predictors[kappa].clone();
    let mut out = Vec::new();
    for (t, pred) in predictors.iter().enumerate().skip(kappa + 1).map(|(k, p)| (k - kappa, p)) {
        sum += pred;
        let avg = &sum / (t + 1) as f64;
        let theta_avg = theta(spec, &avg)?;
        let denom = 2.0 * (1 + t) as f64;
        out.push(ErgodicCheck {
            t,
            lhs: theta_avg - theta_ref + (&avg - w_ref).dot(&j_ref),
            rhs: radius_rhs / denom,
            feas_norm: residual_of(spec, layout, &avg).norm(),
            feas_bound: delta / (denom * (lambda_norm + 1.0)),
            obj_gap: (theta_avg - theta_ref).abs(),
            obj_bound: delta / denom,
        });
    }
    Ok(out)
}

/// One window `κ..κ+T` of [`ergodic_series`].
pub fn check_ergodic_bound(
    spec: &ProblemSpec,
    iterates: &[Vector],
    predictors: &[Vector],
    mats: &CertificateMatrices,
    xis: &XiConstants,
    kappa: usize,
    t: usize,
    w_ref: &Vector,
) -> Result<ErgodicCheck> {
    if kappa + t >= predictors.len() {
        return Err(Error::Range(format!(
            "window κ..κ+T = {kappa}..{} exceeds {} predictors",
            kappa + t,
            predictors.len()
        )));
    }
    if t == 0 {
        let layout = &mats.layout;
        let rq = run_quantities(spec, mats, iterates);
        let avg = &predictors[kappa];
        let theta_ref = theta(spec, w_ref)?;
        let theta_avg = theta(spec, avg)?;
        let delta = delta_xi(spec, mats, xis, &iterates[kappa], rq.ey_lyap[kappa], w_ref);
        let lambda_norm = w_ref.rows(layout.lambda_offset(), layout.rows()).norm();
        return Ok(ErgodicCheck {
            t: 0,
            lhs: theta_avg - theta_ref + (avg - w_ref).dot(&j_map(spec, w_ref)?),
            rhs: (mats.h_norm_sq(&(w_ref - &iterates[kappa])) + xis.xi3 * rq.e_sq[kappa] + rq.ey_lyap[kappa]) / 2.0,
            feas_norm: residual_of(spec, layout, avg).norm(),
            feas_bound: delta / (2.0 * (lambda_norm + 1.0)),
            obj_gap: (theta_avg - theta_ref).abs(),
            obj_bound: delta / 2.0,
        });
    }
    let truncated = &predictors[..=kappa + t];
    let series = ergodic_series(spec, &iterates[..=kappa + t + 1], truncated, mats, xis, kappa, w_ref)?;
    Ok(*series.last().expect("window has at least one entry"))
}

/// `(k, min_{1≤t≤k}[ξ₁Σ‖AᵢE_{xᵢ}ᵗ‖² + ξ₂‖Eᵗ‖²], C/k)` with `C = ‖w⁰−w*‖²_H + ξ₃‖E⁰‖²`.
pub fn nonergodic_series(
    spec: &ProblemSpec,
    iterates: &[Vector],
    mats: &CertificateMatrices,
    xis: &XiConstants,
    w_star: &Vector,
) -> Result<Vec<(usize, f64, f64)>> {
    check_lengths(iterates, None, mats.layout.len())?;
    let rq = run_quantities(spec, mats, iterates);
    let c = mats.h_norm_sq(&(&iterates[0] - w_star)) + xis.xi3 * rq.e_sq[0] + rq.ey_lyap[0];
    let mut best = f64::INFINITY;
    Ok((1..iterates.len())
        .map(|k| {
            best = best.min(xis.xi1 * rq.ax_move_sq[k] + xis.xi2 * rq.e_sq[k]);
            (k, best, c / k as f64)
        })
        .collect())
}

/// Random points of 𝒲: lognormal x, Gaussian y projected onto its domain, Gaussian λ.
pub fn sample_probes(spec: &ProblemSpec, count: usize, seed: u64) -> Vec<Vector> {
    let layout = Layout::new(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.y_dim();
    let (mut l, mut u) = spec.y_domain().bounds(d);
    if let Some((hl, hu)) = spec.tail().h.indicator_bounds(d) {
        for i in 0..d {
            l[i] = l[i].max(hl[i]);
            u[i] = u[i].min(hu[i]);
        }
    }
    (0..count)
        .map(|_| {
            let mut w = Vector::zeros(layout.len());
            for j in 0..layout.x_len() {
                w[j] = rng.sample::<f64, _>(StandardNormal).exp();
            }
            let y = Vector::from_fn(d, |_, _| rng.sample(StandardNormal));
            w.rows_mut(layout.y_offset(), d).copy_from(&clip(&y, &l, &u));
            for j in layout.lambda_offset()..layout.len() {
                w[j] = rng.sample(StandardNormal);
            }
            w
        })
        .collect()
}

/// `max_probe max(0, −[Θ(probe) − Θ(w) + ⟨probe − w, 𝒥(probe)⟩])`, zero at a saddle point.
pub fn vi_residual(spec: &ProblemSpec, w: &Vector, probes: &[Vector]) -> Result<f64> {
    let theta_w = theta(spec, w)?;
    let mut worst: f64 = 0.0;
    for probe in probes {
        let val = theta(spec, probe)? - theta_w + (probe - w).dot(&j_map(spec, probe)?);
        worst = worst.max(-val);
    }
    Ok(worst)
}

/// Smallest value over the probes of
/// `Θ(w) − Θ(w̃) + ⟨w − w̃, 𝒥(w̃) + Q(w̃ − wᵏ)⟩ + ‖wᵏ − w̃‖²_N`.
pub fn prediction_vi_min(
    spec: &ProblemSpec,
    mats: &CertificateMatrices,
    wk: &Vector,
    pred: &Vector,
    probes: &[Vector],
) -> Result<f64> {
    let theta_pred = theta(spec, pred)?;
    let dir = j_map(spec, pred)? + &mats.q * (pred - wk);
    let n_term = mats.n_norm_sq(&(wk - pred));
    let mut min = f64::INFINITY;
    for probe in probes {
        let val = theta(spec, probe)? - theta_pred + (probe - pred).dot(&dir) + n_term;
        min = min.min(val);
    }
    Ok(min)
}

/// Machine-readable certificate summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    #[serde(rename = "H_min_eig")]
    pub h_min_eig: f64,
    pub xi: [f64; 3],
    pub contraction_min_slack: Option<f64>,
    pub ergodic_lhs_rhs: Option<[f64; 2]>,
    #[serde(rename = "K_membership")]
    pub k_membership: bool,
    #[serde(rename = "G_min_eig")]
    pub g_min_eig: f64,
    pub contraction_tolerance: Option<f64>,
    pub contraction_min_slack_literal: Option<f64>,
    pub weak_contraction_min_slack: Option<f64>,
    pub g_lower_bound_min_slack: Option<f64>,
    pub nonergodic_min_margin: Option<f64>,
    pub ergodic_feasibility: Option<[f64; 2]>,
    pub correction_identity_max_error: Option<f64>,
    pub variant: String,
}

/// Certificate evaluation of a full run against a reference `w*`.
#[derive(Debug, Clone)]
pub struct RunCertificate {
    pub report: CertificateReport,
    /// `‖wᵏ − w*‖²_H`, `k = 0..=K`.
    pub h_dist_sq: Vec<f64>,
    /// Contraction slack per step, `k = 0..K`.
    pub slacks: Vec<f64>,
}

fn min_of(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::min)
}

/// Evaluates every run-level certificate. `w_star` may be absent, in which
/// case only the parameter-level entries are filled.
pub fn certify_run(
    spec: &ProblemSpec,
    params: &SolverParams,
    variant: Variant,
    iterates: &[Vector],
    predictors: &[Vector],
    w_star: Option<&Vector>,
) -> Result<RunCertificate> {
    let mats = assemble(spec, params, variant)?;
    let xis = xi_constants(params, spec.num_blocks())?;
    let h = verify_h_positive_definite(&mats, spec, params)?;
    let mut report = CertificateReport {
        h_min_eig: h.min_eig,
        xi: [xis.xi1, xis.xi2, xis.xi3],
        contraction_min_slack: None,
        ergodic_lhs_rhs: None,
        k_membership: check_stepsize_region(params.alpha, params.tau).admissible,
        g_min_eig: g_min_eig(&mats)?,
        contraction_tolerance: None,
        contraction_min_slack_literal: None,
        weak_contraction_min_slack: None,
        g_lower_bound_min_slack: None,
        nonergodic_min_margin: None,
        ergodic_feasibility: None,
        correction_identity_max_error: None,
        variant: match variant {
            Variant::Base => "base".into(),
            Variant::Extension { .. } => "extension".into(),
        },
    };
    if !predictors.is_empty() {
        report.correction_identity_max_error = Some(correction_identity_error(iterates, predictors, &mats)?);
        report.g_lower_bound_min_slack = min_of(&check_g_lower_bound(spec, iterates, predictors, &mats, &xis)?);
    }
    let Some(w_star) = w_star else {
        return Ok(RunCertificate {
            report,
            h_dist_sq: Vec::new(),
            slacks: Vec::new(),
        });
    };
    let h_dist_sq = iterates.iter().map(|w| mats.h_norm_sq(&(w - w_star))).collect();
    let slacks = check_contraction(spec, iterates, &mats, &xis, w_star)?;
    report.contraction_tolerance = Some(contraction_tolerance(&mats, &iterates[0], w_star));
    report.contraction_min_slack = min_of(&slacks);
    report.contraction_min_slack_literal = min_of(&check_contraction_literal(spec, iterates, &mats, &xis, w_star)?);
    if !predictors.is_empty() {
        report.weak_contraction_min_slack = min_of(&check_weak_contraction(iterates, predictors, &mats, w_star)?);
        let t = predictors.len() - 1;
        let erg = check_ergodic_bound(spec, iterates, predictors, &mats, &xis, 0, t, w_star)?;
        report.ergodic_lhs_rhs = Some([erg.lhs, erg.rhs]);
        report.ergodic_feasibility = Some([erg.feas_norm, erg.feas_bound]);
        report.nonergodic_min_margin = nonergodic_series(spec, iterates, &mats, &xis, w_star)?
            .iter()
            .map(|(_, v, bound)| bound - v)
            .reduce(f64::min);
    }
    Ok(RunCertificate {
        report,
        h_dist_sq,
        slacks,
    })
}
