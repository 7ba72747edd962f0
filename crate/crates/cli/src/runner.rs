use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use log::{info, warn};
use lqpadmm::certify::{certify_run, check_stepsize_region, CertificateReport, Variant};
use lqpadmm::extension::{default_extension_params, reference_solution_extended, solve_extended, ExtensionParams};
use lqpadmm::numeric;
use lqpadmm::problem::{
    evaluate_objective, generate_lasso_composite_instance, generate_lp_box_dual_instance,
    generate_sparse_signal_instance, ProblemFile, ProblemSpec,
};
use lqpadmm::solver::{
    baseline_gauss_seidel_admm, default_params, reference_solution, solve, SolveOutput, SolverParams,
    TerminationReason,
};
use serde::Serialize;

use crate::config::{Algorithm, Generator, ProblemSource, RunConfig};
use crate::trace::write_trace;

pub fn load_problem(cfg: &RunConfig) -> Result<ProblemSpec> {
    Ok(match &cfg.source {
        ProblemSource::File(path) => ProblemFile::load(path)
            .and_then(ProblemFile::into_spec)
            .with_context(|| format!("loading problem {}", path.display()))?,
        ProblemSource::Generator(g) => match *g {
            Generator::SparseSignal {
                n_rows,
                block_size,
                p,
                sparsity,
            } => generate_sparse_signal_instance(n_rows, block_size, p, sparsity, cfg.seed)?.spec,
            Generator::LpBoxDual { m, n } => generate_lp_box_dual_instance(m, n, cfg.seed)?.spec,
            Generator::Lasso { n, d, weight } => generate_lasso_composite_instance(n, d, weight, cfg.seed)?.spec,
        },
    })
}

fn base_params(spec: &ProblemSpec, cfg: &RunConfig) -> Result<SolverParams> {
    let mut params = default_params(spec, cfg.alpha, cfg.tau, cfg.beta, cfg.mu)?;
    if let Some(gamma) = cfg.gamma {
        params.gamma = gamma;
        params.r = spec
            .blocks()
            .iter()
            .map(|b| numeric::gram_norm(&b.a).map(|n| gamma * cfg.beta * n))
            .collect::<lqpadmm::Result<_>>()?;
    }
    params.max_iter = cfg.max_iter;
    params.feas_tol = cfg.feas_tol;
    params.validate(spec)?;
    Ok(params)
}

fn extension_params(spec: &ProblemSpec, cfg: &RunConfig) -> Result<ExtensionParams> {
    let mut params = default_extension_params(spec, cfg.alpha, cfg.tau, cfg.beta, cfg.mu)?;
    params.base = base_params(spec, cfg)?;
    if let Some(sigma) = cfg.sigma {
        params.sigma = sigma;
    }
    params.validate(spec)?;
    Ok(params)
}

/// Summary written to `--report-out`: run facts plus the certificate entries.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub algorithm: &'static str,
    pub termination: &'static str,
    pub iterations: usize,
    pub final_feas_norm: f64,
    pub final_objective: f64,
    #[serde(flatten)]
    pub certificate: Option<CertificateReport>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub spec: ProblemSpec,
    pub output: SolveOutput,
    pub report: RunReport,
}

impl RunResult {
    pub fn reason(&self) -> TerminationReason {
        self.output.reason
    }
}

/// Solves without touching the file system. With `certify`, a high-accuracy
/// reference run supplies `w*` and the trace gains `‖wᵏ − w*‖²_H` and the
/// contraction slacks.
pub fn execute(cfg: &RunConfig, certify: bool) -> Result<RunResult> {
    let spec = load_problem(cfg)?;
    let (mut output, certificate) = match cfg.algorithm {
        Algorithm::AdmmLqp => {
            let params = base_params(&spec, cfg)?;
            let out = solve(&spec, &params, None)?;
            let w_star = if certify { Some(reference_solution(&spec, &params)?.flatten()) } else { None };
            let cert = certify_run(&spec, &params, Variant::Base, &out.iterates, &out.predictors, w_star.as_ref())?;
            (out, certify.then_some(cert))
        }
        Algorithm::EadmmLqp => {
            let params = extension_params(&spec, cfg)?;
            let out = solve_extended(&spec, &params, None)?;
            let w_star = if certify {
                Some(reference_solution_extended(&spec, &params)?.flatten())
            } else {
                None
            };
            let variant = Variant::Extension { sigma: params.sigma };
            let cert = certify_run(&spec, &params.base, variant, &out.iterates, &out.predictors, w_star.as_ref())?;
            (out, certify.then_some(cert))
        }
        Algorithm::BaselineGs => (baseline_gauss_seidel_admm(&spec, cfg.beta, cfg.max_iter, cfg.feas_tol)?, None),
    };
    if let Some(cert) = &certificate {
        for (k, row) in output.trace.iter_mut().enumerate() {
            row.h_dist_sq = cert.h_dist_sq.get(k).copied();
            row.certificate_slack = k.checked_sub(1).and_then(|j| cert.slacks.get(j).copied());
        }
    }
    if let Some(err) = &output.failure {
        warn!("run stopped by a subproblem failure: {err}");
    }
    let last = output.trace.last().expect("trace has the initial row");
    let report = RunReport {
        algorithm: cfg.algorithm.as_str(),
        termination: output.reason.as_str(),
        iterations: output.iterations(),
        final_feas_norm: last.feas_norm,
        final_objective: evaluate_objective(&spec, &output.state.x, &output.state.y)?,
        certificate: certificate.map(|c| c.report),
    };
    info!(
        "{}: {} after {} iterations, ‖E‖ = {:e}",
        report.algorithm, report.termination, report.iterations, report.final_feas_norm
    );
    Ok(RunResult { spec, output, report })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// [`execute`] with certification, then writes the requested outputs.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    let result = execute(cfg, true)?;
    if let Some(path) = &cfg.trace_out {
        write_trace(create(path)?, &result.output.trace, result.spec.num_blocks())
            .with_context(|| format!("writing trace {}", path.display()))?;
    }
    if let Some(path) = &cfg.report_out {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &result.report)?;
        writeln!(w)?;
        w.flush()?;
    }
    if let Some(err) = &result.output.failure {
        anyhow::bail!("subproblem failure: {err}");
    }
    Ok(result)
}

/// 0 converged, 2 iteration cap, 1 anything else.
pub fn exit_code(reason: TerminationReason) -> i32 {
    match reason {
        TerminationReason::Converged => 0,
        TerminationReason::IterationCap => 2,
        TerminationReason::SubproblemFailure => 1,
    }
}

/// One line of a comparison or sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub algorithm: &'static str,
    pub alpha: f64,
    pub tau: f64,
    pub termination: &'static str,
    pub iterations: usize,
    pub final_feas_norm: f64,
    pub final_objective: f64,
}

fn summary(label: String, cfg: &RunConfig, r: &RunResult) -> SummaryRow {
    SummaryRow {
        label,
        algorithm: cfg.algorithm.as_str(),
        alpha: cfg.alpha,
        tau: cfg.tau,
        termination: r.report.termination,
        iterations: r.report.iterations,
        final_feas_norm: r.report.final_feas_norm,
        final_objective: r.report.final_objective,
    }
}

/// Runs both configs side by side (on two threads).
pub fn compare(a: &RunConfig, b: &RunConfig) -> Result<Vec<SummaryRow>> {
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| execute(a, false));
        let rb = execute(b, false);
        (ha.join().expect("comparison thread panicked"), rb)
    });
    Ok(vec![summary("A".into(), a, &ra?), summary("B".into(), b, &rb?)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SummaryRow>,
    /// `(α, τ, reason)` for every pair outside the stepsize region.
    pub skipped: Vec<(f64, f64, String)>,
}

/// One run per admissible `(α, τ)` of the grid.
pub fn sweep(base: &RunConfig, alphas: &[f64], taus: &[f64]) -> Result<SweepResult> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &alpha in alphas {
        for &tau in taus {
            let region = check_stepsize_region(alpha, tau);
            if !region.admissible {
                let reason = region.failing.join("; ");
                warn!("skipping (α, τ) = ({alpha}, {tau}): {reason}");
                skipped.push((alpha, tau, reason));
                continue;
            }
            let cfg = RunConfig { alpha, tau, ..base.clone() };
            let r = execute(&cfg, false)?;
            rows.push(summary(format!("sweep-{}", rows.len() + 1), &cfg, &r));
        }
    }
    Ok(SweepResult { rows, skipped })
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
