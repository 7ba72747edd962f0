//! Flags, the optional JSON config file, and their resolution into a [`RunConfig`].

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[value(name = "admm_lqp")]
    AdmmLqp,
    #[value(name = "eadmm_lqp")]
    EadmmLqp,
    #[value(name = "baseline_gs")]
    BaselineGs,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::AdmmLqp => "admm_lqp",
            Algorithm::EadmmLqp => "eadmm_lqp",
            Algorithm::BaselineGs => "baseline_gs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorName {
    SparseSignal,
    LpBoxDual,
    Lasso,
}

/// A fully specified generator call.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    SparseSignal {
        n_rows: usize,
        block_size: usize,
        p: usize,
        sparsity: f64,
    },
    LpBoxDual {
        m: usize,
        n: usize,
    },
    Lasso {
        n: usize,
        d: usize,
        weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    File(PathBuf),
    Generator(Generator),
}

/// Everything one solver run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ProblemSource,
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub tau: f64,
    pub beta: f64,
    pub mu: f64,
    /// Overrides the default `γ`; the LQP weights follow as `rᵢ = γβ‖AᵢᵀAᵢ‖`.
    pub gamma: Option<f64>,
    /// Overrides `σ` of the linearized variant (default: its lower bound).
    pub sigma: Option<f64>,
    pub max_iter: usize,
    pub feas_tol: f64,
    pub trace_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    /// Seed of the instance generator.
    pub seed: u64,
}

impl RunConfig {
    /// A config with default parameters for a generated instance.
    pub fn for_generator(generator: Generator, algorithm: Algorithm) -> Self {
        RunConfig {
            source: ProblemSource::Generator(generator),
            algorithm,
            alpha: 0.0,
            tau: 1.0,
            beta: 1.0,
            mu: 0.5,
            gamma: None,
            sigma: None,
            max_iter: 5000,
            feas_tol: 1e-8,
            trace_out: None,
            report_out: None,
            seed: 7,
        }
    }
}

/// Run flags. The same names (in snake_case) are accepted as keys of the
/// `--config` JSON file; flags given on the command line take precedence.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// JSON file with defaults for any of the other flags.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Problem description in JSON.
    #[arg(long, value_name = "FILE", conflicts_with = "generator")]
    pub problem: Option<PathBuf>,
    /// Built-in instance generator.
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorName>,
    /// sparse-signal: rows of the measurement matrix.
    #[arg(long)]
    pub n_rows: Option<usize>,
    /// sparse-signal: columns per block.
    #[arg(long)]
    pub block_size: Option<usize>,
    /// sparse-signal: number of nonnegative blocks.
    #[arg(long)]
    pub p: Option<usize>,
    /// sparse-signal: fraction of nonzero planted entries.
    #[arg(long)]
    pub sparsity: Option<f64>,
    /// lp-box-dual: equality constraints of the primal LP.
    #[arg(long)]
    pub m: Option<usize>,
    /// lp-box-dual: primal variables; lasso: observations.
    #[arg(long)]
    pub n: Option<usize>,
    /// lasso: dimension of y.
    #[arg(long)]
    pub d: Option<usize>,
    /// lasso: L1 weight.
    #[arg(long)]
    pub weight: Option<f64>,
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub feas_tol: Option<f64>,
    /// Per-iteration trace CSV.
    #[arg(long, value_name = "PATH")]
    pub trace_out: Option<PathBuf>,
    /// Certificate report JSON.
    #[arg(long, value_name = "PATH")]
    pub report_out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($flags:ident, $file:ident; $($field:ident),*) => {
        RunArgs {
            config: $flags.config.clone(),
            $($field: $flags.$field.clone().or($file.$field),)*
        }
    };
}

impl RunArgs {
    /// Reads a config file; unknown keys are rejected by name.
    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Flags win over the file.
    pub fn overlay(&self, file: RunArgs) -> RunArgs {
        let flags = self;
        overlay!(flags, file; problem, generator, n_rows, block_size, p, sparsity, m, n, d, weight,
            algorithm, alpha, tau, beta, mu, gamma, sigma, max_iter, feas_tol, trace_out, report_out, seed)
    }

    /// Merges the config file (if any) and fills in defaults.
    pub fn resolve(&self) -> Result<RunConfig> {
        let merged = match &self.config {
            Some(path) => self.overlay(Self::from_config_file(path)?),
            None => self.clone(),
        };
        merged.resolve_flags()
    }

    fn resolve_flags(&self) -> Result<RunConfig> {
        let source = match (&self.problem, self.generator) {
            (Some(_), Some(_)) => bail!("`problem` and `generator` are mutually exclusive"),
            (Some(path), None) => ProblemSource::File(path.clone()),
            (None, Some(name)) => ProblemSource::Generator(self.generator_call(name)?),
            (None, None) => bail!("one of `--problem` or `--generator` is required"),
        };
        let algorithm = self.algorithm.unwrap_or(Algorithm::AdmmLqp);
        let mut cfg = RunConfig {
            source,
            ..RunConfig::for_generator(Generator::LpBoxDual { m: 1, n: 1 }, algorithm)
        };
        cfg.alpha = self.alpha.unwrap_or(cfg.alpha);
        cfg.tau = self.tau.unwrap_or(cfg.tau);
        cfg.beta = self.beta.unwrap_or(cfg.beta);
        cfg.mu = self.mu.unwrap_or(cfg.mu);
        cfg.gamma = self.gamma;
        cfg.sigma = self.sigma;
        cfg.max_iter = self.max_iter.unwrap_or(cfg.max_iter);
        cfg.feas_tol = self.feas_tol.unwrap_or(cfg.feas_tol);
        cfg.trace_out = self.trace_out.clone();
        cfg.report_out = self.report_out.clone();
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        for (name, value) in [("alpha", cfg.alpha), ("tau", cfg.tau), ("beta", cfg.beta), ("mu", cfg.mu), ("feas_tol", cfg.feas_tol)] {
            if !value.is_finite() {
                bail!("`{name}` must be finite, got {value}");
            }
        }
        Ok(cfg)
    }

    fn generator_call(&self, name: GeneratorName) -> Result<Generator> {
        let unused = |fields: &[(&str, bool)]| -> Result<()> {
            match fields.iter().find(|(_, set)| *set) {
                Some((field, _)) => bail!("`{field}` does not apply to the {name:?} generator"),
                None => Ok(()),
            }
        };
        Ok(match name {
            GeneratorName::SparseSignal => {
                unused(&[("m", self.m.is_some()), ("n", self.n.is_some()), ("d", self.d.is_some()), ("weight", self.weight.is_some())])?;
                let sparsity = self.sparsity.unwrap_or(0.2);
                if !(0.0..=1.0).contains(&sparsity) {
                    bail!("`sparsity` must lie in [0, 1], got {sparsity}");
                }
                Generator::SparseSignal {
                    n_rows: self.n_rows.unwrap_or(40),
                    block_size: self.block_size.unwrap_or(5),
                    p: self.p.unwrap_or(3),
                    sparsity,
                }
            }
            GeneratorName::LpBoxDual => {
                unused(&[("n_rows", self.n_rows.is_some()), ("block_size", self.block_size.is_some()), ("p", self.p.is_some()), ("sparsity", self.sparsity.is_some()), ("d", self.d.is_some()), ("weight", self.weight.is_some())])?;
                Generator::LpBoxDual {
                    m: self.m.unwrap_or(3),
                    n: self.n.unwrap_or(8),
                }
            }
            GeneratorName::Lasso => {
                unused(&[("n_rows", self.n_rows.is_some()), ("block_size", self.block_size.is_some()), ("p", self.p.is_some()), ("sparsity", self.sparsity.is_some()), ("m", self.m.is_some())])?;
                Generator::Lasso {
                    n: self.n.unwrap_or(30),
                    d: self.d.unwrap_or(6),
                    weight: self.weight.unwrap_or(0.5),
                }
            }
        })
    }
}
