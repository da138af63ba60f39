//! Experiment driver: configuration, the experiments themselves, and
//! persistence of reports and plot-ready CSV.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`]. Ensembles
//! run in parallel through [`crate::dynamics::run_ensemble`], whose results
//! come back in sample order, so all reductions here are sequential and the
//! numbers do not depend on the thread count.

pub mod config;
pub mod ik;
pub mod kernel;
pub mod kinetic;
pub mod lot;
pub mod report;
pub mod rigidity;
pub mod theorem;
pub mod validate;

pub use config::{ExperimentConfig, ExperimentKind};
pub use ik::{ik_consistency, ik_continuum, ik_deterministic, ik_eigen, IkReport};
pub use kernel::{delta_limit_check, phi_integral, phi_kernel, DeltaLimitReport};
pub use kinetic::kwe_experiment;
pub use lot::lot_experiment;
pub use report::{Check, CsvArtifact, ExperimentReport, Metric};
pub use rigidity::rigidity_experiment;
pub use theorem::theorem_experiment;
pub use validate::weingarten_experiment;

use crate::error::{Error, Result};
use std::path::{Path, PathBuf};

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the experiment named by `cfg.kind`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Lot => lot_experiment(cfg),
        ExperimentKind::Theorem => theorem_experiment(cfg),
        ExperimentKind::Kwe => kwe_experiment(cfg),
        ExperimentKind::WeingartenValidate => weingarten_experiment(cfg),
        ExperimentKind::Rigidity => rigidity_experiment(cfg),
    }
}

/// Process exit codes.
pub mod exit {
    /// Every check passed.
    pub const PASS: i32 = 0;
    /// The run finished but at least one check failed.
    pub const FAIL: i32 = 1;
    /// The configuration or request was invalid.
    pub const CONFIG: i32 = 2;
    /// Reading the config or writing artifacts failed.
    pub const IO: i32 = 3;
    /// A numerical failure during the run.
    pub const RUNTIME: i32 = 4;
}

/// Maps an error to its exit code.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::SizeCap { .. } | Error::Power(_) | Error::StableRange { .. } => {
            exit::CONFIG
        }
        Error::Io(_) => exit::IO,
        _ => exit::RUNTIME,
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            exit::PASS
        } else {
            exit::FAIL
        }
    }
}

/// Runs a validated config and writes its artifacts to `cfg.output.dir`.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let report = run_experiment(cfg)?;
    let files = report.write(&cfg.output.dir)?;
    Ok(RunOutcome { report, files })
}

/// Loads a TOML config and runs it.
pub fn run(config_path: &Path) -> Result<RunOutcome> {
    run_config(&ExperimentConfig::from_file(config_path)?)
}
