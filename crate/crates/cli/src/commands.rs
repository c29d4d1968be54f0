//! The `verify` and `factorize` verbs.

use std::path::Path;

use mlab::interaction::GramMatrix;
use mlab::oracle::{
    bound_sweep, invariant_suite, BoundReport, InvariantReport, RandomSuiteConfig, RNG_ALGORITHM,
};
use mlab::readout_opt::{cp_factorize, FactorizeOptions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, EXIT_ANALYSIS, EXIT_BOUND};
use crate::scenario::{load_json, Settings, FORMAT_VERSION};
use crate::wire::{matrix_from_entries, real_matrix_to_wire, Entry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub rng: String,
    pub bound: BoundReport,
    pub invariants: InvariantReport,
    pub elapsed_seconds: f64,
    pub pass: bool,
}

/// Runs the bound sweep and the invariant suite. A bound violation exits
/// with code 4, a failed invariant with code 3; both attach the report.
pub fn verify(config: Option<&Path>, seed: Option<u64>) -> Result<VerifyReport, CliError> {
    let mut cfg: RandomSuiteConfig = match config {
        Some(path) => load_json(path)?,
        None => RandomSuiteConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let start = std::time::Instant::now();
    let bound = bound_sweep(&cfg)?;
    let invariants = invariant_suite(&cfg)?;
    let report = VerifyReport {
        rng: RNG_ALGORITHM.into(),
        pass: bound.pass && invariants.pass,
        bound,
        invariants,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    let attached = || serde_json::to_value(&report).expect("report serializes");
    if !report.bound.pass {
        let err: CliError = report.bound.clone().into_result().unwrap_err().into();
        debug_assert_eq!(err.exit_code, EXIT_BOUND);
        return Err(err.with_report(attached()));
    }
    if !report.invariants.pass {
        let mut err = CliError::analysis("invariant suite reported deviations above tolerance");
        err.exit_code = EXIT_ANALYSIS;
        return Err(err.with_report(attached()));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramFile {
    pub version: u32,
    /// Entries as numbers or `[re, im]`.
    pub gram: Vec<Vec<Entry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outcomes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizeReport {
    /// `f[m][a]`, nonnegative, with `FᵀF ≈ Re(G)`.
    pub f: Vec<Vec<f64>>,
    pub outcomes: usize,
    pub residual: f64,
    pub tol: f64,
    pub seed: u64,
    pub restart: usize,
    pub iterations: usize,
}

pub fn factorize(path: &Path, settings: &Settings) -> Result<FactorizeReport, CliError> {
    let file: GramFile = load_json(path)?;
    if file.version != FORMAT_VERSION {
        return Err(CliError::validation(format!(
            "unsupported version {}, expected {FORMAT_VERSION}",
            file.version
        )));
    }
    let g = GramMatrix::new(matrix_from_entries(&file.gram, "gram")?)?;
    let defaults = FactorizeOptions::default();
    let opts = FactorizeOptions {
        max_outcomes: file.max_outcomes,
        restarts: file.restarts.unwrap_or(defaults.restarts),
        tol: settings.tol,
        seed: settings.seed,
        ..defaults
    };
    let fact = cp_factorize(&g, &opts)?;
    Ok(FactorizeReport {
        f: real_matrix_to_wire(&fact.f),
        outcomes: fact.outcomes(),
        residual: fact.residual,
        tol: opts.tol,
        seed: fact.seed,
        restart: fact.restart,
        iterations: fact.iterations,
    })
}
