//! JSON summaries shared by every command.

use std::path::Path;

use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::experiments::{BenchmarkRow, SweepCell};
use crate::solver::Solution;

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub crate_version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
    pub timing_recorded: bool,
}

impl Environment {
    pub fn current(threads: usize, timing_recorded: bool) -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads,
            timing_recorded,
        }
    }
}

/// Result block of a single solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub rate_nats: f64,
    pub rate_bps_hz: f64,
    pub augmented_nats: f64,
    pub termination: &'static str,
    pub feasible: bool,
    pub iterations_inner: usize,
    pub iterations_outer: usize,
    pub wall_ms: f64,
    pub trace_x: f64,
    /// `tr(Z_k X Z_k^H) - P_k` per receiver, noise-normalized.
    pub ipc_residuals: Vec<f64>,
    pub relative_violations: Vec<f64>,
}

impl SolveSummary {
    pub fn from_solution(sol: &Solution, thresholds: &[f64], timing: bool) -> Self {
        Self {
            rate_nats: sol.rate_nats,
            rate_bps_hz: sol.rate_bps_hz(),
            augmented_nats: sol.augmented_nats,
            termination: sol.termination.as_str(),
            feasible: sol.feasible,
            iterations_inner: sol.inner_iterations,
            iterations_outer: sol.outer_iterations,
            wall_ms: if timing { sol.wall_ms } else { 0.0 },
            trace_x: sol.x.trace(),
            ipc_residuals: sol.interference.iter().zip(thresholds).map(|(i, p)| i - p).collect(),
            relative_violations: sol.violations.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Results {
    Solve(SolveSummary),
    Convergence(Vec<ConvergenceSummary>),
    Sweep(Vec<SweepCell>),
    Benchmark(Vec<BenchmarkRow>),
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub n_t: usize,
    #[serde(flatten)]
    pub solve: SolveSummary,
}

/// Explains a solve that stopped without meeting the interference and
/// termination tolerances.
pub fn infeasible_reason(sol: &Solution) -> Option<String> {
    if sol.converged() {
        return None;
    }
    let worst = sol
        .interference
        .iter()
        .zip(&sol.violations)
        .fold(0.0f64, |acc, (i, v)| if *v > 0.0 { acc.max(*i) } else { acc });
    Some(format!(
        "infeasible: stopped by {} with max relative interference violation {:e} (interference {:e} in noise units)",
        sol.termination.as_str(),
        sol.max_violation(),
        worst
    ))
}

/// Top-level object printed on stdout and written next to the outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: &'static str,
    /// `ok`, or `infeasible` when some solve ended without meeting its constraints.
    pub status: &'static str,
    /// Why the run is not `ok`; absent otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub files: Vec<String>,
    pub results: Results,
    pub config: ConfigFile,
    pub environment: Environment,
}

impl RunSummary {
    /// Single-line form used on stdout.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("summary serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_pretty() + "\n").map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
