//! Monte-Carlo harness: convergence traces, parameter sweeps with
//! baselines, and per-iteration timing versus surface size.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_watts, sample_channels, ScenarioConfig, SystemDims};
use crate::error::{invalid, Error, Result};
use crate::solver::{pddgp, ConvergenceTrace, InitialPoint, Problem, Solution, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Joint covariance and phase optimization.
    Pddgp,
    /// Covariance only, surface removed.
    NoIrs,
    /// Covariance only, phases frozen at their random initial value.
    RandomPhase,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pddgp, Method::NoIrs, Method::RandomPhase];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Pddgp => "pddgp",
            Method::NoIrs => "no_irs",
            Method::RandomPhase => "random_phase",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pddgp" => Ok(Method::Pddgp),
            "no_irs" => Ok(Method::NoIrs),
            "random_phase" => Ok(Method::RandomPhase),
            other => Err(invalid(format!(
                "unknown method `{other}` (expected pddgp, no_irs or random_phase)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    None,
    /// Power budgets in dBm.
    PmaxDbm(Vec<f64>),
    /// IRS element counts.
    NI(Vec<usize>),
}

impl Sweep {
    pub fn variable(&self) -> &'static str {
        match self {
            Sweep::None => "none",
            Sweep::PmaxDbm(_) => "pmax_dbm",
            Sweep::NI(_) => "n_i",
        }
    }

    fn points(&self) -> Vec<f64> {
        match self {
            Sweep::None => vec![0.0],
            Sweep::PmaxDbm(v) => v.clone(),
            Sweep::NI(v) => v.iter().map(|n| *n as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub dims: SystemDims,
    pub sweep: Sweep,
    pub realizations: usize,
    pub methods: Vec<Method>,
    pub solver: SolverConfig,
    /// Worker threads for realization-level parallelism.
    pub threads: usize,
    /// When false every timing column is written as zero.
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioConfig, dims: SystemDims) -> Self {
        Self {
            scenario,
            dims,
            sweep: Sweep::None,
            realizations: 20,
            methods: vec![Method::Pddgp],
            solver: SolverConfig::default(),
            threads: 1,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.scenario.validate()?;
        self.solver.validate()?;
        if self.dims.k != self.scenario.num_receivers() {
            return Err(invalid(format!(
                "dims.k = {} but the scenario has {} primary receivers",
                self.dims.k,
                self.scenario.num_receivers()
            )));
        }
        if self.realizations == 0 {
            return Err(invalid("at least one realization is required"));
        }
        if self.methods.is_empty() {
            return Err(invalid("at least one method is required"));
        }
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
        match &self.sweep {
            Sweep::PmaxDbm(v) if v.is_empty() || !sorted(v) => {
                Err(invalid("pmax_dbm sweep must be non-empty and sorted"))
            }
            Sweep::NI(v) if v.is_empty() || !v.windows(2).all(|w| w[0] <= w[1]) => {
                Err(invalid("n_i sweep must be non-empty and sorted"))
            }
            _ => Ok(()),
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads.max(1))
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))
    }
}

/// Builds the normalized problem of realization `r` for `dims` and `scenario`.
pub fn build_problem(scenario: &ScenarioConfig, dims: &SystemDims, r: u64) -> Result<Problem> {
    let ch = sample_channels(dims, scenario, r)?;
    Problem::new(ch, scenario.normalized_thresholds()?, scenario.p_max_watts)
}

/// Joint optimization from the standard starting point of realization `r`.
pub fn solve_pddgp(problem: &Problem, cfg: &SolverConfig, seed: u64, r: u64) -> Result<Solution> {
    pddgp(problem, InitialPoint::standard(problem, seed, r), cfg)
}

/// Covariance optimization on the same links with the surface removed.
pub fn baseline_no_irs(problem: &Problem, cfg: &SolverConfig, seed: u64, r: u64) -> Result<Solution> {
    let reduced = problem.without_irs();
    pddgp(&reduced, InitialPoint::standard(&reduced, seed, r), cfg)
}

/// Covariance optimization with the phases frozen at the random start that
/// the joint solver would use for the same realization.
pub fn baseline_random_phase(problem: &Problem, cfg: &SolverConfig, seed: u64, r: u64) -> Result<Solution> {
    let frozen = SolverConfig {
        optimize_phase: false,
        ..cfg.clone()
    };
    pddgp(problem, InitialPoint::standard(problem, seed, r), &frozen)
}

pub fn run_method(method: Method, problem: &Problem, cfg: &SolverConfig, seed: u64, r: u64) -> Result<Solution> {
    match method {
        Method::Pddgp => solve_pddgp(problem, cfg, seed, r),
        Method::NoIrs => baseline_no_irs(problem, cfg, seed, r),
        Method::RandomPhase => baseline_random_phase(problem, cfg, seed, r),
    }
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub realization: u64,
    pub rate_nats: f64,
    pub rate_bps_hz: f64,
    pub iters_inner_total: usize,
    pub iters_outer: usize,
    pub wall_ms: f64,
    /// Largest interference violation relative to its threshold (0 when feasible).
    pub max_ipc_residual: f64,
    pub termination: String,
}

impl SweepRow {
    pub fn succeeded(&self) -> bool {
        self.termination == "converged"
    }
}

/// Aggregates of one (method, sweep point) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub method: Method,
    pub sweep_value: f64,
    /// Mean over successful realizations.
    pub mean_rate_nats: f64,
    /// Sample standard deviation over successful realizations (0 for one sample).
    pub std_rate_nats: f64,
    /// Every realization in index order, failures included.
    pub rates_nats: Vec<f64>,
    pub mean_wall_ms: f64,
    pub mean_inner_iters: f64,
    pub mean_outer_iters: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sweep_var: String,
    pub rows: Vec<SweepRow>,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, method: Method, sweep_value: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.sweep_value == sweep_value)
    }

    /// Cells of one method, in sweep order.
    pub fn series(&self, method: Method) -> Vec<&SweepCell> {
        self.cells.iter().filter(|c| c.method == method).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.rows)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn aggregate(method: Method, sweep_value: f64, rows: &[SweepRow]) -> SweepCell {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.succeeded()).collect();
    let ok_rates: Vec<f64> = ok.iter().map(|r| r.rate_nats).collect();
    SweepCell {
        method,
        sweep_value,
        mean_rate_nats: mean(&ok_rates),
        std_rate_nats: sample_std(&ok_rates),
        rates_nats: rows.iter().map(|r| r.rate_nats).collect(),
        mean_wall_ms: mean(&ok.iter().map(|r| r.wall_ms).collect::<Vec<_>>()),
        mean_inner_iters: mean(&ok.iter().map(|r| r.iters_inner_total as f64).collect::<Vec<_>>()),
        mean_outer_iters: mean(&ok.iter().map(|r| r.iters_outer as f64).collect::<Vec<_>>()),
        failures: rows.len() - ok.len(),
    }
}

fn row_from(method: Method, sweep: &Sweep, value: f64, r: u64, sol: &Solution, timing: bool) -> SweepRow {
    SweepRow {
        method,
        sweep_var: sweep.variable().to_string(),
        sweep_value: value,
        realization: r,
        rate_nats: sol.rate_nats,
        rate_bps_hz: sol.rate_bps_hz(),
        iters_inner_total: sol.inner_iterations,
        iters_outer: sol.outer_iterations,
        wall_ms: if timing { sol.wall_ms } else { 0.0 },
        max_ipc_residual: sol.max_violation(),
        termination: if sol.feasible {
            sol.termination.as_str().to_string()
        } else {
            format!("infeasible_{}", sol.termination.as_str())
        },
    }
}

fn point_setup(spec: &ExperimentSpec, value: f64) -> (ScenarioConfig, SystemDims) {
    let mut scenario = spec.scenario.clone();
    let mut dims = spec.dims;
    match spec.sweep {
        Sweep::PmaxDbm(_) => scenario.p_max_watts = dbm_to_watts(value),
        Sweep::NI(_) => dims.n_i = value as usize,
        Sweep::None => {}
    }
    (scenario, dims)
}

/// Solves every (sweep point, method, realization) triple. Realization `i`
/// uses the channels of `(seed, i)` for every method; the surface links are
/// nested across element counts.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let pool = spec.pool()?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for value in spec.sweep.points() {
        let (scenario, dims) = point_setup(spec, value);
        let per_realization: Vec<Result<Vec<SweepRow>>> = pool.install(|| {
            (0..spec.realizations as u64)
                .into_par_iter()
                .map(|r| {
                    let problem = build_problem(&scenario, &dims, r)?;
                    spec.methods
                        .iter()
                        .map(|m| {
                            let sol = run_method(*m, &problem, &spec.solver, scenario.seed, r)?;
                            Ok(row_from(*m, &spec.sweep, value, r, &sol, spec.record_timing))
                        })
                        .collect()
                })
                .collect()
        });
        let mut point_rows = Vec::new();
        for res in per_realization {
            point_rows.extend(res?);
        }
        for m in &spec.methods {
            let mut mrows: Vec<SweepRow> = point_rows.iter().filter(|r| r.method == *m).cloned().collect();
            mrows.sort_by_key(|r| r.realization);
            cells.push(aggregate(*m, value, &mrows));
            rows.extend(mrows);
        }
    }
    Ok(SweepResult {
        sweep_var: spec.sweep.variable().to_string(),
        rows,
        cells,
    })
}

/// One line of the convergence CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub iter: usize,
    pub outer_stage: usize,
    pub rho: f64,
    #[serde(rename = "R_nats")]
    pub r_nats: f64,
    #[serde(rename = "Rhat_nats")]
    pub rhat_nats: f64,
    pub max_abs_g: f64,
    pub mu: f64,
    pub alpha: f64,
    pub wall_ms: f64,
}

pub fn convergence_rows(trace: &ConvergenceTrace, timing: bool) -> Vec<ConvergenceRow> {
    trace
        .records
        .iter()
        .map(|r| ConvergenceRow {
            iter: r.iter,
            outer_stage: r.outer_stage,
            rho: r.rho,
            r_nats: r.rate_nats,
            rhat_nats: r.augmented_nats,
            max_abs_g: r.max_abs_g,
            mu: r.mu,
            alpha: r.alpha,
            wall_ms: if timing { r.wall_ms } else { 0.0 },
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConvergenceRun {
    pub n_t: usize,
    pub solution: Solution,
}

/// Joint solve of realization 0 for each transmit antenna count in `n_t_values`
/// (the spec's own `n_t` when empty).
pub fn run_convergence(spec: &ExperimentSpec, n_t_values: &[usize]) -> Result<Vec<ConvergenceRun>> {
    spec.validate()?;
    let list = if n_t_values.is_empty() { vec![spec.dims.n_t] } else { n_t_values.to_vec() };
    list.into_iter()
        .map(|n_t| {
            let dims = SystemDims { n_t, ..spec.dims };
            let problem = build_problem(&spec.scenario, &dims, 0)?;
            let solution = solve_pddgp(&problem, &spec.solver, spec.scenario.seed, 0)?;
            Ok(ConvergenceRun { n_t, solution })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub n_i: usize,
    pub solves: usize,
    pub inner_iterations: usize,
    pub mean_iter_ms: f64,
    pub mean_solve_ms: f64,
}

/// Mean wall time per inner iteration of the joint solver for each `n_i`.
/// Runs single-threaded regardless of `spec.threads`.
pub fn benchmark_scaling(spec: &ExperimentSpec, n_i_values: &[usize]) -> Result<Vec<BenchmarkRow>> {
    spec.validate()?;
    n_i_values
        .iter()
        .map(|&n_i| {
            let dims = SystemDims { n_i, ..spec.dims };
            let mut total_ms = 0.0;
            let mut iters = 0;
            for r in 0..spec.realizations as u64 {
                let problem = build_problem(&spec.scenario, &dims, r)?;
                let sol = solve_pddgp(&problem, &spec.solver, spec.scenario.seed, r)?;
                total_ms += sol.wall_ms;
                iters += sol.inner_iterations;
            }
            Ok(BenchmarkRow {
                n_i,
                solves: spec.realizations,
                inner_iterations: iters,
                mean_iter_ms: total_ms / iters.max(1) as f64,
                mean_solve_ms: total_ms / spec.realizations as f64,
            })
        })
        .collect()
}

/// Complex multiplications spent by one phase-gradient evaluation, following
/// the implemented evaluation order (effective channels, rate matrix and its
/// Cholesky solve, then one `vecd` per receiver).
pub fn grad_theta_complex_mults(d: &SystemDims) -> u64 {
    let (t, r, p, i, k) = (d.n_t as u64, d.n_r as u64, d.n_p as u64, d.n_i as u64, d.k as u64);
    let z_r = i * t + r * i * t;
    let rate_matrix = r * t * t + r * r * t;
    let solve = r * r * r / 3 + r * r * t;
    let vecd_r = r * t * t + r * t * i + r * i;
    let per_k = (i * t + p * i * t) + p * t * t + p * t + (p * t * i + p * i) + i;
    z_r + rate_matrix + solve + vecd_r + k * per_k
}

/// The per-iteration phase-gradient term count of the linear-complexity
/// analysis, `2 N_R N_I N_T + 2 N_R N_T^2 + 2 N_R^2 N_T + N_R^3 + (K+1) N_P N_T N_I
/// + K N_T^2 N_I + K N_P N_T^2`.
pub fn grad_theta_reference_mults(d: &SystemDims) -> u64 {
    let (t, r, p, i, k) = (d.n_t as u64, d.n_r as u64, d.n_p as u64, d.n_i as u64, d.k as u64);
    2 * r * i * t + 2 * r * t * t + 2 * r * r * t + r * r * r + (k + 1) * p * t * i + k * t * t * i + k * p * t * t
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Writes one convergence CSV per run into `dir`; returns the paths.
pub fn write_convergence(dir: &Path, runs: &[ConvergenceRun], timing: bool) -> Result<Vec<PathBuf>> {
    runs.iter()
        .map(|run| {
            let path = dir.join(format!("convergence_nt{}.csv", run.n_t));
            write_rows(&path, &convergence_rows(&run.solution.trace, timing))?;
            Ok(path)
        })
        .collect()
}

pub fn write_benchmark(path: &Path, rows: &[BenchmarkRow]) -> Result<()> {
    write_rows(path, rows)
}
