//! Alternating projected gradient ascent on the augmented Lagrangian (inner
//! loop) wrapped in penalty dual decomposition (outer loop).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{random_phases, ChannelSet, CMatrix, CVector, LANE_INIT_PHASE};
use crate::error::{dims, invalid, Result};
use crate::gradients::{grad_theta_at, grad_x_at, penalty_weights};
use crate::objective::{DualState, Evaluation, PhaseVector, SlackVector, TransmitCovariance};
use crate::projections::{project_covariance, project_phase, slack_from_interference};

/// Upper bound on a grown step size.
const MAX_STEP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Initial penalty parameter.
    pub rho0: f64,
    /// Penalty decrease factor applied after every outer stage.
    pub kappa: f64,
    /// Backtracking factor.
    pub gamma: f64,
    /// Initial phase step.
    pub mu0: f64,
    /// Initial covariance step.
    pub alpha0: f64,
    /// Relative progress of the augmented objective that ends an inner solve.
    pub inner_tol: f64,
    /// `|R - R_hat|` that ends the outer loop.
    pub outer_tol: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub rho_min: f64,
    pub max_backtracks: usize,
    /// Admitted interference violation, relative to each threshold.
    pub feasibility_tol: f64,
    /// When false the phases stay at their initial value.
    pub optimize_phase: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho0: 10.0,
            kappa: 0.1,
            gamma: 0.5,
            mu0: 1.0,
            alpha0: 1.0,
            inner_tol: 1e-7,
            outer_tol: 1e-5,
            max_inner_iters: 5000,
            max_outer_iters: 30,
            rho_min: 1e-8,
            max_backtracks: 50,
            feasibility_tol: 1e-5,
            optimize_phase: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.kappa) {
            return Err(invalid(format!("kappa must lie in (0, 1), got {}", self.kappa)));
        }
        if !open_unit(self.gamma) {
            return Err(invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        for (name, v) in [
            ("rho0", self.rho0),
            ("mu0", self.mu0),
            ("alpha0", self.alpha0),
            ("inner_tol", self.inner_tol),
            ("outer_tol", self.outer_tol),
            ("rho_min", self.rho_min),
            ("feasibility_tol", self.feasibility_tol),
        ] {
            if !(v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_inner_iters == 0 || self.max_outer_iters == 0 || self.max_backtracks == 0 {
            return Err(invalid("iteration limits must be at least 1"));
        }
        Ok(())
    }
}

/// A channel realization together with its budget and normalized thresholds.
#[derive(Debug, Clone)]
pub struct Problem {
    pub channels: ChannelSet,
    /// Interference thresholds relative to the noise power.
    pub thresholds: Vec<f64>,
    pub p_max: f64,
}

impl Problem {
    pub fn new(channels: ChannelSet, thresholds: Vec<f64>, p_max: f64) -> Result<Self> {
        channels.check()?;
        if thresholds.len() != channels.num_receivers() {
            return Err(dims(format!(
                "{} thresholds for {} receivers",
                thresholds.len(),
                channels.num_receivers()
            )));
        }
        if !(p_max > 0.0) {
            return Err(invalid(format!("p_max must be positive, got {p_max}")));
        }
        if let Some(p) = thresholds.iter().find(|p| !(**p >= 0.0)) {
            return Err(invalid(format!("threshold must be nonnegative, got {p}")));
        }
        Ok(Self {
            channels,
            thresholds,
            p_max,
        })
    }

    /// The problem with the surface removed.
    pub fn without_irs(&self) -> Self {
        Self {
            channels: self.channels.without_irs(),
            thresholds: self.thresholds.clone(),
            p_max: self.p_max,
        }
    }

    pub fn num_receivers(&self) -> usize {
        self.thresholds.len()
    }

    /// Interference violation of each receiver, relative to its threshold.
    pub fn relative_violations(&self, interference: &[f64]) -> Vec<f64> {
        interference
            .iter()
            .zip(&self.thresholds)
            .map(|(i, p)| {
                let excess = (i - p).max(0.0);
                if excess == 0.0 {
                    0.0
                } else if *p > 0.0 {
                    excess / p
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }
}

/// Starting point of a solve.
#[derive(Debug, Clone)]
pub struct InitialPoint {
    pub x: TransmitCovariance,
    pub theta: PhaseVector,
}

impl InitialPoint {
    /// Isotropic full-power covariance and uniform random phases drawn from
    /// the initialization lane of `(seed, realization_index)`.
    pub fn standard(problem: &Problem, seed: u64, realization_index: u64) -> Self {
        let n_i = problem.channels.n_i();
        Self {
            x: TransmitCovariance::isotropic(problem.channels.n_t(), problem.p_max),
            theta: PhaseVector::from_projected(random_phases(seed, realization_index, LANE_INIT_PHASE, n_i)),
        }
    }
}

/// One inner iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Global iteration index, starting at 1.
    pub iter: usize,
    pub outer_stage: usize,
    pub rho: f64,
    pub rate_nats: f64,
    pub augmented_nats: f64,
    pub max_abs_g: f64,
    pub trace_x: f64,
    pub mu: f64,
    pub alpha: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    /// Augmented objective at the warm start of each outer stage.
    pub stage_starts: Vec<f64>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of one outer stage.
    pub fn stage(&self, outer_stage: usize) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.outer_stage == outer_stage)
    }

    /// Largest decrease of the augmented objective between consecutive
    /// iterations of the same stage, counting each stage's warm start as its
    /// iteration zero (0 when the sequence never decreases).
    pub fn worst_inner_decrease(&self) -> f64 {
        let within = self
            .records
            .windows(2)
            .filter(|w| w[0].outer_stage == w[1].outer_stage)
            .map(|w| w[0].augmented_nats - w[1].augmented_nats);
        let first_steps = self.stage_starts.iter().enumerate().filter_map(|(i, start)| {
            self.stage(i + 1).next().map(|r| start - r.augmented_nats)
        });
        within.chain(first_steps).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Gap and interference violations both below tolerance.
    Converged,
    /// The penalty parameter fell below its floor first.
    PenaltyFloor,
    OuterIterationLimit,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::PenaltyFloor => "penalty_floor",
            Termination::OuterIterationLimit => "outer_iteration_limit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: TransmitCovariance,
    pub theta: PhaseVector,
    pub slack: SlackVector,
    pub dual: DualState,
    pub rate_nats: f64,
    pub augmented_nats: f64,
    /// Interference at each primary receiver, noise-normalized.
    pub interference: Vec<f64>,
    /// Relative threshold violation per receiver (0 when satisfied).
    pub violations: Vec<f64>,
    pub feasible: bool,
    pub termination: Termination,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub wall_ms: f64,
    pub trace: ConvergenceTrace,
}

impl Solution {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged && self.feasible
    }

    pub fn max_violation(&self) -> f64 {
        self.violations.iter().cloned().fold(0.0, f64::max)
    }

    pub fn rate_bps_hz(&self) -> f64 {
        self.rate_nats / std::f64::consts::LN_2
    }
}

/// Result of a backtracking search along a projected direction.
#[derive(Debug, Clone)]
pub struct LineSearchOutcome<V> {
    pub step: f64,
    pub point: V,
    pub eval: Evaluation,
    pub value: f64,
    pub backtracks: usize,
    /// True when no trial step satisfied the sufficient-ascent test.
    pub stagnated: bool,
}

/// Result of [`armijo_backtrack`].
#[derive(Debug, Clone)]
pub struct Backtrack<V> {
    pub step: f64,
    pub point: V,
    pub value: f64,
    pub backtracks: usize,
    pub stagnated: bool,
}

/// Tries `step = step_prev * gamma^i`, `i = 1, 2, ...`, and accepts the first
/// candidate with `f(new) >= f(old) + <grad, new - old> - coef * ||new - old||^2 / step`.
///
/// `candidate(step)` returns the projected point, its objective value, the
/// linear term `<grad, new - old>` and `||new - old||^2`. After
/// `max_backtracks` failures the last candidate comes back flagged as
/// stagnated.
pub fn armijo_backtrack<V>(
    step_prev: f64,
    gamma: f64,
    max_backtracks: usize,
    value_prev: f64,
    coef: f64,
    mut candidate: impl FnMut(f64) -> Result<(V, f64, f64, f64)>,
) -> Result<Backtrack<V>> {
    if !(step_prev > 0.0) {
        return Err(invalid(format!("step must be positive, got {step_prev}")));
    }
    if max_backtracks == 0 {
        return Err(invalid("max_backtracks must be at least 1"));
    }
    // floating-point slack on the acceptance test
    let slop = 1e-13 * (1.0 + value_prev.abs());
    let mut step = step_prev;
    let mut last = None;
    for i in 1..=max_backtracks {
        step *= gamma;
        let (point, value, linear, dist_sq) = candidate(step)?;
        if value >= value_prev + linear - coef * dist_sq / step - slop {
            return Ok(Backtrack { step, point, value, backtracks: i, stagnated: false });
        }
        last = Some((point, value));
    }
    let (point, value) = last.expect("at least one trial");
    Ok(Backtrack { step, point, value, backtracks: max_backtracks, stagnated: true })
}

fn backtrack<V>(
    step_prev: f64,
    gamma: f64,
    max_backtracks: usize,
    value_prev: f64,
    coef: f64,
    mut candidate: impl FnMut(f64) -> Result<(V, Evaluation, f64, f64, f64)>,
) -> Result<LineSearchOutcome<V>> {
    let b = armijo_backtrack(step_prev, gamma, max_backtracks, value_prev, coef, |step| {
        let (point, eval, value, linear, dist_sq) = candidate(step)?;
        Ok(((point, eval), value, linear, dist_sq))
    })?;
    let (point, eval) = b.point;
    Ok(LineSearchOutcome {
        step: b.step,
        point,
        eval,
        value: b.value,
        backtracks: b.backtracks,
        stagnated: b.stagnated,
    })
}

/// Backtracking phase step: candidates `project_phase(theta + mu grad)` with
/// `mu = mu_prev * gamma^i`; inner product `2 Re(grad^H d)`.
#[allow(clippy::too_many_arguments)]
pub fn line_search_theta(
    problem: &Problem,
    x: &CMatrix,
    slack: &[f64],
    dual: &DualState,
    theta: &PhaseVector,
    value: f64,
    grad: &CVector,
    mu_prev: f64,
    gamma: f64,
    max_backtracks: usize,
) -> Result<LineSearchOutcome<PhaseVector>> {
    let ch = &problem.channels;
    let base = theta.as_vector();
    backtrack(mu_prev, gamma, max_backtracks, value, 1.0, |mu| {
        let cand = project_phase(&(base + grad * crate::channel::C64::new(mu, 0.0)));
        let d = cand.as_vector() - base;
        let linear = 2.0 * grad.dotc(&d).re;
        let ev = Evaluation::at(ch, cand.as_vector(), x)?;
        let v = ev.augmented(slack, dual, &problem.thresholds);
        Ok((cand, ev, v, linear, d.norm_squared()))
    })
}

/// Backtracking covariance step on Hermitian matrices: candidates
/// `project_covariance(X + alpha G)`; inner product `Re tr(G D)`, curvature
/// term `||D||^2 / (2 alpha)`.
#[allow(clippy::too_many_arguments)]
pub fn line_search_x(
    problem: &Problem,
    theta: &PhaseVector,
    slack: &[f64],
    dual: &DualState,
    x: &CMatrix,
    value: f64,
    grad: &CMatrix,
    alpha_prev: f64,
    gamma: f64,
    max_backtracks: usize,
) -> Result<LineSearchOutcome<TransmitCovariance>> {
    let ch = &problem.channels;
    backtrack(alpha_prev, gamma, max_backtracks, value, 0.5, |alpha| {
        let cand = project_covariance(&(x + grad * crate::channel::C64::new(alpha, 0.0)), problem.p_max)?;
        let d = cand.as_matrix() - x;
        let linear = grad.dotc(&d).re;
        let ev = Evaluation::at(ch, theta.as_vector(), cand.as_matrix())?;
        let v = ev.augmented(slack, dual, &problem.thresholds);
        Ok((cand, ev, v, linear, d.norm_squared()))
    })
}

/// State carried between inner iterations and outer stages.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub x: TransmitCovariance,
    pub theta: PhaseVector,
    pub slack: SlackVector,
    pub mu: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub state: IterateState,
    pub eval: Evaluation,
    pub value: f64,
    pub iterations: usize,
    pub status: InnerStatus,
}

/// Bookkeeping shared by the inner and outer loops for trace emission.
pub struct TraceSink<'a> {
    pub trace: &'a mut ConvergenceTrace,
    pub outer_stage: usize,
    pub start: Instant,
}

fn grown(step: f64, gamma: f64) -> f64 {
    // first trial of the next search is step / gamma
    (step / (gamma * gamma)).min(MAX_STEP)
}

/// Alternating projected gradient ascent for fixed multipliers and penalty:
/// phase step, covariance step at the new phases, closed-form slack.
pub fn inner_apgm(
    problem: &Problem,
    dual: &DualState,
    warm_start: IterateState,
    cfg: &SolverConfig,
    mut sink: Option<TraceSink<'_>>,
) -> Result<InnerResult> {
    let ch = &problem.channels;
    let p = &problem.thresholds;
    let mut st = warm_start;
    let mut ev = Evaluation::at(ch, st.theta.as_vector(), st.x.as_matrix())?;
    let mut value = ev.augmented(st.slack.as_slice(), dual, p);
    let optimize_phase = cfg.optimize_phase && ch.n_i() > 0;
    let mut status = InnerStatus::IterationLimit;
    let mut iterations = 0;
    if let Some(sink) = sink.as_mut() {
        sink.trace.stage_starts.push(value);
    }

    for _ in 0..cfg.max_inner_iters {
        iterations += 1;
        let start_value = value;

        if optimize_phase {
            let w = penalty_weights(&ev, st.slack.as_slice(), dual, p);
            let g = grad_theta_at(ch, &ev, st.x.as_matrix(), &w)?;
            let ls = line_search_theta(
                problem,
                st.x.as_matrix(),
                st.slack.as_slice(),
                dual,
                &st.theta,
                value,
                &g,
                grown(st.mu, cfg.gamma),
                cfg.gamma,
                cfg.max_backtracks,
            )?;
            st.mu = ls.step;
            if !ls.stagnated || ls.value >= value {
                st.theta = ls.point;
                ev = ls.eval;
                value = ls.value;
            }
        }

        let w = penalty_weights(&ev, st.slack.as_slice(), dual, p);
        let g = grad_x_at(&ev, st.x.as_matrix(), &w)?;
        let ls = line_search_x(
            problem,
            &st.theta,
            st.slack.as_slice(),
            dual,
            st.x.as_matrix(),
            value,
            &g,
            grown(st.alpha, cfg.gamma),
            cfg.gamma,
            cfg.max_backtracks,
        )?;
        st.alpha = ls.step;
        if !ls.stagnated || ls.value >= value {
            st.x = ls.point;
            ev = ls.eval;
        }

        st.slack = slack_from_interference(&ev.interference, p, dual);
        value = ev.augmented(st.slack.as_slice(), dual, p);

        if let Some(sink) = sink.as_mut() {
            let g = ev.residuals(st.slack.as_slice(), p);
            let iter = sink.trace.records.last().map_or(1, |r| r.iter + 1);
            sink.trace.records.push(TraceRecord {
                iter,
                outer_stage: sink.outer_stage,
                rho: dual.rho,
                rate_nats: ev.rate,
                augmented_nats: value,
                max_abs_g: g.iter().map(|v| v.abs()).fold(0.0, f64::max),
                trace_x: st.x.trace(),
                mu: st.mu,
                alpha: st.alpha,
                wall_ms: sink.start.elapsed().as_secs_f64() * 1e3,
            });
        }

        if (value - start_value).abs() / (1.0 + value.abs()) < cfg.inner_tol {
            status = InnerStatus::Converged;
            break;
        }
    }

    Ok(InnerResult {
        state: st,
        eval: ev,
        value,
        iterations,
        status,
    })
}

/// Penalty dual decomposition: repeated inner solves with multiplier update
/// `upsilon_k += g_k / rho` and penalty decrease `rho *= kappa`, until
/// `|R - R_hat| < outer_tol` with every interference constraint satisfied.
pub fn pddgp(problem: &Problem, init: InitialPoint, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let ch = &problem.channels;
    if init.theta.len() != ch.n_i() || init.x.dim() != ch.n_t() {
        return Err(dims("initial point does not match the channel dimensions"));
    }
    if init.x.trace() > problem.p_max + crate::objective::TRACE_TOL {
        return Err(invalid("initial covariance exceeds the power budget"));
    }
    let start = Instant::now();
    let k = problem.num_receivers();
    let mut dual = DualState::initial(k, cfg.rho0)?;
    let ev0 = Evaluation::at(ch, init.theta.as_vector(), init.x.as_matrix())?;
    let mut state = IterateState {
        slack: slack_from_interference(&ev0.interference, &problem.thresholds, &dual),
        x: init.x,
        theta: init.theta,
        mu: cfg.mu0 * cfg.gamma,
        alpha: cfg.alpha0 * cfg.gamma,
    };
    let mut trace = ConvergenceTrace::default();
    let mut inner_total = 0;
    let mut termination = Termination::OuterIterationLimit;
    let mut outer = 0;
    let mut last: Option<(Evaluation, f64, DualState)> = None;

    while outer < cfg.max_outer_iters {
        outer += 1;
        let sink = TraceSink {
            trace: &mut trace,
            outer_stage: outer,
            start,
        };
        let res = inner_apgm(problem, &dual, state, cfg, Some(sink))?;
        inner_total += res.iterations;
        state = res.state;
        let gap = (res.eval.rate - res.value).abs();
        let violation = problem
            .relative_violations(&res.eval.interference)
            .into_iter()
            .fold(0.0, f64::max);
        let residuals = res.eval.residuals(state.slack.as_slice(), &problem.thresholds);
        last = Some((res.eval, res.value, dual.clone()));
        if gap < cfg.outer_tol && violation <= cfg.feasibility_tol {
            termination = Termination::Converged;
            break;
        }
        for (u, g) in dual.upsilon.iter_mut().zip(&residuals) {
            *u += g / dual.rho;
        }
        dual.rho *= cfg.kappa;
        if dual.rho < cfg.rho_min {
            termination = Termination::PenaltyFloor;
            break;
        }
        let ev = &last.as_ref().expect("set above").0;
        state.slack = slack_from_interference(&ev.interference, &problem.thresholds, &dual);
    }

    let (eval, value, final_dual) = last.expect("at least one outer stage");
    let violations = problem.relative_violations(&eval.interference);
    let feasible = violations.iter().all(|v| *v <= cfg.feasibility_tol);
    Ok(Solution {
        x: state.x,
        theta: state.theta,
        slack: state.slack,
        dual: if termination == Termination::Converged { final_dual } else { dual },
        rate_nats: eval.rate,
        augmented_nats: value,
        interference: eval.interference,
        violations,
        feasible,
        termination,
        inner_iterations: inner_total,
        outer_iterations: outer,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        trace,
    })
}

/// Capacity of `h` under a trace budget by eigenvalue water-filling, in nats.
pub fn water_filling_capacity(h: &CMatrix, p_max: f64) -> f64 {
    let gram = h.adjoint() * h;
    let gains: Vec<f64> = gram
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .filter(|g| *g > 1e-14)
        .collect();
    // levels 1/g; find mu with sum max(mu - 1/g, 0) = p_max
    let mut inv: Vec<f64> = gains.iter().map(|g| 1.0 / g).collect();
    inv.sort_by(|a, b| a.total_cmp(b));
    let mut level = 0.0;
    for m in (1..=inv.len()).rev() {
        let mu = (p_max + inv[..m].iter().sum::<f64>()) / m as f64;
        if mu > inv[m - 1] {
            level = mu;
            break;
        }
    }
    inv.iter().map(|i| (level / i).max(1.0).ln()).sum()
}
