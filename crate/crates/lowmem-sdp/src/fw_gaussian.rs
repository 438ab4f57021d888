//! Frank-Wolfe with Gaussian sampling.
//!
//! The solver never materializes the matrix iterate `X_t`. Its entire mutable
//! state is the sample batch `z` (each column zero-mean Gaussian with
//! covariance `X_t`, conditioned on the oracle outputs), the projected
//! iterate `v = A(X_t)`, and the cost component `u = <C, X_t>`. One step
//! costs one oracle call plus `O(S n + d)` arithmetic.
//!
//! Stopping: the per-step oracle follows the accuracy schedule
//! `delta_t = eta * gamma_t * curvature_bound / 2`, which is deliberately
//! coarse in early iterations, so the per-step surrogate gap is not evidence
//! of convergence on its own (it can even be negative while the true gap is
//! large). Convergence is therefore declared only after a certification
//! oracle call at accuracy `stop_threshold / 2` confirms
//! `gap <= stop_threshold / 2`, which bounds the true gap by
//! `stop_threshold` with probability `1 - lmo_failure_prob`. Failed
//! certifications back off exponentially so their total cost stays
//! logarithmic in the iteration count.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::lmo::{trace_ball_lmo, LmoError, LmoParams, UpdateDirection};
use crate::operators::{ConstraintMap, PenalizedGradient, SymOp};
use crate::penalty::{PenaltyError, PenaltyParams, PenalizedObjective};
use crate::rng::{substream, Stream};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Lmo(#[from] LmoError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error("invalid solve configuration: {0}")]
    BadConfig(String),
}

/// A trace-bounded SDP with linear equality constraints folded into the
/// objective through the LogSumExp penalty:
/// `maximize <C, X> - weight * phi(A(X) - b)` over `{X >= 0, Tr(X) <= alpha}`.
pub struct PenalizedProblem<'a> {
    pub cost: &'a dyn SymOp,
    pub map: &'a dyn ConstraintMap,
    /// `Tr(C)`, supplied at construction (operators expose it when cheap).
    pub cost_trace: f64,
    pub penalty: PenaltyParams,
    /// Upper bound on `max_i |lambda_i(J)|` over all gradient operators `J`
    /// the run can produce; callers must bound it from problem data.
    pub lambda_bound: f64,
}

impl<'a> PenalizedProblem<'a> {
    pub fn dim(&self) -> usize {
        self.cost.dim()
    }

    pub fn constraint_dim(&self) -> usize {
        self.map.output_dim()
    }

    pub fn objective(&self) -> PenalizedObjective {
        PenalizedObjective::new(self.penalty, self.map.target().to_vec())
    }
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Absolute gap threshold in objective units. Non-positive disables gap
    /// stopping entirely (fixed-budget run).
    pub stop_threshold: f64,
    /// Oracle accuracy parameter `eta`; the per-step oracle error budget is
    /// `eta * gamma_t * curvature_bound / 2`.
    pub lmo_accuracy: f64,
    /// Per-oracle-call failure probability in (0, 1).
    pub lmo_failure_prob: f64,
    /// Trace bound `alpha` of the feasible set.
    pub trace_bound: f64,
    /// Upper bound on the curvature constant of the penalized objective.
    pub curvature_bound: f64,
    pub max_iters: usize,
    /// Sample batch width `S`: columns share one oracle trajectory, so they
    /// are i.i.d. conditioned on it. Re-solve with fresh seeds for
    /// unconditionally independent samples.
    pub samples: usize,
    /// Record one trace row per iteration. Disable for memory-audited runs:
    /// the trace grows with the iteration count, not the problem size.
    pub record_trace: bool,
    pub seed: u64,
}

impl SolveConfig {
    fn validate(&self) -> Result<(), SolveError> {
        if !(self.trace_bound > 0.0) {
            return Err(SolveError::BadConfig(format!("trace_bound = {}", self.trace_bound)));
        }
        if !(self.curvature_bound > 0.0) {
            return Err(SolveError::BadConfig(format!("curvature_bound = {}", self.curvature_bound)));
        }
        if !(self.lmo_accuracy >= 0.0) {
            return Err(SolveError::BadConfig(format!("lmo_accuracy = {}", self.lmo_accuracy)));
        }
        if !(self.lmo_failure_prob > 0.0 && self.lmo_failure_prob < 1.0) {
            return Err(SolveError::BadConfig(format!(
                "lmo_failure_prob = {}",
                self.lmo_failure_prob
            )));
        }
        if self.samples == 0 {
            return Err(SolveError::BadConfig("samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub gap: f64,
    pub infeas_inf: f64,
    pub obj: f64,
    /// Milliseconds since the solve started.
    pub ms: f64,
}

/// Per-iteration records of a solve.
#[derive(Debug, Clone, Default)]
pub struct TraceLog {
    pub rows: Vec<TraceRow>,
}

impl TraceLog {
    /// CSV with header `iter,gap,infeas_inf,obj,ms`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "iter,gap,infeas_inf,obj,ms")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.iter, r.gap, r.infeas_inf, r.obj, r.ms)?;
        }
        Ok(())
    }
}

/// The solver's entire mutable state.
pub struct SamplerState {
    t: usize,
    n: usize,
    samples: usize,
    /// Column-major `n x samples` sample batch.
    z: Vec<f64>,
    v: Vec<f64>,
    u: f64,
    gap: f64,
    lmo_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    // preallocated workspaces
    slack: Vec<f64>,
    sgrad: Vec<f64>,
    cost_buf: Vec<f64>,
}

impl SamplerState {
    pub fn iter(&self) -> usize {
        self.t
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    /// One Gaussian sample column, zero-mean with covariance the current
    /// (implicit) iterate.
    pub fn sample_column(&self, i: usize) -> &[f64] {
        &self.z[i * self.n..(i + 1) * self.n]
    }

    /// Projected iterate `v = A(X_t)`.
    pub fn projected(&self) -> &[f64] {
        &self.v
    }

    /// Cost component `u = <C, X_t>`.
    pub fn cost_component(&self) -> f64 {
        self.u
    }

    /// Most recent gap: the certified gap after a converged solve, otherwise
    /// the last surrogate gap.
    pub fn last_gap(&self) -> f64 {
        self.gap
    }

    /// `||v - b||_inf` against `target`.
    pub fn infeasibility(&self, target: &[f64]) -> f64 {
        self.v
            .iter()
            .zip(target)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Everything about one applied step a shadow tracker needs to replay it.
pub struct StepRecord<'a> {
    pub iter: usize,
    pub gamma: f64,
    /// `trace_bound` or 0.
    pub weight: f64,
    pub direction: Option<&'a [f64]>,
    /// `q = A(H)`.
    pub image: &'a [f64],
    /// `q_u = <C, H>`.
    pub cost_image: f64,
    /// Surrogate gap computed before the step.
    pub gap: f64,
    /// Matvecs spent this iteration (oracle + cost image).
    pub matvecs: u64,
}

/// Per-iteration hook, e.g. for dense shadow tracking in tests.
pub trait StepObserver {
    fn on_step(&mut self, rec: &StepRecord<'_>);
}

/// Ignores every record.
pub struct NoopObserver;

impl StepObserver for NoopObserver {
    fn on_step(&mut self, _rec: &StepRecord<'_>) {}
}

/// Result of [`solve`]: final state, trace, and how the run ended.
pub struct SolveReport {
    pub state: SamplerState,
    pub trace: TraceLog,
    /// True when a certified gap check passed; false when `max_iters` was
    /// exhausted first.
    pub converged: bool,
    pub iterations: usize,
    /// Certified gap when converged, last surrogate gap otherwise.
    pub final_gap: f64,
    pub total_matvecs: u64,
    pub certifications: u32,
}

/// Initialize at `X_0 = (alpha/n) I`: `v_0 = (alpha/n) A(I)`,
/// `u_0 = (alpha/n) Tr(C)`, and each sample column drawn
/// `N(0, (alpha/n) I)`.
pub fn init(problem: &PenalizedProblem<'_>, config: &SolveConfig) -> Result<SamplerState, SolveError> {
    config.validate()?;
    let n = problem.dim();
    let d = problem.constraint_dim();
    let scale = config.trace_bound / n as f64;
    let mut v = vec![0.0; d];
    problem.map.identity_image(&mut v);
    for vi in v.iter_mut() {
        *vi *= scale;
    }
    let u = scale * problem.cost_trace;
    let mut init_rng = substream(config.seed, Stream::SampleInit);
    let sd = scale.sqrt();
    let z: Vec<f64> = (0..n * config.samples)
        .map(|_| sd * init_rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(SamplerState {
        t: 0,
        n,
        samples: config.samples,
        z,
        v,
        u,
        gap: f64::INFINITY,
        lmo_rng: substream(config.seed, Stream::LmoStart),
        noise_rng: substream(config.seed, Stream::StepNoise),
        slack: vec![0.0; d],
        sgrad: vec![0.0; d],
        cost_buf: vec![0.0; n],
    })
}

/// Linearized surrogate gap `<(q_u, q) - (u, v), grad g>` in objective units,
/// with `grad g = (1, -weight * s)`.
pub fn linearized_gap(
    u: f64,
    cost_image: f64,
    v: &[f64],
    image: &[f64],
    slack_grad: &[f64],
    penalty_weight: f64,
) -> f64 {
    let mut pen = 0.0;
    for ((s, q), vi) in slack_grad.iter().zip(image).zip(v) {
        pen += s * (q - vi);
    }
    (cost_image - u) - penalty_weight * pen
}

struct Prepared {
    gamma: f64,
    direction: UpdateDirection,
    cost_image: f64,
    gap: f64,
    matvecs: u64,
}

fn prepare(
    state: &mut SamplerState,
    problem: &PenalizedProblem<'_>,
    config: &SolveConfig,
) -> Result<Prepared, SolveError> {
    let gamma = 2.0 / (state.t as f64 + 2.0);
    let delta = 0.5 * config.lmo_accuracy * gamma * config.curvature_bound;
    let objective = problem.penalty;
    // s = grad phi(v - b)
    for ((sl, vi), bi) in state.slack.iter_mut().zip(&state.v).zip(problem.map.target()) {
        *sl = vi - bi;
    }
    crate::penalty::smoothed_inf_norm_grad_into(&state.slack, objective.sharpness, &mut state.sgrad)?;

    let grad_op = PenalizedGradient::new(problem.cost, problem.map, &state.sgrad, objective.weight);
    let params = LmoParams::new(
        config.trace_bound,
        delta,
        config.lmo_failure_prob,
        problem.lambda_bound,
    );
    let direction = trace_ball_lmo(&grad_op, problem.map, &params, &mut state.lmo_rng)?;

    let mut matvecs = direction.matvecs;
    let cost_image = match &direction.direction {
        Some(w) => {
            problem.cost.apply(w, &mut state.cost_buf);
            matvecs += 1;
            let quad: f64 = w.iter().zip(&state.cost_buf).map(|(a, b)| a * b).sum();
            direction.weight * quad
        }
        None => 0.0,
    };
    let gap = linearized_gap(
        state.u,
        cost_image,
        &state.v,
        &direction.image,
        &state.sgrad,
        objective.weight,
    );
    Ok(Prepared { gamma, direction, cost_image, gap, matvecs })
}

fn apply(state: &mut SamplerState, prep: &Prepared) {
    let gamma = prep.gamma;
    let shrink = (1.0 - gamma).sqrt();
    match &prep.direction.direction {
        Some(w) => {
            let scale = (gamma * prep.direction.weight).sqrt();
            for col in 0..state.samples {
                let noise: f64 = state.noise_rng.sample(StandardNormal);
                let zc = &mut state.z[col * state.n..(col + 1) * state.n];
                for (zi, wi) in zc.iter_mut().zip(w) {
                    *zi = shrink * *zi + scale * noise * wi;
                }
            }
        }
        None => {
            // Zero direction: covariance shrinks to (1 - gamma) X_t exactly.
            for zi in state.z.iter_mut() {
                *zi *= shrink;
            }
        }
    }
    for (vi, qi) in state.v.iter_mut().zip(&prep.direction.image) {
        *vi = (1.0 - gamma) * *vi + gamma * qi;
    }
    state.u = (1.0 - gamma) * state.u + gamma * prep.cost_image;
    state.t += 1;
    state.gap = prep.gap;
}

/// One oracle call and one sample/projection update. The surrogate gap of the
/// pre-step iterate is stored in the state.
pub fn step(
    state: &mut SamplerState,
    problem: &PenalizedProblem<'_>,
    config: &SolveConfig,
) -> Result<(), SolveError> {
    let prep = prepare(state, problem, config)?;
    apply(state, &prep);
    Ok(())
}

fn certify(
    state: &mut SamplerState,
    problem: &PenalizedProblem<'_>,
    config: &SolveConfig,
) -> Result<(f64, u64), SolveError> {
    let delta = 0.5 * config.stop_threshold;
    let params = LmoParams::new(
        config.trace_bound,
        delta,
        config.lmo_failure_prob,
        problem.lambda_bound,
    );
    let grad_op =
        PenalizedGradient::new(problem.cost, problem.map, &state.sgrad, problem.penalty.weight);
    let direction = trace_ball_lmo(&grad_op, problem.map, &params, &mut state.lmo_rng)?;
    let mut matvecs = direction.matvecs;
    let cost_image = match &direction.direction {
        Some(w) => {
            problem.cost.apply(w, &mut state.cost_buf);
            matvecs += 1;
            let quad: f64 = w.iter().zip(&state.cost_buf).map(|(a, b)| a * b).sum();
            direction.weight * quad
        }
        None => 0.0,
    };
    let gap = linearized_gap(
        state.u,
        cost_image,
        &state.v,
        &direction.image,
        &state.sgrad,
        problem.penalty.weight,
    );
    Ok((gap, matvecs))
}

/// Run the solver until a certified gap passes `stop_threshold` or
/// `max_iters` steps have been applied.
pub fn solve(problem: &PenalizedProblem<'_>, config: &SolveConfig) -> Result<SolveReport, SolveError> {
    solve_observed(problem, config, &mut NoopObserver)
}

/// [`solve`] with a per-step observer.
pub fn solve_observed(
    problem: &PenalizedProblem<'_>,
    config: &SolveConfig,
    observer: &mut dyn StepObserver,
) -> Result<SolveReport, SolveError> {
    let mut state = init(problem, config)?;
    let mut trace = TraceLog::default();
    let started = Instant::now();
    let mut total_matvecs = 0u64;
    let mut certifications = 0u32;
    let mut next_cert_iter = 0usize;
    let target = problem.map.target();

    loop {
        let prep = prepare(&mut state, problem, config)?;
        total_matvecs += prep.matvecs;
        if config.record_trace {
            trace.rows.push(TraceRow {
                iter: state.t,
                gap: prep.gap,
                infeas_inf: state.infeasibility(target),
                obj: state.u,
                ms: started.elapsed().as_secs_f64() * 1e3,
            });
        }
        if config.stop_threshold > 0.0
            && prep.gap <= config.stop_threshold
            && state.t >= next_cert_iter
        {
            let (certified, matvecs) = certify(&mut state, problem, config)?;
            total_matvecs += matvecs;
            certifications += 1;
            if certified <= 0.5 * config.stop_threshold {
                state.gap = certified;
                let iterations = state.t;
                return Ok(SolveReport {
                    state,
                    trace,
                    converged: true,
                    iterations,
                    final_gap: certified,
                    total_matvecs,
                    certifications,
                });
            }
            next_cert_iter = 2 * state.t.max(1);
        }
        if state.t >= config.max_iters {
            state.gap = prep.gap;
            let iterations = state.t;
            let final_gap = prep.gap;
            return Ok(SolveReport {
                state,
                trace,
                converged: false,
                iterations,
                final_gap,
                total_matvecs,
                certifications,
            });
        }
        apply(&mut state, &prep);
        observer.on_step(&StepRecord {
            iter: state.t - 1,
            gamma: prep.gamma,
            weight: prep.direction.weight,
            direction: prep.direction.direction.as_deref(),
            image: &prep.direction.image,
            cost_image: prep.cost_image,
            gap: prep.gap,
            matvecs: prep.matvecs,
        });
    }
}

/// Unconditionally i.i.d. samples of the final iterate: re-runs the full
/// solve `count` times with derived seeds and `samples = 1`, collecting each
/// terminal column. Costs `count` solves; the batch mode inside one solve is
/// the cheap alternative when conditioning on a single trajectory is
/// acceptable.
pub fn rerun_samples(
    problem: &PenalizedProblem<'_>,
    config: &SolveConfig,
    count: usize,
) -> Result<Vec<Vec<f64>>, SolveError> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut cfg = config.clone();
        cfg.samples = 1;
        cfg.record_trace = false;
        cfg.seed = config.seed.wrapping_add(i as u64);
        let report = solve(problem, &cfg)?;
        out.push(report.state.sample_column(0).to_vec());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{laplacian_operator, DenseSymOp, DiagConstraint, SparseGraph};
    use crate::penalty::curvature_upper_bound;

    fn k3_problem() -> (SparseGraph, DiagConstraint) {
        let g = SparseGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        (g, DiagConstraint::new(3))
    }

    fn maxcut_config(n: usize, tr_c: f64, eps: f64, seed: u64) -> (PenaltyParams, SolveConfig) {
        let d = n as f64;
        let sharpness = 4.0 * (2.0 * d).ln() / eps;
        let weight = 4.0 * tr_c;
        let curvature = curvature_upper_bound(weight, 1.0, sharpness, n as f64);
        let config = SolveConfig {
            stop_threshold: eps * tr_c,
            lmo_accuracy: 1.0,
            lmo_failure_prob: 1e-3,
            trace_bound: n as f64,
            curvature_bound: curvature,
            max_iters: 200_000,
            samples: 1,
            record_trace: true,
            seed,
        };
        (PenaltyParams::new(sharpness, weight), config)
    }

    #[test]
    fn init_is_identity_start() {
        let (g, map) = k3_problem();
        let cost = laplacian_operator(&g);
        let (penalty, config) = maxcut_config(3, cost.trace(), 0.2, 7);
        let problem = PenalizedProblem {
            cost: &cost,
            map: &map,
            cost_trace: cost.trace(),
            penalty,
            lambda_bound: 5.0 * cost.trace(),
        };
        let state = init(&problem, &config).unwrap();
        assert_eq!(state.projected(), &[1.0, 1.0, 1.0]);
        assert!((state.cost_component() - cost.trace()).abs() < 1e-15);
        assert_eq!(state.iter(), 0);
    }

    #[test]
    fn init_sample_variance_matches_alpha_over_n() {
        let (g, map) = k3_problem();
        let cost = laplacian_operator(&g);
        let (penalty, mut config) = maxcut_config(3, cost.trace(), 0.2, 3);
        config.samples = 60_000;
        let problem = PenalizedProblem {
            cost: &cost,
            map: &map,
            cost_trace: cost.trace(),
            penalty,
            lambda_bound: 5.0 * cost.trace(),
        };
        let state = init(&problem, &config).unwrap();
        // alpha = n here, so Var(z_i) = 1; 3-sigma band for the sample
        // variance over S draws is ~ sqrt(2/S).
        let s = config.samples as f64;
        let mut mean_sq = 0.0;
        for col in 0..config.samples {
            mean_sq += state.sample_column(col)[0].powi(2);
        }
        mean_sq /= s;
        assert!((mean_sq - 1.0).abs() < 3.0 * (2.0 / s).sqrt(), "var = {mean_sq}");
    }

    #[test]
    fn full_first_step_replaces_state() {
        let (g, map) = k3_problem();
        let cost = laplacian_operator(&g);
        let (penalty, config) = maxcut_config(3, cost.trace(), 0.2, 11);
        let problem = PenalizedProblem {
            cost: &cost,
            map: &map,
            cost_trace: cost.trace(),
            penalty,
            lambda_bound: 5.0 * cost.trace(),
        };
        let mut state = init(&problem, &config).unwrap();
        // gamma = 1 at t = 0: z becomes zeta * sqrt(alpha) * w and v = q.
        step(&mut state, &problem, &config).unwrap();
        assert_eq!(state.iter(), 1);
        let v = state.projected();
        let z = state.sample_column(0);
        // v = alpha * w .^2, so z_i^2 / v_i is the same constant zeta^2 on
        // every coordinate with v_i > 0.
        let ratios: Vec<f64> = z
            .iter()
            .zip(v)
            .filter(|(_, vi)| **vi > 1e-12)
            .map(|(zi, vi)| zi * zi / vi)
            .collect();
        assert!(!ratios.is_empty());
        for r in &ratios {
            assert!((r - ratios[0]).abs() < 1e-9);
        }
        let vsum: f64 = v.iter().sum();
        assert!((vsum - 3.0).abs() < 1e-10, "trace of first extreme point");
    }

    #[test]
    fn stationary_gap_is_zero() {
        // If the oracle returns exactly the current projection, the gap is 0.
        let v = vec![0.4, 0.6];
        let s = vec![0.1, -0.2];
        let gap = linearized_gap(2.0, 2.0, &v, &v, &s, 3.0);
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn zero_cost_stops_immediately() {
        let cost = DenseSymOp::zero(4);
        let map = DiagConstraint::new(4);
        let (penalty, mut config) = maxcut_config(4, 1.0, 0.2, 5);
        config.stop_threshold = 0.05;
        let problem = PenalizedProblem {
            cost: &cost,
            map: &map,
            cost_trace: 0.0,
            penalty,
            lambda_bound: penalty.weight,
        };
        let report = solve(&problem, &config).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert!(report.final_gap.abs() <= 0.025);
        // Identity start is feasible, so v stays at b.
        assert_eq!(report.state.projected(), map.target());
    }

    #[test]
    fn weight_zero_step_shrinks_samples() {
        // Negative definite cost with zero penalty influence: the oracle
        // picks the zero matrix and the update is a pure shrink.
        let mut data = vec![0.0; 16];
        for i in 0..4 {
            data[i * 4 + i] = -1.0 - i as f64;
        }
        let cost = DenseSymOp::new(4, data);
        let map = DiagConstraint::new(4);
        let (penalty, mut config) = maxcut_config(4, 1.0, 0.2, 5);
        config.stop_threshold = -1.0; // fixed-budget mode
        config.max_iters = 1;
        let problem = PenalizedProblem {
            cost: &cost,
            map: &map,
            cost_trace: -10.0,
            penalty,
            lambda_bound: 10.0 + penalty.weight,
        };
        let mut state = init(&problem, &config).unwrap();
        let z0 = state.sample_column(0).to_vec();
        let v0 = state.projected().to_vec();
        // t=0 has gamma=1: full shrink to zero.
        step(&mut state, &problem, &config).unwrap();
        for (zi, z0i) in state.sample_column(0).iter().zip(&z0) {
            assert!((zi - 0.0 * z0i).abs() < 1e-15);
        }
        assert!(state.projected().iter().all(|&vi| vi == 0.0));
        let _ = v0;
    }

    #[test]
    fn fixed_budget_mode_runs_to_max_iters() {
        let (g, map) = k3_problem();
        let cost = laplacian_operator(&g);
        let (penalty, mut config) = maxcut_config(3, cost.trace(), 0.2, 2);
        config.stop_threshold = 0.0;
        config.max_iters = 25;
        let problem = PenalizedProblem {
            cost: &cost,
            map: &map,
            cost_trace: cost.trace(),
            penalty,
            lambda_bound: 5.0 * cost.trace(),
        };
        let report = solve(&problem, &config).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 25);
        assert_eq!(report.trace.rows.len(), 26); // rows at t = 0..=25
        assert_eq!(report.certifications, 0);
        for (i, row) in report.trace.rows.iter().enumerate() {
            assert_eq!(row.iter, i);
        }
    }

    #[test]
    fn k3_solve_converges_with_certificate() {
        let (g, map) = k3_problem();
        let cost = laplacian_operator(&g);
        let (penalty, config) = maxcut_config(3, cost.trace(), 0.25, 42);
        let problem = PenalizedProblem {
            cost: &cost,
            map: &map,
            cost_trace: cost.trace(),
            penalty,
            lambda_bound: 5.0 * cost.trace(),
        };
        let report = solve(&problem, &config).unwrap();
        assert!(report.converged, "did not converge in {} iters", report.iterations);
        assert!(report.final_gap <= 0.5 * config.stop_threshold + 1e-12);
        assert!(report.certifications >= 1);
        // Near-feasibility at termination.
        assert!(report.state.infeasibility(map.target()) <= 0.25);
        // Trace ends at the converged iterate.
        assert_eq!(report.trace.rows.last().unwrap().iter, report.iterations);
    }

    #[test]
    fn same_seed_replays_identically() {
        let (g, map) = k3_problem();
        let cost = laplacian_operator(&g);
        let (penalty, mut config) = maxcut_config(3, cost.trace(), 0.2, 9);
        config.stop_threshold = 0.0;
        config.max_iters = 40;
        config.samples = 3;
        let problem = PenalizedProblem {
            cost: &cost,
            map: &map,
            cost_trace: cost.trace(),
            penalty,
            lambda_bound: 5.0 * cost.trace(),
        };
        let a = solve(&problem, &config).unwrap();
        let b = solve(&problem, &config).unwrap();
        assert_eq!(a.state.projected(), b.state.projected());
        for c in 0..3 {
            assert_eq!(a.state.sample_column(c), b.state.sample_column(c));
        }
        assert_eq!(a.total_matvecs, b.total_matvecs);
    }

    #[test]
    fn csv_shape() {
        let mut log = TraceLog::default();
        log.rows.push(TraceRow { iter: 0, gap: 1.5, infeas_inf: 0.25, obj: 3.0, ms: 0.125 });
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "iter,gap,infeas_inf,obj,ms\n0,1.5,0.25,3,0.125\n");
    }

    #[test]
    fn bad_config_is_rejected() {
        let (g, map) = k3_problem();
        let cost = laplacian_operator(&g);
        let (penalty, mut config) = maxcut_config(3, cost.trace(), 0.2, 1);
        config.samples = 0;
        let problem = PenalizedProblem {
            cost: &cost,
            map: &map,
            cost_trace: cost.trace(),
            penalty,
            lambda_bound: 5.0 * cost.trace(),
        };
        assert!(matches!(init(&problem, &config), Err(SolveError::BadConfig(_))));
    }
}
