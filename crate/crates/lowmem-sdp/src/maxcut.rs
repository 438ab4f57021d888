//! End-to-end low-memory Goemans-Williamson pipeline: parameter selection,
//! the penalized solve, rounding of Gaussian samples into cuts, and
//! desk-scale oracles.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::fw_gaussian::{solve_observed, PenalizedProblem, SolveConfig, SolveError, SolveReport, StepObserver, NoopObserver, TraceLog};
use crate::operators::{laplacian_operator, ConstraintMap, DiagConstraint, QuarterLaplacian, SparseGraph};
use crate::parallelism::thread_cap;
use crate::penalty::PenaltyParams;
use crate::rng::{substream, Stream};

/// Goemans-Williamson approximation ratio for diagonally dominant costs.
pub const GW_RATIO: f64 = 0.878567;

/// Default cap on solver iterations; the theory bound is quadratic in
/// `n / eps` and quickly exceeds what a desk run should attempt.
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum MaxCutError {
    #[error("eps must lie in (0, 1/3), got {0}")]
    EpsOutOfRange(f64),
    #[error("graph has no edges, cost trace is zero")]
    ZeroTrace,
    #[error("rounding input invalid: {0}")]
    BadRoundingInput(String),
    #[error("assignment entry {0} is not +/-1")]
    NonBinary(f64),
    #[error("brute force limited to n <= {limit}, got {n}")]
    TooLargeForBruteForce { n: usize, limit: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// A MaxCut relaxation instance: `maximize <C, X>` over
/// `{X >= 0, diag(X) = 1}` with `C = L/4`.
pub struct MaxCutInstance {
    graph: SparseGraph,
    map: DiagConstraint,
    trace: f64,
}

impl MaxCutInstance {
    pub fn new(graph: SparseGraph) -> Self {
        let trace = laplacian_operator(&graph).trace();
        let map = DiagConstraint::new(graph.vertex_count());
        Self { graph, map, trace }
    }

    pub fn graph(&self) -> &SparseGraph {
        &self.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// `Tr(C) = Tr(L)/4`.
    pub fn cost_trace(&self) -> f64 {
        self.trace
    }

    pub fn cost(&self) -> QuarterLaplacian<'_> {
        laplacian_operator(&self.graph)
    }

    pub fn map(&self) -> &DiagConstraint {
        &self.map
    }
}

/// Solver parameters derived from the instance and the accuracy target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxCutParams {
    /// `beta = 4 Tr(C)`.
    pub penalty_weight: f64,
    /// `M = 4 log(2d) / eps`.
    pub sharpness: f64,
    /// Gap threshold `eps * Tr(C)`.
    pub stop_threshold: f64,
    /// `16 Tr(C) log(2n) n^2 / eps`.
    pub curvature_bound: f64,
    /// `64 log(2n) n^2 / eps^2`.
    pub iter_bound: f64,
    /// `5 Tr(C)`, valid for every gradient operator the run produces.
    pub lambda_bound: f64,
    /// Per-oracle-call failure probability `eps / iter_bound`.
    pub failure_prob: f64,
}

/// Pick the penalty and solver parameters for accuracy `eps` in (0, 1/3).
pub fn choose_params(instance: &MaxCutInstance, eps: f64) -> Result<MaxCutParams, MaxCutError> {
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return Err(MaxCutError::EpsOutOfRange(eps));
    }
    let tr_c = instance.cost_trace();
    if tr_c <= 0.0 {
        return Err(MaxCutError::ZeroTrace);
    }
    let n = instance.vertex_count() as f64;
    let d = n; // diag map: one constraint per vertex
    let log2n = (2.0 * n).ln();
    let iter_bound = 64.0 * log2n * n * n / (eps * eps);
    Ok(MaxCutParams {
        penalty_weight: 4.0 * tr_c,
        sharpness: 4.0 * (2.0 * d).ln() / eps,
        stop_threshold: eps * tr_c,
        curvature_bound: 16.0 * tr_c * log2n * n * n / eps,
        iter_bound,
        lambda_bound: 5.0 * tr_c,
        failure_prob: eps / iter_bound,
    })
}

impl MaxCutParams {
    /// Solve configuration with the parameters above; `max_iters` defaults to
    /// `min(iter_bound, DEFAULT_MAX_ITERS)`.
    pub fn solve_config(&self, samples: usize, seed: u64, max_iters: Option<usize>) -> SolveConfig {
        let default_cap = if self.iter_bound < DEFAULT_MAX_ITERS as f64 {
            self.iter_bound as usize
        } else {
            DEFAULT_MAX_ITERS
        };
        SolveConfig {
            stop_threshold: self.stop_threshold,
            lmo_accuracy: 1.0,
            lmo_failure_prob: self.failure_prob,
            trace_bound: 0.0, // filled by the caller, depends on n
            curvature_bound: self.curvature_bound,
            max_iters: max_iters.unwrap_or(default_cap),
            samples,
            record_trace: true,
            seed,
        }
    }

    pub fn penalty(&self) -> PenaltyParams {
        PenaltyParams::new(self.sharpness, self.penalty_weight)
    }
}

/// Inputs for rounding one Gaussian sample into a binary vector: a sample
/// column and the tracked diagonal `v = diag(X)`.
pub struct RoundingInput<'a> {
    pub sample: &'a [f64],
    pub diag: &'a [f64],
}

/// Variance of the independent completion noise for one coordinate:
/// `1 - diag_i / max_diag`, clipped into [0, 1] against roundoff.
pub fn completion_variance(diag_i: f64, max_diag: f64) -> f64 {
    (1.0 - diag_i / max_diag).clamp(0.0, 1.0)
}

/// Round a Gaussian sample of a near-feasible covariance into a binary
/// vector.
///
/// Draws independent `zeta_i ~ N(0, 1 - diag_i / max(diag))`, forms
/// `sample / sqrt(max(diag)) + zeta`, and takes signs (`sign(0) = +1`). The
/// implied covariance has unit diagonal, so this is plain hyperplane
/// rounding of a feasible point.
pub fn round(input: &RoundingInput<'_>, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, MaxCutError> {
    let n = input.sample.len();
    if input.diag.len() != n {
        return Err(MaxCutError::BadRoundingInput("sample/diag length mismatch".into()));
    }
    if input.sample.iter().chain(input.diag).any(|x| !x.is_finite()) {
        return Err(MaxCutError::BadRoundingInput("non-finite input".into()));
    }
    let max_diag = input.diag.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    if !(max_diag > 0.0) {
        return Err(MaxCutError::BadRoundingInput(format!("max(diag) = {max_diag} not positive")));
    }
    let inv_sqrt = 1.0 / max_diag.sqrt();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let sd = completion_variance(input.diag[i], max_diag).sqrt();
        let noise: f64 = rng.sample(StandardNormal);
        let blended = input.sample[i] * inv_sqrt + sd * noise;
        out.push(if blended >= 0.0 { 1.0 } else { -1.0 });
    }
    Ok(out)
}

/// A binary assignment and its cut value `w' C w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub assignment: Vec<f64>,
    pub value: f64,
}

/// Total weight of edges crossing the cut; equals `w' C w` for `C = L/4`.
/// Streams the edges with O(1) extra memory.
pub fn cut_value(g: &SparseGraph, assignment: &[f64]) -> Result<f64, MaxCutError> {
    for &w in assignment {
        if w != 1.0 && w != -1.0 {
            return Err(MaxCutError::NonBinary(w));
        }
    }
    assert_eq!(assignment.len(), g.vertex_count());
    let mut total = 0.0;
    for e in g.edges() {
        if assignment[e.u] != assignment[e.v] {
            total += e.weight;
        }
    }
    Ok(total)
}

/// Exact maximum cut by enumerating all `2^(n-1)` sign patterns (vertex 0
/// fixed to +1). Only for `n <= 24`.
pub fn brute_force_opt(g: &SparseGraph) -> Result<f64, MaxCutError> {
    const LIMIT: usize = 24;
    let n = g.vertex_count();
    if n > LIMIT {
        return Err(MaxCutError::TooLargeForBruteForce { n, limit: LIMIT });
    }
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << (n - 1)) {
        let mut value = 0.0;
        for e in g.edges() {
            let su = e.u != 0 && (mask >> (e.u - 1)) & 1 == 1;
            let sv = e.v != 0 && (mask >> (e.v - 1)) & 1 == 1;
            if su != sv {
                value += e.weight;
            }
        }
        best = best.max(value);
    }
    Ok(best)
}

/// Everything a pipeline run produces.
pub struct PipelineOutcome {
    pub cuts: Vec<Cut>,
    pub best: Cut,
    pub mean_cut: f64,
    pub trace: TraceLog,
    pub params: MaxCutParams,
    pub converged: bool,
    pub iterations: usize,
    pub final_gap: f64,
    /// `||diag(X) - 1||_inf` at termination.
    pub infeasibility: f64,
    pub total_matvecs: u64,
}

/// Solve the penalized relaxation with `samples` Gaussian columns, round
/// every column, and evaluate the cuts.
pub fn run_pipeline(
    instance: &MaxCutInstance,
    eps: f64,
    samples: usize,
    seed: u64,
    max_iters: Option<usize>,
) -> Result<PipelineOutcome, MaxCutError> {
    run_pipeline_observed(instance, eps, samples, seed, max_iters, &mut NoopObserver)
}

/// [`run_pipeline`] with a solver step observer.
pub fn run_pipeline_observed(
    instance: &MaxCutInstance,
    eps: f64,
    samples: usize,
    seed: u64,
    max_iters: Option<usize>,
    observer: &mut dyn StepObserver,
) -> Result<PipelineOutcome, MaxCutError> {
    let params = choose_params(instance, eps)?;
    let cost = instance.cost();
    let n = instance.vertex_count();
    let problem = PenalizedProblem {
        cost: &cost,
        map: instance.map(),
        cost_trace: instance.cost_trace(),
        penalty: params.penalty(),
        lambda_bound: params.lambda_bound,
    };
    let mut config = params.solve_config(samples, seed, max_iters);
    config.trace_bound = n as f64;
    let report: SolveReport = solve_observed(&problem, &config, observer)?;

    let diag = report.state.projected().to_vec();
    let cuts = round_all(instance, &report, &diag, seed)?;
    let best = cuts
        .iter()
        .cloned()
        .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
        .expect("at least one sample");
    let mean_cut = cuts.iter().map(|c| c.value).sum::<f64>() / cuts.len() as f64;
    let infeasibility = report.state.infeasibility(instance.map().target());
    Ok(PipelineOutcome {
        cuts,
        best,
        mean_cut,
        trace: report.trace,
        params,
        converged: report.converged,
        iterations: report.iterations,
        final_gap: report.final_gap,
        infeasibility,
        total_matvecs: report.total_matvecs,
    })
}

fn round_all(
    instance: &MaxCutInstance,
    report: &SolveReport,
    diag: &[f64],
    seed: u64,
) -> Result<Vec<Cut>, MaxCutError> {
    let samples = report.state.sample_count();
    let round_one = |col: usize| -> Result<Cut, MaxCutError> {
        let mut rng = substream(seed, Stream::Rounding(col as u64));
        let input = RoundingInput { sample: report.state.sample_column(col), diag };
        let assignment = round(&input, &mut rng)?;
        let value = cut_value(instance.graph(), &assignment)?;
        Ok(Cut { assignment, value })
    };

    let threads = thread_cap().min(samples);
    if threads <= 1 || samples < 256 {
        return (0..samples).map(round_one).collect();
    }
    // Columns use independent substreams, so the chunked parallel rounding is
    // deterministic regardless of scheduling.
    let mut cuts: Vec<Option<Cut>> = vec![None; samples];
    let chunk = samples.div_ceil(threads);
    let mut result: Result<(), MaxCutError> = Ok(());
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (idx, slot) in cuts.chunks_mut(chunk).enumerate() {
            let round_one = &round_one;
            handles.push(scope.spawn(move || -> Result<(), MaxCutError> {
                for (off, s) in slot.iter_mut().enumerate() {
                    *s = Some(round_one(idx * chunk + off)?);
                }
                Ok(())
            }));
        }
        for h in handles {
            if let Err(e) = h.join().expect("rounding thread panicked") {
                result = Err(e);
            }
        }
    });
    result?;
    Ok(cuts.into_iter().map(|c| c.expect("filled")).collect())
}
