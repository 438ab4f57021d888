//! Linear maximization oracles over the trace ball and the chordal
//! spectrahedron.
//!
//! The trace-ball oracle is the power method with random start on the shifted
//! operator `J + lambda_bound * I`; the shift keeps the dominant eigenvalue of
//! the iterated operator nonnegative so the random-start analysis applies to
//! symmetric (not just PSD) inputs. The chordal oracle runs one power method
//! per clique of a clique cover and keeps the best.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::operators::{ConstraintMap, SymOp};

/// Hard cap on power-method matvecs; exceeding it signals pathological
/// accuracy/failure-probability settings rather than a long computation.
pub const MATVEC_HARD_CAP: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum LmoError {
    #[error("power method needs {required} matvecs, above the cap {cap}")]
    MatvecCap { required: f64, cap: u64 },
    #[error("matvec produced a non-finite value")]
    NonFiniteMatvec,
    #[error("invalid oracle parameter: {0}")]
    BadParams(String),
    #[error("clique cover is empty")]
    EmptyCover,
    #[error("clique {index} is invalid: {msg}")]
    BadClique { index: usize, msg: String },
}

/// Accuracy contract for one oracle call.
#[derive(Debug, Clone, Copy)]
pub struct LmoParams {
    /// Trace bound `alpha` of the feasible ball.
    pub trace_bound: f64,
    /// Additive accuracy `delta`: the returned direction satisfies
    /// `alpha * w'Jw >= alpha * lambda_max(J) - delta` with probability
    /// `1 - failure_prob`.
    pub additive_err: f64,
    /// Per-call failure probability `p` in (0, 1).
    pub failure_prob: f64,
    /// Caller-supplied upper bound on `max_i |lambda_i(J)|`.
    pub lambda_bound: f64,
    /// Matvec budget; defaults to [`MATVEC_HARD_CAP`].
    pub matvec_cap: u64,
}

impl LmoParams {
    pub fn new(trace_bound: f64, additive_err: f64, failure_prob: f64, lambda_bound: f64) -> Self {
        Self { trace_bound, additive_err, failure_prob, lambda_bound, matvec_cap: MATVEC_HARD_CAP }
    }

    fn validate(&self) -> Result<(), LmoError> {
        if !(self.additive_err > 0.0) {
            return Err(LmoError::BadParams(format!("additive_err = {}", self.additive_err)));
        }
        if !(self.failure_prob > 0.0 && self.failure_prob < 1.0) {
            return Err(LmoError::BadParams(format!("failure_prob = {}", self.failure_prob)));
        }
        if !(self.lambda_bound >= 0.0 && self.lambda_bound.is_finite()) {
            return Err(LmoError::BadParams(format!("lambda_bound = {}", self.lambda_bound)));
        }
        if !(self.trace_bound > 0.0) {
            return Err(LmoError::BadParams(format!("trace_bound = {}", self.trace_bound)));
        }
        Ok(())
    }
}

/// Power-method iteration count `ceil((lambda * alpha / delta) * log(n / p^2))`
/// for an `n`-dimensional operator.
pub fn required_power_iters(n: usize, params: &LmoParams) -> f64 {
    let log_term = (n as f64).ln() - 2.0 * params.failure_prob.ln();
    (params.lambda_bound * params.trace_bound / params.additive_err * log_term).ceil()
}

/// Approximate top eigenpair from the power method with random start.
#[derive(Debug, Clone)]
pub struct EigenEstimate {
    /// Unit vector.
    pub vector: Vec<f64>,
    /// Exact Rayleigh quotient `w' J w` of `vector`.
    pub rayleigh: f64,
    /// Matvecs performed: the iteration count plus one for the final Rayleigh
    /// quotient.
    pub matvecs: u64,
}

/// Run the power method with random start on `op`.
///
/// The start vector is uniform on the unit sphere, the iterate is normalized
/// every step, and the Rayleigh quotient is computed once at the end (one
/// extra matvec, included in the count).
pub fn power_method<O: SymOp + ?Sized>(
    op: &O,
    params: &LmoParams,
    rng: &mut ChaCha8Rng,
) -> Result<EigenEstimate, LmoError> {
    params.validate()?;
    let n = op.dim();
    let iters = required_power_iters(n, params);
    if !iters.is_finite() || iters > params.matvec_cap as f64 {
        return Err(LmoError::MatvecCap { required: iters, cap: params.matvec_cap });
    }
    let iters = iters as u64;

    let mut x = random_unit(n, rng);
    let mut y = vec![0.0; n];
    let mut matvecs = 0u64;
    for _ in 0..iters {
        op.apply(&x, &mut y);
        matvecs += 1;
        let mut norm_sq = 0.0;
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += params.lambda_bound * xi;
            norm_sq += *yi * *yi;
        }
        if !norm_sq.is_finite() {
            return Err(LmoError::NonFiniteMatvec);
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            // x is an exact eigenvector of the shifted operator with
            // eigenvalue zero; keep it.
            break;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = *yi / norm;
        }
    }
    op.apply(&x, &mut y);
    matvecs += 1;
    let rayleigh: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    if !rayleigh.is_finite() {
        return Err(LmoError::NonFiniteMatvec);
    }
    Ok(EigenEstimate { vector: x, rayleigh, matvecs })
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return x.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// The selected update direction `H = weight * w w^T` (or the zero matrix).
#[derive(Debug, Clone)]
pub struct UpdateDirection {
    /// `trace_bound` when the Rayleigh quotient is nonnegative, else 0.
    pub weight: f64,
    /// Unit direction vector; absent when the zero matrix was selected.
    pub direction: Option<Vec<f64>>,
    /// `q = A(H)`, the constraint image of the chosen extreme point.
    pub image: Vec<f64>,
    /// `w' J w` of the computed vector (kept even when weight is 0).
    pub rayleigh: f64,
    /// Total matvecs spent inside the oracle.
    pub matvecs: u64,
}

fn select_direction<A: ConstraintMap + ?Sized>(
    map: &A,
    est: EigenEstimate,
    trace_bound: f64,
) -> UpdateDirection {
    let d = map.output_dim();
    if est.rayleigh >= 0.0 {
        let mut image = vec![0.0; d];
        map.rank_one_image(&est.vector, &mut image);
        for q in image.iter_mut() {
            *q *= trace_bound;
        }
        UpdateDirection {
            weight: trace_bound,
            direction: Some(est.vector),
            image,
            rayleigh: est.rayleigh,
            matvecs: est.matvecs,
        }
    } else {
        UpdateDirection {
            weight: 0.0,
            direction: None,
            image: vec![0.0; d],
            rayleigh: est.rayleigh,
            matvecs: est.matvecs,
        }
    }
}

/// Approximate linear maximization over the trace ball
/// `{X >= 0 : Tr(X) <= trace_bound}`.
pub fn trace_ball_lmo<O: SymOp + ?Sized, A: ConstraintMap + ?Sized>(
    op: &O,
    map: &A,
    params: &LmoParams,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateDirection, LmoError> {
    let est = power_method(op, params, rng)?;
    Ok(select_direction(map, est, params.trace_bound))
}

/// Maximal cliques covering every vertex of a chordal sparsity graph.
#[derive(Debug, Clone)]
pub struct CliqueCover {
    cliques: Vec<Vec<usize>>,
    n: usize,
}

impl CliqueCover {
    pub fn new(n: usize, cliques: Vec<Vec<usize>>) -> Result<Self, LmoError> {
        if cliques.is_empty() {
            return Err(LmoError::EmptyCover);
        }
        let mut covered = vec![false; n];
        let mut cleaned = Vec::with_capacity(cliques.len());
        for (index, mut c) in cliques.into_iter().enumerate() {
            if c.is_empty() {
                return Err(LmoError::BadClique { index, msg: "empty clique".into() });
            }
            c.sort_unstable();
            c.dedup();
            if *c.last().unwrap() >= n {
                return Err(LmoError::BadClique {
                    index,
                    msg: format!("vertex {} out of range 0..{n}", c.last().unwrap()),
                });
            }
            for &v in &c {
                covered[v] = true;
            }
            cleaned.push(c);
        }
        if let Some(v) = covered.iter().position(|&b| !b) {
            return Err(LmoError::BadClique { index: 0, msg: format!("vertex {v} not covered") });
        }
        Ok(Self { cliques: cleaned, n })
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }
}

/// Principal submatrix view of a symmetric operator, applied by scatter /
/// apply / gather.
struct SubmatrixOp<'a, O: SymOp + ?Sized> {
    op: &'a O,
    support: &'a [usize],
}

impl<O: SymOp + ?Sized> SymOp for SubmatrixOp<'_, O> {
    fn dim(&self) -> usize {
        self.support.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.op.dim();
        let mut full_x = vec![0.0; n];
        let mut full_y = vec![0.0; n];
        for (&idx, &xi) in self.support.iter().zip(x) {
            full_x[idx] = xi;
        }
        self.op.apply(&full_x, &mut full_y);
        for (o, &idx) in out.iter_mut().zip(self.support) {
            *o = full_y[idx];
        }
    }
}

/// Clique-wise oracle over the chordal spectrahedron: one power method per
/// clique of `cover`, best Rayleigh quotient wins (lowest clique index on
/// ties). The overall failure probability is union-bounded by
/// `failure_prob * cover.cliques().len()`.
pub fn chordal_lmo<O: SymOp + ?Sized, A: ConstraintMap + ?Sized>(
    op: &O,
    map: &A,
    cover: &CliqueCover,
    params: &LmoParams,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateDirection, LmoError> {
    assert_eq!(cover.n, op.dim(), "cover does not match operator dimension");
    let mut best: Option<(EigenEstimate, &[usize])> = None;
    let mut total_matvecs = 0u64;
    for clique in cover.cliques() {
        let sub = SubmatrixOp { op, support: clique };
        let est = power_method(&sub, params, rng)?;
        total_matvecs += est.matvecs;
        let better = match &best {
            None => true,
            Some((b, _)) => est.rayleigh > b.rayleigh,
        };
        if better {
            best = Some((est, clique));
        }
    }
    let (mut est, support) = best.expect("cover is nonempty");
    // Zero-pad the clique-supported vector back to full dimension.
    let mut full = vec![0.0; cover.n];
    for (&idx, &xi) in support.iter().zip(&est.vector) {
        full[idx] = xi;
    }
    est.vector = full;
    est.matvecs = total_matvecs;
    Ok(select_direction(map, est, params.trace_bound))
}
