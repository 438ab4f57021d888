//! The LogSumExp infeasibility penalty, its gradient, and the penalized
//! objective `g(u, v) = u - weight * phi(v - b)`.
//!
//! `phi` is a smoothed infinity norm: for sharpness `M` it satisfies
//! `||v||_inf <= phi(v) <= log(2d)/M + ||v||_inf`. All logs are natural.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PenaltyError {
    #[error("non-finite input to penalty")]
    NonFinite,
    #[error("sharpness must be positive, got {0}")]
    BadSharpness(f64),
    #[error("empty constraint vector")]
    Empty,
}

fn validate(v: &[f64], sharpness: f64) -> Result<f64, PenaltyError> {
    if sharpness <= 0.0 || !sharpness.is_finite() {
        return Err(PenaltyError::BadSharpness(sharpness));
    }
    if v.is_empty() {
        return Err(PenaltyError::Empty);
    }
    let mut inf = 0.0f64;
    for &x in v {
        if !x.is_finite() {
            return Err(PenaltyError::NonFinite);
        }
        inf = inf.max(x.abs());
    }
    Ok(inf)
}

/// Smoothed infinity norm
/// `(1/M) log(sum_i e^{M v_i} + sum_i e^{-M v_i})`,
/// stabilized by subtracting the largest exponent.
pub fn smoothed_inf_norm(v: &[f64], sharpness: f64) -> Result<f64, PenaltyError> {
    let inf = validate(v, sharpness)?;
    let shift = sharpness * inf;
    let mut sum = 0.0;
    for &x in v {
        sum += (sharpness * x - shift).exp();
        sum += (-sharpness * x - shift).exp();
    }
    Ok(inf + sum.ln() / sharpness)
}

/// Gradient of [`smoothed_inf_norm`]: the softmax-difference vector
/// `s_i = (e^{M v_i} - e^{-M v_i}) / Z` with `||s||_1 <= 1`.
pub fn smoothed_inf_norm_grad(v: &[f64], sharpness: f64) -> Result<Vec<f64>, PenaltyError> {
    let mut out = vec![0.0; v.len()];
    smoothed_inf_norm_grad_into(v, sharpness, &mut out)?;
    Ok(out)
}

/// Allocation-free form of [`smoothed_inf_norm_grad`].
pub fn smoothed_inf_norm_grad_into(
    v: &[f64],
    sharpness: f64,
    out: &mut [f64],
) -> Result<(), PenaltyError> {
    assert_eq!(v.len(), out.len());
    let inf = validate(v, sharpness)?;
    let shift = sharpness * inf;
    let mut norm = 0.0;
    for (o, &x) in out.iter_mut().zip(v) {
        let pos = (sharpness * x - shift).exp();
        let neg = (-sharpness * x - shift).exp();
        *o = pos - neg;
        norm += pos + neg;
    }
    for o in out.iter_mut() {
        *o /= norm;
    }
    Ok(())
}

/// Parameters of the penalized objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    /// Smoothing parameter `M > 0`.
    pub sharpness: f64,
    /// Penalty weight `beta > 0`.
    pub weight: f64,
}

impl PenaltyParams {
    pub fn new(sharpness: f64, weight: f64) -> Self {
        assert!(sharpness > 0.0, "sharpness must be positive");
        assert!(weight > 0.0, "weight must be positive");
        Self { sharpness, weight }
    }

    /// Smoothing gap `log(2d) / M` of the penalty for `d` constraints.
    pub fn smoothing_gap(&self, d: usize) -> f64 {
        ((2 * d) as f64).ln() / self.sharpness
    }
}

/// The penalized objective `g(u, v) = u - weight * phi(v - b)` where
/// `u = <C, X>` and `v = A(X)`.
#[derive(Debug, Clone)]
pub struct PenalizedObjective {
    pub params: PenaltyParams,
    pub target: Vec<f64>,
}

impl PenalizedObjective {
    pub fn new(params: PenaltyParams, target: Vec<f64>) -> Self {
        Self { params, target }
    }

    pub fn constraint_dim(&self) -> usize {
        self.target.len()
    }

    /// Evaluate `g` at the projected iterate `(u, v)`.
    pub fn value(&self, u: f64, v: &[f64]) -> Result<f64, PenaltyError> {
        assert_eq!(v.len(), self.target.len(), "dimension mismatch");
        let slack: Vec<f64> = v.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        Ok(u - self.params.weight * smoothed_inf_norm(&slack, self.params.sharpness)?)
    }

    /// Gradient of the penalty term at `v`, i.e. `s = grad phi(v - b)`.
    pub fn slack_grad_into(&self, v: &[f64], slack_buf: &mut [f64], out: &mut [f64]) -> Result<(), PenaltyError> {
        for ((sb, a), b) in slack_buf.iter_mut().zip(v).zip(&self.target) {
            *sb = a - b;
        }
        smoothed_inf_norm_grad_into(slack_buf, self.params.sharpness, out)
    }
}

/// Upper bound `weight * omega * sharpness * trace_bound^2` on the curvature
/// constant of the penalized objective over the trace ball.
pub fn curvature_upper_bound(weight: f64, constraint_eig_bound: f64, sharpness: f64, trace_bound: f64) -> f64 {
    assert!(weight > 0.0 && constraint_eig_bound > 0.0 && sharpness > 0.0 && trace_bound > 0.0);
    weight * constraint_eig_bound * sharpness * trace_bound * trace_bound
}
