//! Frank-Wolfe with randomized extreme-point sampling.
//!
//! The state is a single random extreme point `z` of the feasible set plus
//! the tracked projection `v = B(x)` of the deterministic iterate. Each step
//! computes the deterministic update direction `h` from `v` and switches
//! `z <- h` with probability `gamma_t`, so `E[z_t] = x_t` at every iteration.
//! Since `v` never depends on the coin flips, the direction sequence is
//! shared by every chain.
//!
//! Two feasible sets are built in. Sensor selection maximizes
//! `log det(sum_i x_i a_i a_i^T)` over the cardinality-`k` polytope; its LMO
//! streams the gradient entries `g_i = a_i^T W^{-1} a_i` and keeps the top
//! `k`. Compressive sensing minimizes `0.5 ||Ax - y||^2` over the scaled
//! nonnegative l1-ball; minimization is handled by applying the maximizing
//! LMO to the negated gradient, so the selected score is
//! `-(A^T (v - y))_i` and the zero vertex wins when every score is
//! nonpositive. These are the only places a sign flip occurs.

use std::io::BufRead;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{cholesky_in_place, log_det_spd, solve_lower};
use crate::lmo::UpdateDirection;
use crate::rng::{substream, Stream};

#[derive(Debug, Error)]
pub enum EpError {
    #[error("information matrix is singular")]
    SingularInformation,
    #[error("invalid problem data: {0}")]
    BadProblem(String),
    #[error("fixture line {line}: {msg}")]
    BadFixture { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Compact encoding of a feasible-set vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtremePoint {
    /// Indicator of `k` distinct indices (cardinality-polytope vertex).
    Subset(Vec<usize>),
    /// One nonzero coordinate of the given magnitude (scaled simplex vertex).
    SingleIndex { index: usize, magnitude: f64 },
    Zero,
    /// Clique-supported unit vector scaled by `sqrt(trace bound)`; encodes
    /// the rank-1 extreme point `u u^T` of the chordal spectrahedron.
    CliqueVector { support: Vec<usize>, coeffs: Vec<f64>, scale: f64 },
}

impl ExtremePoint {
    /// Dense vector representation in ambient dimension `n` (for
    /// `CliqueVector` this is the factor `u`).
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        match self {
            ExtremePoint::Subset(idx) => {
                for &i in idx {
                    out[i] = 1.0;
                }
            }
            ExtremePoint::SingleIndex { index, magnitude } => out[*index] = *magnitude,
            ExtremePoint::Zero => {}
            ExtremePoint::CliqueVector { support, coeffs, scale } => {
                for (&i, &c) in support.iter().zip(coeffs) {
                    out[i] = scale * c;
                }
            }
        }
        out
    }

    /// Convert a trace-ball oracle output into its extreme-point encoding.
    pub fn from_direction(dir: &UpdateDirection) -> Self {
        match &dir.direction {
            None => ExtremePoint::Zero,
            Some(w) => {
                let mut support = Vec::new();
                let mut coeffs = Vec::new();
                for (i, &wi) in w.iter().enumerate() {
                    if wi != 0.0 {
                        support.push(i);
                        coeffs.push(wi);
                    }
                }
                ExtremePoint::CliqueVector { support, coeffs, scale: dir.weight.sqrt() }
            }
        }
    }
}

/// A convex problem driven through its extreme points.
pub trait EpProblem: Sync {
    /// Dimension of the tracked projection `v = B(x)`.
    fn tracked_dim(&self) -> usize;

    /// Deterministic start `z_0 = x_0` at an extreme point, with
    /// `v_0 = B(x_0)`.
    fn initial(&self) -> Result<(ExtremePoint, Vec<f64>), EpError>;

    /// Deterministic update direction at `v`, with the Frank-Wolfe gap when
    /// the feasible set makes it computable from `v` alone.
    fn lmo(&self, v: &[f64]) -> Result<(ExtremePoint, Option<f64>), EpError>;

    /// `out = B(h)`.
    fn image(&self, h: &ExtremePoint, out: &mut [f64]);

    /// Objective value at the tracked projection, when computable.
    fn objective(&self, v: &[f64]) -> Option<f64>;

    /// Membership test for feasible-set extreme points.
    fn is_extreme_point(&self, z: &ExtremePoint) -> bool;
}

/// State of one sampling chain.
pub struct EpState {
    pub t: usize,
    pub z: ExtremePoint,
    pub v: Vec<f64>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct EpConfig {
    pub max_iters: usize,
    /// Stop when the computable gap drops to this value; `None` runs the
    /// fixed budget.
    pub gap_stop: Option<f64>,
    pub seed: u64,
    /// Chain number; distinct chains use independent substreams.
    pub chain: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpTraceRow {
    pub iter: usize,
    pub gap: Option<f64>,
    pub objective: Option<f64>,
}

pub struct EpReport {
    pub state: EpState,
    pub rows: Vec<EpTraceRow>,
    pub converged: bool,
}

/// Initialize a chain at the problem's deterministic start.
pub fn ep_init(problem: &dyn EpProblem, config: &EpConfig) -> Result<EpState, EpError> {
    let (z, v) = problem.initial()?;
    Ok(EpState { t: 0, z, v, rng: substream(config.seed, Stream::Chain(config.chain)) })
}

/// One chain step: compute `h` at `v`, switch `z <- h` with probability
/// `gamma_t = 2/(t+2)`, and advance the deterministic projection.
pub fn ep_step(state: &mut EpState, problem: &dyn EpProblem) -> Result<(), EpError> {
    let (h, _gap) = problem.lmo(&state.v)?;
    advance(state, problem, &h);
    Ok(())
}

fn advance(state: &mut EpState, problem: &dyn EpProblem, h: &ExtremePoint) {
    let gamma = 2.0 / (state.t as f64 + 2.0);
    if state.rng.gen::<f64>() < gamma {
        state.z = h.clone();
    }
    let mut image = vec![0.0; problem.tracked_dim()];
    problem.image(h, &mut image);
    for (vi, qi) in state.v.iter_mut().zip(&image) {
        *vi = (1.0 - gamma) * *vi + gamma * qi;
    }
    state.t += 1;
}

/// Run one chain for `max_iters` steps, stopping early when a computable gap
/// reaches `gap_stop`.
pub fn ep_solve(problem: &dyn EpProblem, config: &EpConfig) -> Result<EpReport, EpError> {
    let mut state = ep_init(problem, config)?;
    let mut rows = Vec::new();
    let mut converged = false;
    loop {
        let (h, gap) = problem.lmo(&state.v)?;
        rows.push(EpTraceRow { iter: state.t, gap, objective: problem.objective(&state.v) });
        if let (Some(stop), Some(g)) = (config.gap_stop, gap) {
            if g <= stop {
                converged = true;
                break;
            }
        }
        if state.t >= config.max_iters {
            break;
        }
        advance(&mut state, problem, &h);
    }
    Ok(EpReport { state, rows, converged })
}

/// The deterministic part of a run: the direction sequence `h_0..h_{T-1}`
/// and the final tracked projection. Shared by every chain.
pub fn ep_directions(
    problem: &dyn EpProblem,
    iters: usize,
) -> Result<(Vec<ExtremePoint>, Vec<f64>), EpError> {
    let (_z0, mut v) = problem.initial()?;
    let mut dirs = Vec::with_capacity(iters);
    let mut image = vec![0.0; problem.tracked_dim()];
    for t in 0..iters {
        let gamma = 2.0 / (t as f64 + 2.0);
        let (h, _) = problem.lmo(&v)?;
        problem.image(&h, &mut image);
        for (vi, qi) in v.iter_mut().zip(&image) {
            *vi = (1.0 - gamma) * *vi + gamma * qi;
        }
        dirs.push(h);
    }
    Ok((dirs, v))
}

/// Simulate `count` independent chains over a shared direction sequence and
/// return each chain's final extreme point. Equivalent in distribution to
/// running [`ep_solve`] per chain, at O(1) work per chain step.
pub fn simulate_chains(
    directions: &[ExtremePoint],
    z0: &ExtremePoint,
    count: usize,
    seed: u64,
) -> Vec<ExtremePoint> {
    (0..count)
        .map(|c| {
            let mut rng = substream(seed, Stream::Chain(c as u64));
            let mut last: Option<usize> = None;
            for (t, _h) in directions.iter().enumerate() {
                let gamma = 2.0 / (t as f64 + 2.0);
                if rng.gen::<f64>() < gamma {
                    last = Some(t);
                }
            }
            match last {
                Some(t) => directions[t].clone(),
                None => z0.clone(),
            }
        })
        .collect()
}

/// A regenerable stream of fixed vectors `a_i`; implementations either store
/// the data or rebuild it on demand from a seed.
pub trait VectorStream: Sync {
    /// Number of vectors `n`.
    fn count(&self) -> usize;
    /// Vector dimension `m`.
    fn dim(&self) -> usize;
    /// Write `a_i` into `out`.
    fn write(&self, index: usize, out: &mut [f64]);
}

/// Vectors regenerated from `(seed, index)` with standard normal entries;
/// nothing is stored beyond the seed.
#[derive(Debug, Clone, Copy)]
pub struct SeededVectors {
    pub seed: u64,
    pub count: usize,
    pub dim: usize,
}

impl VectorStream for SeededVectors {
    fn count(&self) -> usize {
        self.count
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn write(&self, index: usize, out: &mut [f64]) {
        let mut rng = substream(self.seed, Stream::Vector(index as u64));
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
    }
}

/// Vectors stored densely (row per vector), e.g. loaded from a fixture.
#[derive(Debug, Clone)]
pub struct DenseVectors {
    dim: usize,
    data: Vec<f64>,
}

impl DenseVectors {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len() % dim.max(1), 0);
        Self { dim, data }
    }
}

impl VectorStream for DenseVectors {
    fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn write(&self, index: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.data[index * self.dim..(index + 1) * self.dim]);
    }
}

/// Sensor selection: maximize `log det(sum_i x_i a_i a_i^T)` over
/// `{0 <= x <= 1, sum x = k}`. The tracked projection is the flattened
/// `m x m` information matrix.
#[derive(Debug)]
pub struct SensorProblem<S: VectorStream> {
    pub sensors: S,
    pub subset_size: usize,
}

impl<S: VectorStream> SensorProblem<S> {
    pub fn new(sensors: S, subset_size: usize) -> Result<Self, EpError> {
        let n = sensors.count();
        let m = sensors.dim();
        if subset_size == 0 || subset_size > n {
            return Err(EpError::BadProblem(format!("subset size {subset_size} not in 1..={n}")));
        }
        if m == 0 {
            return Err(EpError::BadProblem("sensor dimension is zero".into()));
        }
        Ok(Self { sensors, subset_size })
    }

    /// Information matrix `sum_{i in subset} a_i a_i^T`, flattened row-major.
    pub fn information_matrix(&self, subset: &[usize]) -> Vec<f64> {
        let m = self.sensors.dim();
        let mut w = vec![0.0; m * m];
        let mut a = vec![0.0; m];
        for &i in subset {
            self.sensors.write(i, &mut a);
            for r in 0..m {
                for c in 0..m {
                    w[r * m + c] += a[r] * a[c];
                }
            }
        }
        w
    }

    /// `log det` of the information matrix of `subset`.
    pub fn log_det_subset(&self, subset: &[usize]) -> Result<f64, EpError> {
        let m = self.sensors.dim();
        log_det_spd(&self.information_matrix(subset), m).map_err(|_| EpError::SingularInformation)
    }

    /// Stream the gradient entries `g_i = a_i^T W^{-1} a_i` and keep the `k`
    /// largest (ties to the lower index). Memory: `O(m^2 + k)`.
    fn top_k_scores(&self, w: &[f64]) -> Result<(Vec<usize>, f64), EpError> {
        let m = self.sensors.dim();
        let n = self.sensors.count();
        let k = self.subset_size;
        let mut chol = w.to_vec();
        cholesky_in_place(&mut chol, m).map_err(|_| EpError::SingularInformation)?;
        // Entries kept as (score, index); `worse` orders by score then by
        // preferring the lower index on exact ties.
        let worse = |a: (f64, usize), b: (f64, usize)| -> bool {
            a.0 < b.0 || (a.0 == b.0 && a.1 > b.1)
        };
        let mut kept: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let mut a = vec![0.0; m];
        for i in 0..n {
            self.sensors.write(i, &mut a);
            solve_lower(&chol, m, &mut a);
            let score: f64 = a.iter().map(|x| x * x).sum();
            kept.push((score, i));
            if kept.len() > k {
                let mut worst = 0;
                for j in 1..kept.len() {
                    if worse(kept[j], kept[worst]) {
                        worst = j;
                    }
                }
                kept.swap_remove(worst);
            }
        }
        let total: f64 = kept.iter().map(|e| e.0).sum();
        let mut idx: Vec<usize> = kept.into_iter().map(|e| e.1).collect();
        idx.sort_unstable();
        Ok((idx, total))
    }
}

impl<S: VectorStream> EpProblem for SensorProblem<S> {
    fn tracked_dim(&self) -> usize {
        let m = self.sensors.dim();
        m * m
    }

    fn initial(&self) -> Result<(ExtremePoint, Vec<f64>), EpError> {
        let subset: Vec<usize> = (0..self.subset_size).collect();
        let w = self.information_matrix(&subset);
        // The start must already be invertible for the gradient to exist.
        log_det_spd(&w, self.sensors.dim()).map_err(|_| EpError::SingularInformation)?;
        Ok((ExtremePoint::Subset(subset), w))
    }

    fn lmo(&self, v: &[f64]) -> Result<(ExtremePoint, Option<f64>), EpError> {
        let (idx, total) = self.top_k_scores(v)?;
        // <grad, x> = Tr(W^{-1} W) = m, so the gap needs only the kept scores.
        let gap = total - self.sensors.dim() as f64;
        Ok((ExtremePoint::Subset(idx), Some(gap)))
    }

    fn image(&self, h: &ExtremePoint, out: &mut [f64]) {
        let m = self.sensors.dim();
        out.fill(0.0);
        let subset = match h {
            ExtremePoint::Subset(idx) => idx,
            _ => panic!("sensor problem expects subset extreme points"),
        };
        let mut a = vec![0.0; m];
        for &i in subset {
            self.sensors.write(i, &mut a);
            for r in 0..m {
                for c in 0..m {
                    out[r * m + c] += a[r] * a[c];
                }
            }
        }
    }

    fn objective(&self, v: &[f64]) -> Option<f64> {
        log_det_spd(v, self.sensors.dim()).ok()
    }

    fn is_extreme_point(&self, z: &ExtremePoint) -> bool {
        match z {
            ExtremePoint::Subset(idx) => {
                idx.len() == self.subset_size
                    && idx.windows(2).all(|w| w[0] < w[1])
                    && idx.iter().all(|&i| i < self.sensors.count())
            }
            _ => false,
        }
    }
}

/// Nonnegative compressive sensing: minimize `0.5 ||Ax - y||^2` over
/// `{x >= 0, ||x||_1 <= budget}`. The tracked projection is `v = Ax`.
#[derive(Debug)]
pub struct CsProblem<S: VectorStream> {
    /// Columns of `A`, one per signal coordinate.
    pub columns: S,
    pub measurements: Vec<f64>,
    pub budget: f64,
}

impl<S: VectorStream> CsProblem<S> {
    pub fn new(columns: S, measurements: Vec<f64>, budget: f64) -> Result<Self, EpError> {
        if measurements.len() != columns.dim() {
            return Err(EpError::BadProblem("measurement dimension mismatch".into()));
        }
        if !(budget > 0.0) {
            return Err(EpError::BadProblem(format!("budget {budget} must be positive")));
        }
        Ok(Self { columns, measurements, budget })
    }

    /// Residual objective `0.5 ||v - y||^2`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        0.5 * v
            .iter()
            .zip(&self.measurements)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    }
}

impl<S: VectorStream> EpProblem for CsProblem<S> {
    fn tracked_dim(&self) -> usize {
        self.columns.dim()
    }

    fn initial(&self) -> Result<(ExtremePoint, Vec<f64>), EpError> {
        Ok((ExtremePoint::Zero, vec![0.0; self.columns.dim()]))
    }

    fn lmo(&self, v: &[f64]) -> Result<(ExtremePoint, Option<f64>), EpError> {
        let m = self.columns.dim();
        let n = self.columns.count();
        let resid: Vec<f64> = v.iter().zip(&self.measurements).map(|(a, b)| a - b).collect();
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0usize;
        let mut col = vec![0.0; m];
        for i in 0..n {
            self.columns.write(i, &mut col);
            let score: f64 = -col.iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>();
            if score > best {
                best = score;
                best_idx = i;
            }
        }
        // gap = max(budget * best, 0) + <v, v - y>
        let vres: f64 = v.iter().zip(&resid).map(|(a, b)| a * b).sum();
        let gap = (self.budget * best).max(0.0) + vres;
        let h = if best > 0.0 {
            ExtremePoint::SingleIndex { index: best_idx, magnitude: self.budget }
        } else {
            ExtremePoint::Zero
        };
        Ok((h, Some(gap)))
    }

    fn image(&self, h: &ExtremePoint, out: &mut [f64]) {
        out.fill(0.0);
        match h {
            ExtremePoint::Zero => {}
            ExtremePoint::SingleIndex { index, magnitude } => {
                let m = self.columns.dim();
                let mut col = vec![0.0; m];
                self.columns.write(*index, &mut col);
                for (o, c) in out.iter_mut().zip(&col) {
                    *o = magnitude * c;
                }
            }
            _ => panic!("cs problem expects single-index extreme points"),
        }
    }

    fn objective(&self, v: &[f64]) -> Option<f64> {
        Some(self.residual(v))
    }

    fn is_extreme_point(&self, z: &ExtremePoint) -> bool {
        match z {
            ExtremePoint::Zero => true,
            ExtremePoint::SingleIndex { index, magnitude } => {
                *index < self.columns.count() && *magnitude == self.budget
            }
            _ => false,
        }
    }
}

fn numbers_from(line: &str, lineno: usize) -> Result<Vec<f64>, EpError> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| EpError::BadFixture { line: lineno, msg: format!("bad number `{t}`") })
        })
        .collect()
}

fn fixture_lines(source: impl BufRead) -> Result<Vec<(usize, String)>, EpError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim().to_string();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed));
    }
    Ok(out)
}

/// Load a sensor-selection fixture: header `sensors n m k`, then `n` lines of
/// `m` numbers (the rows `a_i`). `#` comments allowed.
pub fn load_sensor_fixture(source: impl BufRead) -> Result<SensorProblem<DenseVectors>, EpError> {
    let lines = fixture_lines(source)?;
    let (hline, header) = lines
        .first()
        .ok_or_else(|| EpError::BadFixture { line: 0, msg: "empty fixture".into() })?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != "sensors" {
        return Err(EpError::BadFixture { line: *hline, msg: "expected `sensors n m k`".into() });
    }
    let parse = |t: &str| -> Result<usize, EpError> {
        t.parse()
            .map_err(|_| EpError::BadFixture { line: *hline, msg: format!("bad count `{t}`") })
    };
    let (n, m, k) = (parse(toks[1])?, parse(toks[2])?, parse(toks[3])?);
    let mut data = Vec::with_capacity(n * m);
    if lines.len() != n + 1 {
        return Err(EpError::BadFixture {
            line: *hline,
            msg: format!("expected {n} vector lines, found {}", lines.len() - 1),
        });
    }
    for (lineno, line) in &lines[1..] {
        let nums = numbers_from(line, *lineno)?;
        if nums.len() != m {
            return Err(EpError::BadFixture {
                line: *lineno,
                msg: format!("expected {m} numbers, got {}", nums.len()),
            });
        }
        data.extend(nums);
    }
    SensorProblem::new(DenseVectors::new(m, data), k)
}

/// Load a compressive-sensing fixture: header `csrecover n m alpha`, then `n`
/// lines with the columns of `A` (`m` numbers each), then one line with `y`.
pub fn load_cs_fixture(source: impl BufRead) -> Result<CsProblem<DenseVectors>, EpError> {
    let lines = fixture_lines(source)?;
    let (hline, header) = lines
        .first()
        .ok_or_else(|| EpError::BadFixture { line: 0, msg: "empty fixture".into() })?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != "csrecover" {
        return Err(EpError::BadFixture { line: *hline, msg: "expected `csrecover n m alpha`".into() });
    }
    let n: usize = toks[1]
        .parse()
        .map_err(|_| EpError::BadFixture { line: *hline, msg: "bad n".into() })?;
    let m: usize = toks[2]
        .parse()
        .map_err(|_| EpError::BadFixture { line: *hline, msg: "bad m".into() })?;
    let alpha: f64 = toks[3]
        .parse()
        .map_err(|_| EpError::BadFixture { line: *hline, msg: "bad alpha".into() })?;
    if lines.len() != n + 2 {
        return Err(EpError::BadFixture {
            line: *hline,
            msg: format!("expected {} data lines, found {}", n + 1, lines.len() - 1),
        });
    }
    let mut data = Vec::with_capacity(n * m);
    for (lineno, line) in &lines[1..=n] {
        let nums = numbers_from(line, *lineno)?;
        if nums.len() != m {
            return Err(EpError::BadFixture {
                line: *lineno,
                msg: format!("expected {m} numbers, got {}", nums.len()),
            });
        }
        data.extend(nums);
    }
    let (ylineno, yline) = &lines[n + 1];
    let y = numbers_from(yline, *ylineno)?;
    if y.len() != m {
        return Err(EpError::BadFixture {
            line: *ylineno,
            msg: format!("expected {m} measurements, got {}", y.len()),
        });
    }
    CsProblem::new(DenseVectors::new(m, data), y, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_sensors(n: usize) -> DenseVectors {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseVectors::new(n, data)
    }

    #[test]
    fn symmetric_instance_breaks_ties_to_low_indices() {
        // a_i = e_i: every gradient entry is identical, so the selected
        // subset is the first k indices.
        let problem = SensorProblem::new(identity_sensors(6), 3).unwrap();
        let x_uniform: Vec<f64> = {
            // W = (k/n) I
            let mut w = vec![0.0; 36];
            for i in 0..6 {
                w[i * 6 + i] = 0.5;
            }
            w
        };
        let (h, _gap) = problem.lmo(&x_uniform).unwrap();
        assert_eq!(h, ExtremePoint::Subset(vec![0, 1, 2]));
    }

    #[test]
    fn sensor_gap_is_zero_at_uniform_identity_instance() {
        // With a_i = e_i and W = (k/n) I, every g_i = n/k and the top-k sum
        // is exactly m = n, so the iterate is stationary.
        let problem = SensorProblem::new(identity_sensors(4), 2).unwrap();
        let mut w = vec![0.0; 16];
        for i in 0..4 {
            w[i * 4 + i] = 0.5;
        }
        let (_h, gap) = problem.lmo(&w).unwrap();
        assert!(gap.unwrap().abs() < 1e-12);
    }

    #[test]
    fn sensor_initial_state_is_consistent() {
        // Five directions in R^2; any pair spans.
        let data: Vec<f64> = (0..5)
            .flat_map(|i| {
                let th = 0.3 * (i as f64 + 1.0);
                [th.cos(), th.sin()]
            })
            .collect();
        let problem = SensorProblem::new(DenseVectors::new(2, data), 2).unwrap();
        let (z0, v0) = problem.initial().unwrap();
        assert_eq!(z0, ExtremePoint::Subset(vec![0, 1]));
        assert!(problem.is_extreme_point(&z0));
        let w = problem.information_matrix(&[0, 1]);
        assert_eq!(v0, w);
    }

    #[test]
    fn singular_information_is_reported() {
        // Two sensors along the same axis in R^2 cannot span.
        let data = DenseVectors::new(2, vec![1.0, 0.0, 1.0, 0.0, 2.0, 0.0]);
        let problem = SensorProblem::new(data, 2).unwrap();
        assert!(matches!(problem.initial(), Err(EpError::SingularInformation)));
    }

    #[test]
    fn cs_lmo_picks_steepest_column() {
        // x = 0, A = I (3x3), y = (0, 2, 1): scores are y, so index 1.
        let problem = CsProblem::new(identity_sensors(3), vec![0.0, 2.0, 1.0], 1.5).unwrap();
        let (h, gap) = problem.lmo(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(h, ExtremePoint::SingleIndex { index: 1, magnitude: 1.5 });
        assert!(gap.unwrap() > 0.0);
    }

    #[test]
    fn cs_zero_is_stationary_for_zero_data() {
        let problem = CsProblem::new(identity_sensors(3), vec![0.0; 3], 1.0).unwrap();
        let (h, gap) = problem.lmo(&[0.0; 3]).unwrap();
        assert_eq!(h, ExtremePoint::Zero);
        assert_eq!(gap.unwrap(), 0.0);
    }

    #[test]
    fn full_step_replaces_the_sample() {
        let problem = CsProblem::new(identity_sensors(3), vec![0.0, 2.0, 1.0], 1.0).unwrap();
        let config = EpConfig { max_iters: 1, gap_stop: None, seed: 5, chain: 0 };
        let mut state = ep_init(&problem, &config).unwrap();
        ep_step(&mut state, &problem).unwrap();
        // gamma = 1 at t = 0: z = h deterministically and v = B(h).
        assert_eq!(state.z, ExtremePoint::SingleIndex { index: 1, magnitude: 1.0 });
        assert_eq!(state.v, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn projection_is_deterministic_across_chains() {
        let problem = CsProblem::new(identity_sensors(4), vec![0.4, 1.0, 0.2, 0.6], 1.2).unwrap();
        let mut finals = Vec::new();
        for chain in 0..5 {
            let config = EpConfig { max_iters: 30, gap_stop: None, seed: 9, chain };
            let report = ep_solve(&problem, &config).unwrap();
            finals.push(report.state.v.clone());
            assert!(problem.is_extreme_point(&report.state.z));
        }
        for v in &finals[1..] {
            assert_eq!(v, &finals[0]);
        }
    }

    #[test]
    fn seeded_replay_is_identical() {
        let problem = CsProblem::new(identity_sensors(4), vec![0.4, 1.0, 0.2, 0.6], 1.2).unwrap();
        let config = EpConfig { max_iters: 25, gap_stop: None, seed: 31, chain: 2 };
        let a = ep_solve(&problem, &config).unwrap();
        let b = ep_solve(&problem, &config).unwrap();
        assert_eq!(a.state.z, b.state.z);
        assert_eq!(a.state.v, b.state.v);
    }

    #[test]
    fn simulated_chains_match_explicit_chains() {
        let problem = CsProblem::new(identity_sensors(4), vec![0.4, 1.0, 0.2, 0.6], 1.2).unwrap();
        let iters = 20;
        let (dirs, _v) = ep_directions(&problem, iters).unwrap();
        let (z0, _) = problem.initial().unwrap();
        let fast = simulate_chains(&dirs, &z0, 6, 9);
        for (chain, z_fast) in fast.iter().enumerate() {
            let config = EpConfig { max_iters: iters, gap_stop: None, seed: 9, chain: chain as u64 };
            let mut state = ep_init(&problem, &config).unwrap();
            for _ in 0..iters {
                ep_step(&mut state, &problem).unwrap();
            }
            assert_eq!(z_fast, &state.z, "chain {chain}");
        }
    }

    #[test]
    fn cs_gap_decreases_objective_toward_optimum() {
        // A = I, y >= 0 with ||y||_1 within budget: optimum is x = y.
        let y = vec![0.3, 0.2, 0.1];
        let problem = CsProblem::new(identity_sensors(3), y.clone(), 1.0).unwrap();
        let config = EpConfig { max_iters: 4000, gap_stop: Some(1e-4), seed: 1, chain: 0 };
        let report = ep_solve(&problem, &config).unwrap();
        assert!(report.converged);
        let f = problem.residual(&report.state.v);
        assert!(f < 1e-3, "residual {f}");
    }

    #[test]
    fn extreme_point_dense_forms() {
        let p = ExtremePoint::Subset(vec![1, 3]);
        assert_eq!(p.to_dense(4), vec![0.0, 1.0, 0.0, 1.0]);
        let p = ExtremePoint::SingleIndex { index: 2, magnitude: 2.5 };
        assert_eq!(p.to_dense(3), vec![0.0, 0.0, 2.5]);
        assert_eq!(ExtremePoint::Zero.to_dense(2), vec![0.0, 0.0]);
        let p = ExtremePoint::CliqueVector {
            support: vec![0, 2],
            coeffs: vec![0.6, 0.8],
            scale: 2.0,
        };
        assert_eq!(p.to_dense(3), vec![1.2, 0.0, 1.6]);
    }

    #[test]
    fn fixture_round_trips() {
        let text = "# demo\nsensors 3 2 2\n1.0 0.0\n0.0 1.0\n1.0 1.0\n";
        let problem = load_sensor_fixture(std::io::Cursor::new(text)).unwrap();
        assert_eq!(problem.sensors.count(), 3);
        assert_eq!(problem.sensors.dim(), 2);
        assert_eq!(problem.subset_size, 2);

        let text = "csrecover 2 3 1.5\n1 0 0\n0 1 0\n0.5 0.25 0.0\n";
        let problem = load_cs_fixture(std::io::Cursor::new(text)).unwrap();
        assert_eq!(problem.columns.count(), 2);
        assert_eq!(problem.budget, 1.5);
        assert_eq!(problem.measurements, vec![0.5, 0.25, 0.0]);

        let err = load_sensor_fixture(std::io::Cursor::new("sensors 2 2 1\n1 0\n")).unwrap_err();
        assert!(matches!(err, EpError::BadFixture { .. }));
    }
}
