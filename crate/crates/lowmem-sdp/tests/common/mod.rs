//! Shared oracles for the integration suites: dense assemblies, a dense
//! shadow tracker, an exact-LMO dense Frank-Wolfe reference, and certified
//! SDP fixtures. Everything here is an independent computation path from the
//! library (nalgebra eigendecompositions, dense matrices).

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lowmem_sdp::fw_gaussian::{StepObserver, StepRecord};
use lowmem_sdp::operators::{ConstraintMap, SparseGraph, SymOp};
use lowmem_sdp::penalty::{smoothed_inf_norm, smoothed_inf_norm_grad};

pub fn random_graph(n: usize, m: usize, seed: u64) -> SparseGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = std::collections::BTreeSet::new();
    while edges.len() < m {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    SparseGraph::new(n, edges.into_iter().map(|(i, j)| (i, j, 1.0))).unwrap()
}

pub fn random_weighted_graph(n: usize, m: usize, seed: u64) -> SparseGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = std::collections::BTreeSet::new();
    while edges.len() < m {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..2.0)).collect();
    SparseGraph::new(
        n,
        edges.into_iter().zip(weights).map(|((i, j), w)| (i, j, w)),
    )
    .unwrap()
}

/// Dense `C = L/4` assembly straight from the edge list.
pub fn dense_cost(g: &SparseGraph) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut c = DMatrix::zeros(n, n);
    for e in g.edges() {
        c[(e.u, e.u)] += e.weight / 4.0;
        c[(e.v, e.v)] += e.weight / 4.0;
        c[(e.u, e.v)] -= e.weight / 4.0;
        c[(e.v, e.u)] -= e.weight / 4.0;
    }
    c
}

/// Materialize any matvec operator by applying it to basis vectors.
pub fn dense_from_op(op: &dyn SymOp) -> DMatrix<f64> {
    let n = op.dim();
    let mut out = DMatrix::zeros(n, n);
    let mut basis = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        basis[j] = 1.0;
        op.apply(&basis, &mut col);
        basis[j] = 0.0;
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    out
}

pub fn eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Dense shadow of the sampled solver: exact matrix recursion
/// `X <- (1-gamma) X + gamma * weight * w w^T` driven by the solver's own
/// oracle outputs.
pub struct DenseShadow {
    pub x: DMatrix<f64>,
    pub steps: usize,
    pub max_step_matvecs: u64,
}

impl DenseShadow {
    pub fn identity_start(n: usize, trace_bound: f64) -> Self {
        Self {
            x: DMatrix::identity(n, n) * (trace_bound / n as f64),
            steps: 0,
            max_step_matvecs: 0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.x.nrows()).map(|i| self.x[(i, i)]).collect()
    }

    pub fn cost_component(&self, c: &DMatrix<f64>) -> f64 {
        (c * &self.x).trace()
    }
}

impl StepObserver for DenseShadow {
    fn on_step(&mut self, rec: &StepRecord<'_>) {
        let gamma = rec.gamma;
        self.x *= 1.0 - gamma;
        if let Some(w) = rec.direction {
            let wv = DVector::from_column_slice(w);
            self.x += (gamma * rec.weight) * (&wv * wv.transpose());
        }
        self.steps += 1;
        self.max_step_matvecs = self.max_step_matvecs.max(rec.matvecs);
    }
}

/// Penalized MaxCut objective value `g(X) = <C,X> - beta * phi(diag(X) - 1)`
/// from a dense iterate.
pub fn dense_objective(c: &DMatrix<f64>, x: &DMatrix<f64>, weight: f64, sharpness: f64) -> f64 {
    let n = x.nrows();
    let slack: Vec<f64> = (0..n).map(|i| x[(i, i)] - 1.0).collect();
    (c * x).trace() - weight * smoothed_inf_norm(&slack, sharpness).unwrap()
}

/// Deterministic dense Frank-Wolfe on the penalized MaxCut objective with an
/// exact top-eigenvector oracle. Reference implementation for the sampled
/// solver; shares no code with it.
pub struct DenseFwResult {
    pub x: DMatrix<f64>,
    pub objective: f64,
    pub best_objective: f64,
}

pub fn dense_fw_maxcut(
    c: &DMatrix<f64>,
    weight: f64,
    sharpness: f64,
    trace_bound: f64,
    iters: usize,
) -> DenseFwResult {
    let n = c.nrows();
    let mut x = DMatrix::<f64>::identity(n, n) * (trace_bound / n as f64);
    let mut best = f64::NEG_INFINITY;
    for t in 0..iters {
        let gamma = 2.0 / (t as f64 + 2.0);
        let diag: Vec<f64> = (0..n).map(|i| x[(i, i)] - 1.0).collect();
        let s = smoothed_inf_norm_grad(&diag, sharpness).unwrap();
        let mut j = c.clone();
        for i in 0..n {
            j[(i, i)] -= weight * s[i];
        }
        let eig = j.symmetric_eigen();
        let mut top = 0;
        for i in 0..eig.eigenvalues.len() {
            if eig.eigenvalues[i] > eig.eigenvalues[top] {
                top = i;
            }
        }
        let lambda = eig.eigenvalues[top];
        x *= 1.0 - gamma;
        if lambda >= 0.0 {
            let w = eig.eigenvectors.column(top);
            x += (gamma * trace_bound) * (w * w.transpose());
        }
        let obj = dense_objective(c, &x, weight, sharpness);
        best = best.max(obj);
    }
    let objective = dense_objective(c, &x, weight, sharpness);
    DenseFwResult { x, objective, best_objective: best.max(objective) }
}

/// A certified optimum of the MaxCut SDP relaxation, loaded from a fixture.
pub struct SdpFixture {
    pub graph: SparseGraph,
    pub x: DMatrix<f64>,
    pub dual: Vec<f64>,
    pub value: f64,
}

impl SdpFixture {
    pub fn load(name: &str) -> Self {
        let path = format!("{}/tests/fixtures/{name}.txt", env!("CARGO_MANIFEST_DIR"));
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
        let mut lines = text.lines().filter(|l| !l.trim().starts_with('#'));
        let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
        assert_eq!(header[0], "graph");
        let n: usize = header[1].parse().unwrap();
        let m: usize = header[2].parse().unwrap();
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let toks: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
            edges.push((
                toks[0].parse::<usize>().unwrap(),
                toks[1].parse::<usize>().unwrap(),
                toks[2].parse::<f64>().unwrap(),
            ));
        }
        let vline: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
        assert_eq!(vline[0], "sdp_value");
        let value: f64 = vline[1].parse().unwrap();
        assert_eq!(lines.next().unwrap().trim(), "X");
        let mut x = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, tok) in lines.next().unwrap().split_whitespace().enumerate() {
                x[(i, j)] = tok.parse().unwrap();
            }
        }
        assert_eq!(lines.next().unwrap().trim(), "y");
        let dual: Vec<f64> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        let graph = SparseGraph::new(n, edges).unwrap();
        let fixture = Self { graph, x, dual, value };
        fixture.verify(1e-6);
        fixture
    }

    /// Re-check the primal-dual optimality certificate, so the fixture data
    /// is trusted through its own verification, not the generator.
    pub fn verify(&self, tol: f64) {
        let n = self.graph.vertex_count();
        let c = dense_cost(&self.graph);
        for i in 0..n {
            assert!((self.x[(i, i)] - 1.0).abs() <= tol, "diag not one");
        }
        let (lam_min_x, _) = eig_range(&self.x);
        assert!(lam_min_x >= -tol, "X not PSD: {lam_min_x}");
        let mut slack = -c.clone();
        for i in 0..n {
            slack[(i, i)] += self.dual[i];
        }
        let (lam_min_s, _) = eig_range(&slack);
        assert!(lam_min_s >= -tol, "dual slack not PSD: {lam_min_s}");
        let primal = (&c * &self.x).trace();
        let dual_val: f64 = self.dual.iter().sum();
        assert!((primal - dual_val).abs() <= tol * (1.0 + primal.abs()), "duality gap");
        assert!((primal - self.value).abs() <= tol * (1.0 + primal.abs()));
    }

    /// Factor `X = F F^T` (eigendecomposition, negatives clipped) for exact
    /// Gaussian sampling.
    pub fn factor(&self) -> DMatrix<f64> {
        let eig = self.x.clone().symmetric_eigen();
        let n = self.x.nrows();
        let mut f = DMatrix::zeros(n, n);
        for j in 0..n {
            let lam = eig.eigenvalues[j].max(0.0).sqrt();
            for i in 0..n {
                f[(i, j)] = eig.eigenvectors[(i, j)] * lam;
            }
        }
        f
    }
}

/// `z = F g` with `g` standard normal: a sample of `N(0, F F^T)`.
pub fn gaussian_sample(f: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = f.nrows();
    let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    (f * g).iter().copied().collect()
}

/// Adjoint-consistency check data: `<A(w w^T), y>` vs `w^T (A^*(y)) w`.
pub fn adjoint_pairing_gap(map: &dyn ConstraintMap, w: &[f64], y: &[f64]) -> (f64, f64) {
    let d = map.output_dim();
    let mut image = vec![0.0; d];
    map.rank_one_image(w, &mut image);
    let lhs: f64 = image.iter().zip(y).map(|(a, b)| a * b).sum();
    let mut adj = vec![0.0; w.len()];
    map.adjoint_apply_add(y, w, 1.0, &mut adj);
    let rhs: f64 = w.iter().zip(&adj).map(|(a, b)| a * b).sum();
    (lhs, rhs)
}

/// Zipf(s) sampler over `1..=support` by inverse CDF.
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(s: f64, support: usize) -> Self {
        let mut cdf = Vec::with_capacity(support);
        let mut acc = 0.0;
        for i in 1..=support {
            acc += (i as f64).powf(-s);
            cdf.push(acc);
        }
        let total = acc;
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Self { cdf }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) | Err(i) => i + 1,
        }
    }
}

/// Largest principal angle (radians) between the column span of `q`
/// (row-major `n x k`) and the span of the columns of `truth`.
pub fn principal_angle(q: &[f64], n: usize, k: usize, truth: &DMatrix<f64>) -> f64 {
    let qm = DMatrix::from_fn(n, k, |i, j| q[i * k + j]);
    // Orthonormalize the truth basis.
    let tq = truth.clone().qr().q();
    let inner = tq.transpose() * qm;
    let svd = inner.svd(false, false);
    let mut min_sv = f64::INFINITY;
    for &s in svd.singular_values.iter() {
        min_sv = min_sv.min(s);
    }
    min_sv.min(1.0).acos()
}
