//! Problem ingestion and implicit linear algebra.
//!
//! Graphs are parsed into [`SparseGraph`], cost matrices are exposed as
//! matvec-only [`SymOp`] implementations (no `n x n` matrix is ever
//! materialized), and constraint maps are accessed through [`ConstraintMap`]
//! so the solver can stay in `O(n + d)` working memory.

use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

/// Errors from graph parsing and construction.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("matrix market header is not `coordinate real/pattern symmetric`: {0}")]
    UnsupportedHeader(String),
    #[error("graph has zero vertices")]
    ZeroVertices,
    #[error("line {line}: self-loop / diagonal entry on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: vertex {vertex} out of range 1..={n}")]
    VertexOutOfRange { line: usize, vertex: usize, n: usize },
    #[error("edge weight is not finite")]
    NonFiniteWeight,
}

/// Input formats accepted by [`load_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    /// Whitespace-separated `i j [w]` lines, `#`/`%` comments, 1-indexed.
    EdgeList,
    /// Matrix Market `coordinate real symmetric` (or `pattern symmetric`).
    MatrixMarket,
}

/// Undirected weighted edge with canonical endpoint order `u < v` (0-indexed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// An undirected weighted graph without self-loops.
///
/// Vertices are 1-indexed in files and 0-indexed here. Duplicate edges are
/// merged by summing their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl SparseGraph {
    /// Build a graph from 0-indexed endpoint pairs, canonicalizing edges.
    pub fn new(n: usize, raw: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::ZeroVertices);
        }
        let mut merged: HashMap<(usize, usize), f64> = HashMap::new();
        for (i, j, w) in raw {
            if i == j {
                return Err(GraphError::SelfLoop { line: 0, vertex: i + 1 });
            }
            if i >= n || j >= n {
                return Err(GraphError::VertexOutOfRange { line: 0, vertex: i.max(j) + 1, n });
            }
            if !w.is_finite() {
                return Err(GraphError::NonFiniteWeight);
            }
            let key = (i.min(j), i.max(j));
            *merged.entry(key).or_insert(0.0) += w;
        }
        let mut edges: Vec<Edge> = merged
            .into_iter()
            .map(|((u, v), weight)| Edge { u, v, weight })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));
        Ok(Self { n, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Weighted degree of each vertex.
    pub fn weighted_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for e in &self.edges {
            deg[e.u] += e.weight;
            deg[e.v] += e.weight;
        }
        deg
    }
}

/// Parse a graph from `source`.
///
/// Edge list: lines `i j [w]` with 1-indexed vertices, weight defaulting to
/// 1.0, and lines starting with `#` or `%` ignored. Matrix Market:
/// `coordinate real symmetric` or `coordinate pattern symmetric`;
/// lower-triangle entries are accepted, diagonal entries are rejected.
pub fn load_graph(source: impl BufRead, format: GraphFormat) -> Result<SparseGraph, GraphError> {
    match format {
        GraphFormat::EdgeList => load_edge_list(source),
        GraphFormat::MatrixMarket => load_matrix_market(source),
    }
}

fn malformed(line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Malformed { line, msg: msg.into() }
}

fn parse_index(tok: &str, line: usize) -> Result<usize, GraphError> {
    let idx: usize = tok
        .parse()
        .map_err(|_| malformed(line, format!("bad vertex index `{tok}`")))?;
    if idx == 0 {
        return Err(malformed(line, "vertex indices are 1-based"));
    }
    Ok(idx - 1)
}

fn check_edge(i: usize, j: usize, w: f64, line: usize) -> Result<(), GraphError> {
    if i == j {
        return Err(GraphError::SelfLoop { line, vertex: i + 1 });
    }
    if !w.is_finite() {
        return Err(GraphError::NonFiniteWeight);
    }
    Ok(())
}

fn load_edge_list(source: impl BufRead) -> Result<SparseGraph, GraphError> {
    let mut raw = Vec::new();
    let mut max_idx = 0usize;
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 2 && toks.len() != 3 {
            return Err(malformed(lineno, format!("expected `i j [w]`, got {} fields", toks.len())));
        }
        let i = parse_index(toks[0], lineno)?;
        let j = parse_index(toks[1], lineno)?;
        let w = if toks.len() == 3 {
            toks[2]
                .parse::<f64>()
                .map_err(|_| malformed(lineno, format!("bad weight `{}`", toks[2])))?
        } else {
            1.0
        };
        check_edge(i, j, w, lineno)?;
        max_idx = max_idx.max(i).max(j);
        raw.push((i, j, w));
    }
    if raw.is_empty() {
        return Err(GraphError::ZeroVertices);
    }
    SparseGraph::new(max_idx + 1, raw)
}

fn load_matrix_market(source: impl BufRead) -> Result<SparseGraph, GraphError> {
    let mut lines = source.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty input"))?;
    let header = header?;
    let lower = header.to_ascii_lowercase();
    let fields: Vec<&str> = lower.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(GraphError::UnsupportedHeader(header));
    }
    let (layout, value, symmetry) = (fields[2], fields[3], fields[4]);
    if layout != "coordinate" || symmetry != "symmetric" || !(value == "real" || value == "pattern") {
        return Err(GraphError::UnsupportedHeader(header));
    }
    let pattern = value == "pattern";

    let mut n = 0usize;
    let mut nnz = 0usize;
    let mut seen_size = false;
    let mut raw = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if !seen_size {
            if toks.len() != 3 {
                return Err(malformed(lineno, "expected size line `rows cols nnz`"));
            }
            let rows: usize = toks[0]
                .parse()
                .map_err(|_| malformed(lineno, "bad row count"))?;
            let cols: usize = toks[1]
                .parse()
                .map_err(|_| malformed(lineno, "bad column count"))?;
            nnz = toks[2]
                .parse()
                .map_err(|_| malformed(lineno, "bad entry count"))?;
            if rows != cols {
                return Err(malformed(lineno, format!("matrix is {rows}x{cols}, expected square")));
            }
            if rows == 0 {
                return Err(GraphError::ZeroVertices);
            }
            n = rows;
            seen_size = true;
            continue;
        }
        let expected = if pattern { 2 } else { 3 };
        if toks.len() != expected {
            return Err(malformed(lineno, format!("expected {expected} fields, got {}", toks.len())));
        }
        let i = parse_index(toks[0], lineno)?;
        let j = parse_index(toks[1], lineno)?;
        if i >= n || j >= n {
            return Err(GraphError::VertexOutOfRange { line: lineno, vertex: i.max(j) + 1, n });
        }
        let w = if pattern {
            1.0
        } else {
            toks[2]
                .parse::<f64>()
                .map_err(|_| malformed(lineno, format!("bad value `{}`", toks[2])))?
        };
        check_edge(i, j, w, lineno)?;
        raw.push((i, j, w));
    }
    if !seen_size {
        return Err(malformed(0, "missing size line"));
    }
    if raw.len() != nnz {
        return Err(malformed(0, format!("size line declared {nnz} entries, found {}", raw.len())));
    }
    SparseGraph::new(n, raw)
}

/// A symmetric linear operator accessed only through matrix-vector products.
///
/// Implementations must be immutable after construction so concurrent matvec
/// calls are safe. Cost operators additionally carry an exact trace (see
/// [`QuarterLaplacian::trace`]); operators without a cheap trace must have it
/// supplied at construction wherever one is required.
pub trait SymOp: Sync {
    fn dim(&self) -> usize;

    /// `out = J x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);

    fn is_diagonally_dominant(&self) -> bool {
        false
    }
}

/// The cost operator `C = L/4` of a graph, applied by streaming over edges.
#[derive(Debug, Clone)]
pub struct QuarterLaplacian<'a> {
    graph: &'a SparseGraph,
    trace: f64,
}

/// Build the cost operator `x -> (1/4) L_G x` for `g`.
pub fn laplacian_operator(g: &SparseGraph) -> QuarterLaplacian<'_> {
    let trace = g.edges().iter().map(|e| 2.0 * e.weight).sum::<f64>() / 4.0;
    QuarterLaplacian { graph: g, trace }
}

impl QuarterLaplacian<'_> {
    /// `Tr(C) = (sum_e 2 w_e) / 4`, exact for the streaming operator.
    pub fn trace(&self) -> f64 {
        self.trace
    }
}

impl SymOp for QuarterLaplacian<'_> {
    fn dim(&self) -> usize {
        self.graph.vertex_count()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        out.fill(0.0);
        for e in self.graph.edges() {
            let diff = e.weight * (x[e.u] - x[e.v]);
            out[e.u] += diff;
            out[e.v] -= diff;
        }
        for o in out.iter_mut() {
            *o *= 0.25;
        }
    }

    fn is_diagonally_dominant(&self) -> bool {
        true
    }
}

/// A dense symmetric operator; mainly useful for small problems and tests.
#[derive(Debug, Clone)]
pub struct DenseSymOp {
    n: usize,
    data: Vec<f64>, // row-major
}

impl DenseSymOp {
    /// Wrap a row-major `n x n` symmetric matrix.
    ///
    /// Panics if the data is not square or not symmetric to 1e-12.
    pub fn new(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        for i in 0..n {
            for j in (i + 1)..n {
                assert!(
                    (data[i * n + j] - data[j * n + i]).abs() <= 1e-12,
                    "matrix not symmetric at ({i},{j})"
                );
            }
        }
        Self { n, data }
    }

    pub fn zero(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }
}

impl SymOp for DenseSymOp {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// A linear map `A : S^n -> R^d` together with its adjoint, accessed in ways
/// that never require forming an `n x n` matrix.
pub trait ConstraintMap: Sync {
    /// Matrix side dimension `n`.
    fn input_dim(&self) -> usize;

    /// Constraint dimension `d`.
    fn output_dim(&self) -> usize;

    /// `out = A(w w^T)`, computable in `O(n + d)`.
    fn rank_one_image(&self, w: &[f64], out: &mut [f64]);

    /// Accumulate `out += scale * (A^*(y)) x`.
    fn adjoint_apply_add(&self, y: &[f64], x: &[f64], scale: f64, out: &mut [f64]);

    /// `Tr(A^*(y))`.
    fn adjoint_trace(&self, y: &[f64]) -> f64;

    /// Right-hand side `b` of the constraints `A(X) = b`.
    fn target(&self) -> &[f64];

    /// Upper bound on `max_i lambda_max(A_i)`; feeds the curvature bound.
    fn constraint_eig_bound(&self) -> f64;

    /// `out = A(I)`, by default via the basis decomposition `I = sum e_i e_i^T`.
    fn identity_image(&self, out: &mut [f64]) {
        let n = self.input_dim();
        let d = self.output_dim();
        out.fill(0.0);
        let mut basis = vec![0.0; n];
        let mut col = vec![0.0; d];
        for i in 0..n {
            basis[i] = 1.0;
            self.rank_one_image(&basis, &mut col);
            for (o, c) in out.iter_mut().zip(&col) {
                *o += *c;
            }
            basis[i] = 0.0;
        }
    }
}

/// The diagonal map `A(X) = diag(X)` with target `b = 1`; the constraint side
/// of the MaxCut relaxation.
#[derive(Debug, Clone)]
pub struct DiagConstraint {
    ones: Vec<f64>,
}

impl DiagConstraint {
    pub fn new(n: usize) -> Self {
        Self { ones: vec![1.0; n] }
    }
}

impl ConstraintMap for DiagConstraint {
    fn input_dim(&self) -> usize {
        self.ones.len()
    }

    fn output_dim(&self) -> usize {
        self.ones.len()
    }

    fn rank_one_image(&self, w: &[f64], out: &mut [f64]) {
        for (o, wi) in out.iter_mut().zip(w) {
            *o = wi * wi;
        }
    }

    fn adjoint_apply_add(&self, y: &[f64], x: &[f64], scale: f64, out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] += scale * y[i] * x[i];
        }
    }

    fn adjoint_trace(&self, y: &[f64]) -> f64 {
        y.iter().sum()
    }

    fn target(&self) -> &[f64] {
        &self.ones
    }

    fn constraint_eig_bound(&self) -> f64 {
        1.0
    }

    fn identity_image(&self, out: &mut [f64]) {
        out.fill(1.0);
    }
}

/// The gradient operator `J = C - weight * A^*(s)` of the penalized objective,
/// applied without materializing `J`.
///
/// `s` is the softmax-difference vector from the penalty gradient and must
/// satisfy `||s||_1 <= 1`.
pub struct PenalizedGradient<'a, C: SymOp + ?Sized, A: ConstraintMap + ?Sized> {
    cost: &'a C,
    map: &'a A,
    slack_grad: &'a [f64],
    weight: f64,
}

impl<'a, C: SymOp + ?Sized, A: ConstraintMap + ?Sized> PenalizedGradient<'a, C, A> {
    pub fn new(cost: &'a C, map: &'a A, slack_grad: &'a [f64], weight: f64) -> Self {
        assert_eq!(map.output_dim(), slack_grad.len(), "dimension mismatch");
        assert_eq!(map.input_dim(), cost.dim(), "dimension mismatch");
        Self { cost, map, slack_grad, weight }
    }
}

impl<C: SymOp + ?Sized, A: ConstraintMap + ?Sized> SymOp for PenalizedGradient<'_, C, A> {
    fn dim(&self) -> usize {
        self.cost.dim()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.cost.apply(x, out);
        self.map.adjoint_apply_add(self.slack_grad, x, -self.weight, out);
    }
}
