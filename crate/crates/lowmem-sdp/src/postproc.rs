//! Streaming post-processors for sample streams: a rank-`r` covariance
//! sketch with Nystrom-style reconstruction, Oja-style streaming PCA, and
//! Space-Saving heavy hitters for extreme-point index streams.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{cholesky_in_place, jacobi_eigh, orthonormalize_columns, solve_lower};
use crate::rng::{substream, Stream};

#[derive(Debug, Error)]
pub enum PostprocError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("rank {rank} exceeds sketch width {width}")]
    RankTooLarge { rank: usize, width: usize },
    #[error("capacity must be at least 1")]
    ZeroCapacity,
}

/// Running sketch `Y_N = X_N * Omega` of the sample covariance
/// `X_N = (1/N) sum z_i z_i^T`, with the `n x k` standard normal test matrix
/// `Omega` regenerated from the seed on demand. Memory: `Theta(k n)` for `Y`.
#[derive(Debug, Clone)]
pub struct CovSketch {
    seed: u64,
    n: usize,
    k: usize,
    y: Vec<f64>, // n x k row-major
    count: u64,
}

/// Rank-`r` PSD factorization `X ~= basis * diag(eigenvalues) * basis^T`.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    /// `n x r` row-major with orthonormal (or zero) columns.
    pub basis: Vec<f64>,
    /// Nonnegative, descending.
    pub eigenvalues: Vec<f64>,
    pub n: usize,
    pub rank: usize,
    /// Set when the shifted core was rank deficient and the reconstruction
    /// fell back to a pseudo-inverse of its eigendecomposition.
    pub degenerate: bool,
}

impl LowRankFactors {
    /// Entry `(i, j)` of the reconstructed matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        (0..self.rank)
            .map(|c| self.eigenvalues[c] * self.basis[i * self.rank + c] * self.basis[j * self.rank + c])
            .sum()
    }
}

impl CovSketch {
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        assert!(k >= 1 && k <= n, "sketch width must satisfy 1 <= k <= n");
        Self { seed, n, k, y: vec![0.0; n * k], count: 0 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn width(&self) -> usize {
        self.k
    }

    /// Current sketch `Y`, row-major `n x k`.
    pub fn sketch(&self) -> &[f64] {
        &self.y
    }

    fn test_row(&self, i: usize, out: &mut [f64]) {
        let mut rng = substream(self.seed, Stream::Vector(i as u64));
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
    }

    /// The full test matrix, regenerated; mainly for diagnostics and tests.
    pub fn test_matrix(&self) -> Vec<f64> {
        let mut omega = vec![0.0; self.n * self.k];
        for i in 0..self.n {
            let (head, tail) = omega.split_at_mut(i * self.k);
            let _ = head;
            self.test_row(i, &mut tail[..self.k]);
        }
        omega
    }

    /// `Y <- N/(N+1) Y + 1/(N+1) z (z^T Omega)`; `O(k n)` work.
    pub fn update(&mut self, z: &[f64]) -> Result<(), PostprocError> {
        if z.len() != self.n {
            return Err(PostprocError::DimMismatch { expected: self.n, got: z.len() });
        }
        let mut zt_omega = vec![0.0; self.k];
        let mut row = vec![0.0; self.k];
        for i in 0..self.n {
            self.test_row(i, &mut row);
            for (acc, &o) in zt_omega.iter_mut().zip(&row) {
                *acc += z[i] * o;
            }
        }
        let nf = self.count as f64;
        let keep = nf / (nf + 1.0);
        let add = 1.0 / (nf + 1.0);
        for i in 0..self.n {
            let zi = z[i];
            for c in 0..self.k {
                self.y[i * self.k + c] = keep * self.y[i * self.k + c] + add * zi * zt_omega[c];
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Rank-`r` PSD reconstruction from the sketch (shifted Nystrom with
    /// spectral truncation; shift `nu = machine_eps * ||Y||_F`).
    pub fn reconstruct(&self, rank: usize) -> Result<LowRankFactors, PostprocError> {
        if rank > self.k {
            return Err(PostprocError::RankTooLarge { rank, width: self.k });
        }
        let (n, k) = (self.n, self.k);
        let y_norm = self.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if y_norm == 0.0 {
            return Ok(LowRankFactors {
                basis: vec![0.0; n * rank],
                eigenvalues: vec![0.0; rank],
                n,
                rank,
                degenerate: false,
            });
        }
        let nu = f64::EPSILON * y_norm;

        // Y_nu = Y + nu * Omega and core B = Omega^T Y_nu, built row by row.
        let mut y_nu = self.y.clone();
        let mut b = vec![0.0; k * k];
        let mut row = vec![0.0; k];
        for i in 0..n {
            self.test_row(i, &mut row);
            for c in 0..k {
                y_nu[i * k + c] += nu * row[c];
            }
            for r in 0..k {
                for c in 0..k {
                    b[r * k + c] += row[r] * y_nu[i * k + c];
                }
            }
        }
        for r in 0..k {
            for c in (r + 1)..k {
                let avg = 0.5 * (b[r * k + c] + b[c * k + r]);
                b[r * k + c] = avg;
                b[c * k + r] = avg;
            }
        }

        // E = Y_nu L^{-T} so that E E^T = Y_nu B^{-1} Y_nu^T.
        let mut chol = b.clone();
        let mut degenerate = false;
        let mut e = vec![0.0; n * k];
        if cholesky_in_place(&mut chol, k).is_ok() {
            let mut buf = vec![0.0; k];
            for i in 0..n {
                buf.copy_from_slice(&y_nu[i * k..(i + 1) * k]);
                solve_lower(&chol, k, &mut buf);
                e[i * k..(i + 1) * k].copy_from_slice(&buf);
            }
        } else {
            // Rank-deficient core: pseudo-inverse square root from its
            // eigendecomposition, best effort.
            degenerate = true;
            let mut vecs = vec![0.0; k * k];
            let eig = jacobi_eigh(&b, k, &mut vecs);
            let floor = eig[0].max(0.0) * 1e-12 + f64::MIN_POSITIVE;
            // Column j of E is (Y_nu v_j) / sqrt(lambda_j) for retained
            // eigenpairs; dropped directions leave zero columns.
            for j in 0..k {
                if eig[j] <= floor {
                    continue;
                }
                let inv_sqrt = 1.0 / eig[j].sqrt();
                for i in 0..n {
                    let mut proj = 0.0;
                    for l in 0..k {
                        proj += y_nu[i * k + l] * vecs[l * k + j];
                    }
                    e[i * k + j] = proj * inv_sqrt;
                }
            }
        }

        // Eigendecomposition of E E^T via the k x k Gram matrix.
        let mut gram = vec![0.0; k * k];
        for r in 0..k {
            for c in r..k {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += e[i * k + r] * e[i * k + c];
                }
                gram[r * k + c] = acc;
                gram[c * k + r] = acc;
            }
        }
        let mut vecs = vec![0.0; k * k];
        let eig = jacobi_eigh(&gram, k, &mut vecs);

        let mut basis = vec![0.0; n * rank];
        let mut eigenvalues = vec![0.0; rank];
        for c in 0..rank {
            let lam = eig[c].max(0.0);
            // Remove the shift, clip at zero.
            eigenvalues[c] = (lam - nu).max(0.0);
            if lam <= 0.0 {
                continue;
            }
            let inv_sigma = 1.0 / lam.sqrt();
            for i in 0..n {
                let mut proj = 0.0;
                for l in 0..k {
                    proj += e[i * k + l] * vecs[l * k + c];
                }
                basis[i * rank + c] = proj * inv_sigma;
            }
        }
        Ok(LowRankFactors { basis, eigenvalues, n, rank, degenerate })
    }
}

/// Step-size schedule and norm clipping for [`OjaState`].
#[derive(Debug, Clone, Copy)]
pub struct OjaConfig {
    /// `gamma_N = gain / (N + 1)`.
    pub gain: f64,
    /// Samples with larger norm are rescaled onto this radius before the
    /// update.
    pub clip_radius: f64,
}

/// Streaming PCA state: an `n x k` matrix with orthonormal columns updated by
/// `Q <- orth(Q + gamma_N z (z^T Q))`.
#[derive(Debug, Clone)]
pub struct OjaState {
    q: Vec<f64>, // n x k row-major
    n: usize,
    k: usize,
    count: u64,
    config: OjaConfig,
    reseed: ChaCha8Rng,
}

impl OjaState {
    pub fn new(n: usize, k: usize, config: OjaConfig, seed: u64) -> Self {
        assert!(k >= 1 && k <= n);
        let mut reseed = substream(seed, Stream::SampleInit);
        let mut q = vec![0.0; n * k];
        for v in q.iter_mut() {
            *v = reseed.sample(StandardNormal);
        }
        orthonormalize_columns(&mut q, n, k);
        Self { q, n, k, count: 0, config, reseed }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Orthonormal basis, row-major `n x k`.
    pub fn basis(&self) -> &[f64] {
        &self.q
    }

    /// One Oja update. Returns true when a rank collapse was detected and the
    /// lost columns were re-randomized.
    pub fn update(&mut self, z: &[f64]) -> Result<bool, PostprocError> {
        if z.len() != self.n {
            return Err(PostprocError::DimMismatch { expected: self.n, got: z.len() });
        }
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm > self.config.clip_radius { self.config.clip_radius / norm } else { 1.0 };
        let gamma = self.config.gain / (self.count as f64 + 1.0);
        // t = Q^T z
        let mut t = vec![0.0; self.k];
        for i in 0..self.n {
            let zi = z[i] * scale;
            for c in 0..self.k {
                t[c] += self.q[i * self.k + c] * zi;
            }
        }
        for i in 0..self.n {
            let zi = z[i] * scale;
            for c in 0..self.k {
                self.q[i * self.k + c] += gamma * zi * t[c];
            }
        }
        let collapsed = orthonormalize_columns(&mut self.q, self.n, self.k);
        let flagged = !collapsed.is_empty();
        for col in collapsed {
            for i in 0..self.n {
                self.q[i * self.k + col] = self.reseed.sample(StandardNormal);
            }
        }
        if flagged {
            orthonormalize_columns(&mut self.q, self.n, self.k);
        }
        self.count += 1;
        Ok(flagged)
    }
}

/// Space-Saving frequency summary: at most `capacity` tracked items; an
/// untracked arrival displaces the minimum-count entry and inherits its count
/// as the overestimate.
#[derive(Debug, Clone)]
pub struct HeavyHitters<T: Ord + Clone> {
    capacity: usize,
    counts: BTreeMap<T, (u64, u64)>, // item -> (count, overestimate)
    by_count: std::collections::BTreeSet<(u64, T)>,
    total: u64,
}

impl<T: Ord + Clone> HeavyHitters<T> {
    pub fn new(capacity: usize) -> Result<Self, PostprocError> {
        if capacity == 0 {
            return Err(PostprocError::ZeroCapacity);
        }
        Ok(Self { capacity, counts: BTreeMap::new(), by_count: Default::default(), total: 0 })
    }

    /// Stream length so far; always equals the sum of tracked counts once the
    /// table is full or while all items fit.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn update(&mut self, item: T) {
        self.total += 1;
        if let Some(&(count, over)) = self.counts.get(&item) {
            self.by_count.remove(&(count, item.clone()));
            self.counts.insert(item.clone(), (count + 1, over));
            self.by_count.insert((count + 1, item));
            return;
        }
        if self.counts.len() < self.capacity {
            self.counts.insert(item.clone(), (1, 0));
            self.by_count.insert((1, item));
            return;
        }
        // Displace the minimum-count entry (ties to the smallest item).
        let (min_count, victim) = self.by_count.first().cloned().expect("nonempty table");
        self.by_count.remove(&(min_count, victim.clone()));
        self.counts.remove(&victim);
        self.counts.insert(item.clone(), (min_count + 1, min_count));
        self.by_count.insert((min_count + 1, item));
    }

    /// Top `k` entries as `(item, count, overestimate)`, ordered by count
    /// descending with ties by item ascending.
    pub fn query(&self, k: usize) -> Vec<(T, u64, u64)> {
        let mut all: Vec<(T, u64, u64)> = self
            .counts
            .iter()
            .map(|(item, &(count, over))| (item.clone(), count, over))
            .collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }
}
