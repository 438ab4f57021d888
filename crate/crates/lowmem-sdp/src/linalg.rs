//! Small dense routines for the `m x m` / `k x k` matrices the streaming
//! algorithms keep around. Everything here is row-major and sized for
//! dimensions in the tens, not thousands.

/// In-place lower Cholesky factorization of a symmetric positive definite
/// matrix. Returns `Err(())` when a pivot is not strictly positive. On
/// success the lower triangle holds `L` with `A = L L^T`; the strict upper
/// triangle is zeroed.
pub(crate) fn cholesky_in_place(a: &mut [f64], m: usize) -> Result<(), ()> {
    assert_eq!(a.len(), m * m);
    for j in 0..m {
        let mut diag = a[j * m + j];
        for k in 0..j {
            diag -= a[j * m + k] * a[j * m + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(());
        }
        let ljj = diag.sqrt();
        a[j * m + j] = ljj;
        for i in (j + 1)..m {
            let mut v = a[i * m + j];
            for k in 0..j {
                v -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = v / ljj;
        }
        for k in (j + 1)..m {
            a[j * m + k] = 0.0;
        }
    }
    Ok(())
}

/// `b <- L^{-1} b` for lower-triangular `L`.
pub(crate) fn solve_lower(l: &[f64], m: usize, b: &mut [f64]) {
    for i in 0..m {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * m + k] * b[k];
        }
        b[i] = v / l[i * m + i];
    }
}

/// `log det A` of an SPD matrix via Cholesky; `Err(())` when not SPD.
pub(crate) fn log_det_spd(a: &[f64], m: usize) -> Result<f64, ()> {
    let mut work = a.to_vec();
    cholesky_in_place(&mut work, m)?;
    Ok((0..m).map(|i| work[i * m + i].ln()).sum::<f64>() * 2.0)
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix.
///
/// Returns eigenvalues sorted descending; `vectors` receives the matching
/// eigenvectors as columns (row-major `k x k`).
pub(crate) fn jacobi_eigh(a: &[f64], k: usize, vectors: &mut [f64]) -> Vec<f64> {
    assert_eq!(a.len(), k * k);
    assert_eq!(vectors.len(), k * k);
    let mut m = a.to_vec();
    // V = I
    vectors.fill(0.0);
    for i in 0..k {
        vectors[i * k + i] = 1.0;
    }
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                s += m[i * k + j] * m[i * k + j];
            }
        }
        s
    };
    let scale: f64 = (0..k).map(|i| m[i * k + i].abs()).fold(1e-300, f64::max);
    for _sweep in 0..100 {
        if off(&m) <= (1e-30 * scale * scale).max(1e-280) {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = m[p * k + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * k + p];
                let aqq = m[q * k + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..k {
                    let mip = m[i * k + p];
                    let miq = m[i * k + q];
                    m[i * k + p] = c * mip - s * miq;
                    m[i * k + q] = s * mip + c * miq;
                }
                for j in 0..k {
                    let mpj = m[p * k + j];
                    let mqj = m[q * k + j];
                    m[p * k + j] = c * mpj - s * mqj;
                    m[q * k + j] = s * mpj + c * mqj;
                }
                for i in 0..k {
                    let vip = vectors[i * k + p];
                    let viq = vectors[i * k + q];
                    vectors[i * k + p] = c * vip - s * viq;
                    vectors[i * k + q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    let eig: Vec<f64> = (0..k).map(|i| m[i * k + i]).collect();
    order.sort_by(|&a, &b| eig[b].partial_cmp(&eig[a]).unwrap());
    let old = vectors.to_vec();
    for (new_col, &src) in order.iter().enumerate() {
        for i in 0..k {
            vectors[i * k + new_col] = old[i * k + src];
        }
    }
    order.iter().map(|&i| eig[i]).collect()
}

/// Two-pass modified Gram-Schmidt on the columns of a row-major `n x k`
/// matrix. Returns the indices of columns that collapsed (norm below `tol`
/// relative to their pre-orthogonalization norm) and were left zeroed.
pub(crate) fn orthonormalize_columns(q: &mut [f64], n: usize, k: usize) -> Vec<usize> {
    assert_eq!(q.len(), n * k);
    let mut collapsed = Vec::new();
    let col_norm = |q: &[f64], j: usize| -> f64 {
        (0..n).map(|i| q[i * k + j] * q[i * k + j]).sum::<f64>().sqrt()
    };
    for j in 0..k {
        let before = col_norm(q, j);
        for _pass in 0..2 {
            for prev in 0..j {
                if collapsed.contains(&prev) {
                    continue;
                }
                let dot: f64 = (0..n).map(|i| q[i * k + prev] * q[i * k + j]).sum();
                for i in 0..n {
                    q[i * k + j] -= dot * q[i * k + prev];
                }
            }
        }
        let after = col_norm(q, j);
        if after <= 1e-12 * before.max(1.0) {
            for i in 0..n {
                q[i * k + j] = 0.0;
            }
            collapsed.push(j);
        } else {
            for i in 0..n {
                q[i * k + j] /= after;
            }
        }
    }
    collapsed
}
