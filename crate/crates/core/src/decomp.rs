//! Dense factorizations: Householder QR, one-sided Jacobi singular values,
//! Cholesky solves and power-iteration spectral norms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Needed for sqrt/ln/etc. in no_std builds; shadowed by std's inherent
// methods when tests link std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::{matvec, vec_norm, DenseMatrix};

/// Thin Householder QR of a tall matrix: `A = Q R` with `Q` (m x n) having
/// orthonormal columns and `R` (n x n) upper triangular.
///
/// Signs are fixed so the diagonal of `R` is nonnegative, which makes the
/// factors deterministic and suitable for golden tests. Rank-deficient input
/// is allowed and shows up as near-zero diagonal entries of `R`.
pub fn qr_thin(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::InvalidArgument {
            op: "qr_thin",
            reason: format!("requires rows >= cols, got {m}x{n}"),
        });
    }
    // h holds R's upper triangle plus the Householder vectors (v0 = 1
    // implicit) below the diagonal.
    let mut h = a.data().to_vec();
    let mut taus = vec![0.0f64; n];
    let mut diag = vec![0.0f64; n];

    for k in 0..n {
        let mut norm_sq = 0.0;
        for i in k..m {
            let v = h[i * n + k];
            norm_sq += v * v;
        }
        if norm_sq == 0.0 {
            continue;
        }
        let norm = norm_sq.sqrt();
        let akk = h[k * n + k];
        let sigma = if akk >= 0.0 { norm } else { -norm };
        let v0 = akk + sigma;
        for i in (k + 1)..m {
            h[i * n + k] /= v0;
        }
        let tau = v0 / sigma;
        taus[k] = tau;
        diag[k] = -sigma;

        for j in (k + 1)..n {
            let mut dot = h[k * n + j];
            for i in (k + 1)..m {
                dot += h[i * n + k] * h[i * n + j];
            }
            dot *= tau;
            h[k * n + j] -= dot;
            for i in (k + 1)..m {
                let vi = h[i * n + k];
                h[i * n + j] -= dot * vi;
            }
        }
    }

    // Accumulate the thin Q by applying the reflectors to I(m, n) in reverse.
    let mut q = vec![0.0f64; m * n];
    for j in 0..n {
        q[j * n + j] = 1.0;
    }
    for k in (0..n).rev() {
        let tau = taus[k];
        if tau == 0.0 {
            continue;
        }
        for j in k..n {
            let mut dot = q[k * n + j];
            for i in (k + 1)..m {
                dot += h[i * n + k] * q[i * n + j];
            }
            dot *= tau;
            q[k * n + j] -= dot;
            for i in (k + 1)..m {
                q[i * n + j] -= dot * h[i * n + k];
            }
        }
    }

    let mut r = vec![0.0f64; n * n];
    for k in 0..n {
        r[k * n + k] = diag[k];
        for j in (k + 1)..n {
            r[k * n + j] = h[k * n + j];
        }
    }
    // Nonnegative-diagonal convention.
    for k in 0..n {
        if r[k * n + k] < 0.0 {
            for j in k..n {
                r[k * n + j] = -r[k * n + j];
            }
            for i in 0..m {
                q[i * n + k] = -q[i * n + k];
            }
        }
    }
    Ok((
        DenseMatrix::from_vec_unchecked(m, n, q),
        DenseMatrix::from_vec_unchecked(n, n, r),
    ))
}

/// One-sided Jacobi on the columns of `b`: rotates until all column pairs are
/// orthogonal. Returns singular values (descending) and, on request, the left
/// singular vectors (normalized columns; zero columns for zero singular
/// values).
pub(crate) fn jacobi_singular(
    b: &DenseMatrix,
    want_u: bool,
    max_sweeps: usize,
) -> (Vec<f64>, Option<DenseMatrix>) {
    let (m, n) = b.shape();
    let mut w = b.data().to_vec();
    let tol = 1e-14;

    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut app, mut aqq, mut apq) = (0.0f64, 0.0f64, 0.0f64);
                for i in 0..m {
                    let x = w[i * n + p];
                    let y = w[i * n + q];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = w[i * n + p];
                    let y = w[i * n + q];
                    w[i * n + p] = c * x - s * y;
                    w[i * n + q] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut norms: Vec<f64> = (0..n)
        .map(|j| {
            let mut s = 0.0;
            for i in 0..m {
                let v = w[i * n + j];
                s += v * v;
            }
            s.sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &bb| norms[bb].partial_cmp(&norms[a]).unwrap().then(a.cmp(&bb)));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = want_u.then(|| {
        let mut out = vec![0.0f64; m * n];
        for (dst, &src) in order.iter().enumerate() {
            let s = norms[src];
            if s > 0.0 {
                for i in 0..m {
                    out[i * n + dst] = w[i * n + src] / s;
                }
            }
        }
        DenseMatrix::from_vec_unchecked(m, n, out)
    });
    norms.clear();
    (sigma, u)
}

/// All `min(rows, cols)` singular values, descending.
///
/// Tall input is reduced to its R factor first; the small square factor is
/// then diagonalized by one-sided Jacobi, which resolves every value to
/// around machine precision relative to the largest one.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    let square = if m >= n {
        qr_thin(a)?.1
    } else {
        qr_thin(&a.transpose())?.1
    };
    Ok(jacobi_singular(&square, false, 40).0)
}

/// Solve `M x = rhs` for symmetric positive definite `M` via Cholesky.
///
/// Symmetry is checked to 1e-10 (relative to the largest entry); a
/// non-positive pivot aborts with the pivot index.
pub fn solve_spd(m: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, nc) = m.shape();
    if n != nc {
        return Err(Error::InvalidArgument {
            op: "solve_spd",
            reason: format!("matrix must be square, got {n}x{nc}"),
        });
    }
    if rhs.rows() != n {
        return Err(Error::ShapeMismatch {
            op: "solve_spd",
            left: m.shape(),
            right: rhs.shape(),
        });
    }
    let sym_tol = 1e-10 * (1.0 + m.max_abs());
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > sym_tol {
                return Err(Error::InvalidArgument {
                    op: "solve_spd",
                    reason: format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        m.get(i, j),
                        m.get(j, i)
                    ),
                });
            }
        }
    }

    // Lower-triangular Cholesky factor.
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }

    // Forward and back substitution per right-hand-side column.
    let k = rhs.cols();
    let mut x = rhs.data().to_vec();
    for c in 0..k {
        for i in 0..n {
            let mut s = x[i * k + c];
            for j in 0..i {
                s -= l[i * n + j] * x[j * k + c];
            }
            x[i * k + c] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i * k + c];
            for j in (i + 1)..n {
                s -= l[j * n + i] * x[j * k + c];
            }
            x[i * k + c] = s / l[i * n + i];
        }
    }
    Ok(DenseMatrix::from_vec_unchecked(n, k, x))
}

/// Solve `y * R[..rank, ..rank] = x` in place (forward substitution on the
/// leading block of an upper-triangular `R`); `x[..rank]` receives `y`.
pub(crate) fn solve_upper_from_right(x: &mut [f64], r: &DenseMatrix, rank: usize) {
    debug_assert!(rank <= r.rows() && rank <= x.len());
    for k in 0..rank {
        let mut s = x[k];
        for i in 0..k {
            s -= x[i] * r.get(i, k);
        }
        x[k] = s / r.get(k, k);
    }
}

/// Largest singular value by power iteration on `A^T A`, started from the
/// normalized all-ones vector; falls back to a full singular value
/// computation if the iteration does not settle within `max_iters`.
pub fn spectral_norm(a: &DenseMatrix, tol: f64, max_iters: usize) -> Result<f64> {
    match power_iteration_norm(a, tol, max_iters) {
        Ok(v) => Ok(v),
        Err(Error::NotConverged { .. }) => Ok(singular_values(a)?[0]),
        Err(e) => Err(e),
    }
}

/// Strict power-iteration spectral norm: no fallback, reports the last
/// iterate gap when the budget runs out.
pub fn power_iteration_norm(a: &DenseMatrix, tol: f64, max_iters: usize) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument {
            op: "spectral_norm",
            reason: format!("tol must be positive, got {tol}"),
        });
    }
    if a.is_zero() {
        return Ok(0.0);
    }
    let n = a.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut est = 0.0f64;
    let mut gap = f64::INFINITY;
    for _ in 0..max_iters {
        let y = matvec(a, &v)?;
        let y_norm = vec_norm(&y);
        if y_norm == 0.0 {
            // The iterate landed in the null space; the deterministic start
            // gives no way forward, so let the caller fall back.
            return Err(Error::NotConverged {
                op: "spectral_norm",
                gap: f64::INFINITY,
            });
        }
        let w = matvec(&a.transpose(), &y)?;
        let w_norm = vec_norm(&w);
        let next = w_norm / y_norm;
        gap = (next - est).abs() / next.max(f64::MIN_POSITIVE);
        est = next;
        if gap <= tol {
            return Ok(est);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / w_norm;
        }
    }
    Err(Error::NotConverged {
        op: "spectral_norm",
        gap,
    })
}
