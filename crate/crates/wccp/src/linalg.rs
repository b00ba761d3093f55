//! Dense symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! The matrices involved here are small (restricted Hessians on a sparse
//! support, screening submatrices for initialization), so an O(n^3)-per-sweep
//! Jacobi iteration is plenty and avoids an external LAPACK dependency. The
//! iteration annihilates off-diagonal entries with Givens rotations until the
//! off-diagonal mass is negligible; it converges quadratically once entries
//! are small.

use ndarray::{Array1, Array2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must be symmetric (max deviation {0})")]
    NotSymmetric(f64),
    #[error("matrix contains a non-finite value")]
    NonFinite,
    #[error("empty matrix")]
    Empty,
}

/// Full eigendecomposition of a symmetric matrix. Returns `(values, vectors)`
/// with eigenvalues ascending and eigenvectors as the corresponding columns.
pub fn symmetric_eigen(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>), LinalgError> {
    let n = check(m)?;
    let mut a = m.clone();
    // Work on a symmetrized copy to shed roundoff-level asymmetry.
    for p in 0..n {
        for q in (p + 1)..n {
            let avg = 0.5 * (a[[p, q]] + a[[q, p]]);
            a[[p, q]] = avg;
            a[[q, p]] = avg;
        }
    }
    let mut v = Array2::eye(n);
    let scale = a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(1.0);

    for _sweep in 0..200 {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    s += a[[p, q]] * a[[p, q]];
                }
            }
            s.sqrt()
        };
        if off <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                // tan of the rotation angle, the stable small-angle root.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, dst]] = v[[k, src]];
        }
    }
    Ok((values, vectors))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn smallest_eigenvalue(m: &Array2<f64>) -> Result<f64, LinalgError> {
    let (values, _) = symmetric_eigen(m)?;
    Ok(values[0])
}

/// Unit eigenvector for the algebraically largest eigenvalue. Used as an
/// exact reference for power iteration in tests.
pub fn leading_eigenvector(m: &Array2<f64>) -> Result<(f64, Array1<f64>), LinalgError> {
    let (values, vectors) = symmetric_eigen(m)?;
    let last = values.len() - 1;
    Ok((values[last], vectors.column(last).to_owned()))
}

fn check(m: &Array2<f64>) -> Result<usize, LinalgError> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(LinalgError::Empty);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(1.0);
    let mut dev = 0.0_f64;
    for p in 0..rows {
        for q in (p + 1)..rows {
            dev = dev.max((m[[p, q]] - m[[q, p]]).abs());
        }
    }
    if dev > 1e-8 * scale {
        return Err(LinalgError::NotSymmetric(dev));
    }
    Ok(rows)
}
