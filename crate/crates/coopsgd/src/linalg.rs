//! Dense symmetric eigensolver.
//!
//! Cyclic Jacobi rotations (Numerical Recipes style). For the matrix sizes
//! this crate works with (a few hundred rows at most) the method is
//! essentially foolproof: every sweep annihilates each off-diagonal pair
//! once, and the off-diagonal mass decays quadratically once the matrix is
//! close to diagonal. Eigenvalues come out accurate to a small multiple of
//! machine epsilon, far inside the 1e-9 contract used by the spectral-gap
//! checks.

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("Jacobi iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
}

const MAX_SWEEPS: usize = 64;

/// Eigenvalues of a real symmetric matrix, in no particular order.
///
/// Only the upper triangle is read; the matrix is treated as exactly
/// symmetric. Non-finite entries make the iteration fail rather than loop.
pub fn symmetric_eigenvalues(a: &Array2<f64>) -> Result<Vec<f64>, LinalgError> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(LinalgError::Empty);
    }
    let n = rows;
    if n == 1 {
        return Ok(vec![a[[0, 0]]]);
    }

    // Working copy, symmetrized from the upper triangle.
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = a[[i, i]];
        for j in (i + 1)..n {
            m[[i, j]] = a[[i, j]];
            m[[j, i]] = a[[i, j]];
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    let mut accum = eig.clone();
    let mut delta = vec![0.0_f64; n];

    for sweep in 0..MAX_SWEEPS {
        let mut off_sum = 0.0;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                off_sum += m[[p, q]].abs();
            }
        }
        if off_sum == 0.0 {
            return Ok(eig);
        }
        if !off_sum.is_finite() {
            return Err(LinalgError::NoConvergence(sweep));
        }

        // During the first sweeps only rotate pairs above a shrinking
        // threshold; afterwards rotate everything that is not negligible.
        let thresh = if sweep < 3 {
            0.2 * off_sum / (n * n) as f64
        } else {
            0.0
        };

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let g = 100.0 * m[[p, q]].abs();
                if sweep > 3
                    && eig[p].abs() + g == eig[p].abs()
                    && eig[q].abs() + g == eig[q].abs()
                {
                    // Off-diagonal element is below representable precision
                    // relative to the diagonal; treat as zero.
                    m[[p, q]] = 0.0;
                } else if m[[p, q]].abs() > thresh {
                    let mut h = eig[q] - eig[p];
                    let t = if h.abs() + g == h.abs() {
                        m[[p, q]] / h
                    } else {
                        let theta = 0.5 * h / m[[p, q]];
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    h = t * m[[p, q]];
                    delta[p] -= h;
                    delta[q] += h;
                    eig[p] -= h;
                    eig[q] += h;
                    m[[p, q]] = 0.0;
                    for j in 0..p {
                        let gj = m[[j, p]];
                        let hj = m[[j, q]];
                        m[[j, p]] = gj - s * (hj + gj * tau);
                        m[[j, q]] = hj + s * (gj - hj * tau);
                    }
                    for j in (p + 1)..q {
                        let gj = m[[p, j]];
                        let hj = m[[j, q]];
                        m[[p, j]] = gj - s * (hj + gj * tau);
                        m[[j, q]] = hj + s * (gj - hj * tau);
                    }
                    for j in (q + 1)..n {
                        let gj = m[[p, j]];
                        let hj = m[[q, j]];
                        m[[p, j]] = gj - s * (hj + gj * tau);
                        m[[q, j]] = hj + s * (gj - hj * tau);
                    }
                }
            }
        }

        for p in 0..n {
            accum[p] += delta[p];
            eig[p] = accum[p];
            delta[p] = 0.0;
        }
    }

    Err(LinalgError::NoConvergence(MAX_SWEEPS))
}
