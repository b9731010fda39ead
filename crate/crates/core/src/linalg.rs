//! Small dense helpers shared by the covariance code.

use nalgebra::{DMatrix, SymmetricEigen};

/// `(A + A^T) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(a))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Cholesky factor failure, carrying the offending pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPsd {
    pub pivot: usize,
    pub value: f64,
}

/// Lower-triangular `L` with `A = L L^T` for symmetric positive
/// semi-definite `A`.
///
/// Pivots within `tol` of zero are accepted as rank deficiency when the rest
/// of their column is also negligible, so singular but valid covariances
/// (zero noise, perfectly correlated blocks) still factor.
pub fn psd_cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>, NotPsd> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d > tol {
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        } else if d >= -tol {
            // Rank-deficient direction: the remaining column must vanish too.
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                let bound = 1e-6 * (scale * (a[(i, i)].abs() + tol)).sqrt();
                if s.abs() > bound.max(tol) {
                    return Err(NotPsd { pivot: j, value: d });
                }
            }
        } else {
            return Err(NotPsd { pivot: j, value: d });
        }
    }
    Ok(l)
}

/// Cholesky with up to three retries adding `1e-12 * trace * I`.
pub fn cholesky_with_jitter(a: &DMatrix<f64>) -> Result<DMatrix<f64>, NotPsd> {
    let mut last = match psd_cholesky(a) {
        Ok(l) => return Ok(l),
        Err(e) => e,
    };
    let jitter = 1e-12 * a.trace().abs();
    let mut work = a.clone();
    for _ in 0..3 {
        for i in 0..work.nrows() {
            work[(i, i)] += jitter;
        }
        match psd_cholesky(&work) {
            Ok(l) => return Ok(l),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Frobenius norm.
pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.norm()
}

/// `||a - b||_F / ||b||_F`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Copies block `(bi, bj)` of size `m x m`.
pub fn block(a: &DMatrix<f64>, bi: usize, bj: usize, m: usize) -> DMatrix<f64> {
    a.view((bi * m, bj * m), (m, m)).into_owned()
}
