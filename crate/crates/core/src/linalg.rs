//! Minimal dense linear algebra: symmetric eigendecomposition by cyclic
//! Jacobi rotations and a truncated-pseudoinverse solver for least squares.

use crate::matrix::Matrix;
use crate::scalar::{real, Real};

/// Eigendecomposition A = V diag(values) V^T of a symmetric matrix.
pub struct SymmetricEigen<F> {
    pub values: Vec<F>,
    /// Column k of `vectors` is the eigenvector of `values[k]`.
    pub vectors: Matrix<F>,
}

/// Cyclic Jacobi on a symmetric matrix. Converges quadratically; plenty of
/// accuracy for the gram matrices this crate builds (M up to a few hundred).
pub fn symmetric_eigen<F: Real>(a: &Matrix<F>) -> SymmetricEigen<F> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric_eigen needs a square matrix");
    let mut m: Vec<Vec<F>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<F>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { F::one() } else { F::zero() }).collect())
        .collect();

    let eps = real::<F>(1e-14);
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = F::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + m[i][j] * m[i][j];
            }
        }
        let scale: F = (0..n).map(|i| m[i][i] * m[i][i]).sum::<F>() + off;
        if off <= eps * eps * scale.max(F::one()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq == F::zero() {
                    continue;
                }
                let app = m[p][p];
                let aqq = m[q][q];
                let tau = (aqq - app) / (real::<F>(2.0) * apq);
                let t = if tau >= F::zero() {
                    F::one() / (tau + (F::one() + tau * tau).sqrt())
                } else {
                    -F::one() / (-tau + (F::one() + tau * tau).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j][j]
            .partial_cmp(&m[i][i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<F> = order.iter().map(|&k| m[k][k]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v[row][k]);
        }
    }
    SymmetricEigen { values, vectors }
}

/// Minimum-norm solution of `A x = b` for symmetric positive semi-definite A,
/// truncating eigenvalues below `rel_tol * lambda_max`.
pub fn solve_spd_pinv<F: Real>(a: &Matrix<F>, b: &[F], rel_tol: f64) -> Vec<F> {
    let eig = symmetric_eigen(a);
    solve_with_eigen(&eig, b, rel_tol)
}

/// Same as [`solve_spd_pinv`] with a precomputed eigendecomposition.
pub fn solve_with_eigen<F: Real>(eig: &SymmetricEigen<F>, b: &[F], rel_tol: f64) -> Vec<F> {
    let n = b.len();
    let lambda_max = eig.values.first().copied().unwrap_or(F::zero());
    let tol = lambda_max.max(F::zero()) * real(rel_tol);
    let mut x = vec![F::zero(); n];
    for k in 0..n {
        let lam = eig.values[k];
        if lam <= tol || lam <= F::zero() {
            continue;
        }
        let mut dot = F::zero();
        for i in 0..n {
            dot = dot + eig.vectors.get(i, k) * b[i];
        }
        let coef = dot / lam;
        for i in 0..n {
            x[i] = x[i] + coef * eig.vectors.get(i, k);
        }
    }
    x
}

/// A^T A and A^T b for the least-squares normal equations.
pub fn gram_and_moment<F: Real>(x: &Matrix<F>, y: &[F]) -> (Matrix<F>, Vec<F>) {
    let n = x.rows();
    let m = x.cols();
    let mut gram = Matrix::zeros(m, m);
    let mut moment = vec![F::zero(); m];
    for i in 0..n {
        let row = x.row(i);
        for a in 0..m {
            let ra = row[a];
            if ra == F::zero() {
                continue;
            }
            moment[a] = moment[a] + ra * y[i];
            for b in a..m {
                let v = gram.get(a, b) + ra * row[b];
                gram.set(a, b, v);
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            let v = gram.get(b, a);
            gram.set(a, b, v);
        }
    }
    (gram, moment)
}

/// Ordinary least squares via the (pseudo-inverted) normal equations.
/// Returns the minimum-norm coefficient vector, no intercept handling.
pub fn least_squares<F: Real>(x: &Matrix<F>, y: &[F], rel_tol: f64) -> Vec<F> {
    let (gram, moment) = gram_and_moment(x, y);
    solve_spd_pinv(&gram, &moment, rel_tol)
}
