//! Bayesian ridge regression: Gaussian weight prior with precision alpha,
//! noise precision beta, both estimated by evidence maximization.

use crate::linalg::symmetric_eigen;
use crate::matrix::Matrix;
use crate::scalar::{real, Real};

use super::{FittedParams, RegressError, RegressorSpec, TrainedModel};

const MAX_ITER: usize = 300;
const REL_TOL: f64 = 1e-6;
const RANK_TOL: f64 = 1e-10;

pub(super) fn fit<F: Real>(
    spec: &RegressorSpec,
    x: &Matrix<F>,
    y: &[F],
    feature_ids: &[String],
    fixed_alpha: Option<f64>,
) -> Result<TrainedModel<F>, RegressError> {
    let n = x.rows();
    let m = x.cols();
    let n_f = real::<F>(n as f64);
    let col_means: Vec<F> = (0..m)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<F>() / n_f)
        .collect();
    let y_mean: F = y.iter().copied().sum::<F>() / n_f;
    let mut xc = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            xc.set(i, j, x.get(i, j) - col_means[j]);
        }
    }
    let yc: Vec<F> = y.iter().map(|&v| v - y_mean).collect();

    let (gram, moment) = crate::linalg::gram_and_moment(&xc, &yc);
    let eig = symmetric_eigen(&gram);
    let lambda_max = eig.values.first().copied().unwrap_or(F::zero());
    let rank_cut = lambda_max.max(F::zero()) * real(RANK_TOL);
    // projections of X^T y onto the eigenbasis, zeroed outside the row space
    let proj: Vec<F> = (0..m)
        .map(|k| {
            if eig.values[k] <= rank_cut {
                F::zero()
            } else {
                (0..m).map(|i| eig.vectors.get(i, k) * moment[i]).sum()
            }
        })
        .collect();

    let y_var: F = yc.iter().map(|&v| v * v).sum::<F>() / n_f;
    let mut beta = if y_var > F::zero() {
        F::one() / y_var
    } else {
        F::one()
    };
    let mut alpha: F = real(fixed_alpha.unwrap_or(1e-6));

    let mut weights_eig = vec![F::zero(); m];
    for _ in 0..MAX_ITER {
        for k in 0..m {
            let lam = eig.values[k];
            weights_eig[k] = if lam <= rank_cut {
                F::zero()
            } else {
                beta * proj[k] / (alpha + beta * lam)
            };
        }
        // effective number of well-determined parameters
        let gamma: F = (0..m)
            .map(|k| {
                let lam = eig.values[k];
                if lam <= rank_cut {
                    F::zero()
                } else {
                    beta * lam / (alpha + beta * lam)
                }
            })
            .sum();
        let w_sq: F = weights_eig.iter().map(|&v| v * v).sum();
        // ||y - Xw||^2 = ||y||^2 - 2 w~.proj + sum(lambda w~^2) in the eigenbasis
        let mut rss: F = yc.iter().map(|&v| v * v).sum();
        for k in 0..m {
            let lam = eig.values[k];
            if lam <= rank_cut {
                continue;
            }
            rss = rss - real::<F>(2.0) * weights_eig[k] * proj[k]
                + lam * weights_eig[k] * weights_eig[k];
        }
        // guard against cancellation
        if rss < F::zero() {
            rss = F::zero();
        }
        let new_alpha = if fixed_alpha.is_some() {
            alpha
        } else if w_sq > F::zero() {
            (gamma / w_sq).min(real(1e10)).max(real(1e-12))
        } else {
            real(1e10)
        };
        let denom = rss.max(real(1e-300));
        let new_beta = ((n_f - gamma) / denom).min(real(1e12)).max(real(1e-12));
        let rel = |old: F, new: F| ((new - old).abs() / old.max(real(1e-30))).to_report();
        let done = rel(alpha, new_alpha) < REL_TOL && rel(beta, new_beta) < REL_TOL;
        alpha = new_alpha;
        beta = new_beta;
        if done {
            break;
        }
    }

    // map back to feature space
    for k in 0..m {
        let lam = eig.values[k];
        weights_eig[k] = if lam <= rank_cut {
            F::zero()
        } else {
            beta * proj[k] / (alpha + beta * lam)
        };
    }
    let mut weights = vec![F::zero(); m];
    for k in 0..m {
        if weights_eig[k] == F::zero() {
            continue;
        }
        for j in 0..m {
            weights[j] = weights[j] + weights_eig[k] * eig.vectors.get(j, k);
        }
    }
    let mut intercept = y_mean;
    for j in 0..m {
        intercept = intercept - weights[j] * col_means[j];
    }
    let importance = super::weight_importance(x, &weights);
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_ids: feature_ids.to_vec(),
        params: FittedParams::Linear { weights, intercept },
        importance: Some(importance),
    })
}
