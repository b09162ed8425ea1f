//! Linear epsilon-insensitive support vector regression, solved in the
//! primal by epoch-based subgradient descent with seeded shuffling and
//! 1/sqrt(t) step decay.

use rand::seq::SliceRandom;

use crate::matrix::Matrix;
use crate::scalar::{real, Real};
use crate::seeding::rng_for;

use super::{FittedParams, RegressError, RegressorSpec, TrainedModel};

const MAX_RESTARTS: usize = 3;

/// 0.5 * ||w||^2 + C * sum(max(0, |y - (Xw + b)| - eps))
pub fn svr_objective<F: Real>(x: &Matrix<F>, y: &[F], w: &[F], b: F, epsilon: F, c: F) -> F {
    let half = real::<F>(0.5);
    let reg: F = w.iter().map(|&v| v * v).sum::<F>() * half;
    let mut hinge = F::zero();
    for i in 0..x.rows() {
        let r = (y[i] - (super::dot(x.row(i), w) + b)).abs() - epsilon;
        if r > F::zero() {
            hinge = hinge + r;
        }
    }
    reg + c * hinge
}

pub(super) fn fit<F: Real>(
    spec: &RegressorSpec,
    x: &Matrix<F>,
    y: &[F],
    feature_ids: &[String],
    epsilon: f64,
    c: f64,
    max_epochs: usize,
) -> Result<TrainedModel<F>, RegressError> {
    let n = x.rows();
    let m = x.cols();
    let eps_f = real::<F>(epsilon);
    let c_f = real::<F>(c);
    let n_f = real::<F>(n as f64);

    let mean_sq_norm: F = (0..n)
        .map(|i| x.row(i).iter().map(|&v| v * v).sum::<F>())
        .sum::<F>()
        / n_f;
    // scale-aware base step; the restart rule halves it on divergence
    let mut eta0 = F::one() / (F::one() + c_f * (mean_sq_norm + F::one()));

    let mut restarts = 0;
    loop {
        let mut w = vec![F::zero(); m];
        let mut b: F = y.iter().copied().sum::<F>() / n_f;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = rng_for(spec.seed, "svr-shuffle", 0);
        let mut diverged = false;
        for epoch in 0..max_epochs {
            order.shuffle(&mut rng);
            let eta = eta0 / real::<F>(((epoch + 1) as f64).sqrt());
            for &i in &order {
                let row = x.row(i);
                let resid = y[i] - (super::dot(row, &w) + b);
                let violating = resid.abs() > eps_f;
                let sign = if resid > F::zero() { F::one() } else { -F::one() };
                for j in 0..m {
                    // per-sample share of the regularizer plus the hinge pull
                    let mut g = w[j] / n_f;
                    if violating {
                        g = g - c_f * sign * row[j];
                    }
                    w[j] = w[j] - eta * g;
                }
                if violating {
                    b = b + eta * c_f * sign;
                }
            }
            let loss = svr_objective(x, y, &w, b, eps_f, c_f);
            if !loss.is_finite() {
                diverged = true;
                break;
            }
        }
        if !diverged {
            let importance = super::weight_importance(x, &w);
            return Ok(TrainedModel {
                spec: spec.clone(),
                feature_ids: feature_ids.to_vec(),
                params: FittedParams::Linear {
                    weights: w,
                    intercept: b,
                },
                importance: Some(importance),
            });
        }
        restarts += 1;
        if restarts > MAX_RESTARTS {
            return Err(RegressError::Divergence { restarts });
        }
        eta0 = eta0 / real(2.0);
    }
}
