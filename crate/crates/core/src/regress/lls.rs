//! Linear least squares with a minimum-norm solution under rank deficiency.

use crate::linalg::{gram_and_moment, solve_spd_pinv};
use crate::matrix::Matrix;
use crate::scalar::{real, Real};

use super::{FittedParams, RegressError, RegressorSpec, TrainedModel};

const RANK_TOL: f64 = 1e-10;

/// Center x and y, solve the centered normal equations through a truncated
/// pseudoinverse, and recover the intercept from the means.
pub(super) fn solve_centered<F: Real>(x: &Matrix<F>, y: &[F]) -> (Vec<F>, F) {
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
    let (gram, moment) = gram_and_moment(&xc, &yc);
    let weights = solve_spd_pinv(&gram, &moment, RANK_TOL);
    let mut intercept = y_mean;
    for j in 0..m {
        intercept = intercept - weights[j] * col_means[j];
    }
    (weights, intercept)
}

pub(super) fn fit<F: Real>(
    spec: &RegressorSpec,
    x: &Matrix<F>,
    y: &[F],
    feature_ids: &[String],
) -> Result<TrainedModel<F>, RegressError> {
    let (weights, intercept) = solve_centered(x, y);
    let importance = super::weight_importance(x, &weights);
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_ids: feature_ids.to_vec(),
        params: FittedParams::Linear { weights, intercept },
        importance: Some(importance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::{accuracy, RegressorSpec};

    fn ids(m: usize) -> Vec<String> {
        (0..m).map(|j| format!("f{j}")).collect()
    }

    #[test]
    fn recovers_exact_slope() {
        let x = Matrix::from_rows(&(0..20).map(|i| vec![i as f64]).collect::<Vec<_>>());
        let y: Vec<f64> = (0..20).map(|i| 2.0 * i as f64).collect();
        let model = fit(&RegressorSpec::lls(), &x, &y, &ids(1)).unwrap();
        let FittedParams::Linear { weights, intercept } = &model.params else {
            panic!("expected linear params");
        };
        assert!((weights[0] - 2.0).abs() < 1e-10);
        assert!(intercept.abs() < 1e-9);
        let pred = model.predict(&x, &ids(1)).unwrap();
        assert!((accuracy(&y, &pred).unwrap().primary() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_predicts_like_single_column() {
        let n = 25;
        let single =
            Matrix::from_rows(&(0..n).map(|i| vec![(i as f64) * 0.3]).collect::<Vec<_>>());
        let dup = Matrix::from_rows(
            &(0..n)
                .map(|i| vec![(i as f64) * 0.3, (i as f64) * 0.3])
                .collect::<Vec<_>>(),
        );
        let y: Vec<f64> = (0..n).map(|i| 1.5 * (i as f64) * 0.3 + 0.7).collect();
        let m1 = fit(&RegressorSpec::lls(), &single, &y, &ids(1)).unwrap();
        let m2 = fit(&RegressorSpec::lls(), &dup, &y, &ids(2)).unwrap();
        let p1 = m1.predict(&single, &ids(1)).unwrap();
        let p2 = m2.predict(&dup, &ids(2)).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-8);
        }
        // minimum norm splits the weight equally across the duplicates
        let FittedParams::Linear { weights, .. } = &m2.params else {
            panic!()
        };
        assert!((weights[0] - weights[1]).abs() < 1e-8);
    }

    #[test]
    fn importance_is_zero_for_constant_features() {
        let x = Matrix::from_rows(
            &(0..30)
                .map(|i| vec![i as f64, 4.0])
                .collect::<Vec<_>>(),
        );
        let y: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let model = fit(&RegressorSpec::lls(), &x, &y, &ids(2)).unwrap();
        let imp = model.importance.unwrap();
        assert!((imp[0] - 1.0).abs() < 1e-12);
        assert_eq!(imp[1], 0.0);
    }

    #[test]
    fn permuted_columns_rejected_at_predict() {
        let x = Matrix::from_rows(&(0..10).map(|i| vec![i as f64, 1.0]).collect::<Vec<_>>());
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let model = fit(&RegressorSpec::lls(), &x, &y, &ids(2)).unwrap();
        let permuted = vec!["f1".to_string(), "f0".to_string()];
        assert!(matches!(
            model.predict(&x, &permuted),
            Err(RegressError::FeatureMismatch)
        ));
    }
}
