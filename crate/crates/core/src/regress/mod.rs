//! The six regression algorithms behind one fit/predict/importance interface.

mod boosting;
mod lls;
mod nn;
mod pls;
mod ridge;
mod svr;

pub use boosting::GbParams;
pub use nn::{NnParams, NnState};
pub use pls::PlsFit;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::scalar::{real, Real};
use crate::tree::CartTree;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("feature mismatch: model was fit on different columns")]
    FeatureMismatch,
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("target is constant; accuracy undefined")]
    ConstantTruth,
    #[error("invalid hyperparameters: {0}")]
    InvalidSpec(String),
    #[error("training diverged after {restarts} restarts")]
    Divergence { restarts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Lls,
    Pls,
    BayesianRidge,
    LinearSvr,
    GradientBoosting,
    NeuralNetwork,
}

impl RegressorKind {
    pub const ALL: [RegressorKind; 6] = [
        RegressorKind::Lls,
        RegressorKind::Pls,
        RegressorKind::BayesianRidge,
        RegressorKind::LinearSvr,
        RegressorKind::GradientBoosting,
        RegressorKind::NeuralNetwork,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegressorKind::Lls => "lls",
            RegressorKind::Pls => "pls",
            RegressorKind::BayesianRidge => "bayesian_ridge",
            RegressorKind::LinearSvr => "linear_svr",
            RegressorKind::GradientBoosting => "gradient_boosting",
            RegressorKind::NeuralNetwork => "neural_network",
        }
    }

    /// Whether fitted models of this kind expose a feature-importance vector.
    pub fn emits_importance(self) -> bool {
        self != RegressorKind::NeuralNetwork
    }
}

impl std::fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Kind-specific hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case")]
pub enum Hyperparams {
    Lls,
    Pls {
        n_components: usize,
    },
    BayesianRidge {
        /// Pins the prior precision instead of maximizing evidence.
        fixed_alpha: Option<f64>,
    },
    LinearSvr {
        epsilon: f64,
        c: f64,
        max_epochs: usize,
    },
    GradientBoosting {
        n_trees: usize,
        max_depth: usize,
        learning_rate: f64,
        min_samples_leaf: usize,
    },
    NeuralNetwork {
        hidden_layer_sizes: Vec<usize>,
        learning_rate: f64,
        max_epochs: usize,
        batch_size: usize,
        patience: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub kind: RegressorKind,
    pub hyperparams: Hyperparams,
    pub seed: u64,
}

impl RegressorSpec {
    pub fn lls() -> Self {
        Self {
            kind: RegressorKind::Lls,
            hyperparams: Hyperparams::Lls,
            seed: 0,
        }
    }

    pub fn pls(n_components: usize) -> Self {
        Self {
            kind: RegressorKind::Pls,
            hyperparams: Hyperparams::Pls { n_components },
            seed: 0,
        }
    }

    pub fn bayesian_ridge() -> Self {
        Self {
            kind: RegressorKind::BayesianRidge,
            hyperparams: Hyperparams::BayesianRidge { fixed_alpha: None },
            seed: 0,
        }
    }

    pub fn linear_svr(epsilon: f64, c: f64) -> Self {
        Self {
            kind: RegressorKind::LinearSvr,
            hyperparams: Hyperparams::LinearSvr {
                epsilon,
                c,
                max_epochs: 200,
            },
            seed: 0,
        }
    }

    pub fn gradient_boosting(n_trees: usize, max_depth: usize, learning_rate: f64) -> Self {
        Self {
            kind: RegressorKind::GradientBoosting,
            hyperparams: Hyperparams::GradientBoosting {
                n_trees,
                max_depth,
                learning_rate,
                min_samples_leaf: 3,
            },
            seed: 0,
        }
    }

    pub fn neural_network(hidden_layer_sizes: Vec<usize>, learning_rate: f64) -> Self {
        Self {
            kind: RegressorKind::NeuralNetwork,
            hyperparams: Hyperparams::NeuralNetwork {
                hidden_layer_sizes,
                learning_rate,
                max_epochs: 100,
                batch_size: 64,
                patience: 8,
            },
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), RegressError> {
        let fail = |msg: &str| Err(RegressError::InvalidSpec(msg.to_string()));
        match (&self.kind, &self.hyperparams) {
            (RegressorKind::Lls, Hyperparams::Lls) => Ok(()),
            (RegressorKind::Pls, Hyperparams::Pls { n_components }) => {
                if *n_components < 1 {
                    return fail("pls needs n_components >= 1");
                }
                Ok(())
            }
            (RegressorKind::BayesianRidge, Hyperparams::BayesianRidge { fixed_alpha }) => {
                if let Some(a) = fixed_alpha {
                    if !(*a > 0.0) {
                        return fail("fixed_alpha must be > 0");
                    }
                }
                Ok(())
            }
            (
                RegressorKind::LinearSvr,
                Hyperparams::LinearSvr {
                    epsilon,
                    c,
                    max_epochs,
                },
            ) => {
                if *epsilon < 0.0 {
                    return fail("epsilon must be >= 0");
                }
                if !(*c > 0.0) {
                    return fail("C must be > 0");
                }
                if *max_epochs < 1 {
                    return fail("max_epochs must be >= 1");
                }
                Ok(())
            }
            (
                RegressorKind::GradientBoosting,
                Hyperparams::GradientBoosting {
                    n_trees,
                    max_depth,
                    learning_rate,
                    min_samples_leaf,
                },
            ) => {
                if *n_trees < 1 || *max_depth < 1 || *min_samples_leaf < 1 {
                    return fail("gb counts must be >= 1");
                }
                if !(*learning_rate > 0.0) {
                    return fail("learning_rate must be > 0");
                }
                Ok(())
            }
            (
                RegressorKind::NeuralNetwork,
                Hyperparams::NeuralNetwork {
                    hidden_layer_sizes,
                    learning_rate,
                    max_epochs,
                    batch_size,
                    patience,
                },
            ) => {
                if hidden_layer_sizes.is_empty() || hidden_layer_sizes.iter().any(|&w| w == 0) {
                    return fail("hidden layers must be nonempty with width >= 1");
                }
                if !(*learning_rate > 0.0) {
                    return fail("learning_rate must be > 0");
                }
                if *max_epochs < 1 || *batch_size < 1 || *patience < 1 {
                    return fail("nn counts must be >= 1");
                }
                Ok(())
            }
            _ => fail("hyperparameters do not match regressor kind"),
        }
    }
}

/// Fitted state, one variant per model family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FittedParams<F> {
    Linear {
        weights: Vec<F>,
        intercept: F,
    },
    Pls(pls::PlsFit<F>),
    GradientBoosting {
        init: F,
        learning_rate: F,
        trees: Vec<CartTree<F>>,
    },
    NeuralNetwork(nn::NnState<F>),
}

/// A fitted regressor: spec, column contract, parameters, and importance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel<F> {
    pub spec: RegressorSpec,
    pub feature_ids: Vec<String>,
    pub params: FittedParams<F>,
    /// Nonnegative, sums to one. Absent for the neural network.
    pub importance: Option<Vec<F>>,
}

impl<F: Real> TrainedModel<F> {
    /// Predict for rows of `x`, whose columns must match `feature_ids` in order.
    pub fn predict(&self, x: &Matrix<F>, feature_ids: &[String]) -> Result<Vec<F>, RegressError> {
        if feature_ids != self.feature_ids.as_slice() {
            return Err(RegressError::FeatureMismatch);
        }
        if x.cols() != self.feature_ids.len() {
            return Err(RegressError::FeatureMismatch);
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &Matrix<F>) -> Vec<F> {
        match &self.params {
            FittedParams::Linear { weights, intercept } => (0..x.rows())
                .map(|i| dot(x.row(i), weights) + *intercept)
                .collect(),
            FittedParams::Pls(fit) => fit.predict(x),
            FittedParams::GradientBoosting {
                init,
                learning_rate,
                trees,
            } => (0..x.rows())
                .map(|i| {
                    let row = x.row(i);
                    let mut pred = *init;
                    for tree in trees {
                        pred = pred + *learning_rate * tree.predict(row);
                    }
                    pred
                })
                .collect(),
            FittedParams::NeuralNetwork(state) => state.predict(x),
        }
    }

    /// Self-describing JSON round-trip; reloading reproduces predictions bit-exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error>
    where
        F: serde::de::DeserializeOwned,
    {
        serde_json::from_str(text)
    }
}

/// Fit the regressor described by `spec`.
///
/// `dev` is the development split used for early stopping where the model
/// family needs one (neural network); other families ignore it.
pub fn fit<F: Real>(
    spec: &RegressorSpec,
    x: &Matrix<F>,
    y: &[F],
    feature_ids: &[String],
    dev: Option<(&Matrix<F>, &[F])>,
) -> Result<TrainedModel<F>, RegressError> {
    spec.validate()?;
    if x.rows() != y.len() || feature_ids.len() != x.cols() {
        return Err(RegressError::InvalidSpec(format!(
            "shape mismatch: x {}x{}, y {}, ids {}",
            x.rows(),
            x.cols(),
            y.len(),
            feature_ids.len()
        )));
    }
    if x.rows() < 2 {
        return Err(RegressError::TooFewSamples {
            min: 2,
            got: x.rows(),
        });
    }
    match &spec.hyperparams {
        Hyperparams::Lls => lls::fit(spec, x, y, feature_ids),
        Hyperparams::Pls { n_components } => pls::fit(spec, x, y, feature_ids, *n_components),
        Hyperparams::BayesianRidge { fixed_alpha } => {
            ridge::fit(spec, x, y, feature_ids, *fixed_alpha)
        }
        Hyperparams::LinearSvr {
            epsilon,
            c,
            max_epochs,
        } => svr::fit(spec, x, y, feature_ids, *epsilon, *c, *max_epochs),
        Hyperparams::GradientBoosting {
            n_trees,
            max_depth,
            learning_rate,
            min_samples_leaf,
        } => boosting::fit(
            spec,
            x,
            y,
            feature_ids,
            &GbParams {
                n_trees: *n_trees,
                max_depth: *max_depth,
                learning_rate: *learning_rate,
                min_samples_leaf: *min_samples_leaf,
            },
        ),
        Hyperparams::NeuralNetwork { .. } => nn::fit(spec, x, y, feature_ids, dev),
    }
}

/// Boost once and snapshot models at ascending tree-count checkpoints.
/// Each snapshot is bit-identical to a standalone fit with that tree count
/// (squared loss boosting is prefix-stable), which lets a tuning grid over
/// tree counts share one boosting pass per (depth, learning rate).
pub fn fit_gb_path<F: Real>(
    spec: &RegressorSpec,
    x: &Matrix<F>,
    y: &[F],
    feature_ids: &[String],
    checkpoints: &[usize],
) -> Result<Vec<TrainedModel<F>>, RegressError> {
    spec.validate()?;
    let Hyperparams::GradientBoosting {
        n_trees,
        max_depth,
        learning_rate,
        min_samples_leaf,
    } = &spec.hyperparams
    else {
        return Err(RegressError::InvalidSpec(
            "fit_gb_path needs a gradient_boosting spec".into(),
        ));
    };
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RegressError::InvalidSpec(
            "checkpoints must be ascending and nonempty".into(),
        ));
    }
    if x.rows() != y.len() || feature_ids.len() != x.cols() || x.rows() < 2 {
        return Err(RegressError::TooFewSamples {
            min: 2,
            got: x.rows(),
        });
    }
    let params = GbParams {
        n_trees: (*n_trees).max(*checkpoints.last().unwrap()),
        max_depth: *max_depth,
        learning_rate: *learning_rate,
        min_samples_leaf: *min_samples_leaf,
    };
    Ok(boosting::fit_path(spec, x, y, feature_ids, &params, checkpoints))
}

#[inline]
pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &w)| x * w).sum()
}

pub(crate) fn column_std<F: Real>(x: &Matrix<F>, col: usize) -> F {
    let n = x.rows();
    if n == 0 {
        return F::zero();
    }
    let first = x.get(0, col);
    if (1..n).all(|i| x.get(i, col) == first) {
        return F::zero();
    }
    let n_f = real::<F>(n as f64);
    let mean: F = (0..n).map(|i| x.get(i, col)).sum::<F>() / n_f;
    let var: F = (0..n)
        .map(|i| {
            let d = x.get(i, col) - mean;
            d * d
        })
        .sum::<F>()
        / n_f;
    var.sqrt()
}

/// |w_i| * std(x_i), normalized to sum one. If nothing carries weight the
/// mass spreads uniformly over non-constant columns (or all, if none vary).
pub(crate) fn weight_importance<F: Real>(x: &Matrix<F>, weights: &[F]) -> Vec<F> {
    let m = weights.len();
    let stds: Vec<F> = (0..m).map(|j| column_std(x, j)).collect();
    let mut imp: Vec<F> = weights
        .iter()
        .zip(&stds)
        .map(|(&w, &s)| w.abs() * s)
        .collect();
    let total: F = imp.iter().copied().sum();
    if total > F::zero() {
        for v in &mut imp {
            *v = *v / total;
        }
        return imp;
    }
    let varying: Vec<usize> = (0..m).filter(|&j| stds[j] > F::zero()).collect();
    let pool = if varying.is_empty() {
        (0..m).collect::<Vec<_>>()
    } else {
        varying
    };
    let share = F::one() / real(pool.len() as f64);
    let mut out = vec![F::zero(); m];
    for j in pool {
        out[j] = share;
    }
    out
}

/// Accuracy in the benchmark's sense: squared Pearson correlation between
/// measured and predicted values, with the coefficient of determination
/// carried alongside for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy<F> {
    /// Squared correlation of the linear fit between truth and prediction.
    pub correlation_r2: F,
    /// Standard coefficient of determination, 1 - SSE/SST.
    pub determination_r2: F,
}

impl<F: Real> Accuracy<F> {
    /// The reported accuracy value.
    pub fn primary(&self) -> F {
        self.correlation_r2
    }
}

pub fn accuracy<F: Real>(y_true: &[F], y_pred: &[F]) -> Result<Accuracy<F>, RegressError> {
    if y_true.len() < 3 || y_true.len() != y_pred.len() {
        return Err(RegressError::TooFewSamples {
            min: 3,
            got: y_true.len().min(y_pred.len()),
        });
    }
    let n = real::<F>(y_true.len() as f64);
    let mean_t: F = y_true.iter().copied().sum::<F>() / n;
    let mean_p: F = y_pred.iter().copied().sum::<F>() / n;
    let mut var_t = F::zero();
    let mut var_p = F::zero();
    let mut cov = F::zero();
    let mut sse = F::zero();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let dt = t - mean_t;
        let dp = p - mean_p;
        var_t = var_t + dt * dt;
        var_p = var_p + dp * dp;
        cov = cov + dt * dp;
        let e = t - p;
        sse = sse + e * e;
    }
    if var_t == F::zero() {
        return Err(RegressError::ConstantTruth);
    }
    let correlation_r2 = if var_p == F::zero() {
        F::zero()
    } else {
        (cov * cov) / (var_t * var_p)
    };
    let determination_r2 = F::one() - sse / var_t;
    Ok(Accuracy {
        correlation_r2,
        determination_r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_perfect_prediction() {
        let y: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0];
        let acc = accuracy(&y, &y).unwrap();
        assert!((acc.primary() - 1.0).abs() < 1e-12);
        assert!((acc.determination_r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_affine_invariance_of_correlation() {
        let y = vec![1.0, 2.0, 3.0, 5.0, 8.0];
        let pred: Vec<f64> = y.iter().map(|v| 2.0 * v + 5.0).collect();
        let acc = accuracy(&y, &pred).unwrap();
        assert!((acc.primary() - 1.0).abs() < 1e-12);
        // determination penalizes the offset; the two metrics must differ here
        assert!(acc.determination_r2 < 0.0);
    }

    #[test]
    fn accuracy_constant_prediction_is_zero() {
        let y = vec![1.0, 2.0, 3.0];
        let pred = vec![2.0, 2.0, 2.0];
        let acc = accuracy(&y, &pred).unwrap();
        assert_eq!(acc.primary(), 0.0);
    }

    #[test]
    fn accuracy_constant_truth_is_an_error() {
        let y = vec![2.0, 2.0, 2.0];
        let pred = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            accuracy(&y, &pred),
            Err(RegressError::ConstantTruth)
        ));
    }

    #[test]
    fn spec_validation_rejects_mismatched_params() {
        let bad = RegressorSpec {
            kind: RegressorKind::Lls,
            hyperparams: Hyperparams::Pls { n_components: 2 },
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spec_validation_rejects_zero_width_nn() {
        let bad = RegressorSpec {
            kind: RegressorKind::NeuralNetwork,
            hyperparams: Hyperparams::NeuralNetwork {
                hidden_layer_sizes: vec![0],
                learning_rate: 1e-3,
                max_epochs: 10,
                batch_size: 8,
                patience: 2,
            },
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }
}
