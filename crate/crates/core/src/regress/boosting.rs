//! Gradient-boosted regression trees with squared loss and exact greedy splits.

use crate::matrix::Matrix;
use crate::scalar::{real, Real};
use crate::tree::{fit_tree, TreeParams};

use super::{FittedParams, RegressError, RegressorSpec, TrainedModel};

#[derive(Debug, Clone)]
pub struct GbParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

pub(super) fn fit<F: Real>(
    spec: &RegressorSpec,
    x: &Matrix<F>,
    y: &[F],
    feature_ids: &[String],
    params: &GbParams,
) -> Result<TrainedModel<F>, RegressError> {
    let mut path = fit_path(spec, x, y, feature_ids, params, &[params.n_trees]);
    Ok(path.pop().expect("one checkpoint requested"))
}

/// Boost once up to the largest checkpoint and snapshot a model at each.
/// With squared loss and exact greedy splits, a shorter boosting run is a
/// literal prefix of a longer one, so the snapshots match standalone fits
/// bit for bit. Checkpoints must be ascending.
pub(super) fn fit_path<F: Real>(
    spec: &RegressorSpec,
    x: &Matrix<F>,
    y: &[F],
    feature_ids: &[String],
    params: &GbParams,
    checkpoints: &[usize],
) -> Vec<TrainedModel<F>> {
    let n = x.rows();
    let m = x.cols();
    let columns: Vec<Vec<F>> = (0..m).map(|j| x.column(j)).collect();
    let column_refs: Vec<&[F]> = columns.iter().map(Vec::as_slice).collect();
    let rows: Vec<usize> = (0..n).collect();
    let tree_params = TreeParams {
        max_depth: Some(params.max_depth),
        min_samples_leaf: params.min_samples_leaf,
        mtry: None,
    };
    let lr = real::<F>(params.learning_rate);
    let max_trees = checkpoints.last().copied().unwrap_or(params.n_trees);

    let init: F = y.iter().copied().sum::<F>() / real(n as f64);
    let mut current: Vec<F> = vec![init; n];
    let mut residuals = vec![F::zero(); n];
    let mut gains = vec![F::zero(); m];
    let mut trees = Vec::with_capacity(max_trees);
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    for stage in 0..max_trees {
        for i in 0..n {
            residuals[i] = y[i] - current[i];
        }
        let tree = fit_tree(
            &column_refs,
            &residuals,
            &rows,
            &tree_params,
            None,
            Some(&mut gains),
        );
        for i in 0..n {
            current[i] = current[i] + lr * tree.predict(x.row(i));
        }
        trees.push(tree);
        if checkpoints.contains(&(stage + 1)) {
            snapshots.push(snapshot(
                spec,
                feature_ids,
                init,
                lr,
                &trees,
                &gains,
                stage + 1,
            ));
        }
    }
    snapshots
}

fn snapshot<F: Real>(
    spec: &RegressorSpec,
    feature_ids: &[String],
    init: F,
    lr: F,
    trees: &[CartTreeList<F>],
    gains: &[F],
    n_trees: usize,
) -> TrainedModel<F> {
    let m = gains.len();
    let total: F = gains.iter().copied().sum();
    let importance = if total > F::zero() {
        gains.iter().map(|&g| g / total).collect()
    } else {
        // no split anywhere (constant target): spread uniformly
        vec![F::one() / real(m as f64); m]
    };
    let mut spec = spec.clone();
    if let super::Hyperparams::GradientBoosting {
        n_trees: spec_trees,
        ..
    } = &mut spec.hyperparams
    {
        *spec_trees = n_trees;
    }
    TrainedModel {
        spec,
        feature_ids: feature_ids.to_vec(),
        params: FittedParams::GradientBoosting {
            init,
            learning_rate: lr,
            trees: trees.to_vec(),
        },
        importance: Some(importance),
    }
}

type CartTreeList<F> = crate::tree::CartTree<F>;
