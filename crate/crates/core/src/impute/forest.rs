//! Iterative random-forest imputation, one tool at a time.
//!
//! Missing entries start at the per-feature training medians. Features are
//! visited in ascending missing-count order; each gets a random forest fit
//! on the tool's training rows where it is observed and predicted where it
//! is missing. The loop repeats until the mean squared change of imputed
//! entries drops under the tolerance or the iteration cap is reached.

use rayon::prelude::*;

use crate::dataset::{FdcDataset, SplitAssignment, SplitRole};
use crate::matrix::Matrix;
use crate::scalar::{real, Real};
use crate::seeding::{derive_seed, rng_for};
use crate::tree::{fit_tree, TreeParams};

use super::ImputeFlags;

const MIN_SAMPLES_LEAF: usize = 5;

pub(super) fn run<F: Real>(
    work: &FdcDataset<F>,
    assignment: &SplitAssignment,
    n_trees: usize,
    max_iterations: usize,
    tolerance: f64,
    seed: u64,
    flags: &mut ImputeFlags,
) -> Matrix<F> {
    let m = work.n_features();
    let medians: Vec<F> = (0..m)
        .map(|j| super::training_median(work, assignment, j))
        .collect();
    let tools = work.tools();
    let results: Vec<(Vec<usize>, Vec<Vec<F>>, bool)> = tools
        .par_iter()
        .enumerate()
        .map(|(tool_idx, tool)| {
            let members = work.tool_series(tool);
            let (columns, converged) = impute_tool(
                work,
                assignment,
                &members,
                &medians,
                n_trees,
                max_iterations,
                tolerance,
                derive_seed(seed, "impute-rf-tool", tool_idx as u64),
            );
            (members, columns, converged)
        })
        .collect();

    let mut values = work.values.clone();
    for (members, columns, converged) in results {
        if !converged {
            flags.nonconverged_tools += 1;
        }
        for (local, &i) in members.iter().enumerate() {
            for j in 0..m {
                if !work.mask.is_observed(i, j) {
                    values.set(i, j, columns[j][local]);
                }
            }
        }
    }
    values
}

#[allow(clippy::too_many_arguments)]
fn impute_tool<F: Real>(
    work: &FdcDataset<F>,
    assignment: &SplitAssignment,
    members: &[usize],
    medians: &[F],
    n_trees: usize,
    max_iterations: usize,
    tolerance: f64,
    seed: u64,
) -> (Vec<Vec<F>>, bool) {
    let m = work.n_features();
    let n_local = members.len();
    let mut rng = rng_for(seed, "impute-rf", 0);

    // working columns with median-initialized missing cells
    let mut columns: Vec<Vec<F>> = (0..m)
        .map(|j| {
            members
                .iter()
                .map(|&i| {
                    if work.mask.is_observed(i, j) {
                        work.values.get(i, j)
                    } else {
                        medians[j]
                    }
                })
                .collect()
        })
        .collect();

    let missing_locals: Vec<Vec<usize>> = (0..m)
        .map(|j| {
            (0..n_local)
                .filter(|&l| !work.mask.is_observed(members[l], j))
                .collect()
        })
        .collect();
    let train_obs_locals: Vec<Vec<usize>> = (0..m)
        .map(|j| {
            (0..n_local)
                .filter(|&l| {
                    work.mask.is_observed(members[l], j)
                        && assignment.roles[members[l]] == SplitRole::Train
                })
                .collect()
        })
        .collect();

    let mut order: Vec<usize> = (0..m).filter(|&j| !missing_locals[j].is_empty()).collect();
    order.sort_by_key(|&j| (missing_locals[j].len(), j));
    let total_imputed_cells: usize = order
        .iter()
        .map(|&j| missing_locals[j].len())
        .sum::<usize>()
        .max(1);

    if order.is_empty() || m < 2 {
        return (columns, true);
    }

    let mtry = ((m - 1) as f64).sqrt().ceil() as usize;
    let tree_params = TreeParams {
        max_depth: None,
        min_samples_leaf: MIN_SAMPLES_LEAF,
        mtry: Some(mtry.max(1)),
    };

    let mut converged = false;
    for _iter in 0..max_iterations {
        let mut squared_change = F::zero();
        for &j in &order {
            let obs = &train_obs_locals[j];
            if obs.is_empty() {
                // no regression target in this tool: the median stands
                continue;
            }
            let predictors: Vec<usize> = (0..m).filter(|&g| g != j).collect();
            // forest of bootstrap trees, averaged
            let sums = {
                let predictor_refs: Vec<&[F]> =
                    predictors.iter().map(|&g| columns[g].as_slice()).collect();
                // predictor rows of the cells to fill, fixed for this pass
                let query_rows: Vec<Vec<F>> = missing_locals[j]
                    .iter()
                    .map(|&l| predictors.iter().map(|&g| columns[g][l]).collect())
                    .collect();
                let mut sums = vec![F::zero(); missing_locals[j].len()];
                for _tree in 0..n_trees {
                    use rand::Rng;
                    let bootstrap: Vec<usize> = (0..obs.len())
                        .map(|_| obs[rng.random_range(0..obs.len())])
                        .collect();
                    let tree = fit_tree(
                        &predictor_refs,
                        &columns[j],
                        &bootstrap,
                        &tree_params,
                        Some(&mut rng),
                        None,
                    );
                    for (slot, row) in query_rows.iter().enumerate() {
                        sums[slot] = sums[slot] + tree.predict(row);
                    }
                }
                sums
            };
            let scale = real::<F>(n_trees as f64);
            for (slot, &l) in missing_locals[j].iter().enumerate() {
                let new_val = sums[slot] / scale;
                let delta = new_val - columns[j][l];
                squared_change = squared_change + delta * delta;
                columns[j][l] = new_val;
            }
        }
        let mean_change = squared_change / real(total_imputed_cells as f64);
        if mean_change.to_report() < tolerance {
            converged = true;
            break;
        }
    }
    (columns, converged)
}
