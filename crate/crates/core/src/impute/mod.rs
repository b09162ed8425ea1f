//! The five imputation algorithms behind one interface, plus the mean
//! data-available ratio.
//!
//! Every imputer receives a working copy whose missing cells are scrubbed to
//! NaN, so an implementation cannot read a masked-out value by accident. The
//! dispatcher restores observed entries bit-exactly afterwards and verifies
//! that no missing cell survived.

mod arima;
mod forest;
mod knn;
mod nearest;
mod random;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FdcDataset, SplitAssignment, SplitRole};
use crate::matrix::{Mask, Matrix};
use crate::scalar::{real, Real};

#[derive(Debug, Error)]
pub enum ImputeError {
    #[error("invalid imputer spec: {0}")]
    InvalidSpec(String),
    #[error("feature subset is empty")]
    EmptySubset,
    #[error("imputation left missing entries: {0}")]
    Incomplete(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputerKind {
    Random,
    Nearest,
    Knn,
    Arima,
    RandomForest,
}

impl ImputerKind {
    pub const ALL: [ImputerKind; 5] = [
        ImputerKind::Random,
        ImputerKind::Nearest,
        ImputerKind::Knn,
        ImputerKind::Arima,
        ImputerKind::RandomForest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImputerKind::Random => "random",
            ImputerKind::Nearest => "nearest",
            ImputerKind::Knn => "knn",
            ImputerKind::Arima => "arima",
            ImputerKind::RandomForest => "random_forest",
        }
    }
}

impl std::fmt::Display for ImputerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case")]
pub enum ImputerParams {
    None,
    Knn {
        k: usize,
    },
    Arima {
        max_p: usize,
        max_d: usize,
        max_q: usize,
    },
    RandomForest {
        n_trees: usize,
        max_iterations: usize,
        tolerance: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputerSpec {
    pub kind: ImputerKind,
    pub params: ImputerParams,
    pub seed: u64,
}

impl ImputerSpec {
    pub fn random(seed: u64) -> Self {
        Self {
            kind: ImputerKind::Random,
            params: ImputerParams::None,
            seed,
        }
    }

    pub fn nearest() -> Self {
        Self {
            kind: ImputerKind::Nearest,
            params: ImputerParams::None,
            seed: 0,
        }
    }

    pub fn knn(k: usize) -> Self {
        Self {
            kind: ImputerKind::Knn,
            params: ImputerParams::Knn { k },
            seed: 0,
        }
    }

    pub fn arima(max_p: usize, max_d: usize, max_q: usize) -> Self {
        Self {
            kind: ImputerKind::Arima,
            params: ImputerParams::Arima {
                max_p,
                max_d,
                max_q,
            },
            seed: 0,
        }
    }

    pub fn random_forest(n_trees: usize, max_iterations: usize, tolerance: f64, seed: u64) -> Self {
        Self {
            kind: ImputerKind::RandomForest,
            params: ImputerParams::RandomForest {
                n_trees,
                max_iterations,
                tolerance,
            },
            seed,
        }
    }

    /// One spec per kind with the documented default parameters.
    pub fn default_five(seed: u64) -> Vec<ImputerSpec> {
        vec![
            Self::random(seed),
            Self::nearest(),
            Self::knn(5),
            Self::arima(3, 1, 3),
            Self::random_forest(25, 5, 1e-4, seed),
        ]
    }

    pub fn validate(&self) -> Result<(), ImputeError> {
        let fail = |msg: &str| Err(ImputeError::InvalidSpec(msg.to_string()));
        match (&self.kind, &self.params) {
            (ImputerKind::Random, ImputerParams::None) => Ok(()),
            (ImputerKind::Nearest, ImputerParams::None) => Ok(()),
            (ImputerKind::Knn, ImputerParams::Knn { k }) => {
                if *k < 1 {
                    return fail("knn needs k >= 1");
                }
                Ok(())
            }
            (ImputerKind::Arima, ImputerParams::Arima { .. }) => Ok(()),
            (
                ImputerKind::RandomForest,
                ImputerParams::RandomForest {
                    n_trees, tolerance, ..
                },
            ) => {
                if *n_trees < 1 {
                    return fail("random_forest needs n_trees >= 1");
                }
                if !(*tolerance > 0.0) {
                    return fail("random_forest tolerance must be > 0");
                }
                Ok(())
            }
            _ => fail("params do not match imputer kind"),
        }
    }
}

/// Fallbacks and convergence notes recorded during imputation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputeFlags {
    /// (tool, feature) series handled by a fallback rule instead of the
    /// nominal algorithm (short series, degenerate fits, empty pools).
    pub fallback_series: usize,
    /// Tools where the iterative forest did not meet tolerance.
    pub nonconverged_tools: usize,
}

/// A complete matrix plus the provenance of what was filled in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImputedDataset<F> {
    pub values: Matrix<F>,
    pub provenance_mask: Mask,
    pub imputer: ImputerSpec,
    pub flags: ImputeFlags,
    pub per_feature_imputed: Vec<usize>,
}

/// Run the imputer described by `spec` over every split of the dataset;
/// statistics (medians, models, fits) come from the training split only.
pub fn impute<F: Real>(
    dataset: &FdcDataset<F>,
    assignment: &SplitAssignment,
    spec: &ImputerSpec,
) -> Result<ImputedDataset<F>, ImputeError> {
    spec.validate()?;
    let n = dataset.n_samples();
    let m = dataset.n_features();
    if assignment.roles.len() != n {
        return Err(ImputeError::InvalidSpec(format!(
            "assignment covers {} samples, dataset has {n}",
            assignment.roles.len()
        )));
    }

    // scrubbed working copy: imputers cannot read masked-out values
    let mut work = dataset.clone();
    for i in 0..n {
        for j in 0..m {
            if !dataset.mask.is_observed(i, j) {
                work.values.set(i, j, F::nan());
            }
        }
    }

    let mut flags = ImputeFlags::default();
    let clip;
    let mut values = match (&spec.kind, &spec.params) {
        (ImputerKind::Random, _) => {
            clip = false;
            random::run(&work, spec.seed)
        }
        (ImputerKind::Nearest, _) => {
            clip = false;
            nearest::run(&work, assignment, &mut flags)
        }
        (ImputerKind::Knn, ImputerParams::Knn { k }) => {
            clip = false;
            knn::run(&work, assignment, *k, &mut flags)
        }
        (
            ImputerKind::Arima,
            ImputerParams::Arima {
                max_p,
                max_d,
                max_q,
            },
        ) => {
            clip = true;
            arima::run(&work, assignment, *max_p, *max_d, *max_q, &mut flags)
        }
        (
            ImputerKind::RandomForest,
            ImputerParams::RandomForest {
                n_trees,
                max_iterations,
                tolerance,
            },
        ) => {
            clip = true;
            forest::run(
                &work,
                assignment,
                *n_trees,
                *max_iterations,
                *tolerance,
                spec.seed,
                &mut flags,
            )
        }
        _ => unreachable!("validated spec"),
    };

    let mut per_feature_imputed = vec![0usize; m];
    for i in 0..n {
        for j in 0..m {
            if dataset.mask.is_observed(i, j) {
                // bit-exact preservation of observed entries
                values.set(i, j, dataset.values.get(i, j));
            } else {
                per_feature_imputed[j] += 1;
                let v = values.get(i, j);
                if !v.is_finite() {
                    return Err(ImputeError::Incomplete(format!(
                        "cell ({i}, {j}) left unfilled by {}",
                        spec.kind
                    )));
                }
                if clip {
                    values.set(i, j, v.max(F::zero()).min(F::one()));
                }
            }
        }
    }

    Ok(ImputedDataset {
        values,
        provenance_mask: dataset.mask.clone(),
        imputer: spec.clone(),
        flags,
        per_feature_imputed,
    })
}

/// Mean data-available ratio over the chosen feature columns: the fraction of
/// observed indicator entries A_ij across those columns and all samples.
pub fn mdar(mask: &Mask, feature_subset: &[usize]) -> Result<f64, ImputeError> {
    if feature_subset.is_empty() {
        return Err(ImputeError::EmptySubset);
    }
    let n = mask.rows();
    let mut available = 0usize;
    for &j in feature_subset {
        available += mask.observed_in_column(j);
    }
    Ok(available as f64 / (n * feature_subset.len()) as f64)
}

/// Median of the observed training entries of one feature; 0.5 when the
/// training split never observes it (the midpoint of the normalized range).
pub(crate) fn training_median<F: Real>(
    dataset: &FdcDataset<F>,
    assignment: &SplitAssignment,
    feature: usize,
) -> F {
    let mut vals: Vec<F> = (0..dataset.n_samples())
        .filter(|&i| {
            assignment.roles[i] == SplitRole::Train && dataset.mask.is_observed(i, feature)
        })
        .map(|i| dataset.values.get(i, feature))
        .collect();
    median_or(&mut vals, real(0.5))
}

pub(crate) fn median_or<F: Real>(vals: &mut [F], fallback: F) -> F {
    if vals.is_empty() {
        return fallback;
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = vals.len() / 2;
    if vals.len() % 2 == 1 {
        vals[mid]
    } else {
        (vals[mid - 1] + vals[mid]) / real(2.0)
    }
}
