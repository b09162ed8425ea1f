//! Iterative feature elimination: fit, rank by importance, shrink the
//! feature set by an NIF-dependent ratio, and record the trace.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{tune, SearchSpace};
use crate::dataset::{SplitAssignment, SplitRole};
use crate::impute::{mdar, ImputedDataset};
use crate::matrix::Matrix;
use crate::regress::{accuracy, RegressError, RegressorKind, RegressorSpec};
use crate::scalar::Real;
use crate::seeding::{derive_seed, fnv1a_hex};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("stop_nif must be >= 1")]
    InvalidStopNif,
    #[error("selection needs at least one feature")]
    NoFeatures,
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error("tuning failed: {0}")]
    Tuning(String),
    #[error("mdar failed: {0}")]
    Mdar(String),
}

/// Which regressor ranks features for which regressor. Identity for the five
/// importance-producing algorithms; the neural network borrows gradient
/// boosting's ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorPairing {
    pub selector_kind: RegressorKind,
    pub regressor_kind: RegressorKind,
}

impl SelectorPairing {
    pub fn for_regressor(regressor_kind: RegressorKind) -> Self {
        let selector_kind = if regressor_kind == RegressorKind::NeuralNetwork {
            RegressorKind::GradientBoosting
        } else {
            regressor_kind
        };
        Self {
            selector_kind,
            regressor_kind,
        }
    }

    pub fn is_valid(&self) -> bool {
        *self == Self::for_regressor(self.regressor_kind)
    }
}

/// Fractional feature cut at a given NIF: 0.11 down to 0.08, linear in
/// log(NIF) between the anchors at 200 and 20 features.
pub fn reduction_ratio(nif: usize) -> f64 {
    assert!(nif >= 2, "reduction_ratio needs nif >= 2");
    const HI_NIF: f64 = 200.0;
    const LO_NIF: f64 = 20.0;
    const HI_RATIO: f64 = 0.11;
    const LO_RATIO: f64 = 0.08;
    let nif = nif as f64;
    if nif >= HI_NIF {
        return HI_RATIO;
    }
    if nif <= LO_NIF {
        return LO_RATIO;
    }
    let frac = (nif.ln() - LO_NIF.ln()) / (HI_NIF.ln() - LO_NIF.ln());
    LO_RATIO + (HI_RATIO - LO_RATIO) * frac
}

/// Drop the lowest-importance features, at least one, keeping the survivors
/// in their original order. Ties drop the higher-positioned feature first.
pub fn eliminate<F: Real>(importance: &[F], feature_ids: &[String], nif: usize) -> Vec<String> {
    assert_eq!(importance.len(), nif, "importance length must equal nif");
    assert_eq!(feature_ids.len(), nif, "feature id count must equal nif");
    let n_drop = ((reduction_ratio(nif.max(2)) * nif as f64).ceil() as usize).max(1);
    let n_drop = n_drop.min(nif - 1).max(1);
    let mut order: Vec<usize> = (0..nif).collect();
    order.sort_by(|&a, &b| {
        importance[a]
            .partial_cmp(&importance[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.cmp(&a))
    });
    let dropped: std::collections::HashSet<usize> = order[..n_drop].iter().copied().collect();
    (0..nif)
        .filter(|i| !dropped.contains(i))
        .map(|i| feature_ids[i].clone())
        .collect()
}

/// One elimination step's record: what was fit, on what, and how it scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub nif: usize,
    pub feature_ids: Vec<String>,
    pub train_accuracy: f64,
    pub dev_accuracy: f64,
    pub test_accuracy: f64,
    pub train_determination_r2: f64,
    pub dev_determination_r2: f64,
    pub test_determination_r2: f64,
    pub mdar: f64,
    pub chosen_hyperparams: RegressorSpec,
    /// Present when the selector is tuned separately from the regressor.
    pub selector_hyperparams: Option<RegressorSpec>,
    /// Digest of the fitted model parameters; part of the decision record
    /// compared by the anti-leakage harness.
    pub model_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub pairing: SelectorPairing,
    pub iterations: Vec<IterationRecord>,
}

impl SelectionTrace {
    /// One iteration per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for it in &self.iterations {
            out.push_str(&serde_json::to_string(it).expect("iteration serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(pairing: SelectorPairing, text: &str) -> Result<Self, serde_json::Error> {
        let iterations = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { pairing, iterations })
    }

    /// Index of the iteration with the best development accuracy
    /// (earliest on ties). Test accuracy is reported at this index.
    pub fn best_dev_iteration(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (k, it) in self.iterations.iter().enumerate() {
            let better = match best {
                None => true,
                Some(b) => it.dev_accuracy > self.iterations[b].dev_accuracy,
            };
            if better {
                best = Some(k);
            }
        }
        best
    }
}

/// Borrowed inputs of one selection run.
pub struct SelectionInput<'a, F> {
    pub imputed: &'a ImputedDataset<F>,
    pub feature_ids: &'a [String],
    pub target: &'a [F],
    pub assignment: &'a SplitAssignment,
    pub search_space: &'a SearchSpace,
    pub stop_nif: usize,
    pub seed: u64,
}

/// Run the elimination loop until NIF falls under `stop_nif`.
///
/// Each iteration tunes hyperparameters on the development split, records
/// train/dev/test accuracy and MDAR at the current feature set, then drops
/// the lowest-importance features. The test split is scored but never feeds
/// any decision.
pub fn run_selection<F: Real>(
    input: &SelectionInput<'_, F>,
    pairing: SelectorPairing,
) -> Result<SelectionTrace, SelectError> {
    if input.stop_nif < 1 {
        return Err(SelectError::InvalidStopNif);
    }
    if input.feature_ids.is_empty() {
        return Err(SelectError::NoFeatures);
    }
    debug_assert!(pairing.is_valid(), "inconsistent selector pairing");

    let train_rows = input.assignment.indices_with_role(SplitRole::Train);
    let dev_rows = input.assignment.indices_with_role(SplitRole::Dev);
    let test_rows = input.assignment.indices_with_role(SplitRole::Test);
    let gather = |rows: &[usize]| -> Vec<F> { rows.iter().map(|&i| input.target[i]).collect() };
    let y_train = gather(&train_rows);
    let y_dev = gather(&dev_rows);
    let y_test = gather(&test_rows);

    let mut current: Vec<usize> = (0..input.feature_ids.len()).collect();
    let mut current_ids: Vec<String> = input.feature_ids.to_vec();
    let mut iterations = Vec::new();
    let mut iter_index = 0u64;

    loop {
        let nif = current.len();
        let x_all = input.imputed.values.select_columns(&current);
        let x_train = x_all.select_rows(&train_rows);
        let x_dev = x_all.select_rows(&dev_rows);
        let x_test = x_all.select_rows(&test_rows);

        let fit_seed = derive_seed(input.seed, "selection-iteration", iter_index);
        let tuned = tune(
            pairing.regressor_kind,
            &x_train,
            &y_train,
            &x_dev,
            &y_dev,
            &current_ids,
            input.search_space,
            fit_seed,
        )
        .map_err(|e| SelectError::Tuning(e.to_string()))?;

        let (selector_model, selector_spec) = if pairing.selector_kind == pairing.regressor_kind {
            (None, None)
        } else {
            let sel_seed = derive_seed(input.seed, "selector-iteration", iter_index);
            let sel = tune(
                pairing.selector_kind,
                &x_train,
                &y_train,
                &x_dev,
                &y_dev,
                &current_ids,
                input.search_space,
                sel_seed,
            )
            .map_err(|e| SelectError::Tuning(e.to_string()))?;
            (Some(sel.model), Some(sel.spec))
        };

        let predict_on = |x: &Matrix<F>| tuned.model.predict_unchecked(x);
        let train_acc = accuracy(&y_train, &predict_on(&x_train))?;
        let dev_acc = accuracy(&y_dev, &predict_on(&x_dev))?;
        let test_acc = accuracy(&y_test, &predict_on(&x_test))?;

        let mdar_value = mdar(&input.imputed.provenance_mask, &current)
            .map_err(|e| SelectError::Mdar(e.to_string()))?;

        let mut digest_src = tuned.model.to_json();
        if let Some(sel) = &selector_model {
            digest_src.push_str(&sel.to_json());
        }
        let importance = selector_model
            .as_ref()
            .unwrap_or(&tuned.model)
            .importance
            .clone()
            .expect("selector kind always emits importance");

        iterations.push(IterationRecord {
            nif,
            feature_ids: current_ids.clone(),
            train_accuracy: train_acc.primary().to_report(),
            dev_accuracy: dev_acc.primary().to_report(),
            test_accuracy: test_acc.primary().to_report(),
            train_determination_r2: train_acc.determination_r2.to_report(),
            dev_determination_r2: dev_acc.determination_r2.to_report(),
            test_determination_r2: test_acc.determination_r2.to_report(),
            mdar: mdar_value,
            chosen_hyperparams: tuned.spec.clone(),
            selector_hyperparams: selector_spec,
            model_digest: fnv1a_hex(digest_src.as_bytes()),
        });

        if nif < input.stop_nif || nif == 1 {
            break;
        }

        let survivors = eliminate(&importance, &current_ids, nif);
        let survivor_set: std::collections::HashSet<&str> =
            survivors.iter().map(String::as_str).collect();
        let kept: Vec<usize> = (0..nif)
            .filter(|&k| survivor_set.contains(current_ids[k].as_str()))
            .collect();
        current = kept.iter().map(|&k| current[k]).collect();
        current_ids = kept.iter().map(|&k| current_ids[k].clone()).collect();
        iter_index += 1;
    }

    Ok(SelectionTrace {
        pairing,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_hits_the_anchors() {
        assert_eq!(reduction_ratio(715), 0.11);
        assert_eq!(reduction_ratio(200), 0.11);
        assert_eq!(reduction_ratio(20), 0.08);
        assert_eq!(reduction_ratio(2), 0.08);
    }

    #[test]
    fn ratio_interpolates_in_log_nif() {
        // geometric midpoint of the anchors
        let r = reduction_ratio(63);
        assert!((r - 0.095).abs() < 0.001, "ratio {r}");
        for nif in 21..200 {
            let r = reduction_ratio(nif);
            assert!((0.08..=0.11).contains(&r));
            assert!(reduction_ratio(nif + 1) >= r);
        }
    }

    #[test]
    fn eliminate_applies_the_ceiling_rule() {
        let nif = 100;
        // log-linear interpolation between the anchors puts the ratio at
        // 0.10097 here; the ceiling rule then drops 11 of 100
        let ratio = reduction_ratio(nif);
        assert!((ratio - 0.10097).abs() < 0.0005);
        let expected_drop = (ratio * nif as f64).ceil() as usize;
        assert_eq!(expected_drop, 11);
        let ids: Vec<String> = (0..nif).map(|i| format!("f{i:03}")).collect();
        let importance: Vec<f64> = (0..nif).map(|i| i as f64).collect();
        let kept = eliminate(&importance, &ids, nif);
        assert_eq!(kept.len(), nif - expected_drop);
        // the lowest-importance features are the ones gone
        for i in 0..expected_drop {
            assert!(!kept.contains(&format!("f{i:03}")));
        }
    }

    #[test]
    fn eliminate_floor_keeps_the_better_of_two() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let kept = eliminate(&[0.9, 0.1], &ids, 2);
        assert_eq!(kept, vec!["a".to_string()]);
    }

    #[test]
    fn eliminate_uniform_importance_drops_highest_positions() {
        let ids: Vec<String> = (0..10).map(|i| format!("f{i}")).collect();
        let importance = vec![0.1f64; 10];
        let kept = eliminate(&importance, &ids, 10);
        assert_eq!(kept.len(), 9);
        assert!(!kept.contains(&"f9".to_string()));
        assert!(kept.contains(&"f0".to_string()));
    }

    #[test]
    fn pairing_table_matches_the_lookup() {
        for kind in RegressorKind::ALL {
            let pairing = SelectorPairing::for_regressor(kind);
            assert!(pairing.is_valid());
            if kind == RegressorKind::NeuralNetwork {
                assert_eq!(pairing.selector_kind, RegressorKind::GradientBoosting);
            } else {
                assert_eq!(pairing.selector_kind, kind);
            }
        }
    }

    #[test]
    fn jsonl_round_trips() {
        let record = IterationRecord {
            nif: 10,
            feature_ids: vec!["f0".into(), "f1".into()],
            train_accuracy: 0.9,
            dev_accuracy: 0.8,
            test_accuracy: 0.7,
            train_determination_r2: 0.85,
            dev_determination_r2: 0.75,
            test_determination_r2: 0.65,
            mdar: 0.5,
            chosen_hyperparams: RegressorSpec::lls(),
            selector_hyperparams: None,
            model_digest: "abc".into(),
        };
        let trace = SelectionTrace {
            pairing: SelectorPairing::for_regressor(RegressorKind::Lls),
            iterations: vec![record.clone(), record],
        };
        let text = trace.to_jsonl();
        assert_eq!(text.lines().count(), 2);
        let back = SelectionTrace::from_jsonl(trace.pairing, &text).unwrap();
        assert_eq!(back, trace);
    }
}
