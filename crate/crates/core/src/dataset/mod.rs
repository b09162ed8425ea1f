//! In-memory representation of FDC data: values, missingness mask, metadata,
//! plus normalization, categorical encoding, splitting, and missingness stats.

mod io;

pub use io::{read_csv, write_csv, SIDE_CAR_SUFFIX};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{Mask, Matrix};
use crate::scalar::{real, Real};
use crate::seeding::rng_for;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("timestamps not strictly increasing within tool {tool} at sample {sample}")]
    NonMonotoneTimestamps { tool: String, sample: usize },
    #[error("unknown feature id {0}")]
    UnknownFeature(String),
    #[error("csv parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Whether a feature column holds continuous sensor readings or categorical codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub id: String,
    pub kind: FeatureKind,
    pub source_sensor_id: String,
}

impl FeatureMeta {
    pub fn continuous(id: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            source_sensor_id: id.clone(),
            id,
            kind: FeatureKind::Continuous,
        }
    }

    pub fn categorical(id: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            source_sensor_id: id.clone(),
            id,
            kind: FeatureKind::Categorical,
        }
    }
}

/// Column-typed sample matrix with an explicit missingness mask.
///
/// `values` holds a number for every cell; cells with `mask == false` are
/// treated as missing by every consumer. Synthetic datasets keep the
/// generator's true value under the mask, which is what imputation-error
/// measurements compare against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdcDataset<F> {
    pub values: Matrix<F>,
    pub mask: Mask,
    pub feature_meta: Vec<FeatureMeta>,
    pub tool_ids: Vec<String>,
    pub timestamps: Vec<i64>,
    pub target: Vec<F>,
}

impl<F: Real> FdcDataset<F> {
    pub fn new(
        values: Matrix<F>,
        mask: Mask,
        feature_meta: Vec<FeatureMeta>,
        tool_ids: Vec<String>,
        timestamps: Vec<i64>,
        target: Vec<F>,
    ) -> Result<Self, DatasetError> {
        let n = values.rows();
        let m = values.cols();
        if mask.rows() != n || mask.cols() != m {
            return Err(DatasetError::DimensionMismatch(format!(
                "mask {}x{} vs values {}x{}",
                mask.rows(),
                mask.cols(),
                n,
                m
            )));
        }
        if feature_meta.len() != m {
            return Err(DatasetError::DimensionMismatch(format!(
                "{} feature meta entries for {} columns",
                feature_meta.len(),
                m
            )));
        }
        if tool_ids.len() != n || timestamps.len() != n || target.len() != n {
            return Err(DatasetError::DimensionMismatch(format!(
                "per-sample vectors (tools {}, timestamps {}, target {}) vs {} samples",
                tool_ids.len(),
                timestamps.len(),
                target.len(),
                n
            )));
        }
        let ds = Self {
            values,
            mask,
            feature_meta,
            tool_ids,
            timestamps,
            target,
        };
        ds.check_tool_timestamps()?;
        Ok(ds)
    }

    fn check_tool_timestamps(&self) -> Result<(), DatasetError> {
        let mut last: std::collections::HashMap<&str, i64> = std::collections::HashMap::new();
        for i in 0..self.n_samples() {
            let tool = self.tool_ids[i].as_str();
            if let Some(&prev) = last.get(tool) {
                if self.timestamps[i] <= prev {
                    return Err(DatasetError::NonMonotoneTimestamps {
                        tool: tool.to_string(),
                        sample: i,
                    });
                }
            }
            last.insert(tool, self.timestamps[i]);
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    pub fn feature_ids(&self) -> Vec<String> {
        self.feature_meta.iter().map(|f| f.id.clone()).collect()
    }

    pub fn feature_index(&self, id: &str) -> Option<usize> {
        self.feature_meta.iter().position(|f| f.id == id)
    }

    /// Distinct tool ids in first-appearance order.
    pub fn tools(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for t in &self.tool_ids {
            if !seen.contains(t) {
                seen.push(t.clone());
            }
        }
        seen
    }

    /// Sample indices of one tool, ordered by timestamp.
    pub fn tool_series(&self, tool: &str) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n_samples())
            .filter(|&i| self.tool_ids[i] == tool)
            .collect();
        idx.sort_by_key(|&i| self.timestamps[i]);
        idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRole {
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    Random,
    Chronological,
}

/// 70/15/15 role assignment over the samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub roles: Vec<SplitRole>,
    pub seed: u64,
    pub strategy: SplitStrategy,
}

impl SplitAssignment {
    pub fn indices_with_role(&self, role: SplitRole) -> Vec<usize> {
        (0..self.roles.len())
            .filter(|&i| self.roles[i] == role)
            .collect()
    }

    pub fn count(&self, role: SplitRole) -> usize {
        self.roles.iter().filter(|&&r| r == role).count()
    }

    /// Everything-is-train assignment, for fitting on hand-built data.
    pub fn all_train(n: usize) -> Self {
        Self {
            roles: vec![SplitRole::Train; n],
            seed: 0,
            strategy: SplitStrategy::Random,
        }
    }
}

const MIN_SPLIT_SAMPLES: usize = 20;

/// Assign 70/15/15 train/dev/test roles, deterministic given (strategy, seed).
pub fn split<F: Real>(
    dataset: &FdcDataset<F>,
    strategy: SplitStrategy,
    seed: u64,
) -> Result<SplitAssignment, DatasetError> {
    let n = dataset.n_samples();
    if n < MIN_SPLIT_SAMPLES {
        return Err(DatasetError::TooFewSamples {
            min: MIN_SPLIT_SAMPLES,
            got: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    match strategy {
        SplitStrategy::Random => {
            use rand::seq::SliceRandom;
            let mut rng = rng_for(seed, "dataset-split", 0);
            order.shuffle(&mut rng);
        }
        SplitStrategy::Chronological => {
            order.sort_by_key(|&i| (dataset.timestamps[i], i));
        }
    }
    let n_train = ((n as f64) * 0.70).round() as usize;
    let n_dev = ((n as f64) * 0.15).round() as usize;
    let mut roles = vec![SplitRole::Test; n];
    for (pos, &idx) in order.iter().enumerate() {
        roles[idx] = if pos < n_train {
            SplitRole::Train
        } else if pos < n_train + n_dev {
            SplitRole::Dev
        } else {
            SplitRole::Test
        };
    }
    Ok(SplitAssignment {
        roles,
        seed,
        strategy,
    })
}

/// Per-feature affine map fitted on the training split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub min: f64,
    pub max: f64,
    /// Max equalled min on the training split (or no training observation);
    /// the feature was pinned to 0.5 instead of scaled.
    pub constant: bool,
    /// Categorical columns are passed through untouched.
    pub skipped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub per_feature: Vec<FeatureNorm>,
}

impl NormalizationParams {
    /// Invert the map for one feature. Constant and skipped features return
    /// the stored value unchanged (the forward map is not injective there).
    pub fn denormalize<F: Real>(&self, feature: usize, v: F) -> F {
        let p = &self.per_feature[feature];
        if p.constant || p.skipped {
            v
        } else {
            v * real(p.max - p.min) + real(p.min)
        }
    }
}

/// Min-max scale continuous features into [0, 1].
///
/// Statistics come from the training split's observed entries only; dev and
/// test values falling outside the training range are clipped. Constant
/// features map to 0.5 and are flagged, not dropped. Categorical columns are
/// left untouched. The affine map is also applied to masked (missing) cells
/// so that synthetic ground-truth values stay comparable.
pub fn normalize<F: Real>(
    dataset: &FdcDataset<F>,
    assignment: &SplitAssignment,
) -> (FdcDataset<F>, NormalizationParams) {
    let n = dataset.n_samples();
    let m = dataset.n_features();
    let mut out = dataset.clone();
    let mut per_feature = Vec::with_capacity(m);
    for j in 0..m {
        if dataset.feature_meta[j].kind == FeatureKind::Categorical {
            per_feature.push(FeatureNorm {
                min: 0.0,
                max: 1.0,
                constant: false,
                skipped: true,
            });
            continue;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            if assignment.roles[i] == SplitRole::Train && dataset.mask.is_observed(i, j) {
                let v = dataset.values.get(i, j).to_report();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let constant = !(hi > lo); // covers hi == lo and the no-observation case
        if constant {
            for i in 0..n {
                out.values.set(i, j, real(0.5));
            }
        } else {
            let span = hi - lo;
            for i in 0..n {
                let v = dataset.values.get(i, j).to_report();
                let scaled = ((v - lo) / span).clamp(0.0, 1.0);
                out.values.set(i, j, real(scaled));
            }
        }
        per_feature.push(FeatureNorm {
            min: if constant { 0.0 } else { lo },
            max: if constant { 0.0 } else { hi },
            constant,
            skipped: false,
        });
    }
    (out, NormalizationParams { per_feature })
}

/// One-hot encode categorical features on training-seen levels.
///
/// Levels are enumerated from the training split's observed entries, in
/// ascending numeric order of the stored level code. Unseen dev/test levels
/// encode as all-zero; a missing source cell marks every indicator column of
/// that feature missing. Continuous columns pass through unchanged.
pub fn encode_categoricals<F: Real>(
    dataset: &FdcDataset<F>,
    assignment: &SplitAssignment,
) -> FdcDataset<F> {
    let n = dataset.n_samples();
    let mut columns: Vec<(FeatureMeta, Vec<F>, Vec<bool>)> = Vec::new();
    for j in 0..dataset.n_features() {
        let meta = &dataset.feature_meta[j];
        if meta.kind == FeatureKind::Continuous {
            let vals = dataset.values.column(j);
            let obs = (0..n).map(|i| dataset.mask.is_observed(i, j)).collect();
            columns.push((meta.clone(), vals, obs));
            continue;
        }
        let mut levels: Vec<f64> = Vec::new();
        for i in 0..n {
            if assignment.roles[i] == SplitRole::Train && dataset.mask.is_observed(i, j) {
                let code = dataset.values.get(i, j).to_report();
                if !levels.iter().any(|&l| l == code) {
                    levels.push(code);
                }
            }
        }
        levels.sort_by(|a, b| a.partial_cmp(b).expect("finite level codes"));
        for &level in &levels {
            let id = format!("{}={}", meta.id, level);
            let mut vals = Vec::with_capacity(n);
            let mut obs = Vec::with_capacity(n);
            for i in 0..n {
                let observed = dataset.mask.is_observed(i, j);
                obs.push(observed);
                let code = dataset.values.get(i, j).to_report();
                vals.push(if observed && code == level {
                    F::one()
                } else {
                    F::zero()
                });
            }
            let new_meta = FeatureMeta {
                id,
                kind: FeatureKind::Categorical,
                source_sensor_id: meta.source_sensor_id.clone(),
            };
            columns.push((new_meta, vals, obs));
        }
    }
    let m = columns.len();
    let mut values = Matrix::zeros(n, m);
    let mut mask = Mask::filled(n, m, false);
    let mut feature_meta = Vec::with_capacity(m);
    for (jj, (meta, vals, obs)) in columns.into_iter().enumerate() {
        for i in 0..n {
            values.set(i, jj, vals[i]);
            mask.set(i, jj, obs[i]);
        }
        feature_meta.push(meta);
    }
    FdcDataset {
        values,
        mask,
        feature_meta,
        tool_ids: dataset.tool_ids.clone(),
        timestamps: dataset.timestamps.clone(),
        target: dataset.target.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Bin features by availability ratio (observed count / N).
pub fn missingness_histogram<F: Real>(
    dataset: &FdcDataset<F>,
    bins: usize,
) -> MissingnessHistogram {
    assert!(bins >= 1, "need at least one bin");
    let n = dataset.n_samples();
    let bin_edges: Vec<f64> = (0..=bins).map(|b| b as f64 / bins as f64).collect();
    let mut counts = vec![0usize; bins];
    for j in 0..dataset.n_features() {
        let ratio = if n == 0 {
            0.0
        } else {
            dataset.mask.observed_in_column(j) as f64 / n as f64
        };
        let idx = ((ratio * bins as f64).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    MissingnessHistogram { bin_edges, counts }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n: usize) -> FdcDataset<f64> {
        let m = 3;
        let mut values = Matrix::zeros(n, m);
        let mask = Mask::filled(n, m, true);
        for i in 0..n {
            values.set(i, 0, 2.0 + 4.0 * (i as f64 / (n - 1) as f64)); // spans [2, 6]
            values.set(i, 1, 3.0); // constant
            values.set(i, 2, (i % 2) as f64); // categorical-looking codes
        }
        let meta = vec![
            FeatureMeta::continuous("f0"),
            FeatureMeta::continuous("f1"),
            FeatureMeta::categorical("cat"),
        ];
        let tools = (0..n).map(|i| format!("T{}", i % 2)).collect();
        let ts = (0..n as i64).collect();
        let target = (0..n).map(|i| i as f64).collect();
        FdcDataset::new(values, mask, meta, tools, ts, target).unwrap()
    }

    #[test]
    fn split_is_70_15_15() {
        let ds = toy_dataset(100);
        let a = split(&ds, SplitStrategy::Random, 7).unwrap();
        assert_eq!(a.count(SplitRole::Train), 70);
        assert_eq!(a.count(SplitRole::Dev), 15);
        assert_eq!(a.count(SplitRole::Test), 15);
    }

    #[test]
    fn split_minimum_rounds_within_one() {
        let ds = toy_dataset(20);
        let a = split(&ds, SplitStrategy::Random, 1).unwrap();
        assert_eq!(a.count(SplitRole::Train), 14);
        assert_eq!(a.count(SplitRole::Dev), 3);
        assert_eq!(a.count(SplitRole::Test), 3);
    }

    #[test]
    fn split_too_small_rejected() {
        let ds = toy_dataset(19);
        assert!(matches!(
            split(&ds, SplitStrategy::Random, 1),
            Err(DatasetError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn split_is_deterministic() {
        let ds = toy_dataset(50);
        let a = split(&ds, SplitStrategy::Random, 9).unwrap();
        let b = split(&ds, SplitStrategy::Random, 9).unwrap();
        assert_eq!(a, b);
        let c = split(&ds, SplitStrategy::Random, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn chronological_split_orders_by_time() {
        let ds = toy_dataset(40);
        let a = split(&ds, SplitStrategy::Chronological, 0).unwrap();
        // earliest samples are train, latest are test
        assert_eq!(a.roles[0], SplitRole::Train);
        assert_eq!(a.roles[39], SplitRole::Test);
    }

    #[test]
    fn normalize_midpoint_and_clip() {
        let ds = toy_dataset(100);
        let a = SplitAssignment::all_train(100);
        let (norm, params) = normalize(&ds, &a);
        // feature 0 spans [2, 6]; value 4 must land at 0.5
        let i_mid = (0..100)
            .find(|&i| (ds.values.get(i, 0) - 4.0).abs() < 2.1e-2)
            .unwrap();
        assert!((norm.values.get(i_mid, 0) - 0.5).abs() < 6e-3);
        assert!(!params.per_feature[0].constant);
        // constant feature pinned to 0.5 and flagged
        assert_eq!(norm.values.get(3, 1), 0.5);
        assert!(params.per_feature[1].constant);
        // categorical column untouched
        assert_eq!(norm.values.get(3, 2), ds.values.get(3, 2));
        assert!(params.per_feature[2].skipped);
    }

    #[test]
    fn normalize_clips_outside_training_range() {
        let mut ds = toy_dataset(20);
        // mark the last sample dev and give it an out-of-range value
        let mut a = SplitAssignment::all_train(20);
        a.roles[19] = SplitRole::Dev;
        ds.values.set(19, 0, 100.0);
        let (norm, _) = normalize(&ds, &a);
        assert_eq!(norm.values.get(19, 0), 1.0);
    }

    #[test]
    fn normalize_denormalize_round_trip() {
        let ds = toy_dataset(60);
        let a = SplitAssignment::all_train(60);
        let (norm, params) = normalize(&ds, &a);
        for i in 0..60 {
            let back = params.denormalize(0, norm.values.get(i, 0));
            assert!((back - ds.values.get(i, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn encode_one_hot_levels_and_unseen() {
        let mut ds = toy_dataset(20);
        let mut a = SplitAssignment::all_train(20);
        a.roles[19] = SplitRole::Test;
        ds.values.set(19, 2, 7.0); // level unseen in training
        let enc = encode_categoricals(&ds, &a);
        // f0, f1, cat=0, cat=1
        assert_eq!(enc.n_features(), 4);
        assert_eq!(enc.feature_meta[2].id, "cat=0");
        assert_eq!(enc.feature_meta[3].id, "cat=1");
        // unseen level encodes all-zero
        assert_eq!(enc.values.get(19, 2), 0.0);
        assert_eq!(enc.values.get(19, 3), 0.0);
        // seen levels are exact one-hot
        for i in 0..19 {
            let one_hot: f64 = enc.values.get(i, 2) + enc.values.get(i, 3);
            assert_eq!(one_hot, 1.0);
        }
    }

    #[test]
    fn encode_propagates_missingness() {
        let mut ds = toy_dataset(20);
        ds.mask.set(4, 2, false);
        let a = SplitAssignment::all_train(20);
        let enc = encode_categoricals(&ds, &a);
        assert!(!enc.mask.is_observed(4, 2));
        assert!(!enc.mask.is_observed(4, 3));
        assert!(enc.mask.is_observed(5, 2));
    }

    #[test]
    fn histogram_counts_sum_to_features() {
        let mut ds = toy_dataset(100);
        for i in 0..50 {
            ds.mask.set(i, 0, false);
        }
        let h = missingness_histogram(&ds, 10);
        assert_eq!(h.counts.iter().sum::<usize>(), 3);
        // feature 0 has 50/100 availability -> bin containing 0.5
        assert_eq!(h.counts[5], 1);
        // fully observed features land in the top bin
        assert_eq!(h.counts[9], 2);
    }

    #[test]
    fn timestamps_must_increase_within_tool() {
        let values = Matrix::zeros(3, 1);
        let mask = Mask::filled(3, 1, true);
        let meta = vec![FeatureMeta::continuous("f0")];
        let tools = vec!["T0".to_string(), "T0".to_string(), "T0".to_string()];
        let ts = vec![0, 5, 5];
        let target = vec![0.0, 1.0, 2.0];
        let err = FdcDataset::<f64>::new(values, mask, meta, tools, ts, target);
        assert!(matches!(
            err,
            Err(DatasetError::NonMonotoneTimestamps { .. })
        ));
    }
}
