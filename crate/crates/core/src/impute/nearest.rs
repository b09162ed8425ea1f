//! Last-observation imputation within each (tool, sensor) series.

use crate::dataset::{FdcDataset, SplitAssignment};
use crate::matrix::Matrix;
use crate::scalar::Real;

use super::ImputeFlags;

/// Forward-fill a series; leading gaps take the first later observation and
/// a fully unobserved series collapses to `fallback`.
pub(super) fn fill_series<F: Real>(values: &[F], observed: &[bool], fallback: F) -> Vec<F> {
    let len = values.len();
    let mut out = vec![fallback; len];
    let first_obs = observed.iter().position(|&o| o);
    let Some(first) = first_obs else {
        return out;
    };
    let mut last = values[first];
    for k in 0..len {
        if observed[k] {
            last = values[k];
        }
        out[k] = if k < first { values[first] } else { last };
    }
    out
}

pub(super) fn run<F: Real>(
    work: &FdcDataset<F>,
    assignment: &SplitAssignment,
    flags: &mut ImputeFlags,
) -> Matrix<F> {
    let mut values = work.values.clone();
    let tools = work.tools();
    for j in 0..work.n_features() {
        let median = super::training_median(work, assignment, j);
        for tool in &tools {
            let series = work.tool_series(tool);
            let obs: Vec<bool> = series.iter().map(|&i| work.mask.is_observed(i, j)).collect();
            if obs.iter().all(|&o| o) {
                continue;
            }
            let vals: Vec<F> = series.iter().map(|&i| work.values.get(i, j)).collect();
            if !obs.iter().any(|&o| o) {
                flags.fallback_series += 1;
            }
            let filled = fill_series(&vals, &obs, median);
            for (k, &i) in series.iter().enumerate() {
                if !obs[k] {
                    values.set(i, j, filled[k]);
                }
            }
        }
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureMeta, SplitAssignment};
    use crate::matrix::Mask;

    fn series_dataset(vals: &[f64], obs: &[bool]) -> FdcDataset<f64> {
        let n = vals.len();
        let mut values = Matrix::zeros(n, 1);
        let mut mask = Mask::filled(n, 1, true);
        for i in 0..n {
            values.set(i, 0, vals[i]);
            mask.set(i, 0, obs[i]);
        }
        FdcDataset::new(
            values,
            mask,
            vec![FeatureMeta::continuous("f0")],
            vec!["T0".to_string(); n],
            (0..n as i64).collect(),
            vec![0.0; n],
        )
        .unwrap()
    }

    #[test]
    fn forward_fill_plugs_interior_gaps() {
        let ds = series_dataset(&[0.2, 0.0, 0.0, 0.8], &[true, false, false, true]);
        let out = crate::impute::impute(
            &ds,
            &SplitAssignment::all_train(4),
            &crate::impute::ImputerSpec::nearest(),
        )
        .unwrap();
        assert_eq!(out.values.column(0), vec![0.2, 0.2, 0.2, 0.8]);
    }

    #[test]
    fn leading_gap_backfills_from_first_observation() {
        let ds = series_dataset(&[0.0, 0.4, 0.0], &[false, true, false]);
        let out = crate::impute::impute(
            &ds,
            &SplitAssignment::all_train(3),
            &crate::impute::ImputerSpec::nearest(),
        )
        .unwrap();
        assert_eq!(out.values.column(0), vec![0.4, 0.4, 0.4]);
    }

    #[test]
    fn unobserved_series_takes_the_training_median() {
        // two tools; tool T1 never observes the feature
        let mut values = Matrix::zeros(6, 1);
        let mut mask = Mask::filled(6, 1, true);
        let tool_ids: Vec<String> = (0..6)
            .map(|i| if i % 2 == 0 { "T0" } else { "T1" }.to_string())
            .collect();
        for i in 0..6 {
            values.set(i, 0, 0.2 + 0.2 * i as f64 / 5.0);
            if i % 2 == 1 {
                mask.set(i, 0, false);
            }
        }
        let ds = FdcDataset::new(
            values,
            mask,
            vec![FeatureMeta::continuous("f0")],
            tool_ids,
            (0..6).collect(),
            vec![0.0; 6],
        )
        .unwrap();
        let out = crate::impute::impute(
            &ds,
            &SplitAssignment::all_train(6),
            &crate::impute::ImputerSpec::nearest(),
        )
        .unwrap();
        // training median over observed entries {0.2, 0.28, 0.36}
        let median = 0.2 + 0.2 * 2.0 / 5.0;
        for i in [1, 3, 5] {
            assert!((out.values.get(i, 0) - median).abs() < 1e-12);
        }
        assert_eq!(out.flags.fallback_series, 1);
    }
}
