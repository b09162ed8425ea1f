//! Nearest-neighbor averaging within each tool.
//!
//! Distances between two samples use only coordinates observed in both,
//! scaled by sqrt(M / shared) to stay comparable across overlap sizes. The
//! neighbor pool is the training split, mirroring the fit-then-transform
//! policy of the other imputers.

use crate::dataset::{FdcDataset, SplitAssignment, SplitRole};
use crate::matrix::Matrix;
use crate::scalar::{real, Real};

use super::ImputeFlags;

pub(super) fn run<F: Real>(
    work: &FdcDataset<F>,
    assignment: &SplitAssignment,
    k: usize,
    flags: &mut ImputeFlags,
) -> Matrix<F> {
    let m = work.n_features();
    let m_f = real::<F>(m as f64);
    let mut values = work.values.clone();
    for tool in work.tools() {
        let members = work.tool_series(&tool);
        let pool: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&i| assignment.roles[i] == SplitRole::Train)
            .collect();

        // per-tool training medians as the last-resort fill
        let tool_median = |j: usize| -> F {
            let mut vals: Vec<F> = pool
                .iter()
                .filter(|&&p| work.mask.is_observed(p, j))
                .map(|&p| work.values.get(p, j))
                .collect();
            let global = super::training_median(work, assignment, j);
            super::median_or(&mut vals, global)
        };

        for &i in &members {
            let missing: Vec<usize> = (0..m).filter(|&j| !work.mask.is_observed(i, j)).collect();
            if missing.is_empty() {
                continue;
            }
            // rank the whole pool once per sample, then walk it per feature
            let mut ranked: Vec<(F, usize)> = pool
                .iter()
                .filter(|&&p| p != i)
                .map(|&p| (distance(work, i, p, m_f), p))
                .collect();
            ranked.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });
            for &j in &missing {
                let mut sum = F::zero();
                let mut found = 0usize;
                for &(d, p) in &ranked {
                    if !d.is_finite() {
                        break;
                    }
                    if work.mask.is_observed(p, j) {
                        sum = sum + work.values.get(p, j);
                        found += 1;
                        if found == k {
                            break;
                        }
                    }
                }
                if found > 0 {
                    values.set(i, j, sum / real(found as f64));
                } else {
                    flags.fallback_series += 1;
                    values.set(i, j, tool_median(j));
                }
            }
        }
    }
    values
}

fn distance<F: Real>(work: &FdcDataset<F>, a: usize, b: usize, m_f: F) -> F {
    let mut sq = F::zero();
    let mut shared = 0usize;
    for j in 0..work.n_features() {
        if work.mask.is_observed(a, j) && work.mask.is_observed(b, j) {
            let d = work.values.get(a, j) - work.values.get(b, j);
            sq = sq + d * d;
            shared += 1;
        }
    }
    if shared == 0 {
        F::infinity()
    } else {
        (sq * m_f / real(shared as f64)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureMeta, SplitAssignment};
    use crate::impute::{impute, ImputerSpec};
    use crate::matrix::Mask;

    fn tool_dataset(rows: &[Vec<Option<f64>>]) -> FdcDataset<f64> {
        let n = rows.len();
        let m = rows[0].len();
        let mut values = Matrix::zeros(n, m);
        let mut mask = Mask::filled(n, m, true);
        for (i, row) in rows.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                match cell {
                    Some(v) => values.set(i, j, *v),
                    None => mask.set(i, j, false),
                }
            }
        }
        let meta = (0..m)
            .map(|j| FeatureMeta::continuous(format!("f{j}")))
            .collect();
        FdcDataset::new(
            values,
            mask,
            meta,
            vec!["T0".to_string(); n],
            (0..n as i64).collect(),
            vec![0.0; n],
        )
        .unwrap()
    }

    #[test]
    fn hand_computed_neighbor_mean_on_three_samples() {
        // sample 1 misses f2; neighbors are samples 0 and 2
        let ds = tool_dataset(&[
            vec![Some(0.1), Some(0.2), Some(0.9)],
            vec![Some(0.2), Some(0.2), None],
            vec![Some(0.8), Some(0.9), Some(0.3)],
        ]);
        let out = impute(&ds, &SplitAssignment::all_train(3), &ImputerSpec::knn(2)).unwrap();
        // brute force: both candidates observe f2, k=2 takes both
        assert!((out.values.get(1, 2) - (0.9 + 0.3) / 2.0).abs() < 1e-12);

        // with k=1 the closer sample (0) wins: distances over shared coords
        let d0 = ((0.1f64 - 0.2).powi(2) + (0.2f64 - 0.2).powi(2)).sqrt();
        let d2 = ((0.8f64 - 0.2).powi(2) + (0.9f64 - 0.2).powi(2)).sqrt();
        assert!(d0 < d2);
        let out1 = impute(&ds, &SplitAssignment::all_train(3), &ImputerSpec::knn(1)).unwrap();
        assert_eq!(out1.values.get(1, 2), 0.9);
    }

    #[test]
    fn k_at_least_pool_size_averages_all_observed() {
        let ds = tool_dataset(&[
            vec![Some(0.0), Some(0.4)],
            vec![Some(0.5), None],
            vec![Some(1.0), Some(0.8)],
            vec![Some(0.2), Some(0.6)],
        ]);
        let out = impute(&ds, &SplitAssignment::all_train(4), &ImputerSpec::knn(10)).unwrap();
        let expected = (0.4 + 0.8 + 0.6) / 3.0;
        assert!((out.values.get(1, 1) - expected).abs() < 1e-12);
    }

    #[test]
    fn exact_duplicate_dominates_at_k1() {
        let ds = tool_dataset(&[
            vec![Some(0.3), Some(0.7), None],
            vec![Some(0.3), Some(0.7), Some(0.55)],
            vec![Some(0.9), Some(0.1), Some(0.2)],
        ]);
        let out = impute(&ds, &SplitAssignment::all_train(3), &ImputerSpec::knn(1)).unwrap();
        assert_eq!(out.values.get(0, 2), 0.55);
    }

    #[test]
    fn empty_candidate_pool_falls_back_to_median() {
        // the feature is missing everywhere in this tool
        let ds = tool_dataset(&[
            vec![Some(0.1), None],
            vec![Some(0.2), None],
            vec![Some(0.3), None],
        ]);
        let out = impute(&ds, &SplitAssignment::all_train(3), &ImputerSpec::knn(2)).unwrap();
        // global training median of a never-observed feature is 0.5
        for i in 0..3 {
            assert_eq!(out.values.get(i, 1), 0.5);
        }
        assert_eq!(out.flags.fallback_series, 3);
    }
}
