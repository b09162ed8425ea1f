//! Uniform-random imputation over the normalized [0, 1] range.

use rand::Rng;

use crate::dataset::FdcDataset;
use crate::matrix::Matrix;
use crate::scalar::{real, Real};
use crate::seeding::rng_for;

pub(super) fn run<F: Real>(work: &FdcDataset<F>, seed: u64) -> Matrix<F> {
    let mut values = work.values.clone();
    let mut rng = rng_for(seed, "impute-random", 0);
    for i in 0..work.n_samples() {
        for j in 0..work.n_features() {
            if !work.mask.is_observed(i, j) {
                values.set(i, j, real(rng.random::<f64>()));
            }
        }
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests_support::small_dataset;
    use crate::dataset::SplitAssignment;
    use crate::impute::{impute, ImputerSpec};

    #[test]
    fn complete_input_is_untouched() {
        let ds = small_dataset(25, 4, 0.0, 2);
        let out = impute(&ds, &SplitAssignment::all_train(25), &ImputerSpec::random(1)).unwrap();
        assert_eq!(out.values, ds.values);
    }

    #[test]
    fn imputed_values_stay_in_unit_range() {
        let ds = small_dataset(50, 6, 0.5, 3);
        let out = impute(&ds, &SplitAssignment::all_train(50), &ImputerSpec::random(4)).unwrap();
        for i in 0..50 {
            for j in 0..6 {
                if !ds.mask.is_observed(i, j) {
                    let v = out.values.get(i, j);
                    assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }

    #[test]
    fn imputed_mean_is_near_one_half() {
        // law of large numbers over ~10k uniform draws
        let ds = small_dataset(400, 50, 0.5, 8);
        let out =
            impute(&ds, &SplitAssignment::all_train(400), &ImputerSpec::random(11)).unwrap();
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..400 {
            for j in 0..50 {
                if !ds.mask.is_observed(i, j) {
                    sum += out.values.get(i, j);
                    count += 1;
                }
            }
        }
        assert!(count > 9000);
        let mean = sum / count as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean} over {count} draws");
    }
}
