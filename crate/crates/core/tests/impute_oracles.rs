//! Independent oracles for the imputation layer.

use rand::Rng;
use vmbench::datagen::{generate, paper_profile, Mechanism, ProfileGroup};
use vmbench::dataset::{normalize, split, FdcDataset, FeatureMeta, SplitAssignment, SplitStrategy};
use vmbench::impute::{impute, mdar, ImputerKind, ImputerSpec};
use vmbench::matrix::{Mask, Matrix};
use vmbench::seeding::rng_for;

#[test]
fn mdar_equals_double_loop_count_on_random_masks() {
    let mut rng = rng_for(17, "mdar-oracle", 0);
    for trial in 0..30 {
        let n = 20 + rng.random_range(0..180);
        let m = 5 + rng.random_range(0..95);
        let mut mask = Mask::filled(n, m, true);
        for i in 0..n {
            for j in 0..m {
                if rng.random::<f64>() < 0.4 {
                    mask.set(i, j, false);
                }
            }
        }
        let subset: Vec<usize> = (0..m).filter(|_| rng.random::<bool>()).collect();
        if subset.is_empty() {
            continue;
        }
        let ours = mdar(&mask, &subset).unwrap();
        let mut count = 0usize;
        for &j in &subset {
            for i in 0..n {
                if mask.is_observed(i, j) {
                    count += 1;
                }
            }
        }
        let brute = count as f64 / (n * subset.len()) as f64;
        assert_eq!(ours, brute, "trial {trial}");
    }
}

/// Brute-force KNN oracle: recompute every pairwise distance and the
/// neighbor means directly from the definition.
#[test]
fn knn_matches_brute_force_on_random_tools() {
    let mut rng = rng_for(23, "knn-oracle", 0);
    for trial in 0..5 {
        let n = 18;
        let m = 6;
        let mut values = Matrix::zeros(n, m);
        let mut mask = Mask::filled(n, m, true);
        for i in 0..n {
            for j in 0..m {
                values.set(i, j, rng.random::<f64>());
                if rng.random::<f64>() < 0.3 {
                    mask.set(i, j, false);
                }
            }
        }
        let meta = (0..m)
            .map(|j| FeatureMeta::continuous(format!("f{j}")))
            .collect();
        let ds = FdcDataset::new(
            values,
            mask,
            meta,
            vec!["T0".to_string(); n],
            (0..n as i64).collect(),
            vec![0.0; n],
        )
        .unwrap();
        let k = 3;
        let out = impute(&ds, &SplitAssignment::all_train(n), &ImputerSpec::knn(k)).unwrap();

        for i in 0..n {
            for j in 0..m {
                if ds.mask.is_observed(i, j) {
                    continue;
                }
                // oracle: all pairwise distances, then the k nearest with j observed
                let mut candidates: Vec<(f64, usize)> = (0..n)
                    .filter(|&p| p != i && ds.mask.is_observed(p, j))
                    .filter_map(|p| {
                        let mut sq = 0.0;
                        let mut shared = 0usize;
                        for f in 0..m {
                            if ds.mask.is_observed(i, f) && ds.mask.is_observed(p, f) {
                                let d = ds.values.get(i, f) - ds.values.get(p, f);
                                sq += d * d;
                                shared += 1;
                            }
                        }
                        if shared == 0 {
                            None
                        } else {
                            Some(((sq * m as f64 / shared as f64).sqrt(), p))
                        }
                    })
                    .collect();
                candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                if candidates.is_empty() {
                    continue; // median fallback, covered in unit tests
                }
                let take = candidates.len().min(k);
                let expected: f64 = candidates[..take]
                    .iter()
                    .map(|&(_, p)| ds.values.get(p, j))
                    .sum::<f64>()
                    / take as f64;
                let got = out.values.get(i, j);
                assert!(
                    (got - expected).abs() < 1e-12,
                    "trial {trial} cell ({i},{j}): {got} vs {expected}"
                );
            }
        }
    }
}

/// AR(1) coverage oracle: the imputed point sits within two noise standard
/// deviations of the true conditional mean in nearly all replicates.
#[test]
fn arima_ar1_imputation_covers_the_conditional_mean() {
    let phi = 0.8;
    let noise = 0.04;
    let n = 120;
    let replicates = 1000;
    let mut hits = 0usize;
    for rep in 0..replicates {
        let mut rng = rng_for(31, "ar1-oracle", rep as u64);
        let mut x = vec![0.5f64; n];
        for t in 1..n {
            // uniform innovations scaled to the target std
            let eps: f64 = (rng.random::<f64>() - 0.5) * (12.0f64).sqrt();
            x[t] = 0.5 + phi * (x[t - 1] - 0.5) + noise * eps;
        }
        let miss = 40 + (rep % 40);
        let mut values = Matrix::zeros(n, 1);
        let mut mask = Mask::filled(n, 1, true);
        for t in 0..n {
            values.set(t, 0, x[t]);
        }
        mask.set(miss, 0, false);
        let ds = FdcDataset::new(
            values,
            mask,
            vec![FeatureMeta::continuous("f0")],
            vec!["T0".to_string(); n],
            (0..n as i64).collect(),
            vec![0.0; n],
        )
        .unwrap();
        let out = impute(
            &ds,
            &SplitAssignment::all_train(n),
            &ImputerSpec::arima(3, 1, 3),
        )
        .unwrap();
        let imputed = out.values.get(miss, 0);
        let conditional = 0.5 + phi * (x[miss - 1] - 0.5);
        if (imputed - conditional).abs() <= 2.0 * noise {
            hits += 1;
        }
    }
    let coverage = hits as f64 / replicates as f64;
    assert!(coverage >= 0.95, "coverage {coverage}");
}

/// On drifting sensors with MCAR missingness, last-observation imputation
/// must beat random imputation in RMSE against the generator's truth.
#[test]
fn nearest_beats_random_in_rmse_on_drifting_data() {
    for seed in 0..5u64 {
        let mut config = paper_profile();
        config.n_samples = 2000;
        config.n_features = 12;
        config.n_informative = 4;
        config.drift_strength = 1.0;
        config.missingness_mechanism = Mechanism::Mcar;
        config.missingness_profile = vec![ProfileGroup {
            feature_fraction: 1.0,
            availability: 0.6,
        }];
        config.seed = 100 + seed;
        let (ds, _) = generate::<f64>(&config).unwrap();
        let assignment = split(&ds, SplitStrategy::Random, seed).unwrap();
        let (prepared, _) = normalize(&ds, &assignment);

        let rmse = |kind: ImputerKind| -> f64 {
            let spec = match kind {
                ImputerKind::Random => ImputerSpec::random(seed),
                ImputerKind::Nearest => ImputerSpec::nearest(),
                _ => unreachable!(),
            };
            let out = impute(&prepared, &assignment, &spec).unwrap();
            let mut sq = 0.0;
            let mut count = 0usize;
            for i in 0..prepared.n_samples() {
                for j in 0..prepared.n_features() {
                    if !prepared.mask.is_observed(i, j) {
                        // the masked cell still holds the generator's true value
                        let e = out.values.get(i, j) - prepared.values.get(i, j);
                        sq += e * e;
                        count += 1;
                    }
                }
            }
            (sq / count as f64).sqrt()
        };
        let nearest = rmse(ImputerKind::Nearest);
        let random = rmse(ImputerKind::Random);
        assert!(
            nearest < random,
            "seed {seed}: nearest {nearest} vs random {random}"
        );
    }
}
