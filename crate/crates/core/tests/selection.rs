//! Trace-level checks for the elimination loop and the benchmark harness.

use vmbench::bench::{run_benchmark, BenchConfig, SearchSpace};
use vmbench::datagen::{generate, paper_profile};
use vmbench::dataset::{encode_categoricals, normalize, split, SplitRole, SplitStrategy};
use vmbench::impute::{impute, mdar, ImputerSpec};
use vmbench::regress::RegressorKind;
use vmbench::select::{run_selection, SelectionInput, SelectionTrace, SelectorPairing};

fn small_space() -> SearchSpace {
    SearchSpace {
        pls_components: vec![1, 2],
        gb_trees: vec![40],
        gb_depths: vec![3],
        gb_learning_rates: vec![0.1],
        nn_layers: vec![1],
        nn_widths: vec![8],
        nn_learning_rates: vec![1e-2],
        svr_c: vec![1.0],
        svr_epsilon: vec![0.01],
    }
}

struct Prepared {
    imputed: vmbench::Imputed64,
    feature_ids: Vec<String>,
    target: Vec<f64>,
    assignment: vmbench::dataset::SplitAssignment,
}

fn prepare(seed: u64, shuffle_test_targets: bool) -> Prepared {
    let mut config = paper_profile();
    config.n_samples = 220;
    config.n_features = 14;
    config.n_informative = 4;
    config.seed = seed;
    let (ds, _) = generate::<f64>(&config).unwrap();
    let assignment = split(&ds, SplitStrategy::Random, seed).unwrap();
    let encoded = encode_categoricals(&ds, &assignment);
    let (mut prepared, _) = normalize(&encoded, &assignment);
    if shuffle_test_targets {
        // derangement of the test-split targets only
        let test_rows = assignment.indices_with_role(SplitRole::Test);
        let rotated: Vec<f64> = test_rows
            .iter()
            .cycle()
            .skip(1)
            .take(test_rows.len())
            .map(|&i| prepared.target[i])
            .collect();
        for (&i, v) in test_rows.iter().zip(rotated) {
            prepared.target[i] = v;
        }
    }
    let imputed = impute(&prepared, &assignment, &ImputerSpec::nearest()).unwrap();
    Prepared {
        feature_ids: prepared.feature_ids(),
        target: prepared.target.clone(),
        imputed,
        assignment,
    }
}

fn run(prep: &Prepared, kind: RegressorKind, space: &SearchSpace) -> SelectionTrace {
    let input = SelectionInput {
        imputed: &prep.imputed,
        feature_ids: &prep.feature_ids,
        target: &prep.target,
        assignment: &prep.assignment,
        search_space: space,
        stop_nif: 5,
        seed: 77,
    };
    run_selection(&input, SelectorPairing::for_regressor(kind)).unwrap()
}

#[test]
fn trace_nif_is_strictly_decreasing_and_ends_below_stop() {
    let prep = prepare(1, false);
    let trace = run(&prep, RegressorKind::GradientBoosting, &small_space());
    let nifs: Vec<usize> = trace.iterations.iter().map(|it| it.nif).collect();
    assert!(nifs.windows(2).all(|w| w[0] > w[1]), "{nifs:?}");
    assert_eq!(nifs[0], prep.feature_ids.len());
    assert!(*nifs.last().unwrap() < 5, "{nifs:?}");
}

#[test]
fn trace_feature_sets_form_a_subset_chain() {
    let prep = prepare(2, false);
    let trace = run(&prep, RegressorKind::Lls, &small_space());
    for pair in trace.iterations.windows(2) {
        let prev: std::collections::HashSet<&str> =
            pair[0].feature_ids.iter().map(String::as_str).collect();
        for id in &pair[1].feature_ids {
            assert!(prev.contains(id.as_str()), "{id} appeared from nowhere");
        }
    }
}

#[test]
fn trace_mdar_matches_brute_force_recount() {
    let prep = prepare(3, false);
    let trace = run(&prep, RegressorKind::GradientBoosting, &small_space());
    for it in &trace.iterations {
        let cols: Vec<usize> = it
            .feature_ids
            .iter()
            .map(|id| prep.feature_ids.iter().position(|f| f == id).unwrap())
            .collect();
        let expected = mdar(&prep.imputed.provenance_mask, &cols).unwrap();
        assert_eq!(it.mdar, expected, "nif {}", it.nif);
    }
}

#[test]
fn identical_inputs_give_bit_identical_traces() {
    let prep = prepare(4, false);
    let a = run(&prep, RegressorKind::NeuralNetwork, &small_space());
    let b = run(&prep, RegressorKind::NeuralNetwork, &small_space());
    assert_eq!(a.to_jsonl(), b.to_jsonl());
}

#[test]
fn nn_pairing_records_separate_selector_hyperparams() {
    let prep = prepare(5, false);
    let trace = run(&prep, RegressorKind::NeuralNetwork, &small_space());
    for it in &trace.iterations {
        assert_eq!(it.chosen_hyperparams.kind, RegressorKind::NeuralNetwork);
        let sel = it.selector_hyperparams.as_ref().expect("selector spec");
        assert_eq!(sel.kind, RegressorKind::GradientBoosting);
    }
    let gb_trace = run(&prep, RegressorKind::GradientBoosting, &small_space());
    for it in &gb_trace.iterations {
        assert!(it.selector_hyperparams.is_none());
    }
}

/// Shuffling test-split targets may change recorded test accuracies but must
/// leave every decision untouched: features, hyperparameters, fitted models.
#[test]
fn shuffled_test_targets_change_no_decisions() {
    for kind in [RegressorKind::GradientBoosting, RegressorKind::Lls] {
        let clean = prepare(6, false);
        let shuffled = prepare(6, true);
        let a = run(&clean, kind, &small_space());
        let b = run(&shuffled, kind, &small_space());
        assert_eq!(a.iterations.len(), b.iterations.len());
        for (x, y) in a.iterations.iter().zip(&b.iterations) {
            assert_eq!(x.feature_ids, y.feature_ids);
            assert_eq!(x.chosen_hyperparams, y.chosen_hyperparams);
            assert_eq!(x.selector_hyperparams, y.selector_hyperparams);
            assert_eq!(x.model_digest, y.model_digest);
            assert_eq!(x.train_accuracy, y.train_accuracy);
            assert_eq!(x.dev_accuracy, y.dev_accuracy);
        }
    }
}

#[test]
fn benchmark_covers_the_cross_product_and_isolates_failures() {
    let mut gen = paper_profile();
    gen.n_samples = 200;
    gen.n_features = 10;
    gen.n_informative = 3;
    gen.seed = 5;
    let mut config = BenchConfig::with_generator(gen);
    config.search_space = small_space();
    config.stop_nif = 4;
    config.parallelism = 2;
    config.imputers = vec![ImputerSpec::nearest(), ImputerSpec::random(1)];
    config.regressors = vec![RegressorKind::Lls, RegressorKind::GradientBoosting];
    let baseline = run_benchmark::<f64>(&config).unwrap();
    assert_eq!(baseline.cells.len(), 4);
    assert!(baseline.error_cells().is_empty());

    // inject a failure into one cell; every other cell must be unchanged
    let mut with_failure = config.clone();
    with_failure.inject_failures = vec!["random:lls:1".to_string()];
    let report = run_benchmark::<f64>(&with_failure).unwrap();
    assert_eq!(report.cells.len(), 4);
    assert_eq!(report.error_cells().len(), 1);
    for (key, cell) in &report.cells {
        if key == "random:lls:1" {
            continue;
        }
        let a = serde_json::to_string(&cell).unwrap();
        let b = serde_json::to_string(&baseline.cells[key]).unwrap();
        assert_eq!(a, b, "cell {key} drifted");
    }
}

#[test]
fn summary_uses_dev_argmax_never_test_argmax() {
    let prep = prepare(8, false);
    let trace = run(&prep, RegressorKind::GradientBoosting, &small_space());
    let best = trace.best_dev_iteration().unwrap();
    for (k, it) in trace.iterations.iter().enumerate() {
        assert!(
            it.dev_accuracy <= trace.iterations[best].dev_accuracy,
            "iteration {k} beats the reported best"
        );
    }
}
