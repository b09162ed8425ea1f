//! Benchmark orchestration: hyperparameter tuning on the development split
//! and the full imputer x pairing x seed cross-product.

mod analysis;
mod persist;

pub use analysis::{
    accuracy_vs_nif, cumulative_accuracy, mdar_vs_nif, summary, AccuracyRow, CdfRow, MdarRow,
    SummaryRow,
};
pub use persist::{read_report, write_report};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{generate, GenError, GeneratorConfig, GroundTruth};
use crate::dataset::{
    encode_categoricals, normalize, split, DatasetError, FdcDataset, SplitStrategy,
};
use crate::impute::{impute, ImputeError, ImputerSpec};
use crate::matrix::Matrix;
use crate::regress::{accuracy, fit, Hyperparams, RegressorKind, RegressorSpec, TrainedModel};
use crate::scalar::Real;
use crate::seeding::{derive_seed, fnv1a_hex};
use crate::select::{run_selection, SelectError, SelectionInput, SelectionTrace, SelectorPairing};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("every grid combination failed to fit; last error: {0}")]
    AllFitsFailed(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Impute(#[from] ImputeError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error("no traces present for {0}")]
    MissingTraces(String),
    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
    #[error("report format: {0}")]
    Format(String),
}

/// Finite hyperparameter grids, one per regressor kind, evaluated
/// exhaustively in documented order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    #[serde(default = "grid_defaults::pls_components")]
    pub pls_components: Vec<usize>,
    #[serde(default = "grid_defaults::gb_trees")]
    pub gb_trees: Vec<usize>,
    #[serde(default = "grid_defaults::gb_depths")]
    pub gb_depths: Vec<usize>,
    #[serde(default = "grid_defaults::gb_learning_rates")]
    pub gb_learning_rates: Vec<f64>,
    #[serde(default = "grid_defaults::nn_layers")]
    pub nn_layers: Vec<usize>,
    #[serde(default = "grid_defaults::nn_widths")]
    pub nn_widths: Vec<usize>,
    #[serde(default = "grid_defaults::nn_learning_rates")]
    pub nn_learning_rates: Vec<f64>,
    #[serde(default = "grid_defaults::svr_c")]
    pub svr_c: Vec<f64>,
    #[serde(default = "grid_defaults::svr_epsilon")]
    pub svr_epsilon: Vec<f64>,
}

mod grid_defaults {
    pub fn pls_components() -> Vec<usize> {
        vec![1, 2, 5, 10, 20]
    }
    pub fn gb_trees() -> Vec<usize> {
        vec![100, 300]
    }
    pub fn gb_depths() -> Vec<usize> {
        vec![3, 5]
    }
    pub fn gb_learning_rates() -> Vec<f64> {
        vec![0.05, 0.1]
    }
    pub fn nn_layers() -> Vec<usize> {
        vec![1, 2]
    }
    pub fn nn_widths() -> Vec<usize> {
        vec![32, 64]
    }
    pub fn nn_learning_rates() -> Vec<f64> {
        vec![1e-3, 1e-2]
    }
    pub fn svr_c() -> Vec<f64> {
        vec![0.1, 1.0, 10.0]
    }
    pub fn svr_epsilon() -> Vec<f64> {
        vec![0.01, 0.05]
    }
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            pls_components: grid_defaults::pls_components(),
            gb_trees: grid_defaults::gb_trees(),
            gb_depths: grid_defaults::gb_depths(),
            gb_learning_rates: grid_defaults::gb_learning_rates(),
            nn_layers: grid_defaults::nn_layers(),
            nn_widths: grid_defaults::nn_widths(),
            nn_learning_rates: grid_defaults::nn_learning_rates(),
            svr_c: grid_defaults::svr_c(),
            svr_epsilon: grid_defaults::svr_epsilon(),
        }
    }
}

impl SearchSpace {
    /// The grid for one regressor kind, in documented order. PLS components
    /// exceeding what the data can support are dropped (component 1 always
    /// survives).
    pub fn grid_for(
        &self,
        kind: RegressorKind,
        n_train: usize,
        n_features: usize,
        seed: u64,
    ) -> Vec<RegressorSpec> {
        let mut grid = Vec::new();
        match kind {
            RegressorKind::Lls => grid.push(RegressorSpec::lls()),
            RegressorKind::BayesianRidge => grid.push(RegressorSpec::bayesian_ridge()),
            RegressorKind::Pls => {
                let cap = n_features.min(n_train.saturating_sub(1)).max(1);
                for &c in &self.pls_components {
                    if c <= cap {
                        grid.push(RegressorSpec::pls(c));
                    }
                }
                if grid.is_empty() {
                    grid.push(RegressorSpec::pls(1));
                }
            }
            RegressorKind::LinearSvr => {
                for &c in &self.svr_c {
                    for &eps in &self.svr_epsilon {
                        grid.push(RegressorSpec::linear_svr(eps, c));
                    }
                }
            }
            RegressorKind::GradientBoosting => {
                for &trees in &self.gb_trees {
                    for &depth in &self.gb_depths {
                        for &lr in &self.gb_learning_rates {
                            grid.push(RegressorSpec::gradient_boosting(trees, depth, lr));
                        }
                    }
                }
            }
            RegressorKind::NeuralNetwork => {
                for &layers in &self.nn_layers {
                    for &width in &self.nn_widths {
                        for &lr in &self.nn_learning_rates {
                            grid.push(RegressorSpec::neural_network(vec![width; layers], lr));
                        }
                    }
                }
            }
        }
        grid.into_iter().map(|g| g.with_seed(seed)).collect()
    }
}

/// Winner of a grid search: its spec, the fitted model, and its dev score.
pub struct TunedFit<F> {
    pub spec: RegressorSpec,
    pub model: TrainedModel<F>,
    pub dev_accuracy: f64,
}

/// Exhaustive grid search maximizing development-split accuracy.
/// Ties go to the first combination in grid order; the test split is never
/// touched here.
#[allow(clippy::too_many_arguments)]
pub fn tune<F: Real>(
    kind: RegressorKind,
    x_train: &Matrix<F>,
    y_train: &[F],
    x_dev: &Matrix<F>,
    y_dev: &[F],
    feature_ids: &[String],
    space: &SearchSpace,
    seed: u64,
) -> Result<TunedFit<F>, BenchError> {
    let grid = space.grid_for(kind, x_train.rows(), x_train.cols(), seed);
    let mut best: Option<TunedFit<F>> = None;
    let mut last_error = String::from("empty grid");

    // squared-loss boosting is prefix-stable, so all tree counts of one
    // (depth, learning rate) come from a single boosting pass
    let mut gb_cache: std::collections::HashMap<String, TrainedModel<F>> =
        std::collections::HashMap::new();
    if kind == RegressorKind::GradientBoosting {
        let mut checkpoints = space.gb_trees.clone();
        checkpoints.sort_unstable();
        checkpoints.dedup();
        for &depth in &space.gb_depths {
            for &lr in &space.gb_learning_rates {
                let spec = RegressorSpec::gradient_boosting(
                    *checkpoints.last().unwrap_or(&100),
                    depth,
                    lr,
                )
                .with_seed(seed);
                match crate::regress::fit_gb_path(&spec, x_train, y_train, feature_ids, &checkpoints)
                {
                    Ok(models) => {
                        for model in models {
                            let Hyperparams::GradientBoosting { n_trees, .. } =
                                model.spec.hyperparams
                            else {
                                continue;
                            };
                            gb_cache.insert(format!("{n_trees}:{depth}:{lr}"), model);
                        }
                    }
                    Err(e) => last_error = e.to_string(),
                }
            }
        }
    }

    for spec in grid {
        let fitted = if let Hyperparams::GradientBoosting {
            n_trees,
            max_depth,
            learning_rate,
            ..
        } = &spec.hyperparams
        {
            match gb_cache.remove(&format!("{n_trees}:{max_depth}:{learning_rate}")) {
                Some(m) => m,
                None => continue,
            }
        } else {
            match fit(&spec, x_train, y_train, feature_ids, Some((x_dev, y_dev))) {
                Ok(m) => m,
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            }
        };
        let dev_pred = fitted.predict_unchecked(x_dev);
        let dev_accuracy = match accuracy(y_dev, &dev_pred) {
            Ok(a) => a.primary().to_report(),
            Err(e) => {
                last_error = e.to_string();
                continue;
            }
        };
        let better = match &best {
            None => true,
            Some(b) => dev_accuracy > b.dev_accuracy,
        };
        if better {
            best = Some(TunedFit {
                spec,
                model: fitted,
                dev_accuracy,
            });
        }
    }
    best.ok_or(BenchError::AllFitsFailed(last_error))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Generate(GeneratorConfig),
    Csv { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub dataset: DatasetSource,
    #[serde(default = "bench_defaults::split_strategy")]
    pub split_strategy: SplitStrategy,
    #[serde(default = "bench_defaults::imputers")]
    pub imputers: Vec<ImputerSpec>,
    #[serde(default = "bench_defaults::regressors")]
    pub regressors: Vec<RegressorKind>,
    #[serde(default = "bench_defaults::seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub search_space: SearchSpace,
    #[serde(default = "bench_defaults::stop_nif")]
    pub stop_nif: usize,
    #[serde(default = "bench_defaults::parallelism")]
    pub parallelism: usize,
    /// Testing hook: cells keyed "imputer:regressor:seed" that must record
    /// an injected failure instead of running.
    #[serde(default)]
    pub inject_failures: Vec<String>,
}

mod bench_defaults {
    use super::*;

    pub fn split_strategy() -> SplitStrategy {
        SplitStrategy::Random
    }
    pub fn imputers() -> Vec<ImputerSpec> {
        ImputerSpec::default_five(1)
    }
    pub fn regressors() -> Vec<RegressorKind> {
        RegressorKind::ALL.to_vec()
    }
    pub fn seeds() -> Vec<u64> {
        vec![1]
    }
    pub fn stop_nif() -> usize {
        5
    }
    pub fn parallelism() -> usize {
        4
    }
}

impl BenchConfig {
    pub fn with_generator(config: GeneratorConfig) -> Self {
        Self {
            dataset: DatasetSource::Generate(config),
            split_strategy: bench_defaults::split_strategy(),
            imputers: bench_defaults::imputers(),
            regressors: bench_defaults::regressors(),
            seeds: bench_defaults::seeds(),
            search_space: SearchSpace::default(),
            stop_nif: bench_defaults::stop_nif(),
            parallelism: bench_defaults::parallelism(),
            inject_failures: Vec::new(),
        }
    }

    pub fn hash(&self) -> String {
        fnv1a_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}

pub fn cell_key(imputer: crate::impute::ImputerKind, regressor: RegressorKind, seed: u64) -> String {
    format!("{imputer}:{regressor}:{seed}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Trace(SelectionTrace),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub imputer: crate::impute::ImputerKind,
    pub regressor: RegressorKind,
    pub seed: u64,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub config_hash: String,
    pub code_version: String,
    /// Wall-clock stamp; excluded from determinism comparisons.
    pub created_unix_seconds: u64,
    pub generator_truth: BTreeMap<u64, GroundTruth>,
    pub cells: BTreeMap<String, CellResult>,
}

impl BenchmarkReport {
    pub fn traces_for(
        &self,
        regressor: RegressorKind,
    ) -> Vec<(&CellResult, &SelectionTrace)> {
        self.cells
            .values()
            .filter(|c| c.regressor == regressor)
            .filter_map(|c| match &c.outcome {
                CellOutcome::Trace(t) => Some((c, t)),
                CellOutcome::Error(_) => None,
            })
            .collect()
    }

    pub fn error_cells(&self) -> Vec<&CellResult> {
        self.cells
            .values()
            .filter(|c| matches!(c.outcome, CellOutcome::Error(_)))
            .collect()
    }
}

/// The full cross-benchmark. Each (imputer, regressor, seed) cell runs in
/// isolation: a failing cell records its error and leaves the rest intact.
pub fn run_benchmark<F: Real>(config: &BenchConfig) -> Result<BenchmarkReport, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| run_benchmark_inner::<F>(config))
}

fn run_benchmark_inner<F: Real>(config: &BenchConfig) -> Result<BenchmarkReport, BenchError> {
    let mut cells: BTreeMap<String, CellResult> = BTreeMap::new();
    let mut generator_truth = BTreeMap::new();

    let csv_dataset: Option<FdcDataset<F>> = match &config.dataset {
        DatasetSource::Csv { path } => Some(crate::dataset::read_csv(std::path::Path::new(path))?),
        DatasetSource::Generate(_) => None,
    };

    for &run_seed in &config.seeds {
        let dataset: FdcDataset<F> = match &config.dataset {
            DatasetSource::Generate(gen) => {
                let mut gen = gen.clone();
                gen.seed = derive_seed(gen.seed, "bench-dataset", run_seed);
                let (ds, truth) = generate(&gen)?;
                generator_truth.insert(run_seed, truth);
                ds
            }
            DatasetSource::Csv { .. } => csv_dataset.clone().expect("csv dataset loaded"),
        };

        let assignment = split(
            &dataset,
            config.split_strategy,
            derive_seed(run_seed, "bench-split", 0),
        )?;
        let encoded = encode_categoricals(&dataset, &assignment);
        let (prepared, _norm) = normalize(&encoded, &assignment);
        let feature_ids = prepared.feature_ids();

        // impute once per imputer, shared across the pairings
        let imputations: Vec<(ImputerSpec, Result<crate::impute::ImputedDataset<F>, String>)> =
            config
                .imputers
                .par_iter()
                .map(|spec| {
                    let mut spec = spec.clone();
                    spec.seed = derive_seed(spec.seed, "bench-imputer-run", run_seed);
                    let result =
                        impute(&prepared, &assignment, &spec).map_err(|e| e.to_string());
                    (spec, result)
                })
                .collect();

        let mut jobs = Vec::new();
        for (spec, imputation) in &imputations {
            for &regressor in &config.regressors {
                jobs.push((spec, imputation, regressor));
            }
        }
        let results: Vec<(String, CellResult)> = jobs
            .par_iter()
            .map(|(spec, imputation, regressor)| {
                let key = cell_key(spec.kind, *regressor, run_seed);
                let outcome = if config.inject_failures.contains(&key) {
                    CellOutcome::Error("injected failure".to_string())
                } else {
                    match imputation {
                        Err(e) => CellOutcome::Error(format!("imputation failed: {e}")),
                        Ok(imputed) => {
                            let pairing = SelectorPairing::for_regressor(*regressor);
                            let input = SelectionInput {
                                imputed,
                                feature_ids: &feature_ids,
                                target: &prepared.target,
                                assignment: &assignment,
                                search_space: &config.search_space,
                                stop_nif: config.stop_nif,
                                seed: derive_seed(
                                    run_seed,
                                    "bench-cell",
                                    fnv1a_hex(key.as_bytes())
                                        .as_bytes()
                                        .iter()
                                        .fold(0u64, |a, &b| a.wrapping_mul(31).wrapping_add(b as u64)),
                                ),
                            };
                            match run_selection(&input, pairing) {
                                Ok(trace) => CellOutcome::Trace(trace),
                                Err(e) => CellOutcome::Error(e.to_string()),
                            }
                        }
                    }
                };
                (
                    key,
                    CellResult {
                        imputer: spec.kind,
                        regressor: *regressor,
                        seed: run_seed,
                        outcome,
                    },
                )
            })
            .collect();
        cells.extend(results);
    }

    Ok(BenchmarkReport {
        config: config.clone(),
        config_hash: config.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_seconds: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        generator_truth,
        cells,
    })
}
