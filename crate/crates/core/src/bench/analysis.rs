//! The three analyses behind the report: accuracy vs NIF, MDAR vs NIF, and
//! the cumulative test-accuracy distribution.

use serde::{Deserialize, Serialize};

use crate::dataset::SplitRole;
use crate::impute::ImputerKind;
use crate::regress::RegressorKind;

use super::{BenchError, BenchmarkReport, CellOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub pairing: RegressorKind,
    pub imputer: ImputerKind,
    pub seed: u64,
    pub nif: usize,
    pub accuracy: f64,
}

/// Long-form accuracy table for one split, one row per trace iteration.
pub fn accuracy_vs_nif(report: &BenchmarkReport, split: SplitRole) -> Vec<AccuracyRow> {
    let mut rows = Vec::new();
    for cell in report.cells.values() {
        let CellOutcome::Trace(trace) = &cell.outcome else {
            continue;
        };
        for it in &trace.iterations {
            let accuracy = match split {
                SplitRole::Train => it.train_accuracy,
                SplitRole::Dev => it.dev_accuracy,
                SplitRole::Test => it.test_accuracy,
            };
            rows.push(AccuracyRow {
                pairing: cell.regressor,
                imputer: cell.imputer,
                seed: cell.seed,
                nif: it.nif,
                accuracy,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdarRow {
    pub pairing: RegressorKind,
    pub imputer: ImputerKind,
    pub seed: u64,
    pub nif: usize,
    pub mdar: f64,
}

/// MDAR per iteration for the nonlinear pairings.
pub fn mdar_vs_nif(report: &BenchmarkReport) -> Result<Vec<MdarRow>, BenchError> {
    let mut rows = Vec::new();
    for cell in report.cells.values() {
        if !matches!(
            cell.regressor,
            RegressorKind::GradientBoosting | RegressorKind::NeuralNetwork
        ) {
            continue;
        }
        let CellOutcome::Trace(trace) = &cell.outcome else {
            continue;
        };
        for it in &trace.iterations {
            rows.push(MdarRow {
                pairing: cell.regressor,
                imputer: cell.imputer,
                seed: cell.seed,
                nif: it.nif,
                mdar: it.mdar,
            });
        }
    }
    if rows.is_empty() {
        return Err(BenchError::MissingTraces(
            "nonlinear pairings (gradient_boosting, neural_network)".to_string(),
        ));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub imputer: ImputerKind,
    pub accuracy: f64,
    pub cumulative_fraction: f64,
}

/// Empirical CDF of test accuracy over all iterations, per imputer.
pub fn cumulative_accuracy(
    report: &BenchmarkReport,
    pairing: RegressorKind,
) -> Result<Vec<CdfRow>, BenchError> {
    let traces = report.traces_for(pairing);
    if traces.is_empty() {
        return Err(BenchError::MissingTraces(pairing.name().to_string()));
    }
    let mut rows = Vec::new();
    let mut imputers: Vec<ImputerKind> = traces.iter().map(|(c, _)| c.imputer).collect();
    imputers.sort();
    imputers.dedup();
    for imputer in imputers {
        let mut values: Vec<f64> = traces
            .iter()
            .filter(|(c, _)| c.imputer == imputer)
            .flat_map(|(_, t)| t.iterations.iter().map(|it| it.test_accuracy))
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let n = values.len();
        for (k, accuracy) in values.into_iter().enumerate() {
            rows.push(CdfRow {
                imputer,
                accuracy,
                cumulative_fraction: (k + 1) as f64 / n as f64,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub imputer: ImputerKind,
    pub regressor: RegressorKind,
    pub seed: u64,
    /// NIF at the iteration with the best development accuracy.
    pub best_dev_nif: usize,
    pub best_dev_accuracy: f64,
    /// Test accuracy at that same iteration (never the test argmax).
    pub test_accuracy_at_best_dev: f64,
    pub error: Option<String>,
}

/// Per-cell best-scenario summary, selected on the development split.
pub fn summary(report: &BenchmarkReport) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for cell in report.cells.values() {
        match &cell.outcome {
            CellOutcome::Trace(trace) => {
                let best = trace.best_dev_iteration().expect("nonempty trace");
                let it = &trace.iterations[best];
                rows.push(SummaryRow {
                    imputer: cell.imputer,
                    regressor: cell.regressor,
                    seed: cell.seed,
                    best_dev_nif: it.nif,
                    best_dev_accuracy: it.dev_accuracy,
                    test_accuracy_at_best_dev: it.test_accuracy,
                    error: None,
                });
            }
            CellOutcome::Error(e) => rows.push(SummaryRow {
                imputer: cell.imputer,
                regressor: cell.regressor,
                seed: cell.seed,
                best_dev_nif: 0,
                best_dev_accuracy: f64::NAN,
                test_accuracy_at_best_dev: f64::NAN,
                error: Some(e.clone()),
            }),
        }
    }
    rows
}
