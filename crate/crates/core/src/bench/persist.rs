//! Report directory layout: a manifest, one JSON-lines trace per cell, and
//! CSV exports of the analysis tables.
//!
//! Everything except the manifest's timestamp field is byte-deterministic
//! for a given config, which is what the reproducibility checks compare.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::SplitRole;
use crate::regress::RegressorKind;
use crate::select::{SelectionTrace, SelectorPairing};

use super::{
    accuracy_vs_nif, cumulative_accuracy, mdar_vs_nif, summary, BenchConfig, BenchError,
    BenchmarkReport, CellOutcome, CellResult,
};

const MANIFEST_FILE: &str = "manifest.json";
const TRACE_DIR: &str = "traces";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    config: BenchConfig,
    config_hash: String,
    code_version: String,
    created_unix_seconds: u64,
    generator_truth: BTreeMap<u64, crate::datagen::GroundTruth>,
    cells: Vec<ManifestCell>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestCell {
    key: String,
    imputer: crate::impute::ImputerKind,
    regressor: RegressorKind,
    seed: u64,
    status: String,
    trace_file: Option<String>,
    error: Option<String>,
}

pub fn write_report(report: &BenchmarkReport, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir.join(TRACE_DIR))?;
    let mut manifest_cells = Vec::new();
    for (key, cell) in &report.cells {
        match &cell.outcome {
            CellOutcome::Trace(trace) => {
                let file = format!("{TRACE_DIR}/{}.jsonl", key.replace(':', "_"));
                fs::write(dir.join(&file), trace.to_jsonl())?;
                manifest_cells.push(ManifestCell {
                    key: key.clone(),
                    imputer: cell.imputer,
                    regressor: cell.regressor,
                    seed: cell.seed,
                    status: "ok".to_string(),
                    trace_file: Some(file),
                    error: None,
                });
            }
            CellOutcome::Error(e) => manifest_cells.push(ManifestCell {
                key: key.clone(),
                imputer: cell.imputer,
                regressor: cell.regressor,
                seed: cell.seed,
                status: "error".to_string(),
                trace_file: None,
                error: Some(e.clone()),
            }),
        }
    }
    let manifest = Manifest {
        config: report.config.clone(),
        config_hash: report.config_hash.clone(),
        code_version: report.code_version.clone(),
        created_unix_seconds: report.created_unix_seconds,
        generator_truth: report.generator_truth.clone(),
        cells: manifest_cells,
    };
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;

    write_analysis_csvs(report, dir)?;
    Ok(())
}

fn write_analysis_csvs(report: &BenchmarkReport, dir: &Path) -> Result<(), BenchError> {
    let mut train_csv = String::from("pairing,imputer,seed,nif,accuracy\n");
    for row in accuracy_vs_nif(report, SplitRole::Train) {
        train_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.pairing, row.imputer, row.seed, row.nif, row.accuracy
        ));
    }
    fs::write(dir.join("accuracy_train.csv"), train_csv)?;

    let mut test_csv = String::from("pairing,imputer,seed,nif,accuracy\n");
    for row in accuracy_vs_nif(report, SplitRole::Test) {
        test_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.pairing, row.imputer, row.seed, row.nif, row.accuracy
        ));
    }
    fs::write(dir.join("accuracy_test.csv"), test_csv)?;

    if let Ok(rows) = mdar_vs_nif(report) {
        let mut csv = String::from("pairing,imputer,seed,nif,mdar\n");
        for row in rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                row.pairing, row.imputer, row.seed, row.nif, row.mdar
            ));
        }
        fs::write(dir.join("mdar_nif.csv"), csv)?;
    }

    for (kind, file) in [
        (RegressorKind::GradientBoosting, "cumulative_gb.csv"),
        (RegressorKind::NeuralNetwork, "cumulative_nn.csv"),
    ] {
        if let Ok(rows) = cumulative_accuracy(report, kind) {
            let mut csv = String::from("imputer,accuracy,cumulative_fraction\n");
            for row in rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    row.imputer, row.accuracy, row.cumulative_fraction
                ));
            }
            fs::write(dir.join(file), csv)?;
        }
    }

    let mut csv = String::from(
        "imputer,regressor,seed,best_dev_nif,best_dev_accuracy,test_accuracy_at_best_dev,error\n",
    );
    for row in summary(report) {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.imputer,
            row.regressor,
            row.seed,
            row.best_dev_nif,
            row.best_dev_accuracy,
            row.test_accuracy_at_best_dev,
            row.error.unwrap_or_default()
        ));
    }
    fs::write(dir.join("summary.csv"), csv)?;
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<BenchmarkReport, BenchError> {
    let manifest_text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: Manifest =
        serde_json::from_str(&manifest_text).map_err(|e| BenchError::Format(e.to_string()))?;
    let mut cells = BTreeMap::new();
    for mc in manifest.cells {
        let outcome = match (&mc.trace_file, &mc.error) {
            (Some(file), _) => {
                let text = fs::read_to_string(dir.join(file))?;
                let pairing = SelectorPairing::for_regressor(mc.regressor);
                let trace = SelectionTrace::from_jsonl(pairing, &text)
                    .map_err(|e| BenchError::Format(e.to_string()))?;
                CellOutcome::Trace(trace)
            }
            (None, Some(e)) => CellOutcome::Error(e.clone()),
            (None, None) => {
                return Err(BenchError::Format(format!(
                    "cell {} has neither trace nor error",
                    mc.key
                )))
            }
        };
        cells.insert(
            mc.key.clone(),
            CellResult {
                imputer: mc.imputer,
                regressor: mc.regressor,
                seed: mc.seed,
                outcome,
            },
        );
    }
    Ok(BenchmarkReport {
        config: manifest.config,
        config_hash: manifest.config_hash,
        code_version: manifest.code_version,
        created_unix_seconds: manifest.created_unix_seconds,
        generator_truth: manifest.generator_truth,
        cells,
    })
}
