//! CSV ingestion and emission for FDC datasets.
//!
//! Layout: reserved columns `tool_id`, `timestamp`, `target`, then one column
//! per feature id. An empty cell is a missing entry. A JSON sidecar next to
//! the CSV records the per-feature kind.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::matrix::{Mask, Matrix};
use crate::scalar::{real, Real};

use super::{DatasetError, FdcDataset, FeatureMeta};

/// Appended to the CSV path to locate the feature-kind sidecar.
pub const SIDE_CAR_SUFFIX: &str = ".features.json";

const RESERVED: [&str; 3] = ["tool_id", "timestamp", "target"];

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    features: Vec<FeatureMeta>,
}

fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    let mut s = csv_path.as_os_str().to_os_string();
    s.push(SIDE_CAR_SUFFIX);
    std::path::PathBuf::from(s)
}

pub fn write_csv<F: Real>(dataset: &FdcDataset<F>, path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let mut header: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    header.extend(dataset.feature_ids());
    writeln!(w, "{}", header.join(","))?;
    for i in 0..dataset.n_samples() {
        let mut cells: Vec<String> = vec![
            dataset.tool_ids[i].clone(),
            dataset.timestamps[i].to_string(),
            format!("{}", dataset.target[i].to_report()),
        ];
        for j in 0..dataset.n_features() {
            if dataset.mask.is_observed(i, j) {
                cells.push(format!("{}", dataset.values.get(i, j).to_report()));
            } else {
                cells.push(String::new());
            }
        }
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    let sidecar = Sidecar {
        features: dataset.feature_meta.clone(),
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn read_csv<F: Real>(path: &Path) -> Result<FdcDataset<F>, DatasetError> {
    let sidecar: Option<Sidecar> = match std::fs::read_to_string(sidecar_path(path)) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
            line: 0,
            msg: format!("sidecar: {e}"),
        })?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };

    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    for (k, name) in RESERVED.iter().enumerate() {
        if headers.get(k) != Some(name) {
            return Err(DatasetError::Parse {
                line: 1,
                msg: format!("expected reserved column {name} at position {k}"),
            });
        }
    }
    let feature_ids: Vec<String> = headers.iter().skip(RESERVED.len()).map(String::from).collect();
    let m = feature_ids.len();

    let feature_meta: Vec<FeatureMeta> = match sidecar {
        Some(sc) => {
            for id in &feature_ids {
                if !sc.features.iter().any(|f| &f.id == id) {
                    return Err(DatasetError::UnknownFeature(id.clone()));
                }
            }
            feature_ids
                .iter()
                .map(|id| sc.features.iter().find(|f| &f.id == id).unwrap().clone())
                .collect()
        }
        None => feature_ids
            .iter()
            .map(|id| FeatureMeta::continuous(id.clone()))
            .collect(),
    };

    let mut rows: Vec<Vec<F>> = Vec::new();
    let mut mask_rows: Vec<Vec<bool>> = Vec::new();
    let mut tool_ids = Vec::new();
    let mut timestamps = Vec::new();
    let mut target = Vec::new();
    for (line_no, record) in reader.records().enumerate() {
        let line = line_no + 2;
        let record = record.map_err(|e| DatasetError::Parse {
            line,
            msg: e.to_string(),
        })?;
        if record.len() != RESERVED.len() + m {
            return Err(DatasetError::Parse {
                line,
                msg: format!("expected {} cells, got {}", RESERVED.len() + m, record.len()),
            });
        }
        tool_ids.push(record[0].to_string());
        timestamps.push(record[1].parse::<i64>().map_err(|e| DatasetError::Parse {
            line,
            msg: format!("timestamp: {e}"),
        })?);
        let t: f64 = record[2].parse().map_err(|e| DatasetError::Parse {
            line,
            msg: format!("target: {e}"),
        })?;
        target.push(real(t));
        let mut row = Vec::with_capacity(m);
        let mut obs = Vec::with_capacity(m);
        for j in 0..m {
            let cell = &record[RESERVED.len() + j];
            if cell.is_empty() {
                row.push(F::zero());
                obs.push(false);
            } else {
                let v: f64 = cell.parse().map_err(|e| DatasetError::Parse {
                    line,
                    msg: format!("feature {}: {e}", feature_ids[j]),
                })?;
                row.push(real(v));
                obs.push(true);
            }
        }
        rows.push(row);
        mask_rows.push(obs);
    }
    let n = rows.len();
    let values = Matrix::from_rows(&rows);
    let mask = Mask::from_vec(mask_rows.into_iter().flatten().collect(), n, m);
    FdcDataset::new(values, mask, feature_meta, tool_ids, timestamps, target)
}

#[cfg(test)]
mod tests {
    use super::super::tests_support::small_dataset;
    use super::*;

    #[test]
    fn csv_round_trip_preserves_values_and_mask() {
        let ds = small_dataset(12, 4, 0.3, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_csv(&ds, &path).unwrap();
        let back: FdcDataset<f64> = read_csv(&path).unwrap();
        assert_eq!(back.n_samples(), ds.n_samples());
        assert_eq!(back.n_features(), ds.n_features());
        assert_eq!(back.feature_meta, ds.feature_meta);
        assert_eq!(back.tool_ids, ds.tool_ids);
        assert_eq!(back.timestamps, ds.timestamps);
        for i in 0..ds.n_samples() {
            assert_eq!(back.target[i], ds.target[i]);
            for j in 0..ds.n_features() {
                assert_eq!(back.mask.is_observed(i, j), ds.mask.is_observed(i, j));
                if ds.mask.is_observed(i, j) {
                    assert_eq!(back.values.get(i, j), ds.values.get(i, j));
                }
            }
        }
    }

    #[test]
    fn missing_reserved_column_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "tool_id,target,f0\nT0,1.0,0.5\n").unwrap();
        let err = read_csv::<f64>(&path);
        assert!(matches!(err, Err(DatasetError::Parse { line: 1, .. })));
    }
}
