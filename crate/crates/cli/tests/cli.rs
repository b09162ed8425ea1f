//! Exit-code and file-format contracts of the command-line interface.

use std::path::Path;
use std::process::Command;

fn vmbench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vmbench"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const TINY_GEN: &str = r#"{
  "n_samples": 120,
  "n_features": 8,
  "n_informative": 3,
  "n_tools": 2,
  "seed": 11
}"#;

fn tiny_bench_config(extra: &str) -> String {
    format!(
        r#"{{
  "dataset": {{"generate": {TINY_GEN}}},
  "seeds": [1],
  "stop_nif": 4,
  "parallelism": 2,
  "imputers": [
    {{"kind": "nearest", "params": {{"algo": "none"}}, "seed": 0}},
    {{"kind": "random", "params": {{"algo": "none"}}, "seed": 0}}
  ],
  "regressors": ["lls", "gradient_boosting"],
  "search_space": {{
    "pls_components": [1],
    "gb_trees": [20],
    "gb_depths": [3],
    "gb_learning_rates": [0.1],
    "nn_layers": [1],
    "nn_widths": [8],
    "nn_learning_rates": [0.01],
    "svr_c": [1.0],
    "svr_epsilon": [0.01]
  }}{extra}
}}"#
    )
}

#[test]
fn generate_is_deterministic_and_prints_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("gen.json");
    write(&config, TINY_GEN);
    let run = |out: &str| {
        let output = vmbench()
            .args(["generate", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(output.status.success());
        String::from_utf8(output.stdout).unwrap()
    };
    let stdout = run("a");
    assert!(stdout.contains("missingness histogram"));
    run("b");
    let a = std::fs::read(dir.path().join("a/dataset.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/dataset.csv")).unwrap();
    assert_eq!(a, b);
    assert!(dir.path().join("a/ground_truth.json").exists());
    assert!(dir.path().join("a/dataset.csv.features.json").exists());
}

#[test]
fn malformed_generate_config_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    write(&config, r#"{"n_sampels": 100}"#);
    let output = vmbench()
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("n_sampels"), "stderr: {stderr}");
}

#[test]
fn impute_writes_complete_csv_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let gen_config = dir.path().join("gen.json");
    write(&gen_config, TINY_GEN);
    assert!(vmbench()
        .args(["generate", "--config"])
        .arg(&gen_config)
        .arg("--out")
        .arg(dir.path().join("data"))
        .status()
        .unwrap()
        .success());
    let imp_config = dir.path().join("impute.json");
    write(
        &imp_config,
        r#"{"imputer": {"kind": "knn", "params": {"algo": "knn", "k": 3}, "seed": 0}, "split_seed": 1}"#,
    );
    let output = vmbench()
        .args(["impute", "--dataset"])
        .arg(dir.path().join("data/dataset.csv"))
        .arg("--config")
        .arg(&imp_config)
        .arg("--out")
        .arg(dir.path().join("imp"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let csv = std::fs::read_to_string(dir.path().join("imp/imputed.csv")).unwrap();
    // no empty cells anywhere after the header
    for line in csv.lines().skip(1) {
        assert!(!line.split(',').any(str::is_empty), "missing cell: {line}");
    }
    let prov = std::fs::read_to_string(dir.path().join("imp/imputed.provenance.json")).unwrap();
    let prov: serde_json::Value = serde_json::from_str(&prov).unwrap();
    assert_eq!(prov["imputer"]["kind"], "knn");
    assert!(prov["per_feature_imputed"].as_array().unwrap().len() >= 8);
}

#[test]
fn bench_writes_traces_and_failing_cell_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    write(&config, &tiny_bench_config(""));
    let output = vmbench()
        .args(["bench", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("report"))
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let traces: Vec<_> = std::fs::read_dir(dir.path().join("report/traces"))
        .unwrap()
        .collect();
    assert_eq!(traces.len(), 4);

    // now inject one failing cell
    let config2 = dir.path().join("bench_fail.json");
    write(
        &config2,
        &tiny_bench_config(",\n  \"inject_failures\": [\"random:lls:1\"]"),
    );
    let output = vmbench()
        .args(["bench", "--config"])
        .arg(&config2)
        .arg("--out")
        .arg(dir.path().join("report_fail"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let traces: Vec<_> = std::fs::read_dir(dir.path().join("report_fail/traces"))
        .unwrap()
        .collect();
    assert_eq!(traces.len(), 3);
    let manifest =
        std::fs::read_to_string(dir.path().join("report_fail/manifest.json")).unwrap();
    assert!(manifest.contains("injected failure"));
}

#[test]
fn summary_table_matches_trace_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    write(&config, &tiny_bench_config(""));
    let output = vmbench()
        .args(["bench", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("report"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();

    // recompute the (nearest, gradient_boosting) entry from its trace file
    let trace_text =
        std::fs::read_to_string(dir.path().join("report/traces/nearest_gradient_boosting_1.jsonl"))
            .unwrap();
    let mut best_dev = f64::NEG_INFINITY;
    let mut test_at_best = f64::NAN;
    for line in trace_text.lines() {
        let row: serde_json::Value = serde_json::from_str(line).unwrap();
        let dev = row["dev_accuracy"].as_f64().unwrap();
        if dev > best_dev {
            best_dev = dev;
            test_at_best = row["test_accuracy"].as_f64().unwrap();
        }
    }
    let printed = stdout
        .lines()
        .find(|l| l.starts_with("nearest"))
        .expect("nearest row in table");
    let cell = printed.split_whitespace().last().unwrap();
    assert!(
        (cell.parse::<f64>().unwrap() - test_at_best).abs() < 5e-5,
        "table {cell} vs trace {test_at_best}"
    );

    // summary csv carries the exact value
    let summary = std::fs::read_to_string(dir.path().join("report/summary.csv")).unwrap();
    let row = summary
        .lines()
        .find(|l| l.starts_with("nearest,gradient_boosting"))
        .unwrap();
    let exact: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
    assert_eq!(exact, test_at_best);
}

#[test]
fn plot_emits_svg_and_bad_figure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    write(&config, &tiny_bench_config(""));
    assert!(vmbench()
        .args(["bench", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("report"))
        .status()
        .unwrap()
        .success());
    for figure in ["fig2", "fig3", "fig4a", "fig4c"] {
        let out = dir.path().join(format!("{figure}.svg"));
        let output = vmbench()
            .args(["plot", "--report"])
            .arg(dir.path().join("report"))
            .args(["--figure", figure, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{figure}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        let svg = std::fs::read_to_string(&out).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
    }
    // fig4b needs neural-network traces, absent in this tiny config
    let output = vmbench()
        .args(["plot", "--report"])
        .arg(dir.path().join("report"))
        .args(["--figure", "fig4b", "--out"])
        .arg(dir.path().join("fig4b.svg"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));

    let output = vmbench()
        .args(["plot", "--report"])
        .arg(dir.path().join("report"))
        .args(["--figure", "fig9", "--out"])
        .arg(dir.path().join("fig9.svg"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));

    // empty report directory
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let output = vmbench()
        .args(["plot", "--report"])
        .arg(&empty)
        .args(["--figure", "fig2", "--out"])
        .arg(dir.path().join("nope.svg"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn report_tables_print_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    write(&config, &tiny_bench_config(""));
    assert!(vmbench()
        .args(["bench", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("report"))
        .status()
        .unwrap()
        .success());
    for table in ["accuracy_train", "accuracy_test", "mdar", "summary"] {
        let output = vmbench()
            .args(["report", "--report"])
            .arg(dir.path().join("report"))
            .args(["--table", table])
            .output()
            .unwrap();
        assert!(output.status.success(), "table {table}");
        let body = String::from_utf8(output.stdout).unwrap();
        assert!(body.lines().count() > 1, "table {table} empty");
    }
    let output = vmbench()
        .args(["report", "--report"])
        .arg(dir.path().join("report"))
        .args(["--table", "bogus"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn env_var_overrides_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("gen.json");
    write(&config, TINY_GEN);
    let target = dir.path().join("env_target");
    let output = vmbench()
        .env("VMBENCH_OUT_DIR", &target)
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("flag_target"))
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(target.join("dataset.csv").exists());
    assert!(!dir.path().join("flag_target").exists());
}
