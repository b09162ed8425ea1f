//! Command-line driver: dataset generation, single imputations, the full
//! cross-benchmark, analysis exports, and figure emission.
//!
//! Exit codes: 0 success, 2 config error, 3 partial benchmark failure,
//! 4 analysis or plot error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vmbench::bench::{self, BenchConfig, BenchmarkReport, CellOutcome};
use vmbench::datagen::{self, GeneratorConfig};
use vmbench::dataset::{self, SplitStrategy};
use vmbench::impute::{impute, ImputerSpec};
use vmbench::plot::Figure;
use vmbench::regress::RegressorKind;

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_ANALYSIS: u8 = 4;

#[derive(Parser)]
#[command(
    name = "vmbench",
    about = "Virtual-metrology benchmark: imputation x feature selection x regression",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic FDC dataset with known ground truth.
    Generate {
        /// Generator config (JSON). Omitted fields default to the
        /// desk-scale production profile.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (env VMBENCH_OUT_DIR overrides).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Impute one dataset with one imputer and write the completed CSV.
    Impute {
        /// Dataset CSV (with its .features.json sidecar next to it).
        #[arg(long)]
        dataset: PathBuf,
        /// Impute config (JSON: imputer spec plus split settings).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the full imputer x regressor cross-benchmark.
    Bench {
        /// Benchmark config (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render one figure from a benchmark report directory.
    Plot {
        #[arg(long)]
        report: PathBuf,
        /// One of fig2, fig3, fig4a, fig4b, fig4c.
        #[arg(long)]
        figure: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print analysis tables from a benchmark report directory.
    Report {
        #[arg(long)]
        report: PathBuf,
        /// accuracy_train, accuracy_test, mdar, cumulative_gb,
        /// cumulative_nn, or summary.
        #[arg(long, default_value = "summary")]
        table: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { config, out } => cmd_generate(config.as_deref(), &out_dir(out)),
        Command::Impute {
            dataset,
            config,
            out,
        } => cmd_impute(&dataset, &config, &out_dir(out)),
        Command::Bench { config, out } => cmd_bench(&config, &out_dir(out)),
        Command::Plot {
            report,
            figure,
            out,
        } => cmd_plot(&report, &figure, &out),
        Command::Report { report, table } => cmd_report(&report, &table),
    }
}

fn out_dir(flag: PathBuf) -> PathBuf {
    match std::env::var("VMBENCH_OUT_DIR") {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => flag,
    }
}

fn config_fail(context: &str, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error ({context}): {err}");
    ExitCode::from(EXIT_CONFIG)
}

fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_generate(config: Option<&Path>, out: &Path) -> ExitCode {
    let gen_config: GeneratorConfig = match config {
        Some(path) => match read_json_config(path) {
            Ok(c) => c,
            Err(e) => return config_fail("generate", e),
        },
        None => datagen::paper_profile(),
    };
    if let Err(e) = gen_config.validate() {
        return config_fail("generate", e);
    }
    let (ds, truth) = match datagen::generate::<f64>(&gen_config) {
        Ok(v) => v,
        Err(e) => return config_fail("generate", e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return config_fail("generate", e);
    }
    let csv_path = out.join("dataset.csv");
    if let Err(e) = dataset::write_csv(&ds, &csv_path) {
        return config_fail("generate", e);
    }
    let truth_json = serde_json::to_string_pretty(&truth).expect("truth serializes");
    if let Err(e) = std::fs::write(out.join("ground_truth.json"), truth_json) {
        return config_fail("generate", e);
    }
    let config_json = serde_json::to_string_pretty(&gen_config).expect("config serializes");
    if let Err(e) = std::fs::write(out.join("generator_config.json"), config_json) {
        return config_fail("generate", e);
    }

    let hist = dataset::missingness_histogram(&ds, 10);
    println!(
        "wrote {} ({} samples x {} features) and ground_truth.json",
        csv_path.display(),
        ds.n_samples(),
        ds.n_features()
    );
    println!("missingness histogram (availability ratio -> feature count):");
    for (k, count) in hist.counts.iter().enumerate() {
        println!(
            "  [{:.1}, {:.1}{}  {count}",
            hist.bin_edges[k],
            hist.bin_edges[k + 1],
            if k + 1 == hist.counts.len() { "]" } else { ")" },
        );
    }
    ExitCode::SUCCESS
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ImputeConfig {
    imputer: ImputerSpec,
    #[serde(default = "default_split_strategy")]
    split_strategy: SplitStrategy,
    #[serde(default)]
    split_seed: u64,
}

fn default_split_strategy() -> SplitStrategy {
    SplitStrategy::Random
}

fn cmd_impute(dataset_path: &Path, config_path: &Path, out: &Path) -> ExitCode {
    let config: ImputeConfig = match read_json_config(config_path) {
        Ok(c) => c,
        Err(e) => return config_fail("impute", e),
    };
    if let Err(e) = config.imputer.validate() {
        return config_fail("impute", e);
    }
    let ds: vmbench::Dataset64 = match dataset::read_csv(dataset_path) {
        Ok(d) => d,
        Err(e) => return config_fail("impute", e),
    };
    let assignment = match dataset::split(&ds, config.split_strategy, config.split_seed) {
        Ok(a) => a,
        Err(e) => return config_fail("impute", e),
    };
    let encoded = dataset::encode_categoricals(&ds, &assignment);
    let (prepared, _) = dataset::normalize(&encoded, &assignment);
    let imputed = match impute(&prepared, &assignment, &config.imputer) {
        Ok(i) => i,
        Err(e) => return config_fail("impute", e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return config_fail("impute", e);
    }
    let mut complete = prepared.clone();
    complete.values = imputed.values.clone();
    complete.mask = vmbench::matrix::Mask::filled(ds.n_samples(), complete.n_features(), true);
    if let Err(e) = dataset::write_csv(&complete, &out.join("imputed.csv")) {
        return config_fail("impute", e);
    }
    let provenance = serde_json::json!({
        "imputer": imputed.imputer,
        "seed": imputed.imputer.seed,
        "flags": imputed.flags,
        "per_feature_imputed": imputed.per_feature_imputed,
        "feature_ids": prepared.feature_ids(),
    });
    if let Err(e) = std::fs::write(
        out.join("imputed.provenance.json"),
        serde_json::to_string_pretty(&provenance).expect("provenance serializes"),
    ) {
        return config_fail("impute", e);
    }
    println!(
        "imputed {} cells across {} features -> {}",
        imputed.per_feature_imputed.iter().sum::<usize>(),
        complete.n_features(),
        out.join("imputed.csv").display()
    );
    ExitCode::SUCCESS
}

fn cmd_bench(config_path: &Path, out: &Path) -> ExitCode {
    let mut config: BenchConfig = match read_json_config(config_path) {
        Ok(c) => c,
        Err(e) => return config_fail("bench", e),
    };
    if let Ok(par) = std::env::var("VMBENCH_PARALLELISM") {
        match par.parse::<usize>() {
            Ok(p) if p >= 1 => config.parallelism = p,
            _ => return config_fail("bench", "VMBENCH_PARALLELISM must be a positive integer"),
        }
    }
    let started = std::time::Instant::now();
    let report = match bench::run_benchmark::<f64>(&config) {
        Ok(r) => r,
        Err(e) => return config_fail("bench", e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return config_fail("bench", e);
    }
    if let Err(e) = bench::write_report(&report, out) {
        return config_fail("bench", e);
    }
    println!(
        "benchmark finished in {:.1}s, report in {}",
        started.elapsed().as_secs_f64(),
        out.display()
    );
    print_summary_table(&report);

    if report.error_cells().is_empty() {
        ExitCode::SUCCESS
    } else {
        for cell in report.error_cells() {
            let CellOutcome::Error(e) = &cell.outcome else {
                continue;
            };
            eprintln!(
                "cell {} failed: {e}",
                bench::cell_key(cell.imputer, cell.regressor, cell.seed)
            );
        }
        ExitCode::from(EXIT_PARTIAL)
    }
}

/// Per-cell best-dev test accuracies, imputers as rows, regressors as
/// columns, averaged over seeds.
fn print_summary_table(report: &BenchmarkReport) {
    let rows = bench::summary(report);
    let mut imputers: Vec<_> = rows.iter().map(|r| r.imputer).collect();
    imputers.sort();
    imputers.dedup();
    let mut regressors: Vec<_> = rows.iter().map(|r| r.regressor).collect();
    regressors.sort_by_key(|k| RegressorKind::ALL.iter().position(|a| a == k));
    regressors.dedup();

    print!("{:<14}", "imputer");
    for reg in &regressors {
        print!("{:>19}", reg.name());
    }
    println!();
    for imp in imputers {
        print!("{:<14}", imp.name());
        for reg in &regressors {
            let cells: Vec<&bench::SummaryRow> = rows
                .iter()
                .filter(|r| r.imputer == imp && r.regressor == *reg)
                .collect();
            let ok: Vec<f64> = cells
                .iter()
                .filter(|r| r.error.is_none())
                .map(|r| r.test_accuracy_at_best_dev)
                .collect();
            if ok.is_empty() {
                print!("{:>19}", "err");
            } else {
                let mean = ok.iter().sum::<f64>() / ok.len() as f64;
                print!("{mean:>19.4}");
            }
        }
        println!();
    }
}

fn cmd_plot(report_dir: &Path, figure: &str, out: &Path) -> ExitCode {
    let figure: Figure = match figure.parse() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("plot error: {e}");
            return ExitCode::from(EXIT_ANALYSIS);
        }
    };
    let report = match bench::read_report(report_dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("plot error: {e}");
            return ExitCode::from(EXIT_ANALYSIS);
        }
    };
    let svg = match vmbench::plot::render(&report, figure) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("plot error: {e}");
            return ExitCode::from(EXIT_ANALYSIS);
        }
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            if let Err(e) = std::fs::create_dir_all(parent) {
                eprintln!("plot error: {e}");
                return ExitCode::from(EXIT_ANALYSIS);
            }
        }
    }
    if let Err(e) = std::fs::write(out, svg) {
        eprintln!("plot error: {e}");
        return ExitCode::from(EXIT_ANALYSIS);
    }
    println!("wrote {}", out.display());
    ExitCode::SUCCESS
}

fn cmd_report(report_dir: &Path, table: &str) -> ExitCode {
    let report = match bench::read_report(report_dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("report error: {e}");
            return ExitCode::from(EXIT_ANALYSIS);
        }
    };
    let result: Result<String, String> = match table {
        "accuracy_train" => Ok(accuracy_csv(&report, vmbench::dataset::SplitRole::Train)),
        "accuracy_test" => Ok(accuracy_csv(&report, vmbench::dataset::SplitRole::Test)),
        "mdar" => bench::mdar_vs_nif(&report)
            .map(|rows| {
                let mut csv = String::from("pairing,imputer,seed,nif,mdar\n");
                for r in rows {
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        r.pairing, r.imputer, r.seed, r.nif, r.mdar
                    ));
                }
                csv
            })
            .map_err(|e| e.to_string()),
        "cumulative_gb" | "cumulative_nn" => {
            let kind = if table == "cumulative_gb" {
                RegressorKind::GradientBoosting
            } else {
                RegressorKind::NeuralNetwork
            };
            bench::cumulative_accuracy(&report, kind)
                .map(|rows| {
                    let mut csv = String::from("imputer,accuracy,cumulative_fraction\n");
                    for r in rows {
                        csv.push_str(&format!(
                            "{},{},{}\n",
                            r.imputer, r.accuracy, r.cumulative_fraction
                        ));
                    }
                    csv
                })
                .map_err(|e| e.to_string())
        }
        "summary" => {
            let mut csv = String::from(
                "imputer,regressor,seed,best_dev_nif,best_dev_accuracy,test_accuracy_at_best_dev,error\n",
            );
            for r in bench::summary(&report) {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.imputer,
                    r.regressor,
                    r.seed,
                    r.best_dev_nif,
                    r.best_dev_accuracy,
                    r.test_accuracy_at_best_dev,
                    r.error.unwrap_or_default()
                ));
            }
            Ok(csv)
        }
        other => Err(format!(
            "unknown table {other:?} (expected accuracy_train, accuracy_test, mdar, cumulative_gb, cumulative_nn, or summary)"
        )),
    };
    match result {
        Ok(csv) => {
            print!("{csv}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("report error: {e}");
            ExitCode::from(EXIT_ANALYSIS)
        }
    }
}

fn accuracy_csv(report: &BenchmarkReport, split: vmbench::dataset::SplitRole) -> String {
    let mut csv = String::from("pairing,imputer,seed,nif,accuracy\n");
    for r in bench::accuracy_vs_nif(report, split) {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.pairing, r.imputer, r.seed, r.nif, r.accuracy
        ));
    }
    csv
}
