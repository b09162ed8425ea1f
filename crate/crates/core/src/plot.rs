//! SVG emission for the benchmark figures. Text-based output, deterministic
//! formatting, no graphics runtime.

use std::fmt::Write as _;

use thiserror::Error;

use crate::bench::{cumulative_accuracy, BenchmarkReport, CellOutcome};
use crate::dataset::SplitRole;
use crate::impute::ImputerKind;
use crate::regress::RegressorKind;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("unknown figure {0:?} (expected fig2, fig3, fig4a, fig4b, or fig4c)")]
    UnknownFigure(String),
    #[error("no traces available for {0}")]
    MissingTraces(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Training accuracy vs NIF, one panel per pairing.
    Fig2,
    /// Testing accuracy vs NIF, one panel per pairing.
    Fig3,
    /// Cumulative testing-accuracy plot for the gradient-boosting pairing.
    Fig4a,
    /// Cumulative testing-accuracy plot for the neural-network pairing.
    Fig4b,
    /// MDAR vs NIF for both nonlinear pairings.
    Fig4c,
}

impl std::str::FromStr for Figure {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4a" => Ok(Figure::Fig4a),
            "fig4b" => Ok(Figure::Fig4b),
            "fig4c" => Ok(Figure::Fig4c),
            other => Err(PlotError::UnknownFigure(other.to_string())),
        }
    }
}

fn imputer_color(kind: ImputerKind) -> &'static str {
    match kind {
        ImputerKind::Random => "#d62728",
        ImputerKind::Nearest => "#2ca02c",
        ImputerKind::Knn => "#1f77b4",
        ImputerKind::Arima => "#ff7f0e",
        ImputerKind::RandomForest => "#9467bd",
    }
}

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 48.0;
const MARGIN_B: f64 = 36.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_R: f64 = 12.0;

struct Panel {
    origin_x: f64,
    origin_y: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    log_x: bool,
}

impl Panel {
    fn x(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log_x {
            (v.max(1.0).log10(), self.x_min.max(1.0).log10(), self.x_max.log10())
        } else {
            (v, self.x_min, self.x_max)
        };
        let span = (hi - lo).max(1e-12);
        self.origin_x + MARGIN_L + (v - lo) / span * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        let frac = (v.clamp(self.y_min, self.y_max) - self.y_min) / span;
        self.origin_y + MARGIN_T + (1.0 - frac) * (PANEL_H - MARGIN_T - MARGIN_B)
    }

    fn frame(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let x0 = self.origin_x + MARGIN_L;
        let y0 = self.origin_y + MARGIN_T;
        let x1 = self.origin_x + PANEL_W - MARGIN_R;
        let y1 = self.origin_y + PANEL_H - MARGIN_B;
        let _ = writeln!(
            out,
            "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>",
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>",
            (x0 + x1) / 2.0,
            self.origin_y + 16.0,
            title
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>",
            (x0 + x1) / 2.0,
            y1 + 26.0,
            x_label
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 {:.2} {:.2})\">{}</text>",
            self.origin_x + 12.0,
            (y0 + y1) / 2.0,
            self.origin_x + 12.0,
            (y0 + y1) / 2.0,
            y_label
        );
        // y ticks at quarters
        for k in 0..=4 {
            let v = self.y_min + (self.y_max - self.y_min) * k as f64 / 4.0;
            let py = self.y(v);
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0:.2}\" y2=\"{py:.2}\" stroke=\"#333\" stroke-width=\"1\"/>",
                x0 - 4.0
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"end\" font-family=\"sans-serif\">{v:.2}</text>",
                x0 - 6.0,
                py + 3.0
            );
        }
        // x ticks: powers-of-ten ladder on log axes, quarters otherwise
        if self.log_x {
            for tick in [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0] {
                if tick < self.x_min || tick > self.x_max {
                    continue;
                }
                let px = self.x(tick);
                let _ = writeln!(
                    out,
                    "<line x1=\"{px:.2}\" y1=\"{y1:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#333\" stroke-width=\"1\"/>",
                    y1 + 4.0
                );
                let _ = writeln!(
                    out,
                    "<text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"middle\" font-family=\"sans-serif\">{tick}</text>",
                    y1 + 14.0
                );
            }
        } else {
            for k in 0..=4 {
                let v = self.x_min + (self.x_max - self.x_min) * k as f64 / 4.0;
                let px = self.x(v);
                let _ = writeln!(
                    out,
                    "<line x1=\"{px:.2}\" y1=\"{y1:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#333\" stroke-width=\"1\"/>",
                    y1 + 4.0
                );
                let _ = writeln!(
                    out,
                    "<text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"middle\" font-family=\"sans-serif\">{v:.2}</text>",
                    y1 + 14.0
                );
            }
        }
    }

    fn polyline(&self, out: &mut String, points: &[(f64, f64)], color: &str, dashed: bool) {
        if points.is_empty() {
            return;
        }
        let mut path = String::new();
        for (k, (x, y)) in points.iter().enumerate() {
            let _ = write!(
                path,
                "{}{:.2},{:.2}",
                if k == 0 { "" } else { " " },
                self.x(*x),
                self.y(*y)
            );
        }
        let dash = if dashed { " stroke-dasharray=\"5,3\"" } else { "" };
        let _ = writeln!(
            out,
            "<polyline points=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>"
        );
    }
}

fn legend(out: &mut String, x: f64, y: f64, imputers: &[ImputerKind]) {
    let mut cx = x;
    for &imp in imputers {
        let color = imputer_color(imp);
        let _ = writeln!(
            out,
            "<line x1=\"{cx:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            cx + 18.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" font-family=\"sans-serif\">{imp}</text>",
            cx + 22.0,
            y + 3.0
        );
        cx += 22.0 + 10.0 + 7.0 * imp.name().len() as f64;
    }
}

fn svg_header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>"
    );
}

/// Render one figure from a report.
pub fn render(report: &BenchmarkReport, figure: Figure) -> Result<String, PlotError> {
    match figure {
        Figure::Fig2 => accuracy_panels(report, SplitRole::Train, "training accuracy"),
        Figure::Fig3 => accuracy_panels(report, SplitRole::Test, "testing accuracy"),
        Figure::Fig4a => cdf_figure(report, RegressorKind::GradientBoosting),
        Figure::Fig4b => cdf_figure(report, RegressorKind::NeuralNetwork),
        Figure::Fig4c => mdar_figure(report),
    }
}

fn present_imputers(report: &BenchmarkReport) -> Vec<ImputerKind> {
    let mut imps: Vec<ImputerKind> = report.cells.values().map(|c| c.imputer).collect();
    imps.sort();
    imps.dedup();
    imps
}

fn accuracy_panels(
    report: &BenchmarkReport,
    split: SplitRole,
    y_label: &str,
) -> Result<String, PlotError> {
    let pairings: Vec<RegressorKind> = RegressorKind::ALL
        .into_iter()
        .filter(|k| report.cells.values().any(|c| c.regressor == *k))
        .collect();
    if pairings.is_empty() || report.traces_for_any().is_empty() {
        return Err(PlotError::MissingTraces("any pairing".to_string()));
    }
    let cols = 3usize;
    let rows = pairings.len().div_ceil(cols);
    let width = cols as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H + 24.0;
    let mut out = String::new();
    svg_header(&mut out, width, height);
    legend(&mut out, 8.0, 12.0, &present_imputers(report));

    let max_nif = report
        .cells
        .values()
        .filter_map(|c| match &c.outcome {
            CellOutcome::Trace(t) => t.iterations.first().map(|it| it.nif),
            CellOutcome::Error(_) => None,
        })
        .max()
        .unwrap_or(10) as f64;

    for (idx, &pairing) in pairings.iter().enumerate() {
        let panel = Panel {
            origin_x: (idx % cols) as f64 * PANEL_W,
            origin_y: (idx / cols) as f64 * PANEL_H + 24.0,
            x_min: 1.0,
            x_max: max_nif,
            y_min: 0.0,
            y_max: 1.0,
            log_x: true,
        };
        panel.frame(&mut out, pairing.name(), "NIF (log scale)", y_label);
        for cell in report.cells.values() {
            if cell.regressor != pairing {
                continue;
            }
            let CellOutcome::Trace(trace) = &cell.outcome else {
                continue;
            };
            let points: Vec<(f64, f64)> = trace
                .iterations
                .iter()
                .map(|it| {
                    let acc = match split {
                        SplitRole::Train => it.train_accuracy,
                        SplitRole::Dev => it.dev_accuracy,
                        SplitRole::Test => it.test_accuracy,
                    };
                    (it.nif as f64, acc)
                })
                .collect();
            panel.polyline(&mut out, &points, imputer_color(cell.imputer), false);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn cdf_figure(report: &BenchmarkReport, pairing: RegressorKind) -> Result<String, PlotError> {
    let rows = cumulative_accuracy(report, pairing)
        .map_err(|_| PlotError::MissingTraces(pairing.name().to_string()))?;
    let width = PANEL_W * 1.6;
    let height = PANEL_H * 1.4 + 24.0;
    let mut out = String::new();
    svg_header(&mut out, width, height);
    legend(&mut out, 8.0, 12.0, &present_imputers(report));
    let x_min = rows.iter().map(|r| r.accuracy).fold(f64::INFINITY, f64::min);
    let x_max = rows
        .iter()
        .map(|r| r.accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    let panel = BigPanel::new(width, height - 24.0, 24.0, x_min, x_max.max(x_min + 1e-6));
    panel.0.frame(
        &mut out,
        &format!("cumulative testing accuracy: {pairing}"),
        "testing accuracy",
        "cumulative fraction",
    );
    let mut imputers: Vec<ImputerKind> = rows.iter().map(|r| r.imputer).collect();
    imputers.sort();
    imputers.dedup();
    for imp in imputers {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.imputer == imp)
            .map(|r| (r.accuracy, r.cumulative_fraction))
            .collect();
        panel.0.polyline(&mut out, &points, imputer_color(imp), false);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// A panel stretched to a custom size (the single-panel figures).
struct BigPanel(Panel);

impl BigPanel {
    fn new(width: f64, height: f64, top: f64, x_min: f64, x_max: f64) -> Self {
        // reuse Panel by pretending the canvas is one big panel
        let scale_x = width / PANEL_W;
        let scale_y = height / PANEL_H;
        let _ = (scale_x, scale_y);
        BigPanel(Panel {
            origin_x: (width - PANEL_W * 1.5) / 2.0,
            origin_y: top + (height - PANEL_H * 1.3) / 2.0,
            x_min,
            x_max,
            y_min: 0.0,
            y_max: 1.0,
            log_x: false,
        })
    }
}

fn mdar_figure(report: &BenchmarkReport) -> Result<String, PlotError> {
    let rows = crate::bench::mdar_vs_nif(report)
        .map_err(|_| PlotError::MissingTraces("nonlinear pairings".to_string()))?;
    let width = PANEL_W * 1.6;
    let height = PANEL_H * 1.4 + 24.0;
    let mut out = String::new();
    svg_header(&mut out, width, height);
    legend(&mut out, 8.0, 12.0, &present_imputers(report));
    let max_nif = rows.iter().map(|r| r.nif).max().unwrap_or(10) as f64;
    let panel = Panel {
        origin_x: (width - PANEL_W) / 2.0,
        origin_y: 24.0 + (height - 24.0 - PANEL_H) / 2.0,
        x_min: 1.0,
        x_max: max_nif,
        y_min: 0.0,
        y_max: 1.0,
        log_x: true,
    };
    panel.frame(
        &mut out,
        "MDAR vs NIF (solid: gradient_boosting, dashed: neural_network)",
        "NIF (log scale)",
        "MDAR",
    );
    let mut series: Vec<(RegressorKind, ImputerKind, u64)> = rows
        .iter()
        .map(|r| (r.pairing, r.imputer, r.seed))
        .collect();
    series.sort();
    series.dedup();
    for (pairing, imputer, seed) in series {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.pairing == pairing && r.imputer == imputer && r.seed == seed)
            .map(|r| (r.nif as f64, r.mdar))
            .collect();
        panel.polyline(
            &mut out,
            &points,
            imputer_color(imputer),
            pairing == RegressorKind::NeuralNetwork,
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

impl BenchmarkReport {
    /// All successful traces regardless of pairing.
    pub(crate) fn traces_for_any(&self) -> Vec<&crate::select::SelectionTrace> {
        self.cells
            .values()
            .filter_map(|c| match &c.outcome {
                CellOutcome::Trace(t) => Some(t),
                CellOutcome::Error(_) => None,
            })
            .collect()
    }
}
