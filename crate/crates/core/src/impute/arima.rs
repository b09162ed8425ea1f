//! Per-(tool, sensor) ARIMA imputation.
//!
//! Gaps are bridged by linear interpolation to get a provisional series,
//! orders are selected by AIC over a small grid, parameters come from the
//! Hannan-Rissanen two-stage regression (long-AR residual proxy, then least
//! squares), and missing positions take the fitted one-step-ahead value.
//! Short or degenerate series fall back to last-observation filling.

use crate::dataset::{FdcDataset, SplitAssignment, SplitRole};
use crate::linalg::least_squares;
use crate::matrix::Matrix;
use crate::scalar::{real, Real};

use super::{nearest::fill_series, ImputeFlags};

const MIN_OBSERVATIONS: usize = 10;

struct ArmaFit {
    d: usize,
    p: usize,
    q: usize,
    intercept: f64,
    ar: Vec<f64>,
    ma: Vec<f64>,
}

pub(super) fn run<F: Real>(
    work: &FdcDataset<F>,
    assignment: &SplitAssignment,
    max_p: usize,
    max_d: usize,
    max_q: usize,
    flags: &mut ImputeFlags,
) -> Matrix<F> {
    let mut values = work.values.clone();
    let tools = work.tools();
    for j in 0..work.n_features() {
        let median = super::training_median(work, assignment, j);
        for tool in &tools {
            let series = work.tool_series(tool);
            let obs: Vec<bool> = series.iter().map(|&i| work.mask.is_observed(i, j)).collect();
            if obs.iter().all(|&o| o) {
                continue;
            }
            let vals: Vec<F> = series.iter().map(|&i| work.values.get(i, j)).collect();
            let filled = impute_series(
                &vals,
                &obs,
                &series,
                assignment,
                median,
                max_p,
                max_d,
                max_q,
                flags,
            );
            for (k, &i) in series.iter().enumerate() {
                if !obs[k] {
                    values.set(i, j, filled[k]);
                }
            }
        }
    }
    values
}

#[allow(clippy::too_many_arguments)]
fn impute_series<F: Real>(
    vals: &[F],
    obs: &[bool],
    sample_ids: &[usize],
    assignment: &SplitAssignment,
    median: F,
    max_p: usize,
    max_d: usize,
    max_q: usize,
    flags: &mut ImputeFlags,
) -> Vec<F> {
    let n_obs = obs.iter().filter(|&&o| o).count();
    let fallback = |flags: &mut ImputeFlags| -> Vec<F> {
        flags.fallback_series += 1;
        fill_series(vals, obs, median)
    };
    if n_obs < MIN_OBSERVATIONS {
        return fallback(flags);
    }

    let provisional = interpolate(vals, obs);

    // estimation window: the series prefix up to the last training sample,
    // keeping the time structure contiguous
    let window_end = (0..sample_ids.len())
        .rev()
        .find(|&k| assignment.roles[sample_ids[k]] == SplitRole::Train);
    let Some(window_end) = window_end else {
        return fallback(flags);
    };
    let window = &provisional[..=window_end];
    if window.len() < MIN_OBSERVATIONS {
        return fallback(flags);
    }

    let Some(fit) = select_order(window, max_p, max_d, max_q) else {
        return fallback(flags);
    };

    let predictions = one_step_predictions(&provisional, &fit);
    let mut filled: Vec<F> = provisional.iter().map(|&v| real(v)).collect();
    for k in 0..filled.len() {
        if !obs[k] {
            if let Some(p) = predictions[k] {
                if p.is_finite() {
                    filled[k] = real(p);
                }
            }
        }
    }
    filled
}

/// Linear interpolation between observed anchors; flat extension at the ends.
fn interpolate<F: Real>(vals: &[F], obs: &[bool]) -> Vec<f64> {
    let len = vals.len();
    let mut out = vec![0.0f64; len];
    let anchors: Vec<usize> = (0..len).filter(|&k| obs[k]).collect();
    let first = anchors[0];
    let last = *anchors.last().unwrap();
    let mut next_anchor = 0usize;
    for k in 0..len {
        if k <= first {
            out[k] = vals[first].to_report();
            continue;
        }
        if k >= last {
            out[k] = vals[last].to_report();
            continue;
        }
        if obs[k] {
            out[k] = vals[k].to_report();
            while anchors[next_anchor] <= k {
                next_anchor += 1;
            }
            continue;
        }
        while anchors[next_anchor] <= k {
            next_anchor += 1;
        }
        let b = anchors[next_anchor];
        let a = anchors[next_anchor - 1];
        let va = vals[a].to_report();
        let vb = vals[b].to_report();
        out[k] = va + (vb - va) * (k - a) as f64 / (b - a) as f64;
    }
    out
}

fn difference(series: &[f64], d: usize) -> Vec<f64> {
    let mut w = series.to_vec();
    for _ in 0..d {
        w = w.windows(2).map(|pair| pair[1] - pair[0]).collect();
    }
    w
}

fn select_order(window: &[f64], max_p: usize, max_d: usize, max_q: usize) -> Option<ArmaFit> {
    let mut best: Option<(f64, ArmaFit)> = None;
    for d in 0..=max_d {
        if window.len() <= d + 8 {
            continue;
        }
        let w = difference(window, d);
        // long-AR residual proxies, one per proxy order actually needed
        let mut residual_cache: Vec<Option<Option<Vec<f64>>>> = vec![None; 2 * (max_p + max_q) + 9];
        for p in 0..=max_p {
            for q in 0..=max_q {
                let residuals = if q == 0 {
                    None
                } else {
                    let l = (2 * (p + q)).max(8).min((w.len() - 1) / 3);
                    if l == 0 {
                        continue;
                    }
                    let slot = residual_cache[l].get_or_insert_with(|| long_ar_residuals(&w, l));
                    match slot {
                        Some(r) => Some((l, r.clone())),
                        None => continue,
                    }
                };
                if let Some((aic, fit)) = fit_candidate(&w, d, p, q, residuals.as_ref()) {
                    let better = match &best {
                        None => true,
                        Some((best_aic, _)) => aic < *best_aic,
                    };
                    if better {
                        best = Some((aic, fit));
                    }
                }
            }
        }
    }
    best.map(|(_, fit)| fit)
}

/// Residuals of an AR(l) least-squares fit, index-aligned with `w`
/// (entries before `l` are zero).
fn long_ar_residuals(w: &[f64], l: usize) -> Option<Vec<f64>> {
    let rows = w.len().checked_sub(l)?;
    if rows < l + 2 {
        return None;
    }
    let mut design = Vec::with_capacity(rows);
    let mut target = Vec::with_capacity(rows);
    for t in l..w.len() {
        let mut row = Vec::with_capacity(l + 1);
        row.push(1.0);
        for i in 1..=l {
            row.push(w[t - i]);
        }
        design.push(row);
        target.push(w[t]);
    }
    let x = Matrix::from_rows(&design);
    let coefs = least_squares(&x, &target, 1e-10);
    if coefs.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let mut residuals = vec![0.0; w.len()];
    for t in l..w.len() {
        let mut pred = coefs[0];
        for i in 1..=l {
            pred += coefs[i] * w[t - i];
        }
        residuals[t] = w[t] - pred;
    }
    Some(residuals)
}

fn fit_candidate(
    w: &[f64],
    d: usize,
    p: usize,
    q: usize,
    residuals: Option<&(usize, Vec<f64>)>,
) -> Option<(f64, ArmaFit)> {
    let start = match residuals {
        Some((l, _)) => p.max(l + q),
        None => p,
    };
    let params = 1 + p + q;
    if w.len() <= start || w.len() - start < params + 4 {
        return None;
    }
    let rows = w.len() - start;
    let mut design = Vec::with_capacity(rows);
    let mut target = Vec::with_capacity(rows);
    for t in start..w.len() {
        let mut row = Vec::with_capacity(params);
        row.push(1.0);
        for i in 1..=p {
            row.push(w[t - i]);
        }
        if let Some((_, e)) = residuals {
            for jj in 1..=q {
                row.push(e[t - jj]);
            }
        }
        design.push(row);
        target.push(w[t]);
    }
    let x = Matrix::from_rows(&design);
    let coefs = least_squares(&x, &target, 1e-10);
    if coefs.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let mut rss = 0.0;
    for (row, &t) in design.iter().zip(&target) {
        let pred: f64 = row.iter().zip(&coefs).map(|(a, b)| a * b).sum();
        rss += (t - pred) * (t - pred);
    }
    let sigma2 = (rss / rows as f64).max(1e-12);
    if !sigma2.is_finite() {
        return None;
    }
    let aic = rows as f64 * sigma2.ln() + 2.0 * (p + q + 1) as f64;
    let fit = ArmaFit {
        d,
        p,
        q,
        intercept: coefs[0],
        ar: coefs[1..=p].to_vec(),
        ma: coefs[p + 1..].to_vec(),
    };
    Some((aic, fit))
}

/// One-step-ahead level predictions over the provisional series.
/// `None` where the model lags extend past the start of the series.
fn one_step_predictions(provisional: &[f64], fit: &ArmaFit) -> Vec<Option<f64>> {
    let len = provisional.len();
    let w = difference(provisional, fit.d);
    let p = fit.p;
    let q = fit.q;
    let mut e = vec![0.0f64; w.len()];
    let mut w_pred = vec![None::<f64>; w.len()];
    for t in 0..w.len() {
        if t < p {
            continue;
        }
        let mut pred = fit.intercept;
        for i in 1..=p {
            pred += fit.ar[i - 1] * w[t - i];
        }
        for jj in 1..=q {
            if t >= jj {
                pred += fit.ma[jj - 1] * e[t - jj];
            }
        }
        w_pred[t] = Some(pred);
        e[t] = w[t] - pred;
    }

    // invert the differencing with provisional values for the lags
    let mut out = vec![None::<f64>; len];
    for s in 0..len {
        if s < fit.d {
            continue;
        }
        let t = s - fit.d;
        let Some(wp) = w_pred[t] else { continue };
        let mut level = wp;
        let mut binom = 1.0f64;
        for r in 1..=fit.d {
            binom = binom * (fit.d - r + 1) as f64 / r as f64;
            let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
            level += sign * binom * provisional[s - r];
        }
        out[s] = Some(level);
    }
    out
}
