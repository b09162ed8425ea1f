//! Single-response partial least squares by NIPALS, with VIP importance.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::scalar::{real, Real};

use super::{FittedParams, RegressError, RegressorSpec, TrainedModel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlsFit<F> {
    pub x_means: Vec<F>,
    pub y_mean: F,
    pub coefficients: Vec<F>,
    pub components_used: usize,
    /// NIPALS stopped early on a zero-norm score vector.
    pub collapsed: bool,
}

impl<F: Real> PlsFit<F> {
    pub fn predict(&self, x: &Matrix<F>) -> Vec<F> {
        (0..x.rows())
            .map(|i| {
                let row = x.row(i);
                let mut pred = self.y_mean;
                for j in 0..row.len() {
                    pred = pred + self.coefficients[j] * (row[j] - self.x_means[j]);
                }
                pred
            })
            .collect()
    }
}

pub(super) fn fit<F: Real>(
    spec: &RegressorSpec,
    x: &Matrix<F>,
    y: &[F],
    feature_ids: &[String],
    n_components: usize,
) -> Result<TrainedModel<F>, RegressError> {
    let n = x.rows();
    let m = x.cols();
    let max_components = n_components.min(n.saturating_sub(1)).min(m);
    if max_components < 1 {
        return Err(RegressError::InvalidSpec(
            "pls needs at least one usable component".into(),
        ));
    }
    let n_f = real::<F>(n as f64);
    let x_means: Vec<F> = (0..m)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<F>() / n_f)
        .collect();
    let y_mean: F = y.iter().copied().sum::<F>() / n_f;

    // working copies, deflated in place
    let mut e = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            e.set(i, j, x.get(i, j) - x_means[j]);
        }
    }
    let mut f_res: Vec<F> = y.iter().map(|&v| v - y_mean).collect();

    let mut w_list: Vec<Vec<F>> = Vec::new();
    let mut p_list: Vec<Vec<F>> = Vec::new();
    let mut q_list: Vec<F> = Vec::new();
    let mut t_norms: Vec<F> = Vec::new();
    let mut collapsed = false;

    let tiny = real::<F>(1e-24);
    for _ in 0..max_components {
        // weight vector: covariance direction of the residuals
        let mut w: Vec<F> = (0..m)
            .map(|j| (0..n).map(|i| e.get(i, j) * f_res[i]).sum())
            .collect();
        let w_norm: F = w.iter().map(|&v| v * v).sum::<F>().sqrt();
        if w_norm * w_norm <= tiny {
            collapsed = true;
            break;
        }
        for v in &mut w {
            *v = *v / w_norm;
        }
        // scores
        let t: Vec<F> = (0..n).map(|i| super::dot(e.row(i), &w)).collect();
        let tt: F = t.iter().map(|&v| v * v).sum();
        if tt <= tiny {
            collapsed = true;
            break;
        }
        // loadings
        let p: Vec<F> = (0..m)
            .map(|j| (0..n).map(|i| e.get(i, j) * t[i]).sum::<F>() / tt)
            .collect();
        let q: F = (0..n).map(|i| f_res[i] * t[i]).sum::<F>() / tt;
        // deflate
        for i in 0..n {
            for j in 0..m {
                let v = e.get(i, j) - t[i] * p[j];
                e.set(i, j, v);
            }
            f_res[i] = f_res[i] - q * t[i];
        }
        w_list.push(w);
        p_list.push(p);
        q_list.push(q);
        t_norms.push(tt);
    }

    let a = w_list.len();
    if a == 0 {
        // degenerate (constant y or x): predict the mean
        let fitp = PlsFit {
            x_means,
            y_mean,
            coefficients: vec![F::zero(); m],
            components_used: 0,
            collapsed: true,
        };
        return Ok(TrainedModel {
            spec: spec.clone(),
            feature_ids: feature_ids.to_vec(),
            params: FittedParams::Pls(fitp),
            importance: Some(super::weight_importance(x, &vec![F::zero(); m])),
        });
    }

    // B = W (P^T W)^{-1} q  with (P^T W) upper triangular in NIPALS
    let mut ptw = vec![vec![F::zero(); a]; a];
    for r in 0..a {
        for c in 0..a {
            ptw[r][c] = super::dot(&p_list[r], &w_list[c]);
        }
    }
    // solve (P^T W) s = q by back substitution from the last component
    let mut s = vec![F::zero(); a];
    for r in (0..a).rev() {
        let mut acc = q_list[r];
        for c in (r + 1)..a {
            acc = acc - ptw[r][c] * s[c];
        }
        let d = ptw[r][r];
        s[r] = if d.abs() > tiny { acc / d } else { F::zero() };
    }
    let mut coefficients = vec![F::zero(); m];
    for (h, w) in w_list.iter().enumerate() {
        for j in 0..m {
            coefficients[j] = coefficients[j] + w[j] * s[h];
        }
    }

    // VIP_j = sqrt(M * sum_h(q_h^2 tt_h (w_jh)^2) / sum_h(q_h^2 tt_h))
    let mut denom = F::zero();
    let mut per_feature = vec![F::zero(); m];
    for h in 0..a {
        let share = q_list[h] * q_list[h] * t_norms[h];
        denom = denom + share;
        for j in 0..m {
            per_feature[j] = per_feature[j] + share * w_list[h][j] * w_list[h][j];
        }
    }
    let importance = if denom > F::zero() {
        let m_f = real::<F>(m as f64);
        let mut vip: Vec<F> = per_feature
            .iter()
            .map(|&v| (m_f * v / denom).sqrt())
            .collect();
        let total: F = vip.iter().copied().sum();
        if total > F::zero() {
            for v in &mut vip {
                *v = *v / total;
            }
        }
        vip
    } else {
        super::weight_importance(x, &vec![F::zero(); m])
    };

    let fitp = PlsFit {
        x_means,
        y_mean,
        coefficients,
        components_used: a,
        collapsed,
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_ids: feature_ids.to_vec(),
        params: FittedParams::Pls(fitp),
        importance: Some(importance),
    })
}
