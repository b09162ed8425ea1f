//! Synthetic FDC dataset generator with known ground truth: planted
//! informative features, per-tool AR(1) sensor drift, a categorical tool
//! effect, and a configurable missingness profile.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FdcDataset, FeatureMeta};
use crate::matrix::{Mask, Matrix};
use crate::scalar::{real, Real};
use crate::seeding::rng_for;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Linear,
    Interactions,
    InteractionsPlusThresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Mcar,
    ToolBlock,
}

/// One missingness group: a fraction of the features held at one availability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileGroup {
    pub feature_fraction: f64,
    pub availability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(default = "defaults::n_samples")]
    pub n_samples: usize,
    #[serde(default = "defaults::n_features")]
    pub n_features: usize,
    #[serde(default = "defaults::n_informative")]
    pub n_informative: usize,
    #[serde(default = "defaults::n_tools")]
    pub n_tools: usize,
    #[serde(default = "defaults::nonlinearity")]
    pub nonlinearity: Nonlinearity,
    #[serde(default = "defaults::missingness_profile")]
    pub missingness_profile: Vec<ProfileGroup>,
    #[serde(default = "defaults::mechanism")]
    pub missingness_mechanism: Mechanism,
    #[serde(default = "defaults::drift_strength")]
    pub drift_strength: f64,
    #[serde(default = "defaults::noise_std")]
    pub noise_std: f64,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
}

mod defaults {
    use super::{Mechanism, Nonlinearity, ProfileGroup};

    pub fn n_samples() -> usize {
        2000
    }
    pub fn n_features() -> usize {
        200
    }
    pub fn n_informative() -> usize {
        10
    }
    pub fn n_tools() -> usize {
        4
    }
    pub fn nonlinearity() -> Nonlinearity {
        Nonlinearity::Interactions
    }
    pub fn missingness_profile() -> Vec<ProfileGroup> {
        vec![
            ProfileGroup {
                feature_fraction: 0.70,
                availability: 0.50,
            },
            ProfileGroup {
                feature_fraction: 0.216,
                availability: 0.75,
            },
            ProfileGroup {
                feature_fraction: 0.084,
                availability: 0.97,
            },
        ]
    }
    pub fn mechanism() -> Mechanism {
        Mechanism::Mcar
    }
    pub fn drift_strength() -> f64 {
        1.0
    }
    pub fn noise_std() -> f64 {
        0.2
    }
    pub fn seed() -> u64 {
        1
    }
}

/// Desk-scale analog of the production data's availability profile:
/// most features near 50% availability, a small group above 95%.
pub fn paper_profile() -> GeneratorConfig {
    GeneratorConfig {
        n_samples: defaults::n_samples(),
        n_features: defaults::n_features(),
        n_informative: defaults::n_informative(),
        n_tools: defaults::n_tools(),
        nonlinearity: defaults::nonlinearity(),
        missingness_profile: defaults::missingness_profile(),
        missingness_mechanism: defaults::mechanism(),
        drift_strength: defaults::drift_strength(),
        noise_std: defaults::noise_std(),
        seed: defaults::seed(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub informative_ids: Vec<String>,
    pub target_function: String,
    /// Var(signal) / Var(signal + noise) over the generated samples.
    pub achievable_r2: f64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let fail = |msg: String| Err(GenError::InvalidConfig(msg));
        if self.n_samples == 0 || self.n_features == 0 || self.n_tools == 0 {
            return fail("n_samples, n_features, n_tools must all be >= 1".into());
        }
        if self.n_informative > self.continuous_features() {
            return fail(format!(
                "n_informative {} exceeds the {} continuous features",
                self.n_informative,
                self.continuous_features()
            ));
        }
        let frac_sum: f64 = self.missingness_profile.iter().map(|g| g.feature_fraction).sum();
        if self.missingness_profile.is_empty() || (frac_sum - 1.0).abs() > 1e-9 {
            return fail(format!(
                "missingness_profile fractions must sum to 1, got {frac_sum}"
            ));
        }
        for g in &self.missingness_profile {
            if !(0.0..=1.0).contains(&g.availability) || g.feature_fraction < 0.0 {
                return fail("availability ratios must lie in [0, 1]".into());
            }
        }
        if self.drift_strength < 0.0 {
            return fail("drift_strength must be >= 0".into());
        }
        if self.noise_std < 0.0 {
            return fail("noise_std must be >= 0".into());
        }
        Ok(())
    }

    /// A categorical tool-code column takes the last slot when several tools exist.
    fn continuous_features(&self) -> usize {
        if self.n_tools >= 2 {
            self.n_features.saturating_sub(1)
        } else {
            self.n_features
        }
    }

    /// AR(1) coefficient of the sensor traces.
    pub fn ar_coefficient(&self) -> f64 {
        (self.drift_strength / (0.5 + self.drift_strength)).min(0.98)
    }
}

/// Group sizes by largest remainder so they sum exactly to `total`.
fn allocate_groups(fractions: &[f64], total: usize) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut leftover = total - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &g in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        sizes[g] += 1;
        leftover -= 1;
    }
    sizes
}

pub fn generate<F: Real>(
    config: &GeneratorConfig,
) -> Result<(FdcDataset<F>, GroundTruth), GenError> {
    config.validate()?;
    let n = config.n_samples;
    let m = config.n_features;
    let nc = config.continuous_features();
    let n_tools = config.n_tools;
    let phi = config.ar_coefficient();
    let innovation = (1.0 - phi * phi).sqrt();

    let tool_of: Vec<usize> = (0..n).map(|i| i % n_tools).collect();
    let tool_positions: Vec<Vec<usize>> = (0..n_tools)
        .map(|t| (0..n).filter(|&i| tool_of[i] == t).collect())
        .collect();

    // per-feature location/scale and per-tool level shifts
    let mut param_rng = rng_for(config.seed, "gen-feature-params", 0);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let means: Vec<f64> = (0..nc).map(|_| param_rng.random::<f64>() * 10.0).collect();
    let stds: Vec<f64> = (0..nc).map(|_| 0.5 + 1.5 * param_rng.random::<f64>()).collect();
    let tool_shifts: Vec<Vec<f64>> = (0..nc)
        .map(|j| {
            (0..n_tools)
                .map(|_| normal.sample(&mut param_rng) * 0.3 * stds[j])
                .collect()
        })
        .collect();

    // latent traces, one per (feature, tool): an AR(1) process with the
    // drift-derived coefficient plus a piecewise-constant setpoint level
    // (recipe changes), whose amplitude also scales with drift_strength
    let regime_std = config.drift_strength.min(1.0);
    let regime_jump_prob = 1.0 / 60.0;
    let mut latent = Matrix::<f64>::zeros(n, nc);
    for j in 0..nc {
        let mut trace_rng = rng_for(config.seed, "gen-trace", j as u64);
        for positions in tool_positions.iter() {
            let mut state = normal.sample(&mut trace_rng);
            let mut level = normal.sample(&mut trace_rng) * regime_std;
            for (k, &i) in positions.iter().enumerate() {
                if k > 0 {
                    state = phi * state + innovation * normal.sample(&mut trace_rng);
                    if trace_rng.random::<f64>() < regime_jump_prob {
                        level = normal.sample(&mut trace_rng) * regime_std;
                    }
                }
                latent.set(i, j, state + level);
            }
        }
    }

    // planted signal
    let mut plant_rng = rng_for(config.seed, "gen-informative", 0);
    let informative: Vec<usize> = {
        let mut chosen =
            rand::seq::index::sample(&mut plant_rng, nc, config.n_informative).into_vec();
        chosen.sort_unstable();
        chosen
    };
    let rand_sign = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        if rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    };
    let lin_weights: Vec<f64> = informative
        .iter()
        .map(|_| (0.5 + plant_rng.random::<f64>()) * rand_sign(&mut plant_rng))
        .collect();
    let n_inf = informative.len();
    let pair_weights: Vec<f64> = (0..n_inf)
        .map(|_| (0.8 + 0.8 * plant_rng.random::<f64>()) * rand_sign(&mut plant_rng))
        .collect();
    let threshold_weights: Vec<f64> = (0..n_inf)
        .map(|_| (0.8 + 0.8 * plant_rng.random::<f64>()) * rand_sign(&mut plant_rng))
        .collect();
    let tool_offsets: Vec<f64> = (0..n_tools)
        .map(|_| plant_rng.random::<f64>() - 0.5)
        .collect();

    let mut noise_rng = rng_for(config.seed, "gen-noise", 0);
    let mut signal = vec![0.0f64; n];
    let mut target = vec![0.0f64; n];
    for i in 0..n {
        let mut s = 0.0;
        for (k, &j) in informative.iter().enumerate() {
            s += lin_weights[k] * latent.get(i, j);
        }
        if matches!(
            config.nonlinearity,
            Nonlinearity::Interactions | Nonlinearity::InteractionsPlusThresholds
        ) && n_inf >= 2
        {
            for k in 0..n_inf {
                let a = informative[k];
                let b = informative[(k + 1) % n_inf];
                s += pair_weights[k] * latent.get(i, a) * latent.get(i, b);
            }
        }
        if config.nonlinearity == Nonlinearity::InteractionsPlusThresholds {
            for (k, &j) in informative.iter().enumerate() {
                if latent.get(i, j) > 0.5 {
                    s += threshold_weights[k];
                }
            }
        }
        s += tool_offsets[tool_of[i]];
        signal[i] = s;
        target[i] = s + config.noise_std * normal.sample(&mut noise_rng);
    }

    let sig_mean = signal.iter().sum::<f64>() / n as f64;
    let sig_var = signal.iter().map(|v| (v - sig_mean).powi(2)).sum::<f64>() / n as f64;
    let noise_var = config.noise_std * config.noise_std;
    let achievable_r2 = if sig_var + noise_var > 0.0 {
        sig_var / (sig_var + noise_var)
    } else {
        0.0
    };

    // assemble observed values
    let mut values = Matrix::<F>::zeros(n, m);
    let mut feature_meta = Vec::with_capacity(m);
    for j in 0..nc {
        feature_meta.push(FeatureMeta::continuous(format!("f{j:03}")));
        for i in 0..n {
            let raw = means[j] + tool_shifts[j][tool_of[i]] + stds[j] * latent.get(i, j);
            values.set(i, j, real(raw));
        }
    }
    if nc < m {
        feature_meta.push(FeatureMeta::categorical("tool_code"));
        for i in 0..n {
            values.set(i, nc, real(tool_of[i] as f64));
        }
    }

    // missingness: profile groups over the continuous features, by index;
    // the tool-code column stays fully observed
    let group_sizes = allocate_groups(
        &config
            .missingness_profile
            .iter()
            .map(|g| g.feature_fraction)
            .collect::<Vec<_>>(),
        nc,
    );
    let mut availability = vec![1.0f64; m];
    let mut jj = 0;
    for (g, &size) in group_sizes.iter().enumerate() {
        for _ in 0..size {
            availability[jj] = config.missingness_profile[g].availability;
            jj += 1;
        }
    }
    let mut mask = Mask::filled(n, m, true);
    match config.missingness_mechanism {
        Mechanism::Mcar => {
            let mut mask_rng = rng_for(config.seed, "gen-mask", 0);
            for j in 0..nc {
                for i in 0..n {
                    if mask_rng.random::<f64>() >= availability[j] {
                        mask.set(i, j, false);
                    }
                }
            }
        }
        Mechanism::ToolBlock => {
            for j in 0..nc {
                let mut mask_rng = rng_for(config.seed, "gen-mask-block", j as u64);
                for positions in tool_positions.iter() {
                    let len = positions.len();
                    let missing = ((1.0 - availability[j]) * len as f64).round() as usize;
                    if missing == 0 || len == 0 {
                        continue;
                    }
                    let missing = missing.min(len);
                    let start = mask_rng.random_range(0..=(len - missing));
                    for &i in &positions[start..start + missing] {
                        mask.set(i, j, false);
                    }
                }
            }
        }
    }

    let informative_ids: Vec<String> = informative.iter().map(|&j| format!("f{j:03}")).collect();
    let target_function = format!(
        "{:?} over latent standardized traces of {:?} plus per-tool offsets {:?}",
        config.nonlinearity, informative_ids, tool_offsets
    );

    let tool_ids: Vec<String> = tool_of.iter().map(|&t| format!("tool_{t}")).collect();
    let timestamps: Vec<i64> = (0..n as i64).collect();
    let target_f: Vec<F> = target.iter().map(|&v| real(v)).collect();
    let dataset = FdcDataset::new(values, mask, feature_meta, tool_ids, timestamps, target_f)
        .map_err(|e| GenError::InvalidConfig(format!("internal assembly error: {e}")))?;
    Ok((
        dataset,
        GroundTruth {
            informative_ids,
            target_function,
            achievable_r2,
        },
    ))
}
