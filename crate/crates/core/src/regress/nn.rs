//! Fully connected network: ReLU hidden layers, linear output, squared loss,
//! mini-batch gradient descent with momentum, Glorot-uniform init, and early
//! stopping on a development-loss plateau. No feature importance.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::scalar::{real, Real};
use crate::seeding::rng_for;

use super::{FittedParams, Hyperparams, RegressError, RegressorSpec, TrainedModel};

const MOMENTUM: f64 = 0.9;
const MAX_RESTARTS: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer<F> {
    /// Row-major, one row per output unit.
    pub weights: Matrix<F>,
    pub biases: Vec<F>,
}

/// Network parameters plus the internal input/target standardization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NnState<F> {
    pub layers: Vec<Layer<F>>,
    pub y_mean: F,
    pub y_scale: F,
    /// Per-input affine map applied before the first layer; identity unless
    /// fitted (training standardizes inputs for usable ReLU gradients).
    pub x_means: Vec<F>,
    pub x_scales: Vec<F>,
}

#[derive(Debug, Clone)]
pub struct NnParams {
    pub hidden_layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
}

impl<F: Real> NnState<F> {
    /// Glorot-uniform initialization for `sizes` = [inputs, hidden..., 1].
    pub fn init(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let mut rng = rng_for(seed, "nn-init", 0);
        let mut layers = Vec::new();
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut weights = Matrix::zeros(fan_out, fan_in);
            for o in 0..fan_out {
                for i in 0..fan_in {
                    let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
                    weights.set(o, i, real(u * a));
                }
            }
            layers.push(Layer {
                weights,
                biases: vec![F::zero(); fan_out],
            });
        }
        let n_inputs = sizes[0];
        Self {
            layers,
            y_mean: F::zero(),
            y_scale: F::one(),
            x_means: vec![F::zero(); n_inputs],
            x_scales: vec![F::one(); n_inputs],
        }
    }

    fn make_workspace(&self) -> Vec<Vec<F>> {
        self.layers
            .iter()
            .map(|l| vec![F::zero(); l.biases.len()])
            .collect()
    }

    fn standardize_input(&self, raw: &[F], buf: &mut Vec<F>) {
        buf.clear();
        buf.extend(
            raw.iter()
                .zip(self.x_means.iter().zip(&self.x_scales))
                .map(|(&v, (&m, &s))| (v - m) / s),
        );
    }

    /// Forward pass filling `acts[l]` with layer l's output; returns the
    /// network output in standardized space. `input` must already be in
    /// standardized input coordinates.
    fn forward_std(&self, input: &[F], acts: &mut [Vec<F>]) -> F {
        let last = self.layers.len() - 1;
        for l in 0..self.layers.len() {
            let (before, current) = acts.split_at_mut(l);
            let prev: &[F] = if l == 0 { input } else { &before[l - 1] };
            let layer = &self.layers[l];
            let out = &mut current[0];
            for o in 0..layer.biases.len() {
                let mut z = layer.biases[o];
                let w_row = layer.weights.row(o);
                for (i, &p) in prev.iter().enumerate() {
                    z = z + w_row[i] * p;
                }
                out[o] = if l == last { z } else { z.max(F::zero()) };
            }
        }
        acts[last][0]
    }

    /// Prediction in original target units.
    pub fn predict(&self, x: &Matrix<F>) -> Vec<F> {
        let mut acts = self.make_workspace();
        let mut input = Vec::new();
        (0..x.rows())
            .map(|i| {
                self.standardize_input(x.row(i), &mut input);
                self.forward_std(&input, &mut acts) * self.y_scale + self.y_mean
            })
            .collect()
    }

    /// Mean squared error / 2 against standardized targets.
    pub fn loss(&self, x: &Matrix<F>, y: &[F]) -> F {
        let mut acts = self.make_workspace();
        let mut input = Vec::new();
        let mut total = F::zero();
        for i in 0..x.rows() {
            let t = (y[i] - self.y_mean) / self.y_scale;
            self.standardize_input(x.row(i), &mut input);
            let e = self.forward_std(&input, &mut acts) - t;
            total = total + e * e;
        }
        total / real(2.0 * x.rows() as f64)
    }

    /// Loss and its gradient with respect to [`Self::flat_params`].
    pub fn loss_grad(&self, x: &Matrix<F>, y: &[F]) -> (F, Vec<F>) {
        let n = x.rows();
        let depth = self.layers.len();
        let mut grads: Vec<(Matrix<F>, Vec<F>)> = self
            .layers
            .iter()
            .map(|l| {
                (
                    Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    vec![F::zero(); l.biases.len()],
                )
            })
            .collect();
        let mut acts = self.make_workspace();
        let mut deltas = self.make_workspace();
        let mut std_input = Vec::new();
        let mut total = F::zero();
        let n_f = real::<F>(n as f64);
        for s in 0..n {
            let t = (y[s] - self.y_mean) / self.y_scale;
            self.standardize_input(x.row(s), &mut std_input);
            let row: &[F] = &std_input;
            let out = self.forward_std(row, &mut acts);
            let err = out - t;
            total = total + err * err;
            // delta for the linear output unit of L = e^2 / (2n)
            deltas[depth - 1][0] = err / n_f;
            for l in (0..depth).rev() {
                let input: &[F] = if l == 0 { row } else { &acts[l - 1] };
                let (gw, gb) = &mut grads[l];
                for o in 0..self.layers[l].biases.len() {
                    let d = deltas[l][o];
                    if d == F::zero() {
                        continue;
                    }
                    gb[o] = gb[o] + d;
                    for (i, &inp) in input.iter().enumerate() {
                        let v = gw.get(o, i) + d * inp;
                        gw.set(o, i, v);
                    }
                }
                if l > 0 {
                    let layer = &self.layers[l];
                    let width = input.len();
                    let (lower, upper) = deltas.split_at_mut(l);
                    let next = &mut lower[l - 1];
                    for g in next.iter_mut() {
                        *g = F::zero();
                    }
                    for (o, &d) in upper[0].iter().enumerate() {
                        if d == F::zero() {
                            continue;
                        }
                        let w_row = layer.weights.row(o);
                        for i in 0..width {
                            next[i] = next[i] + d * w_row[i];
                        }
                    }
                    // ReLU gate of the hidden activation
                    for (i, g) in next.iter_mut().enumerate() {
                        if acts[l - 1][i] <= F::zero() {
                            *g = F::zero();
                        }
                    }
                }
            }
        }
        let loss = total / (real::<F>(2.0) * n_f);
        let mut flat = Vec::new();
        for (gw, gb) in &grads {
            flat.extend_from_slice(gw.data());
            flat.extend_from_slice(gb);
        }
        (loss, flat)
    }

    pub fn flat_params(&self) -> Vec<F> {
        let mut flat = Vec::new();
        for l in &self.layers {
            flat.extend_from_slice(l.weights.data());
            flat.extend_from_slice(&l.biases);
        }
        flat
    }

    pub fn set_flat_params(&mut self, params: &[F]) {
        let mut pos = 0;
        for l in &mut self.layers {
            let (rows, cols) = (l.weights.rows(), l.weights.cols());
            for o in 0..rows {
                for i in 0..cols {
                    l.weights.set(o, i, params[pos]);
                    pos += 1;
                }
            }
            for b in &mut l.biases {
                *b = params[pos];
                pos += 1;
            }
        }
        assert_eq!(pos, params.len(), "flat parameter length mismatch");
    }
}

pub(super) fn fit<F: Real>(
    spec: &RegressorSpec,
    x: &Matrix<F>,
    y: &[F],
    feature_ids: &[String],
    dev: Option<(&Matrix<F>, &[F])>,
) -> Result<TrainedModel<F>, RegressError> {
    let Hyperparams::NeuralNetwork {
        hidden_layer_sizes,
        learning_rate,
        max_epochs,
        batch_size,
        patience,
    } = &spec.hyperparams
    else {
        return Err(RegressError::InvalidSpec("expected nn hyperparams".into()));
    };
    let n = x.rows();
    let m = x.cols();
    let mut sizes = vec![m];
    sizes.extend_from_slice(hidden_layer_sizes);
    sizes.push(1);

    let n_f = real::<F>(n as f64);
    let y_mean: F = y.iter().copied().sum::<F>() / n_f;
    let y_var: F = y.iter().map(|&v| (v - y_mean) * (v - y_mean)).sum::<F>() / n_f;
    let y_scale = if y_var > F::zero() {
        y_var.sqrt()
    } else {
        F::one()
    };
    // center and scale the inputs from the training split; constant
    // columns keep scale one and contribute nothing after centering
    let x_means: Vec<F> = (0..m)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<F>() / n_f)
        .collect();
    let x_scales: Vec<F> = (0..m)
        .map(|j| {
            let var: F = (0..n)
                .map(|i| {
                    let d = x.get(i, j) - x_means[j];
                    d * d
                })
                .sum::<F>()
                / n_f;
            if var > F::zero() {
                var.sqrt()
            } else {
                F::one()
            }
        })
        .collect();

    let mut lr = real::<F>(*learning_rate);
    let mut restarts = 0;
    'restart: loop {
        let mut state = NnState::<F>::init(&sizes, spec.seed);
        state.y_mean = y_mean;
        state.y_scale = y_scale;
        state.x_means = x_means.clone();
        state.x_scales = x_scales.clone();
        let mut velocity = vec![F::zero(); state.flat_params().len()];
        let mut rng = rng_for(spec.seed, "nn-batches", 0);
        let mut order: Vec<usize> = (0..n).collect();

        let eval_loss = |st: &NnState<F>| match dev {
            Some((xd, yd)) if xd.rows() > 0 => st.loss(xd, yd),
            _ => st.loss(x, y),
        };
        let mut best_loss = eval_loss(&state);
        let mut best_params = state.flat_params();
        let mut stall = 0usize;
        let momentum = real::<F>(MOMENTUM);

        for _epoch in 0..*max_epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(*batch_size) {
                let xb = x.select_rows(chunk);
                let yb: Vec<F> = chunk.iter().map(|&i| y[i]).collect();
                let (_, grad) = state.loss_grad(&xb, &yb);
                let mut params = state.flat_params();
                for (k, g) in grad.iter().enumerate() {
                    velocity[k] = momentum * velocity[k] - lr * *g;
                    params[k] = params[k] + velocity[k];
                }
                state.set_flat_params(&params);
            }
            let train_loss = state.loss(x, y);
            if !train_loss.is_finite() {
                restarts += 1;
                if restarts > MAX_RESTARTS {
                    return Err(RegressError::Divergence { restarts });
                }
                lr = lr / real(2.0);
                continue 'restart;
            }
            let current = eval_loss(&state);
            if current < best_loss - real(1e-10) {
                best_loss = current;
                best_params = state.flat_params();
                stall = 0;
            } else {
                stall += 1;
                if stall >= *patience {
                    break;
                }
            }
        }
        state.set_flat_params(&best_params);
        return Ok(TrainedModel {
            spec: spec.clone(),
            feature_ids: feature_ids.to_vec(),
            params: FittedParams::NeuralNetwork(state),
            importance: None,
        });
    }
}
