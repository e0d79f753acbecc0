//! Mini-batch gradient descent with momentum on the MSE imitation loss.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::network::{state_to_input, value_net_layers, ModelWeights};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Samples per gradient chunk. Chunks are summed in index order, so results
/// do not depend on the thread count.
const CHUNK: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Labels are divided by this before training; predictions are multiplied back.
    pub label_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            momentum: 0.9,
            batch_size: 32,
            epochs: 100,
            seed: 0,
            label_scale: 29.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} must lie in [0, 1)", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(self.label_scale.is_finite() && self.label_scale > 0.0) {
            return Err(Error::Config(format!("label scale {} must be > 0", self.label_scale)));
        }
        Ok(())
    }
}

/// Per-epoch MSE in label units (cells²).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub weights: ModelWeights,
    pub curve: Vec<EpochStats>,
}

impl TrainOutcome {
    pub fn final_val_mse(&self) -> f64 {
        self.curve.last().map_or(f64::NAN, |e| e.val_mse)
    }
}

pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.len() < cfg.batch_size {
        return Err(Error::Contract(format!(
            "dataset has {} records, fewer than the batch size {}",
            dataset.len(),
            cfg.batch_size
        )));
    }
    let split = dataset.validation_split();
    let mut weights = ModelWeights::init(value_net_layers(), cfg.label_scale, derive_seed(cfg.seed, 0))?;
    let mut velocity = vec![0.0; weights.params().len()];
    let mut order: Vec<usize> = (0..split).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng_from_seed(derive_seed(cfg.seed, 1 + epoch as u64)));
        let mut sse = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (grad, batch_sse) = batch_gradient(&weights, dataset, batch);
            sse += batch_sse;
            let params = weights.params_mut();
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v + g;
                *p -= cfg.learning_rate * *v;
            }
        }
        let scale2 = cfg.label_scale * cfg.label_scale;
        let train_mse = sse / split.max(1) as f64 * scale2;
        if !train_mse.is_finite() || weights.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: train_mse,
            });
        }
        let val_mse = if split < dataset.len() {
            mse(&weights, dataset, split..dataset.len())
        } else {
            f64::NAN
        };
        curve.push(EpochStats {
            epoch,
            train_mse,
            val_mse,
        });
    }
    weights.quantize_f32();
    Ok(TrainOutcome { weights, curve })
}

/// Mean gradient of the batch loss and the batch's summed squared error
/// (normalized units, pre-update).
fn batch_gradient(weights: &ModelWeights, dataset: &Dataset, batch: &[usize]) -> (Vec<f64>, f64) {
    let n_params = weights.params().len();
    let scale = weights.label_scale();
    let inv_b = 1.0 / batch.len() as f64;
    let partials: Vec<(Vec<f64>, f64)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; n_params];
            let mut sse = 0.0;
            for &i in chunk {
                let input = state_to_input(&dataset.states()[i]);
                let acts = weights.activations(&input);
                let err = acts.last().unwrap()[0] - dataset.labels()[i] as f64 / scale;
                sse += err * err;
                weights.backward(&input, &acts, 2.0 * err * inv_b, &mut grad);
            }
            (grad, sse)
        })
        .collect();
    let mut total = vec![0.0; n_params];
    let mut sse = 0.0;
    for (g, s) in partials {
        for (t, v) in total.iter_mut().zip(&g) {
            *t += v;
        }
        sse += s;
    }
    (total, sse)
}

/// MSE in label units over `range` of the dataset.
pub fn mse(weights: &ModelWeights, dataset: &Dataset, range: std::ops::Range<usize>) -> f64 {
    let scale = weights.label_scale();
    let idx: Vec<usize> = range.collect();
    let sse: f64 = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&i| {
                    let pred = weights.output(&state_to_input(&dataset.states()[i])) * scale;
                    let err = pred - dataset.labels()[i] as f64;
                    err * err
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    sse / idx.len().max(1) as f64
}

/// Population variance of the labels in `range`: the MSE of predicting their mean.
pub fn label_variance(dataset: &Dataset, range: std::ops::Range<usize>) -> f64 {
    let labels = &dataset.labels()[range];
    let n = labels.len().max(1) as f64;
    let mean = labels.iter().map(|&l| l as f64).sum::<f64>() / n;
    labels.iter().map(|&l| (l as f64 - mean).powi(2)).sum::<f64>() / n
}
