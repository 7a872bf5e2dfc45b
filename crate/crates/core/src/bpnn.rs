//! Delay-to-power regressor: a small MLP mapping path delay (µs) to path
//! power (dB), trained with backprop and ADAM.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{Activation, Adam, Layer, MlpModel};

/// Published LoS network: 1 input, 4 sigmoid hidden neurons, linear output.
pub fn preset_los() -> MlpModel {
    preset(
        [-2.033, 0.615, 1.951, 1.044],
        [0.050, -1.323, 0.818, 0.950],
        [-0.343, -21.993, -29.861, -29.012],
        -30.082,
    )
}

/// Published NLoS network, same shape as [`preset_los`].
pub fn preset_nlos() -> MlpModel {
    preset(
        [0.430, 0.746, 0.772, 1.213],
        [-1.729, 0.922, 1.033, 1.345],
        [-18.140, -32.827, -32.964, -32.980],
        -33.212,
    )
}

fn preset(w1: [f64; 4], b1: [f64; 4], w2: [f64; 4], b2: f64) -> MlpModel {
    MlpModel::from_layers(vec![
        Layer {
            inputs: 1,
            outputs: 4,
            weights: w1.to_vec(),
            biases: b1.to_vec(),
            activation: Activation::Sigmoid,
        },
        Layer {
            inputs: 4,
            outputs: 1,
            weights: w2.to_vec(),
            biases: vec![b2],
            activation: Activation::Linear,
        },
    ])
    .expect("preset shapes are consistent")
}

/// Path power in dB for a delay given in microseconds.
pub fn predict_db(model: &MlpModel, delay_us: f64) -> Result<f64> {
    model.forward_scalar(delay_us)
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// L2 weight penalty; biases are not penalized.
    pub lambda: f64,
    /// Fraction of samples used for training; the rest validates.
    pub split: f64,
    pub seed: u64,
    /// Samples per ADAM step. Zero means full batch.
    pub batch_size: usize,
    pub hidden: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            epochs: 5000,
            lambda: 0.0,
            split: 0.7,
            seed: 0,
            batch_size: 8,
            hidden: 4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::config("split", "must lie strictly between 0 and 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be positive"));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::config("lambda", "must be non-negative"));
        }
        if self.hidden == 0 {
            return Err(Error::config("hidden", "must be at least 1"));
        }
        Ok(())
    }
}

/// Mean squared error plus `(lambda / 2) * sum of squared weights`.
pub fn cost(model: &MlpModel, data: &[(f64, f64)], lambda: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("cost needs at least one sample"));
    }
    let mse = sum_sq_error(model, data)? / data.len() as f64;
    Ok(mse + 0.5 * lambda * model.weight_norm_sq())
}

/// Root mean squared prediction error in dB.
pub fn rmse(model: &MlpModel, data: &[(f64, f64)]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("rmse needs at least one sample"));
    }
    Ok((sum_sq_error(model, data)? / data.len() as f64).sqrt())
}

fn sum_sq_error(model: &MlpModel, data: &[(f64, f64)]) -> Result<f64> {
    let mut acc = 0.0;
    for &(x, y) in data {
        acc += (model.forward_scalar(x)? - y).powi(2);
    }
    Ok(acc)
}

/// Seeded shuffle split into disjoint (train, validation) index sets.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64) * ratio).round() as usize;
    let cut = cut.clamp(1.min(n), n.saturating_sub(1));
    let val = idx.split_off(cut);
    (idx, val)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_cost: f64,
    pub val_rmse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub history: Vec<EpochStats>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    pub train_rmse: f64,
    pub val_rmse: f64,
}

/// Analytic gradient of [`cost`] over `batch`, canonical parameter order.
pub fn cost_gradient(model: &MlpModel, batch: &[(f64, f64)], lambda: f64) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::invalid("gradient needs at least one sample"));
    }
    let xs: Vec<f64> = batch.iter().map(|p| p.0).collect();
    let trace = model.forward_batch(&xs)?;
    let n = batch.len() as f64;
    let go: Vec<f64> = trace
        .output()
        .iter()
        .zip(batch)
        .map(|(y, p)| 2.0 * (y - p.1) / n)
        .collect();
    let mut grads = vec![0.0; model.param_count()];
    model.backward(&trace, &go, &mut grads);
    if lambda != 0.0 {
        let mut k = 0;
        for l in model.layers() {
            for w in &l.weights {
                grads[k] += lambda * w;
                k += 1;
            }
            k += l.biases.len();
        }
    }
    Ok(grads)
}

/// Trains a 1-hidden-layer regressor on `(delay_us, power_db)` pairs.
pub fn train(data: &[(f64, f64)], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.len() < 10 {
        return Err(Error::invalid(format!(
            "training needs at least 10 samples, got {}",
            data.len()
        )));
    }
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    let (train_idx, val_idx) = split_indices(data.len(), cfg.split, cfg.seed);
    let train_set: Vec<(f64, f64)> = train_idx.iter().map(|&i| data[i]).collect();
    let val_set: Vec<(f64, f64)> = val_idx.iter().map(|&i| data[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut model = MlpModel::random(
        &[1, cfg.hidden, 1],
        &[Activation::Sigmoid, Activation::Linear],
        &mut rng,
    )?;
    let mut opt = Adam::with_betas(model.param_count(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    let batch = if cfg.batch_size == 0 {
        train_set.len()
    } else {
        cfg.batch_size.min(train_set.len())
    };

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut scratch = Vec::with_capacity(batch);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            scratch.clear();
            scratch.extend(chunk.iter().map(|&i| train_set[i]));
            let grads = cost_gradient(&model, &scratch, cfg.lambda)?;
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    stage: "epoch",
                    index: epoch,
                });
            }
            opt.step(&mut model, &grads);
        }
        let train_cost = cost(&model, &train_set, cfg.lambda)?;
        let val_rmse = if val_set.is_empty() {
            f64::NAN
        } else {
            rmse(&model, &val_set)?
        };
        if !train_cost.is_finite() {
            return Err(Error::Diverged {
                stage: "epoch",
                index: epoch,
            });
        }
        history.push(EpochStats {
            epoch,
            train_cost,
            val_rmse,
        });
    }
    let train_rmse = rmse(&model, &train_set)?;
    let val_rmse = rmse(&model, &val_set)?;
    Ok(TrainOutcome {
        model,
        history,
        train_indices: train_idx,
        val_indices: val_idx,
        train_rmse,
        val_rmse,
    })
}
