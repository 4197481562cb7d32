//! Mini-batch training with early stopping, and model evaluation.
//!
//! Every model exposes its parameters and a tape-recorded forward pass via
//! [`Regressor`]; the loop here is model-agnostic. Per-cascade loss is
//! `(ŷ - target)²` where the target lives in the model's head space.
//!
//! Gradients for the cascades of a batch may be computed on worker threads,
//! but they are always summed in dataset order on the calling thread, so a
//! run is bitwise reproducible whether or not `parallel` is set.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Tape, Var};
use crate::metrics::{msle, EvalReport, MetricError};
use crate::model::Head;
use crate::params::{GradientMap, ParamSet};
use crate::tensor::{Tensor, TensorError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid train config: {0}")]
    Config(String),
    #[error("training split is empty")]
    EmptyTrainSet,
    #[error("non-finite loss in epoch {epoch}; last finite epoch was {last_finite_epoch}")]
    Diverged { epoch: usize, last_finite_epoch: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    /// Seeds model initialization.
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Compute per-cascade gradients on the rayon pool.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 16,
            patience: 10,
            seed: 0,
            optimizer: Optimizer::Adam,
            parallel: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(TrainError::Config(format!(
                "learning_rate {} must be finite and >= 0",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::Config("epochs and batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// A model trainable by [`train`].
pub trait Regressor: Sync {
    type Input: Sync;

    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;
    fn head(&self) -> Head;
    /// Records the forward pass; must return a `1×1` output.
    fn forward(&self, tape: &mut Tape, input: &Self::Input) -> Result<Var, TensorError>;

    fn predict_output(&self, input: &Self::Input) -> Result<f64, TensorError> {
        let mut tape = Tape::with_params(self.params());
        let y = self.forward(&mut tape, input)?;
        tape.value(y).item()
    }

    fn predict_growth(&self, input: &Self::Input) -> Result<f64, TensorError> {
        Ok(self.head().growth(self.predict_output(input)?))
    }
}

/// One training or evaluation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<I> {
    pub input: I,
    /// Observed growth `Δs >= 0`.
    pub growth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean squared error in head space over the training set.
    pub train_loss: f64,
    /// `None` when there is no validation split.
    pub val_msle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainOutcome {
    pub fn best(&self) -> &EpochRecord {
        &self.history[self.best_epoch]
    }

    pub fn history_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_mse_log\tval_msle\n");
        for r in &self.history {
            let val = r.val_msle.map_or_else(|| "NA".to_string(), |v| v.to_string());
            writeln!(out, "{}\t{}\t{}", r.epoch, r.train_loss, val).unwrap();
        }
        out
    }

    pub fn write_history(&self, path: &Path) -> Result<(), TrainError> {
        fs::write(path, self.history_tsv()).map_err(|source| TrainError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Loss and gradient for one example.
pub fn example_gradient<R: Regressor>(
    model: &R,
    example: &Example<R::Input>,
) -> Result<(f64, GradientMap), TensorError> {
    let mut tape = Tape::with_params(model.params());
    let y = model.forward(&mut tape, &example.input)?;
    let target = tape.constant(Tensor::scalar(model.head().target(example.growth)));
    let diff = tape.sub(y, target)?;
    let loss = tape.mul(diff, diff)?;
    let value = tape.value(loss).item()?;
    Ok((value, tape.backward(loss)?))
}

/// Mean loss and mean gradient over `batch`, summed in slice order.
pub fn batch_gradient<R: Regressor>(
    model: &R,
    batch: &[Example<R::Input>],
    parallel: bool,
) -> Result<(f64, GradientMap), TensorError> {
    let parts: Vec<Result<(f64, GradientMap), TensorError>> = if parallel {
        batch.par_iter().map(|e| example_gradient(model, e)).collect()
    } else {
        batch.iter().map(|e| example_gradient(model, e)).collect()
    };
    let scale = 1.0 / batch.len() as f64;
    let mut total = GradientMap::zeros_for(model.params());
    let mut loss = 0.0;
    for part in parts {
        let (l, g) = part?;
        loss += l;
        total.accumulate(&g, scale);
    }
    Ok((loss * scale, total))
}

/// Mean head-space squared error over `examples`.
pub fn mean_loss<R: Regressor>(model: &R, examples: &[Example<R::Input>]) -> Result<f64, TensorError> {
    batched_mean_loss(model, examples, examples.len().max(1))
}

/// Mean loss accumulated batch by batch exactly as [`train`] does, so an
/// untouched model reports bit-identical losses before and during training.
fn batched_mean_loss<R: Regressor>(
    model: &R,
    examples: &[Example<R::Input>],
    batch_size: usize,
) -> Result<f64, TensorError> {
    let losses: Vec<f64> = examples
        .par_iter()
        .map(|e| {
            let y = model.predict_output(&e.input)?;
            let d = y - model.head().target(e.growth);
            Ok(d * d)
        })
        .collect::<Result<_, TensorError>>()?;
    let mut total = 0.0;
    for chunk in losses.chunks(batch_size) {
        let mut sum = 0.0;
        for l in chunk {
            sum += l;
        }
        total += sum * (1.0 / chunk.len() as f64) * chunk.len() as f64;
    }
    Ok(total / examples.len().max(1) as f64)
}

/// Scores the model's growth predictions against the labels.
pub fn evaluate<R: Regressor>(model: &R, examples: &[Example<R::Input>]) -> Result<EvalReport, TrainError> {
    let predicted: Vec<f64> = examples
        .par_iter()
        .map(|e| model.predict_growth(&e.input))
        .collect::<Result<_, _>>()?;
    let actual: Vec<f64> = examples.iter().map(|e| e.growth).collect();
    Ok(msle(&predicted, &actual)?)
}

#[derive(Debug, Clone)]
enum OptimizerState {
    Sgd,
    Adam {
        m: ParamSet,
        v: ParamSet,
        step: i32,
    },
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl OptimizerState {
    fn new(kind: Optimizer, params: &ParamSet) -> Self {
        match kind {
            Optimizer::Sgd => OptimizerState::Sgd,
            Optimizer::Adam => OptimizerState::Adam {
                m: params.zeros_like(),
                v: params.zeros_like(),
                step: 0,
            },
        }
    }

    fn apply(&mut self, params: &mut ParamSet, grads: &GradientMap, lr: f64) {
        match self {
            OptimizerState::Sgd => {
                for (i, g) in grads.iter().enumerate() {
                    let p = params.get_mut(i).data_mut();
                    for (p, g) in p.iter_mut().zip(g.data()) {
                        *p -= lr * g;
                    }
                }
            }
            OptimizerState::Adam { m, v, step } => {
                *step += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*step);
                let c2 = 1.0 - ADAM_BETA2.powi(*step);
                for (i, g) in grads.iter().enumerate() {
                    let p = params.get_mut(i).data_mut();
                    let m = m.get_mut(i).data_mut();
                    let v = v.get_mut(i).data_mut();
                    for k in 0..p.len() {
                        let gk = g.data()[k];
                        m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * gk;
                        v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * gk * gk;
                        p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
                    }
                }
            }
        }
    }
}

/// Trains `model` in place and leaves it holding the parameters of the
/// epoch with the lowest validation MSLE (training loss when `val` is
/// empty). Epoch 0 in the history is the untrained model.
pub fn train<R: Regressor>(
    model: &mut R,
    train_set: &[Example<R::Input>],
    val: &[Example<R::Input>],
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let score = |model: &R, train_loss: f64| -> Result<(Option<f64>, f64), TrainError> {
        if val.is_empty() {
            Ok((None, train_loss))
        } else {
            let m = evaluate(model, val)?.msle;
            Ok((Some(m), m))
        }
    };

    let initial_loss = batched_mean_loss(model, train_set, config.batch_size)?;
    if !initial_loss.is_finite() {
        return Err(TrainError::Diverged {
            epoch: 0,
            last_finite_epoch: 0,
        });
    }
    let (val_msle, mut best_score) = score(model, initial_loss)?;
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_loss: initial_loss,
        val_msle,
    }];
    let mut best_params = model.params().clone();
    let mut best_epoch = 0;
    let mut optimizer = OptimizerState::new(config.optimizer, model.params());
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        let mut loss_sum = 0.0;
        for batch in train_set.chunks(config.batch_size) {
            let (loss, grads) = batch_gradient(model, batch, config.parallel)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    last_finite_epoch: epoch - 1,
                });
            }
            loss_sum += loss * batch.len() as f64;
            optimizer.apply(model.params_mut(), &grads, config.learning_rate);
        }
        if !model.params().is_finite() {
            return Err(TrainError::Diverged {
                epoch,
                last_finite_epoch: epoch - 1,
            });
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let (val_msle, s) = score(model, train_loss)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_msle,
        });
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_msle:?}");
        if s < best_score {
            best_score = s;
            best_epoch = epoch;
            best_params.clone_from(model.params());
        }
        if epoch - best_epoch >= config.patience && epoch < config.epochs {
            stopped_early = true;
            break;
        }
    }
    *model.params_mut() = best_params;
    Ok(TrainOutcome {
        history,
        best_epoch,
        stopped_early,
    })
}
