use std::io::Write;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::loss::LossConfig;
use super::model::{Model, Sample};
use super::params::Gradients;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Dropout on `h` during training.
    pub dropout_rate: f64,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement tolerated before stopping.
    pub patience: usize,
    /// Set from the pipeline-wide seed when loaded from a config file.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-6,
            batch_size: 96,
            dropout_rate: 0.5,
            adam: AdamConfig::default(),
            max_epochs: 50,
            patience: 2,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be finite and > 0".into()));
        }
        let a = &self.adam;
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return Err(Error::Config(
                "adam needs beta1, beta2 in [0, 1) and epsilon > 0".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the per-epoch training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_err: f64,
    pub val_err: f64,
}

/// Mean loss and subset error (`1 - exact-match accuracy` at 0.5).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitStats {
    pub loss: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: Model,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

/// Mean loss over `batch` and its gradient. Dropout is active when `dropout`
/// is given.
pub fn batch_loss_and_gradients(
    model: &Model,
    batch: &[&Sample],
    loss: &LossConfig,
    mut dropout: Option<(f64, &mut ChaCha8Rng)>,
) -> Result<(f64, Gradients)> {
    let mut grads = model.zero_gradients();
    let mut total = 0.0;
    for sample in batch {
        let fwd = match dropout.as_mut() {
            Some((rate, rng)) => model.forward(&sample.encoded, Some((*rate, &mut **rng)))?,
            None => model.forward(&sample.encoded, None)?,
        };
        let (l, dlogits) = loss.loss_and_grad(fwd.logits(), &sample.labels);
        total += l;
        model.backward(&sample.encoded, &fwd, &dlogits, &mut grads);
    }
    let n = batch.len().max(1) as f64;
    grads.scale(1.0 / n);
    Ok((total / n, grads))
}

/// Loss and subset error with dropout disabled.
pub fn evaluate_split(model: &Model, samples: &[Sample], loss: &LossConfig) -> Result<SplitStats> {
    if samples.is_empty() {
        return Err(Error::Dataset("cannot evaluate an empty split".into()));
    }
    let mut total = 0.0;
    let mut wrong = 0usize;
    for s in samples {
        let logits = model.logits(&s.encoded)?;
        total += loss.loss_and_grad(&logits, &s.labels).0;
        // sigmoid(z) >= 0.5 exactly when z >= 0
        if logits.iter().zip(&s.labels).any(|(&z, &l)| (z >= 0.0) != l) {
            wrong += 1;
        }
    }
    let n = samples.len() as f64;
    Ok(SplitStats {
        loss: total / n,
        error: wrong as f64 / n,
    })
}

/// Mini-batch Adam with per-epoch shuffling and early stopping on the
/// validation loss. Training stops once the validation loss has failed to
/// improve for more than `patience` consecutive epochs, and the best model
/// is returned. `on_epoch` sees each log row as it is produced.
pub fn train(
    mut model: Model,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
    loss: &LossConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    loss.validate(model.num_classes())?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Dataset(
            "training needs non-empty train and validation splits".into(),
        ));
    }
    let names = model.param_names();
    let mut adam = Adam::new(cfg.adam, &model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, Model)> = None;
    let mut bad_epochs = 0usize;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (_, grads) =
                batch_loss_and_gradients(&model, &batch, loss, Some((cfg.dropout_rate, &mut rng)))?;
            adam.update(model.params_mut(), &grads, &names, cfg.learning_rate)?;
        }
        let tr = evaluate_split(&model, train_set, loss)?;
        let va = evaluate_split(&model, val_set, loss)?;
        if !va.loss.is_finite() || !tr.loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                message: format!("train loss {}, validation loss {}", tr.loss, va.loss),
            });
        }
        let row = EpochLog {
            epoch,
            train_loss: tr.loss,
            val_loss: va.loss,
            train_err: tr.error,
            val_err: va.error,
        };
        info!(
            "epoch {epoch}: train loss {:.6} err {:.4}, val loss {:.6} err {:.4}",
            row.train_loss, row.train_err, row.val_loss, row.val_err
        );
        on_epoch(&row);
        log.push(row);
        if best.as_ref().is_none_or(|(b, _, _)| va.loss < *b) {
            best = Some((va.loss, epoch, model.clone()));
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            if bad_epochs > cfg.patience {
                break;
            }
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        best_epoch,
        log,
    })
}

/// CSV with columns epoch, train_loss, val_loss, train_err, val_err.
pub fn write_epoch_log<W: Write>(rows: &[EpochLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("writing epoch log", e))?;
    Ok(())
}
