//! Mini-batch training loop with plateau scheduling, early stopping and
//! validation-set threshold calibration.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::encode::{encode_selected, Family};
use super::loss::{bce_with_logits, sigmoid};
use super::model::{Mode, Model};
use super::schedule::{Action, PlateauConfig, PlateauSchedule};
use super::NnError;
use crate::costmodel::ArchSpec;
use crate::detect::{calibrate_threshold, ScoreSet};
use crate::sigsim::{Label, LabeledDataset, SensingWindow};

/// Windows per inference chunk.
const EVAL_CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub adam: AdamConfig,
    pub lr_patience: usize,
    pub stop_patience: usize,
    pub notable_decrease: f64,
    /// False-alarm target for the validation-set threshold.
    pub target_pfa: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let p = PlateauConfig::default();
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 100,
            adam: AdamConfig::default(),
            lr_patience: p.lr_patience,
            stop_patience: p.stop_patience,
            notable_decrease: p.notable_decrease,
            target_pfa: 0.01,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: String| Err(NnError::InvalidConfig(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        let AdamConfig { beta1, beta2, epsilon } = self.adam;
        if !(0.0 < beta1 && beta1 < 1.0 && 0.0 < beta2 && beta2 < 1.0) {
            return bad(format!("adam betas must lie in (0, 1), got {beta1}, {beta2}"));
        }
        if !(epsilon > 0.0) {
            return bad(format!("adam epsilon must be positive, got {epsilon}"));
        }
        if self.lr_patience == 0 || self.stop_patience == 0 {
            return bad("patience values must be positive".into());
        }
        if self.lr_patience >= self.stop_patience {
            return bad(format!(
                "lr_patience ({}) must be below stop_patience ({})",
                self.lr_patience, self.stop_patience
            ));
        }
        if !(0.0..1.0).contains(&self.notable_decrease) {
            return bad(format!("notable_decrease must lie in [0, 1), got {}", self.notable_decrease));
        }
        if !(self.target_pfa > 0.0 && self.target_pfa < 1.0) {
            return bad(format!("target_pfa must lie in (0, 1), got {}", self.target_pfa));
        }
        Ok(())
    }

    pub fn plateau(&self) -> PlateauConfig {
        PlateauConfig {
            lr_patience: self.lr_patience,
            stop_patience: self.stop_patience,
            notable_decrease: self.notable_decrease,
            ..PlateauConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Rate used during this epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    /// Score threshold calibrated on validation idle windows.
    pub threshold: f64,
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
}

fn targets(windows: &[SensingWindow], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| if windows[i].label.is_busy() { 1.0 } else { 0.0 }).collect()
}

/// Infer-mode logits of every window, computed in fixed chunks. The result
/// does not depend on the chunking or the thread count.
pub fn predict_logits(model: &Model, windows: &[SensingWindow]) -> Result<Vec<f64>, NnError> {
    let family = model.family();
    let idx: Vec<usize> = (0..windows.len()).collect();
    let chunks: Result<Vec<Vec<f64>>, NnError> = idx
        .par_chunks(EVAL_CHUNK)
        .map(|c| Ok(model.logits(&encode_selected(windows, c, family))?.to_vec()))
        .collect();
    Ok(chunks?.concat())
}

/// Sigmoid scores with labels, ready for thresholding.
pub fn predict_scores(model: &Model, windows: &[SensingWindow]) -> Result<ScoreSet, NnError> {
    let scores = predict_logits(model, windows)?.into_iter().map(sigmoid).collect();
    Ok(ScoreSet::new(scores, windows.iter().map(|w| w.label).collect())?)
}

fn mean_loss(model: &Model, windows: &[SensingWindow]) -> Result<f64, NnError> {
    let logits = predict_logits(model, windows)?;
    let total: f64 = logits
        .iter()
        .zip(windows)
        .map(|(&z, w)| bce_with_logits(z, if w.label.is_busy() { 1.0 } else { 0.0 }))
        .sum();
    Ok(total / windows.len() as f64)
}

/// Threshold at `target_pfa` from the idle windows of `val`.
pub fn calibrate_on(model: &Model, val: &[SensingWindow], target_pfa: f64) -> Result<f64, NnError> {
    let scores = predict_scores(model, val)?;
    let idle: Vec<f64> = scores.scores_for(Label::Idle).collect();
    Ok(calibrate_threshold(&idle, target_pfa)?)
}

/// Trains on the dataset's train split; the validation split drives the
/// schedule, model selection and the threshold. The test split is not read.
pub fn train(arch: &ArchSpec, data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainedModel, NnError> {
    train_on(arch, &data.train, &data.val, cfg)
}

/// Called with `(epoch, measured validation loss)` before the schedule sees
/// it; the returned value is what the schedule observes. Epoch 0 is the
/// baseline before training.
pub type EpochHook<'a> = dyn FnMut(usize, f64) -> f64 + 'a;

pub fn train_on(
    arch: &ArchSpec,
    train: &[SensingWindow],
    val: &[SensingWindow],
    cfg: &TrainConfig,
) -> Result<TrainedModel, NnError> {
    train_with_hook(arch, train, val, cfg, &mut |_, l| l)
}

pub fn train_with_hook(
    arch: &ArchSpec,
    train: &[SensingWindow],
    val: &[SensingWindow],
    cfg: &TrainConfig,
    hook: &mut EpochHook<'_>,
) -> Result<TrainedModel, NnError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(NnError::EmptySplit("train"));
    }
    if val.is_empty() {
        return Err(NnError::EmptySplit("validation"));
    }
    let mut model = Model::init(arch, cfg.seed)?;
    let family = Family::of(arch);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = AdamState::new(cfg.adam, &model.params.tensors);
    let mut lr = cfg.learning_rate;

    let baseline = hook(0, mean_loss(&model, val)?);
    if !baseline.is_finite() {
        return Err(NnError::Diverged { epoch: 0, detail: format!("initial validation loss {baseline}") });
    }
    let mut sched = PlateauSchedule::new(cfg.plateau(), baseline);
    let mut best = model.clone();
    let mut best_epoch = 0;
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let x = encode_selected(train, batch, family);
            let y = targets(train, batch);
            let (loss, grads, fwd) = model.loss_and_grad(&x, &y, Mode::Train)?;
            if !loss.is_finite() || grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
                return Err(NnError::Diverged { epoch, detail: format!("batch loss {loss}") });
            }
            adam.step(&mut model.params.tensors, &grads, lr);
            model.update_running_stats(&fwd.bn_batch);
            total += loss * batch.len() as f64;
        }
        let train_loss = total / train.len() as f64;
        let val_loss = hook(epoch, mean_loss(&model, val)?);
        if !val_loss.is_finite() {
            return Err(NnError::Diverged { epoch, detail: format!("validation loss {val_loss}") });
        }
        history.push(EpochRecord { epoch, train_loss, val_loss, lr });
        let (improved, action) = sched.observe(val_loss);
        if improved {
            best = model.clone();
            best_epoch = epoch;
        }
        match action {
            Action::Continue => {}
            Action::ReduceLr => lr /= cfg.plateau().lr_factor,
            Action::Stop => break,
        }
    }

    let threshold = calibrate_on(&best, val, cfg.target_pfa)?;
    Ok(TrainedModel { model: best, threshold, history, best_epoch })
}

/// History as CSV with header `epoch,train_loss,val_loss,lr`.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,lr\n");
    for r in history {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.val_loss, r.lr));
    }
    out
}
