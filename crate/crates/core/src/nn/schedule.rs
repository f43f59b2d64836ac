//! Plateau learning-rate schedule with early stopping.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlateauConfig {
    /// Epochs without notable improvement before the rate is divided.
    pub lr_patience: usize,
    /// Epochs without notable improvement before training stops.
    pub stop_patience: usize,
    /// Relative improvement over the best loss below which an epoch counts
    /// as stagnant.
    pub notable_decrease: f64,
    pub lr_factor: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self { lr_patience: 10, stop_patience: 15, notable_decrease: 1e-4, lr_factor: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Continue,
    ReduceLr,
    Stop,
}

/// Tracks the best validation loss. A notable improvement resets both
/// counters; a rate reduction restarts only the rate counter.
#[derive(Debug, Clone)]
pub struct PlateauSchedule {
    cfg: PlateauConfig,
    best: f64,
    since_best: usize,
    since_reduce: usize,
}

impl PlateauSchedule {
    /// `baseline` is the validation loss before any training.
    pub fn new(cfg: PlateauConfig, baseline: f64) -> Self {
        Self { cfg, best: baseline, since_best: 0, since_reduce: 0 }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Feeds one epoch's validation loss. Returns whether it is a new best
    /// (any decrease) and what to do next.
    pub fn observe(&mut self, val_loss: f64) -> (bool, Action) {
        let improved = val_loss < self.best;
        let notable = val_loss < (1.0 - self.cfg.notable_decrease) * self.best;
        if improved {
            self.best = val_loss;
        }
        if notable {
            self.since_best = 0;
            self.since_reduce = 0;
            return (improved, Action::Continue);
        }
        self.since_best += 1;
        self.since_reduce += 1;
        if self.since_best >= self.cfg.stop_patience {
            (improved, Action::Stop)
        } else if self.since_reduce >= self.cfg.lr_patience {
            self.since_reduce = 0;
            (improved, Action::ReduceLr)
        } else {
            (improved, Action::Continue)
        }
    }
}
