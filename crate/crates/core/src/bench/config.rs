use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::costmodel::{presets, ArchSpec};
use crate::nn::TrainConfig;
use crate::sigsim::DatasetSpec;

/// Where the windows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// An existing dataset file, relative paths resolved against the
    /// config file's directory.
    Path(PathBuf),
    /// Generated in memory from the spec.
    Generate(DatasetSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentEntry {
    /// Unique label; also feeds per-run seed derivation.
    pub name: String,
    pub arch: ArchSpec,
    #[serde(default)]
    pub train: TrainConfig,
    /// Use the first `train_size` training windows; all of them if absent.
    #[serde(default)]
    pub train_size: Option<u64>,
    #[serde(default = "one")]
    pub repeats: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub entries: Vec<ExperimentEntry>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        let mut names = HashSet::new();
        for e in &self.entries {
            if e.name.is_empty() {
                return bad("entry with empty name".into());
            }
            if !names.insert(e.name.as_str()) {
                return bad(format!("duplicate entry name {:?}", e.name));
            }
            if e.repeats == 0 {
                return bad(format!("entry {:?}: repeats must be at least 1", e.name));
            }
            if e.train_size == Some(0) {
                return bad(format!("entry {:?}: train_size must be positive", e.name));
            }
            e.arch.validate().map_err(|err| BenchError::InvalidConfig(format!("entry {:?}: {err}", e.name)))?;
            e.train.validate().map_err(|err| BenchError::InvalidConfig(format!("entry {:?}: {err}", e.name)))?;
        }
        if let DatasetSource::Generate(spec) = &self.dataset {
            spec.validate().map_err(|err| BenchError::InvalidConfig(format!("dataset: {err}")))?;
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self, BenchError> {
        let cfg: Self = serde_json::from_str(json).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Learning rate and batch size tuned for each family and training-set size.
pub fn tuned_train_config(family: &str, train_size: u64) -> Option<TrainConfig> {
    let (learning_rate, batch_size) = match (family, train_size) {
        ("fc", 1_000) => (1e-3, 20),
        ("fc", 100_000 | 8_000_000) => (5e-4, 1000),
        ("cnn", 1_000) => (1e-3, 1000),
        ("cnn", 100_000 | 8_000_000) => (5e-4, 1000),
        ("rnn", 1_000) => (1e-4, 50),
        ("rnn", 100_000 | 8_000_000) => (5e-4, 100),
        ("birnn", 1_000) => (5e-4, 50),
        ("birnn", 100_000 | 8_000_000) => (5e-4, 1000),
        _ => return None,
    };
    Some(TrainConfig { learning_rate, batch_size, max_epochs: 1000, ..TrainConfig::default() })
}

/// Entries for the tuned architectures at one training-set size; repeats
/// follow the protocol (10 on the smaller sets, 5 on the largest) unless
/// overridden.
pub fn tuned_entries(train_size: u64, repeats: Option<usize>) -> Option<Vec<ExperimentEntry>> {
    let repeats = repeats.unwrap_or(if train_size >= 8_000_000 { 5 } else { 10 });
    presets::tuned(train_size)?
        .into_iter()
        .map(|n| {
            Some(ExperimentEntry {
                train: tuned_train_config(&n.name, train_size)?,
                name: n.name,
                arch: n.arch,
                train_size: Some(train_size),
                repeats,
            })
        })
        .collect()
}
