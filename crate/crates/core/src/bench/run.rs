use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{DatasetSource, ExperimentConfig, ExperimentEntry};
use super::report::{aggregate, runs_csv, summary_csv, ExperimentReport, RunOutcome, RunRecord};
use super::{io_err, BenchError};
use crate::detect::{calibrate_and_evaluate, energy_scores, evaluate};
use crate::nn::{history_csv, predict_scores, save_checkpoint, train_on, TrainConfig};
use crate::sigsim::{gen_dataset, load_dataset, LabeledDataset};

/// Environment variable the CLI reads for the number of concurrent
/// training runs.
pub const WORKERS_ENV: &str = "NNSENSE_WORKERS";

/// Seed of repeat `i` of entry `name`: the first eight bytes of
/// SHA-256(master_seed LE ‖ len(name) LE ‖ name ‖ i LE).
pub fn derive_seed(master_seed: u64, name: &str, i: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((name.len() as u64).to_le_bytes());
    h.update(name.as_bytes());
    h.update((i as u64).to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("digest is 32 bytes"))
}

/// Completed and failed runs, keyed by `(entry name, repeat)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Digest of everything that determines the results.
    pub fingerprint: String,
    pub runs: Vec<RunRecord>,
}

impl Manifest {
    fn completed(&self) -> BTreeMap<(String, usize), &RunRecord> {
        self.runs
            .iter()
            .filter(|r| matches!(r.outcome, RunOutcome::Completed { .. }))
            .map(|r| ((r.entry.clone(), r.repeat), r))
            .collect()
    }

    fn record(&mut self, rec: RunRecord) {
        self.runs.retain(|r| !(r.entry == rec.entry && r.repeat == rec.repeat));
        self.runs.push(rec);
        self.runs.sort_by(|a, b| (&a.entry, a.repeat).cmp(&(&b.entry, b.repeat)));
    }
}

fn fingerprint(cfg: &ExperimentConfig, data: &LabeledDataset) -> Result<String, BenchError> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&data.spec)?);
    h.update(cfg.master_seed.to_le_bytes());
    h.update(serde_json::to_vec(&cfg.entries)?);
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(format!("writing {}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(io_err(format!("renaming to {}", path.display())))
}

pub fn load_manifest(path: &Path) -> Result<Option<Manifest>, BenchError> {
    match fs::read_to_string(path) {
        Ok(s) => serde_json::from_str(&s).map(Some).map_err(|e| BenchError::CorruptManifest(e.to_string())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(format!("reading {}", path.display()))(e)),
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_data(cfg: &ExperimentConfig, base: &Path) -> Result<LabeledDataset, BenchError> {
    Ok(match &cfg.dataset {
        DatasetSource::Path(p) => load_dataset(&resolve(base, p))?,
        DatasetSource::Generate(spec) => gen_dataset(spec)?,
    })
}

fn run_one(
    entry: &ExperimentEntry,
    repeat: usize,
    seed: u64,
    data: &LabeledDataset,
    run_dir: &Path,
) -> RunRecord {
    let outcome = (|| -> Result<RunOutcome, String> {
        let size = entry.train_size.map_or(data.train.len(), |s| s as usize);
        let cfg = TrainConfig { seed, ..entry.train.clone() };
        let trained = train_on(&entry.arch, &data.train[..size], &data.val, &cfg).map_err(|e| e.to_string())?;
        let scores = predict_scores(&trained.model, &data.test).map_err(|e| e.to_string())?;
        let metrics = evaluate(&scores, trained.threshold).map_err(|e| e.to_string())?;
        let stem = run_dir.join(format!("{}-{repeat}", entry.name));
        save_checkpoint(&stem.with_extension("ssnn"), &trained.model, trained.threshold).map_err(|e| e.to_string())?;
        fs::write(stem.with_extension("history.csv"), history_csv(&trained.history)).map_err(|e| e.to_string())?;
        let json = serde_json::to_string_pretty(&metrics).map_err(|e| e.to_string())?;
        fs::write(stem.with_extension("metrics.json"), json).map_err(|e| e.to_string())?;
        Ok(RunOutcome::Completed { metrics, best_epoch: trained.best_epoch, epochs: trained.history.len() })
    })()
    .unwrap_or_else(|error| RunOutcome::Failed { error });
    RunRecord { entry: entry.name.clone(), repeat, seed, outcome }
}

/// Runs every missing `(entry, repeat)` pair with `workers` concurrent
/// trainings, recording each in `manifest.json` as it finishes, then writes
/// `report.json`, `runs.csv`, `summary.csv` and the energy detector's
/// `baseline.json` to the output directory.
/// Relative paths in `cfg` resolve against `base`.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path, workers: usize) -> Result<ExperimentReport, BenchError> {
    cfg.validate()?;
    let data = load_data(cfg, base)?;
    for e in &cfg.entries {
        if let Some(size) = e.train_size {
            if size as usize > data.train.len() {
                return Err(BenchError::InvalidConfig(format!(
                    "entry {:?} wants {size} training windows; dataset has {}",
                    e.name,
                    data.train.len()
                )));
            }
        }
    }
    let out = resolve(base, &cfg.output_dir);
    let run_dir = out.join("runs");
    fs::create_dir_all(&run_dir).map_err(io_err(format!("creating {}", run_dir.display())))?;

    // The baseline uses exactly the split roles the classifiers see.
    let baseline = calibrate_and_evaluate(&energy_scores(&data.val), &energy_scores(&data.test), 0.01)?;

    let manifest_path = out.join("manifest.json");
    let fp = fingerprint(cfg, &data)?;
    let manifest = match load_manifest(&manifest_path)? {
        Some(m) if m.fingerprint != fp => return Err(BenchError::ManifestMismatch(out)),
        Some(m) => m,
        None => Manifest { fingerprint: fp, runs: Vec::new() },
    };
    let done = manifest.completed();
    let jobs: Vec<(&ExperimentEntry, usize)> = cfg
        .entries
        .iter()
        .flat_map(|e| (0..e.repeats).map(move |i| (e, i)))
        .filter(|(e, i)| !done.contains_key(&(e.name.clone(), *i)))
        .collect();
    drop(done);

    let manifest = Mutex::new(manifest);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        jobs.par_iter().try_for_each(|&(entry, i)| {
            let rec = run_one(entry, i, derive_seed(cfg.master_seed, &entry.name, i), &data, &run_dir);
            let mut m = manifest.lock().expect("manifest lock");
            m.record(rec);
            write_atomic(&manifest_path, serde_json::to_string_pretty(&*m)?.as_bytes())
        })
    })?;
    let manifest = manifest.into_inner().expect("manifest lock");
    if jobs.is_empty() {
        write_atomic(&manifest_path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    }

    let report = aggregate(cfg, &data.spec, baseline, &manifest.runs)?;
    write_atomic(&out.join("report.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    write_atomic(&out.join("baseline.json"), serde_json::to_string_pretty(&report.baseline)?.as_bytes())?;
    write_atomic(&out.join("runs.csv"), runs_csv(&report).as_bytes())?;
    write_atomic(&out.join("summary.csv"), summary_csv(&report).as_bytes())?;
    Ok(report)
}
