//! Energy-detector baseline, false-alarm calibration and detection metrics.
//!
//! Every classifier in the crate is scored the same way: a real statistic per
//! window, declared busy when `score > threshold`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sigsim::{Label, SensingWindow};

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("no idle scores to calibrate on")]
    EmptyCalibrationSet,
    #[error("target false-alarm rate {0} is outside (0, 1)")]
    InvalidTarget(f64),
    #[error("score set has {scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("no {0:?} examples: conditional probability undefined")]
    MissingClass(Label),
}

/// Decision statistics paired with ground truth.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self, DetectError> {
        if scores.len() != labels.len() {
            return Err(DetectError::LengthMismatch { scores: scores.len(), labels: labels.len() });
        }
        Ok(Self { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores_for(&self, label: Label) -> impl Iterator<Item = f64> + '_ {
        self.scores.iter().zip(&self.labels).filter(move |(_, l)| **l == label).map(|(s, _)| *s)
    }
}

/// Detection metrics at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub p_d: f64,
    pub p_fa: f64,
    pub p_fd: f64,
    pub threshold: f64,
    pub n_busy: u64,
    pub n_idle: u64,
}

/// Total received energy `Σ|x_i|²`, accumulated in f64.
pub fn energy_statistic(w: &SensingWindow) -> f64 {
    w.samples.iter().map(|z| (z.re as f64).powi(2) + (z.im as f64).powi(2)).sum()
}

pub fn energy_scores(windows: &[SensingWindow]) -> ScoreSet {
    ScoreSet {
        scores: windows.iter().map(energy_statistic).collect(),
        labels: windows.iter().map(|w| w.label).collect(),
    }
}

/// Empirical `(1 - target_pfa)` quantile of idle scores, rounding to the
/// higher order statistic. At most `floor(target_pfa · n)` calibration
/// scores lie strictly above the returned threshold.
pub fn calibrate_threshold(idle_scores: &[f64], target_pfa: f64) -> Result<f64, DetectError> {
    if idle_scores.is_empty() {
        return Err(DetectError::EmptyCalibrationSet);
    }
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(DetectError::InvalidTarget(target_pfa));
    }
    let mut sorted = idle_scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let allowed = ((target_pfa * n as f64).floor() as usize).min(n - 1);
    Ok(sorted[n - 1 - allowed])
}

pub fn evaluate(scores: &ScoreSet, threshold: f64) -> Result<Metrics, DetectError> {
    if scores.scores.len() != scores.labels.len() {
        return Err(DetectError::LengthMismatch { scores: scores.scores.len(), labels: scores.labels.len() });
    }
    let (mut busy, mut idle, mut hits, mut alarms) = (0u64, 0u64, 0u64, 0u64);
    for (&s, &l) in scores.scores.iter().zip(&scores.labels) {
        let decide_busy = s > threshold;
        match l {
            Label::Busy => {
                busy += 1;
                hits += decide_busy as u64;
            }
            Label::Idle => {
                idle += 1;
                alarms += decide_busy as u64;
            }
        }
    }
    if busy == 0 {
        return Err(DetectError::MissingClass(Label::Busy));
    }
    if idle == 0 {
        return Err(DetectError::MissingClass(Label::Idle));
    }
    let p_d = hits as f64 / busy as f64;
    Ok(Metrics {
        p_d,
        p_fa: alarms as f64 / idle as f64,
        p_fd: 1.0 - p_d,
        threshold,
        n_busy: busy,
        n_idle: idle,
    })
}

/// Calibrates on the idle part of `calibration`, then evaluates `target`.
pub fn calibrate_and_evaluate(
    calibration: &ScoreSet,
    target: &ScoreSet,
    target_pfa: f64,
) -> Result<Metrics, DetectError> {
    let idle: Vec<f64> = calibration.scores_for(Label::Idle).collect();
    let threshold = calibrate_threshold(&idle, target_pfa)?;
    evaluate(target, threshold)
}
