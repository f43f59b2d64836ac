//! Desk-scale spectrum-sensing benchmark.
//!
//! - [`sigsim`]: labeled QPSK/AWGN sensing-window datasets.
//! - [`detect`]: energy detector, threshold calibration, detection metrics.
//! - [`costmodel`]: closed-form operation counts and memory requirements.
//! - [`nn`]: from-scratch FC, CNN, LSTM and BiLSTM classifiers.
//! - [`bench`]: repeated-seed experiment protocol and report rendering.

pub mod bench;
pub mod costmodel;
pub mod detect;
pub mod nn;
pub mod sigsim;

pub use bench::{ExperimentConfig, ExperimentReport};
pub use costmodel::{ArchSpec, CostReport};
pub use detect::{Metrics, ScoreSet};
pub use nn::{Model, TrainConfig, TrainedModel};
pub use sigsim::{DatasetSpec, Label, LabeledDataset, SensingWindow, SignalParams};
