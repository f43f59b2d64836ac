//! Synthetic sensing-window dataset: QPSK symbols, root-raised-cosine pulse
//! shaping, AWGN and deterministic per-example seeding.

mod dataset;
mod io;
mod modem;
mod params;
mod rrc;
mod window;

use thiserror::Error;

pub use dataset::{example_rng, gen_dataset, gen_split, label_for_index, DatasetSpec, LabeledDataset, Split};
pub use io::{load_dataset, read_dataset, save_dataset, write_dataset, FORMAT_VERSION, MAGIC};
pub use modem::{add_awgn, gen_qpsk_symbols, qpsk_point, shape_pulse};
pub use params::{SignalParams, SnrReference};
pub use rrc::{rrc_impulse, rrc_taps};
pub use window::{make_window, Label, SensingWindow, WindowSynth};

#[derive(Debug, Error)]
pub enum SigsimError {
    #[error("invalid signal parameters: {0}")]
    InvalidParams(String),
    #[error("{split:?} split has {count} examples; counts must be even so busy and idle are balanced")]
    OddSplit { split: Split, count: u64 },
    #[error("not a dataset file (magic bytes {0:02x?})")]
    BadMagic([u8; 4]),
    #[error("unsupported dataset format version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("corrupt dataset header: {0}")]
    CorruptHeader(String),
    #[error("dataset file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("invalid label byte {0} in dataset payload")]
    BadLabel(u8),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
