//! Tuned and compute-constrained architectures with the I/Q input encoding
//! (222 inputs for FC, 2 channels × 111 for CNN, 111 steps × 2 for RNN).

use super::arch::{ArchSpec, CnnArch, FcArch, RnnArch};
use super::NamedArch;

pub const WINDOW_LEN: usize = 111;

/// Four hidden layers of 64; used at every training-set size and under the
/// compute constraint.
pub fn fc_standard() -> ArchSpec {
    FcArch::new(2 * WINDOW_LEN, vec![64; 4], 1).into()
}

/// VGG-style CNN over the 2-channel window.
pub fn cnn(block_channels: &[usize], pool: usize) -> ArchSpec {
    CnnArch::vgg(WINDOW_LEN, 2, block_channels, pool, 1).into()
}

/// Single-layer LSTM over the 111-step I/Q sequence.
pub fn rnn(hidden: usize) -> ArchSpec {
    RnnArch::new(WINDOW_LEN, 2, vec![hidden], 1, false).into()
}

pub fn birnn(hidden: usize) -> ArchSpec {
    RnnArch::new(WINDOW_LEN, 2, vec![hidden], 1, true).into()
}

/// Two blocks of 32 and 64 filters, pool 4 (1E+03 and 1E+05 training sets).
pub fn cnn_tuned_small() -> ArchSpec {
    cnn(&[32, 64], 4)
}

/// Three blocks of 16, 32 and 64 filters, pool 2 (8E+06 training set).
pub fn cnn_tuned_large() -> ArchSpec {
    cnn(&[16, 32, 64], 2)
}

/// One block of 4 filters, pool 4.
pub fn cnn_constrained() -> ArchSpec {
    cnn(&[4], 4)
}

/// Tuned architectures for a training-set size (1_000, 100_000 or 8_000_000).
pub fn tuned(train_size: u64) -> Option<Vec<NamedArch>> {
    let (cnn_arch, rnn_h, birnn_h) = match train_size {
        1_000 => (cnn_tuned_small(), 64, 64),
        100_000 => (cnn_tuned_small(), 128, 64),
        8_000_000 => (cnn_tuned_large(), 128, 128),
        _ => return None,
    };
    Some(vec![
        NamedArch::new("fc", fc_standard()),
        NamedArch::new("cnn", cnn_arch),
        NamedArch::new("rnn", rnn(rnn_h)),
        NamedArch::new("birnn", birnn(birnn_h)),
    ])
}

/// Compute-constrained set.
pub fn constrained() -> Vec<NamedArch> {
    vec![
        NamedArch::new("fc", fc_standard()),
        NamedArch::new("cnn", cnn_constrained()),
        NamedArch::new("rnn", rnn(6)),
        NamedArch::new("birnn", birnn(4)),
    ]
}
