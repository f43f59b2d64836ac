//! Real-valued input layouts for the three network families.
//!
//! - FC: `[2·n]`, interleaved `re0, im0, re1, im1, ...`
//! - CNN: `[2, n]`, channel 0 is I and channel 1 is Q
//! - RNN: `[n, 2]`, one `(I, Q)` feature pair per time step
//!
//! Batches prepend a leading example axis.

use ndarray::{Array2, Array3, ArrayD};
use num_complex::Complex32;
use serde::{Deserialize, Serialize};

use crate::costmodel::ArchSpec;
use crate::sigsim::SensingWindow;

pub type Tensor = ArrayD<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fc,
    Cnn,
    Rnn,
}

impl Family {
    pub fn of(arch: &ArchSpec) -> Self {
        match arch {
            ArchSpec::Fc(_) => Family::Fc,
            ArchSpec::Cnn(_) => Family::Cnn,
            ArchSpec::Rnn(_) => Family::Rnn,
        }
    }
}

/// Encodes one window (no batch axis).
pub fn encode_input(w: &SensingWindow, family: Family) -> Tensor {
    encode_batch(std::slice::from_ref(w), family).index_axis_move(ndarray::Axis(0), 0)
}

/// Encodes windows of equal length into `[batch, ...]`.
pub fn encode_batch(windows: &[SensingWindow], family: Family) -> Tensor {
    encode_refs(&windows.iter().collect::<Vec<_>>(), family)
}

/// Encodes `windows[i]` for each `i` in `indices`, in that order.
pub fn encode_selected(windows: &[SensingWindow], indices: &[usize], family: Family) -> Tensor {
    encode_refs(&indices.iter().map(|&i| &windows[i]).collect::<Vec<_>>(), family)
}

fn encode_refs(windows: &[&SensingWindow], family: Family) -> Tensor {
    let n = windows.first().map_or(0, |w| w.len());
    let b = windows.len();
    match family {
        Family::Fc => {
            let mut out = Array2::<f64>::zeros((b, 2 * n));
            for (mut row, w) in out.outer_iter_mut().zip(windows) {
                for (i, z) in w.samples.iter().enumerate() {
                    row[2 * i] = z.re as f64;
                    row[2 * i + 1] = z.im as f64;
                }
            }
            out.into_dyn()
        }
        Family::Cnn => {
            let mut out = Array3::<f64>::zeros((b, 2, n));
            for (mut ex, w) in out.outer_iter_mut().zip(windows) {
                for (i, z) in w.samples.iter().enumerate() {
                    ex[[0, i]] = z.re as f64;
                    ex[[1, i]] = z.im as f64;
                }
            }
            out.into_dyn()
        }
        Family::Rnn => {
            let mut out = Array3::<f64>::zeros((b, n, 2));
            for (mut ex, w) in out.outer_iter_mut().zip(windows) {
                for (i, z) in w.samples.iter().enumerate() {
                    ex[[i, 0]] = z.re as f64;
                    ex[[i, 1]] = z.im as f64;
                }
            }
            out.into_dyn()
        }
    }
}

/// Inverse of the FC layout.
pub fn decode_fc(x: &Tensor) -> Vec<Complex32> {
    x.as_slice()
        .expect("standard layout")
        .chunks_exact(2)
        .map(|c| Complex32::new(c[0] as f32, c[1] as f32))
        .collect()
}

pub(crate) fn expected_shape(arch: &ArchSpec) -> Vec<usize> {
    match arch {
        ArchSpec::Fc(a) => vec![a.input_size],
        ArchSpec::Cnn(a) => vec![a.input_channels, a.input_len],
        ArchSpec::Rnn(a) => vec![a.seq_len, a.input_features],
    }
}
