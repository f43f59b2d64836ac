//! Closed-form forward-pass cost of each family. A FLOP is one multiply or
//! one add; activation functions are free; memory is counted in floats.

use serde::{Deserialize, Serialize};

use super::arch::{ArchSpec, CnnArch, CnnLayer, FcArch, FeatureShape, RnnArch};
use super::CostError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub n_op: u64,
    pub m_peak: u64,
    pub m_total: u64,
    /// CNN only: spatial length after each hidden layer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spatial_lengths: Vec<usize>,
}

fn u(v: usize) -> u64 {
    v as u64
}

/// Hidden layer `k` (1-based) of a CNN with the shape entering it.
struct CnnStep {
    layer: CnnLayer,
    prev: FeatureShape,
    cur: FeatureShape,
}

fn cnn_steps(a: &CnnArch) -> Result<Vec<CnnStep>, CostError> {
    let shapes = a.shapes()?;
    let mut prev = a.input_shape();
    Ok(a
        .layers
        .iter()
        .zip(shapes)
        .map(|(&layer, cur)| {
            let step = CnnStep { layer, prev, cur };
            prev = cur;
            step
        })
        .collect())
}

fn fc_op(a: &FcArch) -> u64 {
    let w = a.widths();
    let hidden: u64 = w.windows(2).map(|p| 2 * u(p[0]) * u(p[1])).sum();
    hidden + 2 * u(*w.last().unwrap()) * u(a.output_size)
}

fn fc_peak(a: &FcArch) -> u64 {
    let mut w = a.widths();
    w.push(a.output_size);
    w.windows(2).map(|p| u(p[0]) * u(p[1]) + 2 * u(p[1]) + u(p[0])).max().unwrap_or(0)
}

fn fc_total(a: &FcArch) -> u64 {
    let w = a.widths();
    let hidden: u64 = w.windows(2).map(|p| u(p[0]) * u(p[1]) + 2 * u(p[1])).sum();
    u(a.input_size) + hidden + u(*w.last().unwrap()) * u(a.output_size) + 2 * u(a.output_size)
}

fn cnn_op(a: &CnnArch) -> Result<u64, CostError> {
    let mut total = 0;
    for s in cnn_steps(a)? {
        let (c, n) = (u(s.cur.channels), u(s.cur.len));
        total += match s.layer {
            CnnLayer::Conv { kernel, .. } => 2 * u(s.prev.channels) * c * u(kernel) * n,
            CnnLayer::Pool { factor } => c * n * (u(factor) - 1),
            CnnLayer::BatchNorm => 2 * c * n,
        };
    }
    let last = u(a.output_shape()?.size());
    let dense = u(a.dense_size()?);
    Ok(total + 2 * last * dense + 2 * dense * u(a.output_size))
}

fn cnn_peak(a: &CnnArch) -> Result<u64, CostError> {
    let mut conv = 0;
    let mut bn = 0;
    for s in cnn_steps(a)? {
        let (c, n) = (u(s.cur.channels), u(s.cur.len));
        match s.layer {
            CnnLayer::Conv { kernel, .. } => {
                let prev_c = u(s.prev.channels);
                conv = conv.max(u(s.prev.size()) + c * n + c * (prev_c * u(kernel) + 1));
            }
            CnnLayer::BatchNorm => bn = bn.max(3 * c * n),
            CnnLayer::Pool { .. } => {}
        }
    }
    let last = u(a.output_shape()?.size());
    let dense_size = u(a.dense_size()?);
    let dense = last * dense_size + last + 2 * dense_size;
    Ok(conv.max(bn).max(dense))
}

fn cnn_total(a: &CnnArch) -> Result<u64, CostError> {
    let mut total = u(a.input_shape().size());
    for s in cnn_steps(a)? {
        let (c, n) = (u(s.cur.channels), u(s.cur.len));
        total += match s.layer {
            CnnLayer::Conv { kernel, .. } => c * (u(s.prev.channels) * u(kernel) + 1) + c * n,
            CnnLayer::Pool { .. } => u(s.prev.size()) + c * n,
            CnnLayer::BatchNorm => 2 * c * n,
        };
    }
    let last = u(a.output_shape()?.size());
    let dense = u(a.dense_size()?);
    let out = u(a.output_size);
    Ok(total + last * dense + 2 * dense + dense * out + 2 * out)
}

/// Per-step LSTM FLOPs summed over layers: `Σ 8(N_{k-1}+N_k)N_k + 4N_k`.
fn lstm_step_ops(a: &RnnArch) -> u64 {
    a.sizes().windows(2).map(|p| 8 * (u(p[0]) + u(p[1])) * u(p[1]) + 4 * u(p[1])).sum()
}

fn rnn_op(a: &RnnArch) -> u64 {
    let dirs = u(a.directions());
    let top = u(*a.hidden_sizes.last().unwrap());
    dirs * u(a.seq_len) * lstm_step_ops(a) + 2 * dirs * top * u(a.output_size)
}

fn rnn_peak(a: &RnnArch) -> u64 {
    let single = a
        .sizes()
        .windows(2)
        .map(|p| 4 * (u(p[0]) + u(p[1])) * u(p[1]) + u(p[0]) + 6 * u(p[1]))
        .max()
        .unwrap_or(0);
    u(a.directions()) * single
}

fn rnn_total(a: &RnnArch) -> u64 {
    let dirs = u(a.directions());
    let layers: u64 = a.sizes().windows(2).map(|p| 4 * (u(p[0]) + u(p[1])) * u(p[1]) + 10 * u(p[1])).sum();
    let top = u(*a.hidden_sizes.last().unwrap());
    let out = u(a.output_size);
    u(a.input_features) + dirs * layers + dirs * top * out + 2 * out
}

/// FLOPs of one forward pass on a single input.
pub fn op_count(arch: &ArchSpec) -> Result<u64, CostError> {
    arch.validate()?;
    match arch {
        ArchSpec::Fc(a) => Ok(fc_op(a)),
        ArchSpec::Cnn(a) => cnn_op(a),
        ArchSpec::Rnn(a) => Ok(rnn_op(a)),
    }
}

/// Peak live memory with in-place bias/activation/batch-norm, buffers freed
/// after use, and each layer executed fully in parallel.
pub fn mem_peak(arch: &ArchSpec) -> Result<u64, CostError> {
    arch.validate()?;
    match arch {
        ArchSpec::Fc(a) => Ok(fc_peak(a)),
        ArchSpec::Cnn(a) => cnn_peak(a),
        ArchSpec::Rnn(a) => Ok(rnn_peak(a)),
    }
}

/// Memory with every parameter and intermediate state pre-allocated.
pub fn mem_total(arch: &ArchSpec) -> Result<u64, CostError> {
    arch.validate()?;
    match arch {
        ArchSpec::Fc(a) => Ok(fc_total(a)),
        ArchSpec::Cnn(a) => cnn_total(a),
        ArchSpec::Rnn(a) => Ok(rnn_total(a)),
    }
}

pub fn cost_report(arch: &ArchSpec) -> Result<CostReport, CostError> {
    let spatial_lengths = match arch {
        ArchSpec::Cnn(a) => a.shapes()?.iter().map(|s| s.len).collect(),
        _ => Vec::new(),
    };
    Ok(CostReport { n_op: op_count(arch)?, m_peak: mem_peak(arch)?, m_total: mem_total(arch)?, spatial_lengths })
}
