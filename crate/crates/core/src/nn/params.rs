use ndarray::{Array1, ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NnError;
use crate::costmodel::{ArchSpec, CnnLayer};

/// How a tensor is initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Init {
    Zeros,
    Ones,
    /// Uniform ±sqrt(6 / fan_in), for layers feeding a ReLU.
    He { fan_in: usize },
    /// Uniform ±sqrt(6 / (fan_in + fan_out)).
    Glorot { fan_in: usize, fan_out: usize },
    /// LSTM bias: forget-gate block set to 1, others 0.
    ForgetBias { hidden: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Slot {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

/// Running batch-norm statistics (not learned; updated by momentum).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
}

impl RunningStats {
    pub fn new(channels: usize) -> Self {
        Self { mean: Array1::zeros(channels), var: Array1::ones(channels) }
    }
}

/// Learned tensors in a fixed, architecture-determined order, plus
/// batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: ArchSpec,
    pub names: Vec<String>,
    pub tensors: Vec<ArrayD<f64>>,
    pub bn_running: Vec<RunningStats>,
}

pub(crate) fn layout(arch: &ArchSpec) -> Result<(Vec<Slot>, Vec<usize>), NnError> {
    arch.validate()?;
    if arch.output_size() != 1 {
        return Err(NnError::Unsupported(format!(
            "classifiers emit a single logit; output_size is {}",
            arch.output_size()
        )));
    }
    let mut slots = Vec::new();
    let mut bn_channels = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, init: Init| slots.push(Slot { name, shape, init });
    match arch {
        ArchSpec::Fc(a) => {
            let w = a.widths();
            for k in 1..w.len() {
                push(format!("fc{k}.w"), vec![w[k], w[k - 1]], Init::He { fan_in: w[k - 1] });
                push(format!("fc{k}.b"), vec![w[k]], Init::Zeros);
            }
            let last = *w.last().unwrap();
            push("out.w".into(), vec![1, last], Init::Glorot { fan_in: last, fan_out: 1 });
            push("out.b".into(), vec![1], Init::Zeros);
        }
        ArchSpec::Cnn(a) => {
            let shapes = a.shapes()?;
            let mut prev_c = a.input_channels;
            for (k, (layer, shape)) in a.layers.iter().zip(&shapes).enumerate() {
                let k = k + 1;
                match *layer {
                    CnnLayer::Conv { channels, kernel } => {
                        push(
                            format!("conv{k}.w"),
                            vec![channels, prev_c, kernel],
                            Init::He { fan_in: prev_c * kernel },
                        );
                        push(format!("conv{k}.b"), vec![channels], Init::Zeros);
                    }
                    CnnLayer::BatchNorm => {
                        push(format!("bn{k}.gamma"), vec![shape.channels], Init::Ones);
                        push(format!("bn{k}.beta"), vec![shape.channels], Init::Zeros);
                        bn_channels.push(shape.channels);
                    }
                    CnnLayer::Pool { .. } => {}
                }
                prev_c = shape.channels;
            }
            let flat = a.output_shape()?.size();
            let dense = a.dense_size()?;
            push("dense.w".into(), vec![dense, flat], Init::He { fan_in: flat });
            push("dense.b".into(), vec![dense], Init::Zeros);
            push("out.w".into(), vec![1, dense], Init::Glorot { fan_in: dense, fan_out: 1 });
            push("out.b".into(), vec![1], Init::Zeros);
        }
        ArchSpec::Rnn(a) => {
            let sizes = a.sizes();
            for d in 0..a.directions() {
                for k in 1..sizes.len() {
                    let (n_in, h) = (sizes[k - 1], sizes[k]);
                    push(format!("lstm{d}.{k}.w_ih"), vec![4 * h, n_in], Init::Glorot { fan_in: n_in, fan_out: h });
                    push(format!("lstm{d}.{k}.w_hh"), vec![4 * h, h], Init::Glorot { fan_in: h, fan_out: h });
                    push(format!("lstm{d}.{k}.b"), vec![4 * h], Init::ForgetBias { hidden: h });
                }
            }
            let readout = a.directions() * sizes.last().unwrap();
            push("out.w".into(), vec![1, readout], Init::Glorot { fan_in: readout, fan_out: 1 });
            push("out.b".into(), vec![1], Init::Zeros);
        }
    }
    Ok((slots, bn_channels))
}

fn fill(slot: &Slot, rng: &mut ChaCha8Rng) -> ArrayD<f64> {
    let mut t = ArrayD::zeros(IxDyn(&slot.shape));
    match slot.init {
        Init::Zeros => {}
        Init::Ones => t.fill(1.0),
        Init::He { fan_in } => {
            let lim = (6.0 / fan_in as f64).sqrt();
            t.mapv_inplace(|_| rng.random_range(-lim..lim));
        }
        Init::Glorot { fan_in, fan_out } => {
            let lim = (6.0 / (fan_in + fan_out) as f64).sqrt();
            t.mapv_inplace(|_| rng.random_range(-lim..lim));
        }
        Init::ForgetBias { hidden } => {
            t.slice_mut(ndarray::s![hidden..2 * hidden]).fill(1.0);
        }
    }
    t
}

impl ModelParams {
    /// Randomly initialized parameters for `arch`.
    pub fn init(arch: &ArchSpec, seed: u64) -> Result<Self, NnError> {
        let (slots, bn) = layout(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            arch: arch.clone(),
            names: slots.iter().map(|s| s.name.clone()).collect(),
            tensors: slots.iter().map(|s| fill(s, &mut rng)).collect(),
            bn_running: bn.into_iter().map(RunningStats::new).collect(),
        })
    }

    /// Every learned value zero (batch-norm running stats at their defaults).
    pub fn zeros(arch: &ArchSpec) -> Result<Self, NnError> {
        let mut p = Self::init(arch, 0)?;
        p.tensors.iter_mut().for_each(|t| t.fill(0.0));
        Ok(p)
    }

    pub fn zeros_like(&self) -> Vec<ArrayD<f64>> {
        self.tensors.iter().map(|t| ArrayD::zeros(t.raw_dim())).collect()
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}
