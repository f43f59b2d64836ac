//! Reference implementations used to check the closed-form cost model.
//!
//! `counted_forward` runs a naive forward pass over a scalar type that counts
//! every multiply, add and comparison. `AllocSim` replays a buffer schedule and
//! measures peak and total memory directly.

#![allow(dead_code)]

use std::cell::Cell;
use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use nnsense::costmodel::{ArchSpec, CnnArch, CnnLayer, FcArch, RnnArch};

thread_local! {
    static FLOPS: Cell<u64> = const { Cell::new(0) };
}

fn tick() {
    FLOPS.with(|f| f.set(f.get() + 1));
}

/// f64 that counts arithmetic. Activation functions go through `apply`,
/// which is free.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Counted(pub f64);

impl Add for Counted {
    type Output = Counted;
    fn add(self, o: Counted) -> Counted {
        tick();
        Counted(self.0 + o.0)
    }
}

impl Mul for Counted {
    type Output = Counted;
    fn mul(self, o: Counted) -> Counted {
        tick();
        Counted(self.0 * o.0)
    }
}

impl Counted {
    fn max(self, o: Counted) -> Counted {
        tick();
        if o.0 > self.0 {
            o
        } else {
            self
        }
    }

    fn apply(self, f: impl Fn(f64) -> f64) -> Counted {
        Counted(f(self.0))
    }
}

/// Deterministic weight source (values do not affect the count).
struct Weights(u64);

impl Weights {
    fn next(&mut self) -> Counted {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        Counted(((self.0 >> 11) as f64 / (1u64 << 53) as f64) - 0.5)
    }
}

fn relu(x: Counted) -> Counted {
    x.apply(|v| v.max(0.0))
}

fn dense(x: &[Counted], out: usize, w: &mut Weights) -> Vec<Counted> {
    (0..out)
        .map(|_| {
            let mut acc = w.next();
            for &xi in x {
                acc = acc + w.next() * xi;
            }
            acc
        })
        .collect()
}

fn fc_forward(a: &FcArch, w: &mut Weights) -> f64 {
    let mut x: Vec<Counted> = (0..a.input_size).map(|_| w.next()).collect();
    for &width in &a.hidden_widths {
        x = dense(&x, width, w).into_iter().map(relu).collect();
    }
    dense(&x, a.output_size, w)[0].0
}

fn cnn_forward(a: &CnnArch, w: &mut Weights) -> f64 {
    // x[channel][position]
    let mut x: Vec<Vec<Counted>> =
        (0..a.input_channels).map(|_| (0..a.input_len).map(|_| w.next()).collect()).collect();
    for layer in &a.layers {
        x = match *layer {
            CnnLayer::Conv { channels, kernel } => {
                let n = x[0].len();
                let left = (kernel - 1) / 2;
                let padded: Vec<Vec<Counted>> = x
                    .iter()
                    .map(|row| {
                        let mut p = vec![Counted(0.0); left];
                        p.extend_from_slice(row);
                        p.resize(n + kernel - 1, Counted(0.0));
                        p
                    })
                    .collect();
                (0..channels)
                    .map(|_| {
                        let weights: Vec<Vec<Counted>> =
                            padded.iter().map(|_| (0..kernel).map(|_| w.next()).collect()).collect();
                        let bias = w.next();
                        (0..n)
                            .map(|pos| {
                                let mut acc = bias;
                                for (row, kw) in padded.iter().zip(&weights) {
                                    for t in 0..kernel {
                                        acc = acc + kw[t] * row[pos + t];
                                    }
                                }
                                relu(acc)
                            })
                            .collect()
                    })
                    .collect()
            }
            CnnLayer::BatchNorm => x
                .iter()
                .map(|row| {
                    // Inference-mode batch norm folded to one affine map per channel.
                    let (scale, shift) = (w.next(), w.next());
                    row.iter().map(|&v| v * scale + shift).collect()
                })
                .collect(),
            CnnLayer::Pool { factor } => x
                .iter()
                .map(|row| {
                    (0..row.len() / factor)
                        .map(|i| {
                            let mut m = row[i * factor];
                            for j in 1..factor {
                                m = m.max(row[i * factor + j]);
                            }
                            m
                        })
                        .collect()
                })
                .collect(),
        };
    }
    let flat: Vec<Counted> = x.into_iter().flatten().collect();
    let dense_size = a.dense_size().unwrap();
    let hidden: Vec<Counted> = dense(&flat, dense_size, w).into_iter().map(relu).collect();
    dense(&hidden, a.output_size, w)[0].0
}

struct CountedLstm {
    hidden: usize,
    // rows: gate-major (i, f, g, o) × hidden; each row has input then recurrent weights
    rows: Vec<(Counted, Vec<Counted>)>,
}

impl CountedLstm {
    fn new(input: usize, hidden: usize, w: &mut Weights) -> Self {
        let rows = (0..4 * hidden).map(|_| (w.next(), (0..input + hidden).map(|_| w.next()).collect())).collect();
        Self { hidden, rows }
    }

    fn run(&self, seq: &[Vec<Counted>]) -> Vec<Vec<Counted>> {
        let n = self.hidden;
        let mut h = vec![Counted(0.0); n];
        let mut c = vec![Counted(0.0); n];
        let mut outs = Vec::with_capacity(seq.len());
        for x in seq {
            let inputs: Vec<Counted> = x.iter().chain(&h).copied().collect();
            let pre: Vec<Counted> = self
                .rows
                .iter()
                .map(|(b, row)| {
                    let mut acc = *b;
                    for (wi, xi) in row.iter().zip(&inputs) {
                        acc = acc + *wi * *xi;
                    }
                    acc
                })
                .collect();
            let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
            for j in 0..n {
                let i_g = pre[j].apply(sig);
                let f_g = pre[n + j].apply(sig);
                let g_g = pre[2 * n + j].apply(f64::tanh);
                let o_g = pre[3 * n + j].apply(sig);
                c[j] = f_g * c[j] + i_g * g_g;
                h[j] = o_g * c[j].apply(f64::tanh);
            }
            outs.push(h.clone());
        }
        outs
    }
}

fn rnn_forward(a: &RnnArch, w: &mut Weights) -> f64 {
    let seq: Vec<Vec<Counted>> =
        (0..a.seq_len).map(|_| (0..a.input_features).map(|_| w.next()).collect()).collect();
    let mut finals = Vec::new();
    for dir in 0..a.directions() {
        let mut s = seq.clone();
        if dir == 1 {
            s.reverse();
        }
        let mut input = a.input_features;
        for &hsize in &a.hidden_sizes {
            s = CountedLstm::new(input, hsize, w).run(&s);
            input = hsize;
        }
        finals.extend(s.last().unwrap().iter().copied());
    }
    dense(&finals, a.output_size, w)[0].0
}

/// Literal count of multiplies, adds and comparisons in one forward pass.
pub fn counted_forward(arch: &ArchSpec, seed: u64) -> u64 {
    FLOPS.with(|f| f.set(0));
    let mut w = Weights(seed);
    let _ = match arch {
        ArchSpec::Fc(a) => fc_forward(a, &mut w),
        ArchSpec::Cnn(a) => cnn_forward(a, &mut w),
        ArchSpec::Rnn(a) => rnn_forward(a, &mut w),
    };
    FLOPS.with(|f| f.get())
}

/// Buffer schedule replay. Buffers are named roles with a size; a step lists
/// the `(role, instance)` pairs it touches. Peak memory frees everything
/// after each step, so it is the largest step footprint (distinct instances).
/// Total memory pre-allocates one buffer per role and never frees.
#[derive(Default)]
pub struct AllocSim {
    sizes: BTreeMap<String, u64>,
    steps: Vec<Vec<(String, usize)>>,
}

impl AllocSim {
    pub fn buffer(&mut self, role: impl Into<String>, size: usize) -> String {
        let role = role.into();
        assert!(self.sizes.insert(role.clone(), size as u64).is_none(), "duplicate role {role}");
        role
    }

    pub fn step(&mut self, live: &[(&str, usize)]) {
        self.steps.push(live.iter().map(|(r, i)| (r.to_string(), *i)).collect());
    }

    pub fn peak(&self) -> u64 {
        self.steps
            .iter()
            .map(|s| {
                let mut uniq = s.clone();
                uniq.sort();
                uniq.dedup();
                uniq.iter().map(|(r, _)| self.sizes[r]).sum()
            })
            .max()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.sizes.values().sum()
    }
}

fn fc_schedule(a: &FcArch) -> AllocSim {
    let mut sim = AllocSim::default();
    let mut x = sim.buffer("input", a.input_size);
    let mut width = a.input_size;
    let layers: Vec<usize> = a.hidden_widths.iter().copied().chain([a.output_size]).collect();
    for (k, &out) in layers.iter().enumerate() {
        let wt = sim.buffer(format!("w{k}"), width * out);
        let b = sim.buffer(format!("b{k}"), out);
        let y = sim.buffer(format!("y{k}"), out);
        // bias add and activation run in place on y
        sim.step(&[(&x, 0), (&wt, 0), (&b, 0), (&y, 0)]);
        x = y;
        width = out;
    }
    sim
}

fn cnn_schedule(a: &CnnArch) -> AllocSim {
    let mut sim = AllocSim::default();
    let shapes = a.shapes().unwrap();
    let mut x = sim.buffer("input", a.input_channels * a.input_len);
    let mut prev = a.input_shape();
    for (k, (layer, cur)) in a.layers.iter().zip(&shapes).enumerate() {
        match *layer {
            CnnLayer::Conv { kernel, .. } => {
                let wt = sim.buffer(format!("conv_w{k}"), cur.channels * prev.channels * kernel);
                let b = sim.buffer(format!("conv_b{k}"), cur.channels);
                let y = sim.buffer(format!("conv_y{k}"), cur.size());
                sim.step(&[(&x, 0), (&wt, 0), (&b, 0), (&y, 0)]);
                x = y;
            }
            CnnLayer::BatchNorm => {
                // scale and shift broadcast to every element; normalization in place
                let scale = sim.buffer(format!("bn_scale{k}"), cur.size());
                let shift = sim.buffer(format!("bn_shift{k}"), cur.size());
                sim.step(&[(&x, 0), (&scale, 0), (&shift, 0)]);
            }
            CnnLayer::Pool { .. } => {
                let stage = sim.buffer(format!("pool_in{k}"), prev.size());
                let y = sim.buffer(format!("pool_y{k}"), cur.size());
                sim.step(&[(&x, 0), (&stage, 0)]);
                sim.step(&[(&stage, 0), (&y, 0)]);
                x = y;
            }
        }
        prev = *cur;
    }
    let dense = a.dense_size().unwrap();
    let wt = sim.buffer("dense_w", prev.size() * dense);
    let b = sim.buffer("dense_b", dense);
    let y = sim.buffer("dense_y", dense);
    sim.step(&[(&x, 0), (&wt, 0), (&b, 0), (&y, 0)]);
    let wo = sim.buffer("out_w", dense * a.output_size);
    let bo = sim.buffer("out_b", a.output_size);
    let yo = sim.buffer("out_y", a.output_size);
    sim.step(&[(&y, 0), (&wo, 0), (&bo, 0), (&yo, 0)]);
    sim
}

fn rnn_schedule(a: &RnnArch) -> AllocSim {
    let mut sim = AllocSim::default();
    let dirs = a.directions();
    // One input-step vector; both directions read it (at different time
    // steps) concurrently.
    let input = sim.buffer("x_t", a.input_features);
    let mut below: Vec<(String, usize)> = (0..dirs).map(|d| (input.clone(), d)).collect();
    let sizes = a.sizes();
    for k in 1..sizes.len() {
        let (n_in, n_h) = (sizes[k - 1], sizes[k]);
        let mut init = Vec::new();
        let mut main = Vec::new();
        let mut outs = Vec::new();
        for (d, below_d) in below.iter().enumerate() {
            let wt = sim.buffer(format!("w{d}_{k}"), 4 * (n_in + n_h) * n_h);
            let b = sim.buffer(format!("b{d}_{k}"), 4 * n_h);
            let gates = sim.buffer(format!("gates{d}_{k}"), 4 * n_h);
            let h = sim.buffer(format!("h{d}_{k}"), n_h);
            let c = sim.buffer(format!("c{d}_{k}"), n_h);
            init.push((b, 0));
            init.push((gates.clone(), 0));
            main.extend([(wt, 0), below_d.clone(), (gates, 0), (h.clone(), 0), (c, 0)]);
            outs.push((h, 0));
        }
        // bias preloads the gate accumulators, then both directions step in parallel
        sim.step(&as_refs(&init));
        sim.step(&as_refs(&main));
        below = outs;
    }
    let top = *a.hidden_sizes.last().unwrap();
    let wo = sim.buffer("out_w", dirs * top * a.output_size);
    let bo = sim.buffer("out_b", a.output_size);
    let yo = sim.buffer("out_y", a.output_size);
    let mut live: Vec<(&str, usize)> = below.iter().map(|(r, i)| (r.as_str(), *i)).collect();
    live.extend([(wo.as_str(), 0), (bo.as_str(), 0), (yo.as_str(), 0)]);
    sim.step(&live);
    sim
}

fn as_refs(v: &[(String, usize)]) -> Vec<(&str, usize)> {
    v.iter().map(|(r, i)| (r.as_str(), *i)).collect()
}

pub fn schedule(arch: &ArchSpec) -> AllocSim {
    match arch {
        ArchSpec::Fc(a) => fc_schedule(a),
        ArchSpec::Cnn(a) => cnn_schedule(a),
        ArchSpec::Rnn(a) => rnn_schedule(a),
    }
}
