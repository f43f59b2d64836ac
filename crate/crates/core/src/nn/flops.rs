//! Scalar single-example inference that counts every multiply and add.
//! Used to tie the trained networks to the closed-form cost model; the
//! batched kernels in [`super::model`] are what training and scoring use.

use ndarray::{ArrayD, Ix1, Ix2, Ix3};

use super::layers::BN_EPS;
use super::model::Model;
use super::NnError;
use crate::costmodel::{ArchSpec, CnnLayer};

struct Counter(u64);

impl Counter {
    /// `b + Σ w_j x_j` over `n` terms: n multiplies, n adds.
    fn affine(&mut self, bias: f64, w: impl Iterator<Item = f64>, x: impl Iterator<Item = f64>) -> f64 {
        let mut acc = bias;
        for (a, b) in w.zip(x) {
            acc += a * b;
            self.0 += 2;
        }
        acc
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn dense(c: &mut Counter, w: &ArrayD<f64>, b: &ArrayD<f64>, x: &[f64]) -> Vec<f64> {
    let w = w.view().into_dimensionality::<Ix2>().expect("dense weight");
    let b = b.view().into_dimensionality::<Ix1>().expect("dense bias");
    (0..w.nrows()).map(|o| c.affine(b[o], w.row(o).iter().copied(), x.iter().copied())).collect()
}

fn relu(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Infer-mode logit of one unbatched input plus the FLOPs spent. Padding
/// positions of a same-padded convolution count as multiplies by zero.
pub fn counted_logit(model: &Model, x: &ArrayD<f64>) -> Result<(f64, u64), NnError> {
    let p = &model.params;
    let t = |name: String| &p.tensors[p.index_of(&name).expect("parameter present")];
    let mut c = Counter(0);
    let want = super::encode::expected_shape(&p.arch);
    if x.shape() != want.as_slice() {
        return Err(NnError::ShapeMismatch { expected: want, found: x.shape().to_vec() });
    }

    let readout = match p.arch.clone() {
        ArchSpec::Fc(a) => {
            let mut h: Vec<f64> = x.iter().copied().collect();
            for k in 1..=a.hidden_widths.len() {
                h = dense(&mut c, t(format!("fc{k}.w")), t(format!("fc{k}.b")), &h);
                relu(&mut h);
            }
            h
        }
        ArchSpec::Cnn(a) => {
            let x3 = x.view().into_dimensionality::<Ix2>().expect("cnn input");
            let mut h: Vec<Vec<f64>> = x3.outer_iter().map(|r| r.to_vec()).collect();
            let mut bn_idx = 0;
            for (k, layer) in a.layers.iter().enumerate() {
                let k = k + 1;
                h = match *layer {
                    CnnLayer::Conv { kernel, .. } => {
                        let w = t(format!("conv{k}.w")).view().into_dimensionality::<Ix3>().unwrap();
                        let b = t(format!("conv{k}.b"));
                        let n = h[0].len();
                        let left = (kernel - 1) / 2;
                        let mut out = vec![vec![0.0; n]; w.dim().0];
                        for (o, row) in out.iter_mut().enumerate() {
                            for (pos, y) in row.iter_mut().enumerate() {
                                let taps = (0..h.len()).flat_map(|ci| (0..kernel).map(move |j| (ci, j)));
                                let xs = taps.clone().map(|(ci, j)| {
                                    let src = (pos + j).checked_sub(left).filter(|&s| s < n);
                                    src.map_or(0.0, |s| h[ci][s])
                                });
                                let ws = taps.map(|(ci, j)| w[[o, ci, j]]);
                                *y = c.affine(b[[o]], ws, xs).max(0.0);
                            }
                        }
                        out
                    }
                    CnnLayer::BatchNorm => {
                        let rs = &p.bn_running[bn_idx];
                        bn_idx += 1;
                        let (g, bt) = (t(format!("bn{k}.gamma")), t(format!("bn{k}.beta")));
                        h.iter()
                            .enumerate()
                            .map(|(ch, lane)| {
                                let scale = g[[ch]] / (rs.var[ch] + BN_EPS).sqrt();
                                let shift = bt[[ch]] - rs.mean[ch] * scale;
                                lane.iter()
                                    .map(|&v| {
                                        c.0 += 2;
                                        v * scale + shift
                                    })
                                    .collect()
                            })
                            .collect()
                    }
                    CnnLayer::Pool { factor } => h
                        .iter()
                        .map(|lane| {
                            lane.chunks_exact(factor)
                                .map(|win| {
                                    c.0 += (factor - 1) as u64;
                                    win.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                                })
                                .collect()
                        })
                        .collect(),
                };
            }
            let flat: Vec<f64> = h.concat();
            let mut d = dense(&mut c, t("dense.w".into()), t("dense.b".into()), &flat);
            relu(&mut d);
            d
        }
        ArchSpec::Rnn(a) => {
            let x2 = x.view().into_dimensionality::<Ix2>().expect("rnn input");
            let mut readout = Vec::new();
            for d in 0..a.directions() {
                let mut seq: Vec<Vec<f64>> = x2.outer_iter().map(|r| r.to_vec()).collect();
                if d == 1 {
                    seq.reverse();
                }
                for k in 1..=a.hidden_sizes.len() {
                    let w_ih = t(format!("lstm{d}.{k}.w_ih")).view().into_dimensionality::<Ix2>().unwrap();
                    let w_hh = t(format!("lstm{d}.{k}.w_hh")).view().into_dimensionality::<Ix2>().unwrap();
                    let b = t(format!("lstm{d}.{k}.b"));
                    let hid = w_hh.ncols();
                    let (mut hs, mut cs) = (vec![0.0; hid], vec![0.0; hid]);
                    let mut outs = Vec::with_capacity(seq.len());
                    for xt in &seq {
                        let z: Vec<f64> = (0..4 * hid)
                            .map(|r| {
                                let ws = w_ih.row(r).iter().chain(w_hh.row(r).iter()).copied().collect::<Vec<_>>();
                                c.affine(b[[r]], ws.into_iter(), xt.iter().chain(hs.iter()).copied())
                            })
                            .collect();
                        for j in 0..hid {
                            let (i, f) = (sigmoid(z[j]), sigmoid(z[hid + j]));
                            let (g, o) = (z[2 * hid + j].tanh(), sigmoid(z[3 * hid + j]));
                            cs[j] = f * cs[j] + i * g;
                            hs[j] = o * cs[j].tanh();
                            c.0 += 4;
                        }
                        outs.push(hs.clone());
                    }
                    seq = outs;
                }
                readout.extend(seq.last().expect("nonempty sequence"));
            }
            readout
        }
    };
    let logit = dense(&mut c, t("out.w".into()), t("out.b".into()), &readout)[0];
    Ok((logit, c.0))
}
