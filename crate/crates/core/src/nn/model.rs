use ndarray::{concatenate, s, Array1, Array2, Array3, ArrayD, ArrayView1, ArrayView2, ArrayView3, Axis, Ix1, Ix2, Ix3};

use super::encode::{expected_shape, Family};
use super::layers::{self, BnBatch, BN_MOMENTUM};
use super::loss::bce_with_logits;
use super::lstm::{last_step, lstm_backward, lstm_forward, to_time_major, HiddenGrad, LstmCache};
use super::params::ModelParams;
use super::NnError;
use crate::costmodel::{ArchSpec, CnnLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch-norm uses batch statistics.
    Train,
    /// Batch-norm uses running statistics.
    Infer,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseIdx {
    pub w: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum CnnStep {
    Conv { w: usize, b: usize },
    Bn { gamma: usize, beta: usize, stat: usize },
    Pool { factor: usize },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LstmIdx {
    pub w_ih: usize,
    pub w_hh: usize,
    pub b: usize,
}

/// Parameter indices for each layer, in execution order.
#[derive(Debug, Clone)]
pub(crate) enum Plan {
    Fc { hidden: Vec<DenseIdx>, out: DenseIdx },
    Cnn { steps: Vec<CnnStep>, dense: DenseIdx, out: DenseIdx },
    Rnn { stacks: Vec<Vec<LstmIdx>>, out: DenseIdx },
}

fn plan_for(p: &ModelParams) -> Plan {
    let idx = |name: String| p.index_of(&name).unwrap_or_else(|| panic!("missing parameter {name}"));
    let dense = |prefix: &str| DenseIdx { w: idx(format!("{prefix}.w")), b: idx(format!("{prefix}.b")) };
    match &p.arch {
        ArchSpec::Fc(a) => Plan::Fc {
            hidden: (1..=a.hidden_widths.len()).map(|k| dense(&format!("fc{k}"))).collect(),
            out: dense("out"),
        },
        ArchSpec::Cnn(a) => {
            let mut stat = 0;
            let steps = a
                .layers
                .iter()
                .enumerate()
                .map(|(k, layer)| {
                    let k = k + 1;
                    match *layer {
                        CnnLayer::Conv { .. } => {
                            CnnStep::Conv { w: idx(format!("conv{k}.w")), b: idx(format!("conv{k}.b")) }
                        }
                        CnnLayer::BatchNorm => {
                            stat += 1;
                            CnnStep::Bn {
                                gamma: idx(format!("bn{k}.gamma")),
                                beta: idx(format!("bn{k}.beta")),
                                stat: stat - 1,
                            }
                        }
                        CnnLayer::Pool { factor } => CnnStep::Pool { factor },
                    }
                })
                .collect();
            Plan::Cnn { steps, dense: dense("dense"), out: dense("out") }
        }
        ArchSpec::Rnn(a) => Plan::Rnn {
            stacks: (0..a.directions())
                .map(|d| {
                    (1..=a.hidden_sizes.len())
                        .map(|k| LstmIdx {
                            w_ih: idx(format!("lstm{d}.{k}.w_ih")),
                            w_hh: idx(format!("lstm{d}.{k}.w_hh")),
                            b: idx(format!("lstm{d}.{k}.b")),
                        })
                        .collect()
                })
                .collect(),
            out: dense("out"),
        },
    }
}

enum StepCache {
    Conv { cols: Array2<f64>, out: Array3<f64> },
    BnTrain(BnBatch),
    BnInfer { input: Array3<f64> },
    Pool { arg: Array3<usize>, input_len: usize },
}

enum Cache {
    Fc { acts: Vec<Array2<f64>> },
    Cnn { steps: Vec<StepCache>, flat: Array2<f64>, hidden: Array2<f64> },
    Rnn { stacks: Vec<Vec<LstmCache>>, readout: Array2<f64> },
}

/// Result of a batched forward pass, kept for the backward pass.
pub struct Forward {
    pub logits: Array1<f64>,
    cache: Cache,
    /// Per batch-norm layer `(mean, var)` of this batch (train mode only).
    pub bn_batch: Vec<(Array1<f64>, Array1<f64>)>,
}

/// Gradients aligned with [`ModelParams::tensors`].
pub type Grads = Vec<ArrayD<f64>>;

/// A classifier: parameters plus the execution plan derived from its
/// architecture.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    plan: Plan,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
    }
}

fn v1(t: &ArrayD<f64>) -> ArrayView1<'_, f64> {
    t.view().into_dimensionality::<Ix1>().expect("rank-1 parameter")
}

fn v2(t: &ArrayD<f64>) -> ArrayView2<'_, f64> {
    t.view().into_dimensionality::<Ix2>().expect("rank-2 parameter")
}

fn v3(t: &ArrayD<f64>) -> ArrayView3<'_, f64> {
    t.view().into_dimensionality::<Ix3>().expect("rank-3 parameter")
}

fn note_margin(probe: &mut Option<&mut f64>, m: f64) {
    if let Some(p) = probe.as_deref_mut() {
        *p = p.min(m);
    }
}

fn relu_margin<D: ndarray::Dimension>(z: &ndarray::Array<f64, D>) -> f64 {
    z.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
}

impl Model {
    pub fn from_params(params: ModelParams) -> Self {
        let plan = plan_for(&params);
        Self { params, plan }
    }

    pub fn init(arch: &ArchSpec, seed: u64) -> Result<Self, NnError> {
        Ok(Self::from_params(ModelParams::init(arch, seed)?))
    }

    pub fn zeros(arch: &ArchSpec) -> Result<Self, NnError> {
        Ok(Self::from_params(ModelParams::zeros(arch)?))
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.params.arch
    }

    pub fn family(&self) -> Family {
        Family::of(&self.params.arch)
    }

    fn t(&self, i: usize) -> &ArrayD<f64> {
        &self.params.tensors[i]
    }

    fn check_input(&self, x: &ArrayD<f64>) -> Result<(), NnError> {
        let want = expected_shape(&self.params.arch);
        if x.ndim() != want.len() + 1 || x.shape()[1..] != want[..] {
            return Err(NnError::ShapeMismatch { expected: want, found: x.shape().to_vec() });
        }
        if x.shape()[0] == 0 {
            return Err(NnError::EmptyBatch);
        }
        Ok(())
    }

    /// Batched forward pass; `x` is `[B, ...]` in the family's encoding.
    pub fn forward(&self, x: &ArrayD<f64>, mode: Mode) -> Result<Forward, NnError> {
        self.check_input(x)?;
        Ok(self.forward_impl(x, mode, None))
    }

    /// Smallest distance of any ReLU pre-activation from zero, or of any
    /// pooling window's max from its runner-up, in a train-mode pass. Finite
    /// differences with a step well below this margin do not cross a kink.
    pub fn kink_margin(&self, x: &ArrayD<f64>) -> Result<f64, NnError> {
        self.check_input(x)?;
        let mut margin = f64::INFINITY;
        self.forward_impl(x, Mode::Train, Some(&mut margin));
        Ok(margin)
    }

    fn forward_impl(&self, x: &ArrayD<f64>, mode: Mode, mut probe: Option<&mut f64>) -> Forward {
        let mut bn_batch = Vec::new();
        let (logits, cache) = match &self.plan {
            Plan::Fc { hidden, out } => {
                let mut acts = vec![x.view().into_dimensionality::<Ix2>().expect("fc input").to_owned()];
                for d in hidden {
                    let mut z = layers::dense_forward(acts.last().unwrap().view(), v2(self.t(d.w)), v1(self.t(d.b)));
                    note_margin(&mut probe, relu_margin(&z));
                    layers::relu_inplace(&mut z);
                    acts.push(z);
                }
                let y = layers::dense_forward(acts.last().unwrap().view(), v2(self.t(out.w)), v1(self.t(out.b)));
                (y.column(0).to_owned(), Cache::Fc { acts })
            }
            Plan::Cnn { steps, dense, out } => {
                let mut h = x.view().into_dimensionality::<Ix3>().expect("cnn input").to_owned();
                let mut caches = Vec::with_capacity(steps.len());
                for step in steps {
                    match *step {
                        CnnStep::Conv { w, b } => {
                            let (mut z, cols) = layers::conv_forward(h.view(), v3(self.t(w)), v1(self.t(b)));
                            note_margin(&mut probe, relu_margin(&z));
                            layers::relu_inplace(&mut z);
                            caches.push(StepCache::Conv { cols, out: z.clone() });
                            h = z;
                        }
                        CnnStep::Bn { gamma, beta, stat } => match mode {
                            Mode::Train => {
                                let (y, st) = layers::bn_train_forward(h.view(), v1(self.t(gamma)), v1(self.t(beta)));
                                bn_batch.push((st.mean.clone(), st.var.clone()));
                                caches.push(StepCache::BnTrain(st));
                                h = y;
                            }
                            Mode::Infer => {
                                let rs = &self.params.bn_running[stat];
                                let y = layers::bn_infer_forward(
                                    h.view(),
                                    v1(self.t(gamma)),
                                    v1(self.t(beta)),
                                    rs.mean.view(),
                                    rs.var.view(),
                                );
                                caches.push(StepCache::BnInfer { input: std::mem::replace(&mut h, y) });
                            }
                        },
                        CnnStep::Pool { factor } => {
                            note_margin(&mut probe, layers::pool_margin(h.view(), factor));
                            let input_len = h.dim().2;
                            let (y, arg) = layers::pool_forward(h.view(), factor);
                            caches.push(StepCache::Pool { arg, input_len });
                            h = y;
                        }
                    }
                }
                let (b, c, n) = h.dim();
                let flat = h.into_shape_clone((b, c * n)).expect("flatten");
                let mut hidden = layers::dense_forward(flat.view(), v2(self.t(dense.w)), v1(self.t(dense.b)));
                note_margin(&mut probe, relu_margin(&hidden));
                layers::relu_inplace(&mut hidden);
                let y = layers::dense_forward(hidden.view(), v2(self.t(out.w)), v1(self.t(out.b)));
                (y.column(0).to_owned(), Cache::Cnn { steps: caches, flat, hidden })
            }
            Plan::Rnn { stacks, out } => {
                let x3 = x.view().into_dimensionality::<Ix3>().expect("rnn input");
                let mut finals = Vec::with_capacity(stacks.len());
                let mut caches = Vec::with_capacity(stacks.len());
                for (d, stack) in stacks.iter().enumerate() {
                    let mut seq = to_time_major(x3, d == 1);
                    let mut layer_caches = Vec::with_capacity(stack.len());
                    for l in stack {
                        let (hs, cache) = lstm_forward(seq.view(), v2(self.t(l.w_ih)), v2(self.t(l.w_hh)), v1(self.t(l.b)));
                        layer_caches.push(cache);
                        seq = hs;
                    }
                    finals.push(last_step(&seq));
                    caches.push(layer_caches);
                }
                let views: Vec<_> = finals.iter().map(|f| f.view()).collect();
                let readout = concatenate(Axis(1), &views).expect("readout concat");
                let y = layers::dense_forward(readout.view(), v2(self.t(out.w)), v1(self.t(out.b)));
                (y.column(0).to_owned(), Cache::Rnn { stacks: caches, readout })
            }
        };
        Forward { logits, cache, bn_batch }
    }

    /// Gradients of `Σ_i dlogits[i] · logit_i` with respect to every parameter.
    pub fn backward(&self, fwd: &Forward, dlogits: &Array1<f64>) -> Grads {
        let mut grads = self.params.zeros_like();
        let dy = dlogits.view().insert_axis(Axis(1)).to_owned();
        let mut put = |i: usize, g: ArrayD<f64>| grads[i] = g;
        match (&self.plan, &fwd.cache) {
            (Plan::Fc { hidden, out }, Cache::Fc { acts }) => {
                let (mut dx, dw, db) = layers::dense_backward(acts.last().unwrap().view(), v2(self.t(out.w)), dy.view());
                put(out.w, dw.into_dyn());
                put(out.b, db.into_dyn());
                for (k, d) in hidden.iter().enumerate().rev() {
                    layers::relu_backward(&acts[k + 1], &mut dx);
                    let (dxx, dw, db) = layers::dense_backward(acts[k].view(), v2(self.t(d.w)), dx.view());
                    put(d.w, dw.into_dyn());
                    put(d.b, db.into_dyn());
                    dx = dxx;
                }
            }
            (Plan::Cnn { steps, dense, out }, Cache::Cnn { steps: caches, flat, hidden }) => {
                let (mut dh, dw, db) = layers::dense_backward(hidden.view(), v2(self.t(out.w)), dy.view());
                put(out.w, dw.into_dyn());
                put(out.b, db.into_dyn());
                layers::relu_backward(hidden, &mut dh);
                let (dflat, dw, db) = layers::dense_backward(flat.view(), v2(self.t(dense.w)), dh.view());
                put(dense.w, dw.into_dyn());
                put(dense.b, db.into_dyn());
                let last_shape = match self.arch() {
                    ArchSpec::Cnn(a) => a.output_shape().expect("validated"),
                    _ => unreachable!(),
                };
                let mut g = dflat
                    .into_shape_clone((flat.nrows(), last_shape.channels, last_shape.len))
                    .expect("unflatten");
                for (step, cache) in steps.iter().zip(caches).rev() {
                    g = match (*step, cache) {
                        (CnnStep::Conv { w, b }, StepCache::Conv { cols, out }) => {
                            layers::relu_backward(out, &mut g);
                            let (dx, dw, db) = layers::conv_backward(cols.view(), v3(self.t(w)), g.view());
                            put(w, dw.into_dyn());
                            put(b, db.into_dyn());
                            dx
                        }
                        (CnnStep::Bn { gamma, beta, .. }, StepCache::BnTrain(st)) => {
                            let (dx, dg, dbt) = layers::bn_backward(st, v1(self.t(gamma)), g.view());
                            put(gamma, dg.into_dyn());
                            put(beta, dbt.into_dyn());
                            dx
                        }
                        (CnnStep::Bn { gamma, beta, stat }, StepCache::BnInfer { input }) => {
                            // Running statistics are constants in infer mode.
                            let rs = &self.params.bn_running[stat];
                            let gm = v1(self.t(gamma));
                            let mut dx = g.clone();
                            let mut dg = Array1::zeros(gm.len());
                            let mut dbt = Array1::zeros(gm.len());
                            for c in 0..gm.len() {
                                let is = 1.0 / (rs.var[c] + layers::BN_EPS).sqrt();
                                let lane = g.slice(s![.., c, ..]);
                                dbt[c] = lane.sum();
                                dg[c] = ndarray::Zip::from(&lane)
                                    .and(input.slice(s![.., c, ..]))
                                    .fold(0.0, |a, &gv, &xv| a + gv * (xv - rs.mean[c]) * is);
                                dx.slice_mut(s![.., c, ..]).mapv_inplace(|v| v * gm[c] * is);
                            }
                            put(gamma, dg.into_dyn());
                            put(beta, dbt.into_dyn());
                            dx
                        }
                        (CnnStep::Pool { .. }, StepCache::Pool { arg, input_len }) => {
                            layers::pool_backward(arg, *input_len, g.view())
                        }
                        _ => unreachable!("plan and cache disagree"),
                    };
                }
            }
            (Plan::Rnn { stacks, out }, Cache::Rnn { stacks: caches, readout }) => {
                let (dread, dw, db) = layers::dense_backward(readout.view(), v2(self.t(out.w)), dy.view());
                put(out.w, dw.into_dyn());
                put(out.b, db.into_dyn());
                let mut offset = 0;
                for (stack, layer_caches) in stacks.iter().zip(caches) {
                    let hid = self.t(stack.last().unwrap().w_hh).shape()[1];
                    let mut upstream = HiddenGrad::Final(dread.slice(s![.., offset..offset + hid]).to_owned());
                    offset += hid;
                    for (l, cache) in stack.iter().zip(layer_caches).rev() {
                        let (dx, dw_ih, dw_hh, db) = lstm_backward(cache, v2(self.t(l.w_ih)), v2(self.t(l.w_hh)), &upstream);
                        put(l.w_ih, dw_ih.into_dyn());
                        put(l.w_hh, dw_hh.into_dyn());
                        put(l.b, db.into_dyn());
                        upstream = HiddenGrad::All(dx);
                    }
                }
            }
            _ => unreachable!("plan and cache disagree"),
        }
        grads
    }

    /// Mean binary cross-entropy of a batch and its exact gradient.
    pub fn loss_and_grad(&self, x: &ArrayD<f64>, labels: &[f64], mode: Mode) -> Result<(f64, Grads, Forward), NnError> {
        let fwd = self.forward(x, mode)?;
        if labels.len() != fwd.logits.len() {
            return Err(NnError::ShapeMismatch { expected: vec![fwd.logits.len()], found: vec![labels.len()] });
        }
        let n = labels.len() as f64;
        let loss = fwd.logits.iter().zip(labels).map(|(&z, &y)| bce_with_logits(z, y)).sum::<f64>() / n;
        let dlogits: Array1<f64> =
            fwd.logits.iter().zip(labels).map(|(&z, &y)| (super::loss::sigmoid(z) - y) / n).collect();
        let grads = self.backward(&fwd, &dlogits);
        Ok((loss, grads, fwd))
    }

    /// Infer-mode logits.
    pub fn logits(&self, x: &ArrayD<f64>) -> Result<Array1<f64>, NnError> {
        Ok(self.forward(x, Mode::Infer)?.logits)
    }

    /// Momentum update of batch-norm running statistics from a train pass.
    pub fn update_running_stats(&mut self, bn_batch: &[(Array1<f64>, Array1<f64>)]) {
        for (rs, (mean, var)) in self.params.bn_running.iter_mut().zip(bn_batch) {
            rs.mean.zip_mut_with(mean, |r, &m| *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * m);
            rs.var.zip_mut_with(var, |r, &v| *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * v);
        }
    }
}
