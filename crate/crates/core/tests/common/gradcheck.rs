#![allow(dead_code)]

use ndarray::{ArrayD, IxDyn};
use nnsense::costmodel::{ArchSpec, CnnArch, CnnLayer, RnnArch};
use nnsense::nn::{Mode, Model};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-4;
pub const MAX_REL_ERR: f64 = 1e-4;
/// Inputs whose nearest ReLU or max-pool kink is closer than this are
/// redrawn, so central differences never straddle a kink.
pub const MIN_KINK_MARGIN: f64 = 1e-2;

pub fn with_single_output(arch: ArchSpec) -> ArchSpec {
    match arch {
        ArchSpec::Fc(mut a) => {
            a.output_size = 1;
            a.into()
        }
        ArchSpec::Cnn(mut a) => {
            a.output_size = 1;
            a.into()
        }
        ArchSpec::Rnn(mut a) => {
            a.output_size = 1;
            a.into()
        }
    }
}

/// Small CNN that always contains conv, batch norm and a real pooling step.
pub fn random_small_cnn(rng: &mut ChaCha8Rng) -> ArchSpec {
    loop {
        let mut layers = Vec::new();
        for _ in 0..rng.random_range(1..=2) {
            let channels = rng.random_range(1..=4);
            for _ in 0..rng.random_range(1..=2) {
                layers.push(CnnLayer::Conv { channels, kernel: [1, 3, 5][rng.random_range(0..3)] });
                layers.push(CnnLayer::BatchNorm);
            }
            layers.push(CnnLayer::Pool { factor: rng.random_range(2..=3) });
        }
        let arch = CnnArch {
            input_len: rng.random_range(4..=16),
            input_channels: rng.random_range(1..=2),
            layers,
            dense_size: Some(rng.random_range(1..=5)),
            output_size: 1,
        };
        if arch.validate().is_ok() {
            return arch.into();
        }
    }
}

/// Small CNN of conv layers, optionally each followed by batch norm and
/// optionally closed by one pooling step; isolates each layer family.
pub fn random_conv_cnn(rng: &mut ChaCha8Rng, batch_norm: bool, pool: bool) -> ArchSpec {
    let mut layers = Vec::new();
    for _ in 0..rng.random_range(1..=2) {
        layers.push(CnnLayer::Conv { channels: rng.random_range(1..=4), kernel: [1, 3, 5][rng.random_range(0..3)] });
        if batch_norm {
            layers.push(CnnLayer::BatchNorm);
        }
    }
    let input_len = rng.random_range(4..=16);
    if pool {
        layers.push(CnnLayer::Pool { factor: rng.random_range(2..=3) });
    }
    CnnArch { input_len, input_channels: rng.random_range(1..=2), layers, dense_size: Some(rng.random_range(1..=5)), output_size: 1 }
        .into()
}

pub fn random_small_rnn(rng: &mut ChaCha8Rng, bidirectional: bool) -> ArchSpec {
    let k = rng.random_range(1..=2);
    RnnArch::new(
        rng.random_range(1..=5),
        rng.random_range(1..=3),
        (0..k).map(|_| rng.random_range(1..=4)).collect(),
        1,
        bidirectional,
    )
    .into()
}

pub fn input_shape(arch: &ArchSpec, batch: usize) -> Vec<usize> {
    let mut s = vec![batch];
    match arch {
        ArchSpec::Fc(a) => s.push(a.input_size),
        ArchSpec::Cnn(a) => s.extend([a.input_channels, a.input_len]),
        ArchSpec::Rnn(a) => s.extend([a.seq_len, a.input_features]),
    }
    s
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> ArrayD<f64> {
    ArrayD::from_shape_fn(IxDyn(shape), |_| rng.random_range(-1.0..1.0))
}

/// Jiggles every parameter so no gradient is structurally zero (e.g. unit
/// batch-norm scales, zero biases).
pub fn perturbed_model(arch: &ArchSpec, rng: &mut ChaCha8Rng) -> Model {
    let mut model = Model::init(arch, rng.random()).unwrap();
    for t in &mut model.params.tensors {
        t.mapv_inplace(|v| v + rng.random_range(-0.3..0.3));
    }
    model
}

pub struct GradCheck {
    pub max_rel_err: f64,
    pub worst: String,
    pub checked: usize,
}

fn loss(model: &Model, x: &ArrayD<f64>, y: &[f64]) -> f64 {
    model.loss_and_grad(x, y, Mode::Train).unwrap().0
}

/// Relative error `|a - n| / max(|a|, |n|, 1e-6)` per parameter.
pub fn check_gradients(model: &Model, x: &ArrayD<f64>, y: &[f64]) -> GradCheck {
    let (_, grads, _) = model.loss_and_grad(x, y, Mode::Train).unwrap();
    let mut probe = model.clone();
    let mut out = GradCheck { max_rel_err: 0.0, worst: String::new(), checked: 0 };
    for (ti, g) in grads.iter().enumerate() {
        for flat in 0..g.len() {
            let orig = probe.params.tensors[ti].as_slice().unwrap()[flat];
            probe.params.tensors[ti].as_slice_mut().unwrap()[flat] = orig + FD_STEP;
            let up = loss(&probe, x, y);
            probe.params.tensors[ti].as_slice_mut().unwrap()[flat] = orig - FD_STEP;
            let down = loss(&probe, x, y);
            probe.params.tensors[ti].as_slice_mut().unwrap()[flat] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let analytic = g.as_slice().unwrap()[flat];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            out.checked += 1;
            if rel > out.max_rel_err {
                out.max_rel_err = rel;
                out.worst = format!("{}[{flat}]: analytic {analytic:e}, numeric {numeric:e}", model.params.names[ti]);
            }
        }
    }
    out
}

/// Draws a model and batch far enough from kinks, then checks them.
pub fn random_check(arch: &ArchSpec, rng: &mut ChaCha8Rng) -> GradCheck {
    let batch = rng.random_range(2..=4);
    for _ in 0..200 {
        let model = perturbed_model(arch, rng);
        let x = random_tensor(rng, &input_shape(arch, batch));
        if model.kink_margin(&x).unwrap() < MIN_KINK_MARGIN {
            continue;
        }
        let mut y: Vec<f64> = (0..batch).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
        y[0] = 1.0;
        y[1] = 0.0;
        return check_gradients(&model, &x, &y);
    }
    panic!("no kink-free draw for {arch:?}");
}
