#![allow(dead_code)]

use nnsense::costmodel::{ArchSpec, CnnArch, CnnLayer, FcArch, RnnArch};
use rand::Rng;

pub fn random_fc<R: Rng>(rng: &mut R) -> ArchSpec {
    let k = rng.random_range(0..=4);
    FcArch::new(
        rng.random_range(1..=12),
        (0..k).map(|_| rng.random_range(1..=12)).collect(),
        rng.random_range(1..=4),
    )
    .into()
}

/// VGG-grammar CNN: blocks of (conv, batch norm) pairs followed by a pool.
pub fn random_cnn<R: Rng>(rng: &mut R) -> ArchSpec {
    loop {
        let mut layers = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let channels = rng.random_range(1..=6);
            for _ in 0..rng.random_range(1..=2) {
                layers.push(CnnLayer::Conv { channels, kernel: rng.random_range(1..=5) });
                layers.push(CnnLayer::BatchNorm);
            }
            layers.push(CnnLayer::Pool { factor: rng.random_range(1..=4) });
        }
        let arch = CnnArch {
            input_len: rng.random_range(4..=40),
            input_channels: rng.random_range(1..=3),
            layers,
            dense_size: if rng.random_bool(0.5) { None } else { Some(rng.random_range(1..=10)) },
            output_size: 1,
        };
        if arch.validate().is_ok() {
            return arch.into();
        }
    }
}

pub fn random_rnn<R: Rng>(rng: &mut R, bidirectional: bool) -> ArchSpec {
    let k = rng.random_range(1..=3);
    RnnArch::new(
        rng.random_range(1..=6),
        rng.random_range(1..=4),
        (0..k).map(|_| rng.random_range(1..=8)).collect(),
        rng.random_range(1..=4),
        bidirectional,
    )
    .into()
}

/// `(family label, generator)` for the four families.
pub fn families() -> Vec<(&'static str, fn(&mut rand_chacha::ChaCha8Rng) -> ArchSpec)> {
    vec![
        ("fc", |r| random_fc(r)),
        ("cnn", |r| random_cnn(r)),
        ("rnn", |r| random_rnn(r, false)),
        ("birnn", |r| random_rnn(r, true)),
    ]
}
