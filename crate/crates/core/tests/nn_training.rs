use num_complex::Complex32;
use nnsense::costmodel::{presets, ArchSpec, FcArch};
use nnsense::detect::evaluate;
use nnsense::nn::{
    history_csv, load_checkpoint, predict_scores, save_checkpoint, train, train_on, train_with_hook, Model, NnError,
    TrainConfig,
};
use nnsense::sigsim::{gen_dataset, DatasetSpec, Label, SensingWindow, SignalParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One-sample windows (two real features): busy on the right half-plane,
/// idle on the left, with a gap between.
fn toy(n: usize, seed: u64) -> Vec<SensingWindow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let busy = i % 2 == 0;
            let re = rng.random_range(0.5f32..2.0) * if busy { 1.0 } else { -1.0 };
            let im = rng.random_range(-2.0f32..2.0);
            SensingWindow {
                samples: vec![Complex32::new(re, im)],
                label: if busy { Label::Busy } else { Label::Idle },
            }
        })
        .collect()
}

fn toy_arch() -> ArchSpec {
    FcArch::new(2, vec![8], 1).into()
}

fn tiny_dataset() -> nnsense::LabeledDataset {
    gen_dataset(&DatasetSpec {
        params: SignalParams { window_len: 16, ..SignalParams::default() },
        n_train: 64,
        n_val: 64,
        n_test: 32,
        seed: 11,
    })
    .unwrap()
}

#[test]
fn toy_problem_converges_and_separates() {
    let cfg = TrainConfig { learning_rate: 0.01, batch_size: 32, max_epochs: 200, seed: 1, ..TrainConfig::default() };
    let trained = train_on(&toy_arch(), &toy(512, 1), &toy(512, 2), &cfg).unwrap();
    let best = &trained.history[trained.best_epoch - 1];
    assert!(best.train_loss < 0.01, "train loss {}", best.train_loss);
    let test = toy(2000, 3);
    let m = evaluate(&predict_scores(&trained.model, &test).unwrap(), trained.threshold).unwrap();
    assert!(m.p_d > 0.99 && m.p_fa <= 0.01, "{m:?}");
}

#[test]
fn zero_epochs_returns_initialization_with_threshold() {
    let cfg = TrainConfig { max_epochs: 0, seed: 4, ..TrainConfig::default() };
    let val = toy(100, 5);
    let trained = train_on(&toy_arch(), &toy(10, 6), &val, &cfg).unwrap();
    assert_eq!(trained.model, Model::init(&toy_arch(), 4).unwrap());
    assert!(trained.history.is_empty());
    assert_eq!(trained.best_epoch, 0);
    assert!(trained.threshold.is_finite());
}

#[test]
fn frozen_validation_loss_drives_schedule() {
    let cfg = TrainConfig { learning_rate: 0.02, batch_size: 16, max_epochs: 100, ..TrainConfig::default() };
    let trained = train_with_hook(&toy_arch(), &toy(64, 7), &toy(64, 8), &cfg, &mut |_, _| 0.5).unwrap();
    let lrs: Vec<f64> = trained.history.iter().map(|r| r.lr).collect();
    assert_eq!(lrs.len(), 15, "stops after 15 stagnant epochs");
    assert!(lrs[..10].iter().all(|&l| l == 0.02));
    assert!(lrs[10..].iter().all(|&l| l == 0.02 / 10.0));
    assert_eq!(trained.best_epoch, 0);
}

#[test]
fn non_finite_loss_aborts() {
    let cfg = TrainConfig { max_epochs: 5, ..TrainConfig::default() };
    let err = train_with_hook(&toy_arch(), &toy(32, 1), &toy(32, 2), &cfg, &mut |e, l| if e == 2 { f64::NAN } else { l })
        .unwrap_err();
    assert!(matches!(err, NnError::Diverged { epoch: 2, .. }), "{err}");
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        TrainConfig { batch_size: 0, ..TrainConfig::default() },
        TrainConfig { learning_rate: -1.0, ..TrainConfig::default() },
        TrainConfig { lr_patience: 15, stop_patience: 15, ..TrainConfig::default() },
        TrainConfig { adam: nnsense::nn::AdamConfig { beta1: 1.0, ..Default::default() }, ..TrainConfig::default() },
    ];
    for cfg in bad {
        assert!(matches!(train_on(&toy_arch(), &toy(8, 1), &toy(8, 2), &cfg), Err(NnError::InvalidConfig(_))));
    }
    assert!(matches!(
        train_on(&toy_arch(), &[], &toy(8, 2), &TrainConfig::default()),
        Err(NnError::EmptySplit(_))
    ));
}

#[test]
fn training_is_deterministic_and_ignores_the_test_split() {
    let data = tiny_dataset();
    let arch = presets::cnn(&[2], 4);
    let arch = match arch {
        ArchSpec::Cnn(mut a) => {
            a.input_len = 16;
            ArchSpec::Cnn(a)
        }
        _ => unreachable!(),
    };
    let cfg = TrainConfig { max_epochs: 3, batch_size: 16, seed: 9, ..TrainConfig::default() };
    let a = train(&arch, &data, &cfg).unwrap();
    let mut altered = data.clone();
    for w in &mut altered.test {
        w.samples.iter_mut().for_each(|s| *s = Complex32::new(f32::NAN, 1e9));
    }
    let b = train(&arch, &altered, &cfg).unwrap();
    assert_eq!(a, b);
    let c = train(&arch, &data, &TrainConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn checkpoint_and_history_files() {
    let data = tiny_dataset();
    let arch = presets::rnn(3);
    let arch = match arch {
        ArchSpec::Rnn(mut a) => {
            a.seq_len = 16;
            ArchSpec::Rnn(a)
        }
        _ => unreachable!(),
    };
    let cfg = TrainConfig { max_epochs: 2, batch_size: 32, ..TrainConfig::default() };
    let trained = train(&arch, &data, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ssnn");
    save_checkpoint(&path, &trained.model, trained.threshold).unwrap();
    let (model, thr) = load_checkpoint(&path).unwrap();
    assert_eq!(model, trained.model);
    assert_eq!(thr, trained.threshold);
    let csv = history_csv(&trained.history);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,val_loss,lr");
    assert_eq!(lines.len(), trained.history.len() + 1);
}
