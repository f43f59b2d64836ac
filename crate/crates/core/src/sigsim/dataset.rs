use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Label, SensingWindow, SignalParams, SigsimError, WindowSynth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    fn stream_tag(self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Val => 2,
            Split::Test => 3,
        }
    }
}

/// What to generate: signal settings, per-split example counts and the
/// master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    #[serde(default)]
    pub params: SignalParams,
    pub n_train: u64,
    pub n_val: u64,
    pub n_test: u64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), SigsimError> {
        self.params.validate()?;
        let prod = self.params.filter_span_symbols * self.params.samples_per_symbol;
        if prod % 2 == 1 {
            return Err(SigsimError::InvalidParams(format!(
                "filter_span_symbols * samples_per_symbol must be even, got {prod}"
            )));
        }
        for split in Split::ALL {
            let n = self.count(split);
            if n % 2 == 1 {
                return Err(SigsimError::OddSplit { split, count: n });
            }
        }
        Ok(())
    }

    pub fn count(&self, split: Split) -> u64 {
        match split {
            Split::Train => self.n_train,
            Split::Val => self.n_val,
            Split::Test => self.n_test,
        }
    }
}

/// Independent random stream for one example. The ChaCha stream id encodes
/// the split and index, so examples can be generated in any order.
pub fn example_rng(seed: u64, split: Split, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((split.stream_tag() << 56) | index);
    rng
}

/// Label of the `index`-th example in any split: even indices are busy, so
/// every even-length prefix is exactly balanced.
pub fn label_for_index(index: u64) -> Label {
    if index % 2 == 0 {
        Label::Busy
    } else {
        Label::Idle
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub spec: DatasetSpec,
    pub train: Vec<SensingWindow>,
    pub val: Vec<SensingWindow>,
    pub test: Vec<SensingWindow>,
}

impl LabeledDataset {
    pub fn split(&self, split: Split) -> &[SensingWindow] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

pub fn gen_split(synth: &WindowSynth, seed: u64, split: Split, count: u64) -> Vec<SensingWindow> {
    (0..count)
        .into_par_iter()
        .map(|i| synth.make(label_for_index(i), &mut example_rng(seed, split, i)))
        .collect()
}

pub fn gen_dataset(spec: &DatasetSpec) -> Result<LabeledDataset, SigsimError> {
    spec.validate()?;
    let synth = WindowSynth::new(spec.params)?;
    let gen = |split| gen_split(&synth, spec.seed, split, spec.count(split));
    Ok(LabeledDataset {
        spec: *spec,
        train: gen(Split::Train),
        val: gen(Split::Val),
        test: gen(Split::Test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n_train: u64) -> DatasetSpec {
        DatasetSpec { params: SignalParams::default(), n_train, n_val: 6, n_test: 4, seed: 42 }
    }

    #[test]
    fn odd_split_is_rejected() {
        let err = gen_dataset(&small(3)).unwrap_err();
        assert!(matches!(err, SigsimError::OddSplit { split: Split::Train, count: 3 }));
        assert!(err.to_string().contains("even"));
    }

    #[test]
    fn empty_train_split_is_valid() {
        let ds = gen_dataset(&small(0)).unwrap();
        assert!(ds.train.is_empty());
        assert_eq!(ds.val.len(), 6);
    }

    #[test]
    fn generation_is_order_independent() {
        let ds = gen_dataset(&small(10)).unwrap();
        let synth = WindowSynth::new(ds.spec.params).unwrap();
        for i in (0..10).rev() {
            let w = synth.make(label_for_index(i), &mut example_rng(42, Split::Train, i));
            assert_eq!(w, ds.train[i as usize]);
        }
        assert_ne!(ds.train[0], ds.val[0]);
    }

    #[test]
    fn splits_are_balanced() {
        let spec = DatasetSpec { n_train: 0, n_val: 100_000, n_test: 0, ..small(0) };
        let ds = gen_dataset(&spec).unwrap();
        let busy = ds.val.iter().filter(|w| w.label.is_busy()).count();
        assert_eq!(busy, 50_000);
        assert_eq!(ds.val.len() - busy, 50_000);
    }
}
