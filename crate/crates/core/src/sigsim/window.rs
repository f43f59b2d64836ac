use num_complex::{Complex32, Complex64};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::modem::{add_awgn, gen_qpsk_symbols, shape_pulse, to_c32};
use super::{rrc_taps, SignalParams, SigsimError};

/// Ground truth of a sensing interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Idle,
    Busy,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Idle => 0,
            Label::Busy => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Idle),
            1 => Some(Label::Busy),
            _ => None,
        }
    }

    pub fn is_busy(self) -> bool {
        self == Label::Busy
    }
}

/// One labeled example: `window_len` received baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingWindow {
    pub samples: Vec<Complex32>,
    pub label: Label,
}

impl SensingWindow {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Window generator with the pulse-shaping filter precomputed.
#[derive(Debug, Clone)]
pub struct WindowSynth {
    params: SignalParams,
    taps: Vec<f64>,
    n_symbols: usize,
}

impl WindowSynth {
    pub fn new(params: SignalParams) -> Result<Self, SigsimError> {
        params.validate()?;
        let taps = rrc_taps(params.rolloff, params.samples_per_symbol, params.filter_span_symbols)?;
        let sps = params.samples_per_symbol;
        // Steady-state output spans [taps-1, n_symbols*sps); it must hold the
        // window at every symbol-clock offset.
        let needed = taps.len() + sps + params.window_len - 2;
        let n_symbols = needed.div_ceil(sps);
        Ok(Self { params, taps, n_symbols })
    }

    pub fn params(&self) -> &SignalParams {
        &self.params
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Noise-free steady-state signal segment starting at a uniformly random
    /// symbol-clock offset.
    pub fn signal_segment<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let sps = self.params.samples_per_symbol;
        let symbols = gen_qpsk_symbols(self.n_symbols, rng);
        let wave = shape_pulse(&symbols, &self.taps, sps);
        let start = self.taps.len() - 1 + rng.random_range(0..sps);
        wave[start..start + self.params.window_len].to_vec()
    }

    pub fn make<R: Rng + ?Sized>(&self, label: Label, rng: &mut R) -> SensingWindow {
        let clean = match label {
            Label::Busy => self.signal_segment(rng),
            Label::Idle => vec![Complex64::new(0.0, 0.0); self.params.window_len],
        };
        let noisy = add_awgn(&clean, self.params.sample_snr_db(), rng);
        SensingWindow { samples: to_c32(&noisy), label }
    }
}

/// Builds one sensing window: steady-state shaped QPSK plus noise when busy,
/// noise only when idle.
pub fn make_window<R: Rng + ?Sized>(
    params: &SignalParams,
    label: Label,
    rng: &mut R,
) -> Result<SensingWindow, SigsimError> {
    Ok(WindowSynth::new(*params)?.make(label, rng))
}
