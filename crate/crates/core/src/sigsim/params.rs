use serde::{Deserialize, Serialize};

use super::SigsimError;

/// Which noise bandwidth the configured SNR refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// Average signal power over noise variance, both per complex sample at
    /// the oversampled rate.
    PerSample,
    /// Symbol energy over noise spectral density (Es/N0). The per-sample SNR
    /// is lower by `10·log10(samples_per_symbol)`.
    #[default]
    PerSymbol,
}

impl SnrReference {
    pub(crate) fn code(self) -> u8 {
        match self {
            SnrReference::PerSample => 0,
            SnrReference::PerSymbol => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SnrReference::PerSample),
            1 => Some(SnrReference::PerSymbol),
            _ => None,
        }
    }
}

/// Physical-layer settings of the simulated primary signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalParams {
    pub rolloff: f64,
    pub samples_per_symbol: usize,
    pub filter_span_symbols: usize,
    pub snr_db: f64,
    pub snr_reference: SnrReference,
    pub window_len: usize,
}

impl Default for SignalParams {
    fn default() -> Self {
        Self {
            rolloff: 0.35,
            samples_per_symbol: 10,
            filter_span_symbols: 11,
            snr_db: 3.0,
            snr_reference: SnrReference::PerSymbol,
            window_len: 111,
        }
    }
}

impl SignalParams {
    pub fn validate(&self) -> Result<(), SigsimError> {
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(SigsimError::InvalidParams(format!(
                "rolloff must lie in (0, 1], got {}",
                self.rolloff
            )));
        }
        if self.samples_per_symbol < 2 {
            return Err(SigsimError::InvalidParams(format!(
                "samples_per_symbol must be at least 2, got {}",
                self.samples_per_symbol
            )));
        }
        if self.filter_span_symbols == 0 {
            return Err(SigsimError::InvalidParams(
                "filter_span_symbols must be positive".into(),
            ));
        }
        if self.window_len == 0 {
            return Err(SigsimError::InvalidParams("window_len must be positive".into()));
        }
        if self.snr_db.is_nan() {
            return Err(SigsimError::InvalidParams("snr_db is NaN".into()));
        }
        Ok(())
    }

    /// SNR per complex sample at the oversampled rate, in dB.
    pub fn sample_snr_db(&self) -> f64 {
        match self.snr_reference {
            SnrReference::PerSample => self.snr_db,
            SnrReference::PerSymbol => self.snr_db - 10.0 * (self.samples_per_symbol as f64).log10(),
        }
    }

    /// Per-sample complex noise variance for unit-power signal.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.sample_snr_db() / 10.0)
    }

    pub fn tap_count(&self) -> usize {
        self.filter_span_symbols * self.samples_per_symbol + 1
    }
}
