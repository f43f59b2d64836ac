use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::{Complex32, Complex64};
use rand::Rng;
use rand_distr::StandardNormal;

/// Gray-mapped QPSK constellation point for a bit pair: bit 0 selects the
/// sign of I, bit 1 the sign of Q, `(0, 0) -> (1 + j)/√2`.
pub fn qpsk_point(b0: bool, b1: bool) -> Complex64 {
    let re = if b0 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    let im = if b1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

/// `n` i.i.d. uniform QPSK symbols from random, uncorrelated bits.
pub fn gen_qpsk_symbols<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let bits: u32 = rng.random();
            qpsk_point(bits & 1 == 1, bits & 2 == 2)
        })
        .collect()
}

/// Upsamples `symbols` by zero insertion and convolves with `taps`
/// (full-length output: `symbols.len() * sps + taps.len() - 1`).
///
/// The waveform is scaled by `sqrt(sps / Σh²)` so that its expected power per
/// sample in the steady-state region is 1 for unit-energy i.i.d. symbols.
pub fn shape_pulse(symbols: &[Complex64], taps: &[f64], samples_per_symbol: usize) -> Vec<Complex64> {
    let sps = samples_per_symbol;
    if symbols.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let gain = (sps as f64 / energy).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); symbols.len() * sps + taps.len() - 1];
    // Zero-inserted samples contribute nothing, so only symbol instants are visited.
    for (k, &sym) in symbols.iter().enumerate() {
        let scaled = sym * gain;
        for (o, &h) in out[k * sps..k * sps + taps.len()].iter_mut().zip(taps) {
            *o += scaled * h;
        }
    }
    out
}

/// Adds circularly symmetric complex Gaussian noise with per-sample variance
/// `10^(-snr_db/10)` (each of I and Q has half of it).
pub fn add_awgn<R: Rng + ?Sized>(signal: &[Complex64], snr_db: f64, rng: &mut R) -> Vec<Complex64> {
    let variance = 10f64.powf(-snr_db / 10.0);
    let sigma = (variance / 2.0).sqrt();
    if sigma == 0.0 {
        return signal.to_vec();
    }
    signal
        .iter()
        .map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(re * sigma, im * sigma)
        })
        .collect()
}

pub(crate) fn to_c32(x: &[Complex64]) -> Vec<Complex32> {
    x.iter().map(|z| Complex32::new(z.re as f32, z.im as f32)).collect()
}
