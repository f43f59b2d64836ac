#![allow(dead_code)]

//! Busy-window synthesis written from the signal model alone (spectrum-domain
//! pulse, direct superposition of symbols), sharing no code with the crate's
//! generator.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Square root of the raised-cosine spectrum, unit symbol period.
pub fn rrc_spectrum(b: f64, f: f64) -> f64 {
    let f = f.abs();
    let lo = (1.0 - b) / 2.0;
    let hi = (1.0 + b) / 2.0;
    if f <= lo {
        1.0
    } else if f <= hi {
        (0.5 * (1.0 + (PI / b * (f - lo)).cos())).sqrt()
    } else {
        0.0
    }
}

/// `h(t) = ∫ H(f) cos(2πft) df` by composite Simpson, split at the
/// spectrum's corner frequencies.
pub fn impulse_by_quadrature(b: f64, t: f64) -> f64 {
    let simpson = |a: f64, z: f64, n: usize| {
        let h = (z - a) / n as f64;
        let g = |f: f64| rrc_spectrum(b, f) * (2.0 * PI * f * t).cos();
        let mut s = g(a) + g(z);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let lo = (1.0 - b) / 2.0;
    let hi = (1.0 + b) / 2.0;
    2.0 * (simpson(0.0, lo, 2000) + simpson(lo, hi, 20000))
}

pub struct BusyOracle {
    /// Pulse samples at offsets `-half..=half`, scaled for unit average
    /// signal power per sample.
    pulse: Vec<f64>,
    half: i64,
    sps: i64,
    window_len: usize,
    noise_std: f64,
}

impl BusyOracle {
    /// `snr_db` is Es/N0: symbol energy `sps` (unit sample power) over the
    /// noise variance per complex sample.
    pub fn new(rolloff: f64, sps: usize, span: usize, snr_db: f64, window_len: usize) -> Self {
        let half = (sps * span / 2) as i64;
        let raw: Vec<f64> =
            (-half..=half).map(|m| impulse_by_quadrature(rolloff, m as f64 / sps as f64)).collect();
        let energy: f64 = raw.iter().map(|h| h * h).sum();
        let gain = (sps as f64 / energy).sqrt();
        let noise_var = sps as f64 / 10f64.powf(snr_db / 10.0);
        Self {
            pulse: raw.iter().map(|h| h * gain).collect(),
            half,
            sps: sps as i64,
            window_len,
            noise_std: (noise_var / 2.0).sqrt(),
        }
    }

    /// Energy of one busy window.
    pub fn busy_energy(&self, rng: &mut ChaCha8Rng) -> f64 {
        let off = rng.random_range(0..self.sps);
        let wl = self.window_len as i64;
        // Symbols k with sample n = k·sps + off + m for some |m| <= half.
        let k_lo = (-self.half - off).div_euclid(self.sps) - 1;
        let k_hi = (wl + self.half - off).div_euclid(self.sps) + 1;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let symbols: Vec<(f64, f64)> = (k_lo..=k_hi)
            .map(|_| (if rng.random::<bool>() { s } else { -s }, if rng.random::<bool>() { s } else { -s }))
            .collect();
        let mut energy = 0.0;
        for n in 0..wl {
            let (mut re, mut im) = (0.0, 0.0);
            for (idx, k) in (k_lo..=k_hi).enumerate() {
                let m = n - k * self.sps - off;
                if m.abs() <= self.half {
                    let h = self.pulse[(m + self.half) as usize];
                    re += symbols[idx].0 * h;
                    im += symbols[idx].1 * h;
                }
            }
            re += self.noise_std * rng.sample::<f64, _>(StandardNormal);
            im += self.noise_std * rng.sample::<f64, _>(StandardNormal);
            energy += re * re + im * im;
        }
        energy
    }
}
