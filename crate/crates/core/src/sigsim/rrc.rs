use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::SigsimError;

/// Root-raised-cosine impulse response at `t` symbol periods (unnormalized,
/// unit symbol period). The removable singularities at `t = 0` and
/// `|t| = 1/(4·rolloff)` are replaced by their limits.
pub fn rrc_impulse(rolloff: f64, t: f64) -> f64 {
    let b = rolloff;
    if t == 0.0 {
        return 1.0 - b + 4.0 * b / PI;
    }
    let four_bt = 4.0 * b * t;
    if (1.0 - four_bt * four_bt).abs() < 1e-12 {
        let arg = PI / (4.0 * b);
        return b * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + four_bt * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - four_bt * four_bt);
    num / den
}

/// Symmetric RRC taps sampled at `samples_per_symbol` per symbol over
/// `span_symbols` symbols, normalized to unit energy.
///
/// The result has `span_symbols * samples_per_symbol + 1` taps (the product
/// must be even); the center tap sits at index `len / 2`.
pub fn rrc_taps(
    rolloff: f64,
    samples_per_symbol: usize,
    span_symbols: usize,
) -> Result<Vec<f64>, SigsimError> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(SigsimError::InvalidParams(format!(
            "rolloff must lie in (0, 1], got {rolloff}"
        )));
    }
    if samples_per_symbol == 0 || span_symbols == 0 {
        return Err(SigsimError::InvalidParams(
            "samples_per_symbol and span_symbols must be positive".into(),
        ));
    }
    if span_symbols * samples_per_symbol % 2 == 1 {
        return Err(SigsimError::InvalidParams(format!(
            "span_symbols * samples_per_symbol must be even for a centered filter, got {span_symbols} * {samples_per_symbol}"
        )));
    }
    let half = (span_symbols * samples_per_symbol / 2) as i64;
    let mut taps: Vec<f64> = (-half..=half)
        // |k| keeps the response exactly even.
        .map(|k| rrc_impulse(rolloff, k.unsigned_abs() as f64 / samples_per_symbol as f64))
        .collect();
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let scale = energy.sqrt().recip();
    taps.iter_mut().for_each(|h| *h *= scale);
    Ok(taps)
}
