//! Binary cross-entropy on logits.

/// Logistic function, evaluated without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-(y ln σ(z) + (1-y) ln(1-σ(z)))` in the stable form
/// `max(z,0) - z·y + ln(1 + e^{-|z|})`.
pub fn bce_with_logits(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Mean loss over a batch.
pub fn mean_bce(logits: &[f64], labels: &[f64]) -> f64 {
    assert_eq!(logits.len(), labels.len());
    if logits.is_empty() {
        return 0.0;
    }
    logits.iter().zip(labels).map(|(&z, &y)| bce_with_logits(z, y)).sum::<f64>() / logits.len() as f64
}
