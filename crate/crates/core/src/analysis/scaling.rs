//! Channel families `h_{k+1} = c_{k+1} h_k` on which the complete and the
//! approximate objectives coincide.

use num_complex::Complex64;

use super::AnalysisError;
use crate::model::{inner, ChannelSet, PrecoderSet};

/// Builds `h_1 = base`, `h_{k+1} = c_{k+1} h_k` with
/// `c_{k+1} = magnitudes[k] * e^{i phases[k]}`. Distances are set to 1 since
/// the family is defined by its channel vectors alone.
pub fn scaled_channel_family(
    base: &[Complex64],
    magnitudes: &[f64],
    phases: &[f64],
) -> Result<ChannelSet, AnalysisError> {
    if magnitudes.len() != phases.len() {
        return Err(AnalysisError::Domain("one phase per magnitude is required".into()));
    }
    if let Some(&m) = magnitudes.iter().find(|&&m| !(m > 1.0) || !m.is_finite()) {
        return Err(AnalysisError::Domain(format!("scale magnitudes must exceed 1, got {m}")));
    }
    if base.is_empty() || base.iter().all(|c| c.norm() == 0.0) {
        return Err(AnalysisError::Domain("base channel must be nonzero".into()));
    }
    let mut h = vec![base.to_vec()];
    for (&m, &ph) in magnitudes.iter().zip(phases) {
        let c = Complex64::from_polar(m, ph);
        let next: Vec<Complex64> = h.last().unwrap().iter().map(|x| x * c).collect();
        h.push(next);
    }
    let n = h.len();
    Ok(ChannelSet::new(h, vec![1.0; n])?)
}

/// `SINR_i^k` with a per-user noise power `noise[i]`.
pub fn sinr_with_noise(channels: &ChannelSet, precoders: &PrecoderSet, noise: &[f64], i: usize, k: usize) -> f64 {
    let h = channels.channel(i);
    let signal = inner(h, precoders.precoder(k)).norm_sqr();
    let interference: f64 = (k + 1..channels.users())
        .map(|m| inner(h, precoders.precoder(m)).norm_sqr())
        .sum();
    signal / (interference + noise[i])
}

/// Smallest `|c|` for which a user `n` with `h_n = c h_k` decodes message `k`
/// at least as well as user `k` itself.
pub fn dominance_threshold(sigma_n: f64, sigma_k: f64) -> f64 {
    sigma_n / sigma_k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_multiply() {
        let base = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let ch = scaled_channel_family(&base, &[2.0, 2.0], &[0.3, -1.0]).unwrap();
        let norms: Vec<f64> = ch
            .channels()
            .iter()
            .map(|h| h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        for (got, want) in norms.iter().zip([1.0, 2.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_small_magnitudes() {
        let base = vec![Complex64::new(1.0, 0.0)];
        assert!(scaled_channel_family(&base, &[1.0], &[0.0]).is_err());
        assert!(scaled_channel_family(&base, &[0.5], &[0.0]).is_err());
        assert!(scaled_channel_family(&base, &[2.0], &[]).is_err());
    }
}
