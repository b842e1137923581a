//! Decoding-order probability under random unitary precoding.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::special::psi_scaled;
use super::AnalysisError;

/// Parameters of the pairwise comparison `SINR_i^k > SINR_j^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbParams {
    /// `d_i^gamma`.
    pub lambda_i: f64,
    /// `d_j^gamma`.
    pub lambda_j: f64,
    /// Number of users `N`.
    pub users: usize,
    /// Message index `k`, one-based: `N - k` messages interfere.
    pub k: usize,
    /// Noise power.
    pub sigma2: f64,
}

impl ProbParams {
    pub fn from_distances(d_i: f64, d_j: f64, gamma: f64, users: usize, k: usize, sigma2: f64) -> Self {
        Self {
            lambda_i: d_i.powf(gamma),
            lambda_j: d_j.powf(gamma),
            users,
            k,
            sigma2,
        }
    }

    /// Number of interfering messages, `N - k`.
    pub fn interferers(&self) -> usize {
        self.users - self.k
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let nonneg = |x: f64| x >= 0.0 && x.is_finite();
        if !nonneg(self.lambda_i) || !nonneg(self.lambda_j) {
            return Err(AnalysisError::Domain("rate parameters must be finite and nonnegative".into()));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(AnalysisError::Domain("noise power must be positive".into()));
        }
        if self.k < 1 || self.k >= self.users {
            return Err(AnalysisError::Domain(format!(
                "message index {} outside 1..{}",
                self.k,
                self.users.saturating_sub(1)
            )));
        }
        Ok(())
    }
}

/// A probability as computed, and clipped to `[0, 1]` for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability {
    pub raw: f64,
    pub value: f64,
}

impl Probability {
    fn new(raw: f64) -> Self {
        Self {
            raw,
            value: raw.clamp(0.0, 1.0),
        }
    }
}

fn closed_form(lambda_i: f64, mu: f64, sigma2: f64, m: usize) -> Result<Probability, AnalysisError> {
    if !(mu > 0.0) {
        return Err(AnalysisError::Domain("combined rate parameter must be positive".into()));
    }
    let m2 = 2 * m as u32;
    let raw = 1.0 - lambda_i * sigma2 * psi_scaled(mu, m2)? - m as f64 * psi_scaled(mu, m2 + 1)?;
    Ok(Probability::new(raw))
}

/// `Pr(SINR_i^k > SINR_j^k)`:
/// `1 - e^mu lambda_i sigma^2 psi(mu, 2(N-k)) - e^mu (N-k) psi(mu, 2(N-k)+1)`
/// with `mu = (lambda_i + lambda_j) sigma^2`.
pub fn prob_decoding_order(p: &ProbParams) -> Result<Probability, AnalysisError> {
    p.validate()?;
    let mu = (p.lambda_i + p.lambda_j) * p.sigma2;
    closed_form(p.lambda_i, mu, p.sigma2, p.interferers())
}

/// The same expression with `mu` replaced by `lambda_j sigma^2`, intended
/// for `lambda_j >> lambda_i`.
pub fn prob_decoding_order_approx(p: &ProbParams) -> Result<Probability, AnalysisError> {
    p.validate()?;
    closed_form(p.lambda_i, p.lambda_j * p.sigma2, p.sigma2, p.interferers())
}

/// CDF of `SINR_i^k` for a user with rate parameter `lambda`:
/// `1 - e^{-lambda sigma^2 z} / (1 + z)^(N-k)`.
pub fn sinr_cdf(z: f64, lambda: f64, sigma2: f64, interferers: usize) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    1.0 - (-lambda * sigma2 * z).exp() / (1.0 + z).powi(interferers as i32)
}

/// `T x N` matrix with orthonormal columns drawn from the Haar measure
/// (QR of a complex Gaussian matrix with the phases of `diag(R)` removed).
pub fn haar_unitary_columns<R: Rng>(antennas: usize, columns: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(antennas, columns, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..columns {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for a in 0..antennas {
            q[(a, c)] *= phase;
        }
    }
    q
}

fn gaussian_channel<R: Rng>(antennas: usize, lambda: f64, rng: &mut R) -> Vec<Complex64> {
    let amp = (0.5 / lambda).sqrt();
    (0..antennas)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(amp * re, amp * im)
        })
        .collect()
}

/// `SINR^k` at a user with channel `h` under unit-power columns of `w`
/// (`k` one-based).
fn sinr_unitary(h: &[Complex64], w: &DMatrix<Complex64>, k: usize, sigma2: f64) -> f64 {
    let gain = |c: usize| {
        w.column(c)
            .iter()
            .zip(h)
            .map(|(wa, ha)| ha.conj() * wa)
            .sum::<Complex64>()
            .norm_sqr()
    };
    let signal = gain(k - 1);
    let interference: f64 = (k..w.ncols()).map(gain).sum();
    signal / (interference + sigma2)
}

fn check_mc(p: &ProbParams, antennas: usize, trials: usize) -> Result<(), AnalysisError> {
    p.validate()?;
    if trials == 0 {
        return Err(AnalysisError::Domain("at least one trial is needed".into()));
    }
    if p.users > antennas {
        return Err(AnalysisError::Domain("unitary precoding needs users <= antennas".into()));
    }
    if !(p.lambda_i > 0.0 && p.lambda_j > 0.0) {
        return Err(AnalysisError::Domain("simulation needs positive rate parameters".into()));
    }
    Ok(())
}

/// Monte Carlo estimate of `Pr(SINR_i^k > SINR_j^k)` and its standard error.
pub fn mc_prob_decoding_order(
    p: &ProbParams,
    antennas: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64), AnalysisError> {
    check_mc(p, antennas, trials)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        let w = haar_unitary_columns(antennas, p.users, &mut rng);
        let hi = gaussian_channel(antennas, p.lambda_i, &mut rng);
        let hj = gaussian_channel(antennas, p.lambda_j, &mut rng);
        if sinr_unitary(&hi, &w, p.k, p.sigma2) > sinr_unitary(&hj, &w, p.k, p.sigma2) {
            hits += 1;
        }
    }
    let est = hits as f64 / trials as f64;
    let se = (est * (1.0 - est) / trials as f64).sqrt();
    Ok((est, se))
}

/// Simulated samples of `SINR_i^k` for the user with rate `lambda_i`.
pub fn sample_sinr(p: &ProbParams, antennas: usize, trials: usize, seed: u64) -> Result<Vec<f64>, AnalysisError> {
    check_mc(p, antennas, trials)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..trials)
        .map(|_| {
            let w = haar_unitary_columns(antennas, p.users, &mut rng);
            let h = gaussian_channel(antennas, p.lambda_i, &mut rng);
            sinr_unitary(&h, &w, p.k, p.sigma2)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(li: f64, lj: f64, sigma2: f64) -> ProbParams {
        ProbParams {
            lambda_i: li,
            lambda_j: lj,
            users: 4,
            k: 1,
            sigma2,
        }
    }

    #[test]
    fn symmetric_case_is_one_half() {
        for &(l, s) in &[(1.0, 1.0), (4.0, 0.1), (25.0, 2.0), (0.3, 0.01)] {
            let p = prob_decoding_order(&params(l, l, s)).unwrap();
            assert!((p.raw - 0.5).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn vanishing_noise_limit_is_one_half() {
        let p = prob_decoding_order(&params(1.0, 9.0, 1e-9)).unwrap();
        assert!((p.raw - 0.5).abs() < 1e-6);
    }

    #[test]
    fn strong_user_limit() {
        // as lambda_i -> 0 the first term vanishes
        let lj = 4.0;
        let s2 = 1.0;
        let limit = 1.0 - 3.0 * psi_scaled(lj * s2, 7).unwrap();
        let p = prob_decoding_order(&params(1e-12, lj, s2)).unwrap();
        assert!((p.raw - limit).abs() < 1e-9);
        let a = prob_decoding_order_approx(&params(0.0, lj, s2)).unwrap();
        assert!((a.raw - limit).abs() < 1e-12);
    }

    #[test]
    fn approximation_regime() {
        let far = params(1.0, 1e3, 0.5);
        let gap_far = (prob_decoding_order(&far).unwrap().raw - prob_decoding_order_approx(&far).unwrap().raw).abs();
        assert!(gap_far < 1e-2);
        let near = params(1.0, 1.0, 0.5);
        let gap_near =
            (prob_decoding_order(&near).unwrap().raw - prob_decoding_order_approx(&near).unwrap().raw).abs();
        assert!(gap_near > gap_far);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = params(1.0, 1.0, 1.0);
        p.k = 4;
        assert!(prob_decoding_order(&p).is_err());
        p.k = 0;
        assert!(prob_decoding_order(&p).is_err());
        assert!(prob_decoding_order(&params(1.0, 1.0, 0.0)).is_err());
        assert!(mc_prob_decoding_order(&params(1.0, 1.0, 1.0), 3, 10, 0).is_err());
        assert!(mc_prob_decoding_order(&params(1.0, 1.0, 1.0), 6, 0, 0).is_err());
    }

    #[test]
    fn haar_columns_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = haar_unitary_columns(6, 4, &mut rng);
        let g = q.adjoint() * &q;
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((g[(a, b)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let p = params(1.0, 4.0, 1.0);
        assert_eq!(
            mc_prob_decoding_order(&p, 6, 500, 7).unwrap(),
            mc_prob_decoding_order(&p, 6, 500, 7).unwrap()
        );
    }
}
