//! Downlink system model: channel draws, SINR and sum-rate evaluation, and
//! the feasibility check for the NOMA ordering and power constraints.
//!
//! Users are indexed from zero. User `0` is the weakest user in the decoding
//! order (it decodes only its own message) and user `N-1` is the strongest
//! (it cancels every other message before decoding its own).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid system parameter: {0}")]
    InvalidParam(String),
    #[error("user index {index} out of range for {users} users")]
    IndexOutOfRange { index: usize, users: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Static description of the downlink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Transmit antennas at the base station (`T`).
    pub antennas: usize,
    /// Single-antenna users (`N`).
    pub users: usize,
    /// Path-loss exponent.
    pub gamma: f64,
    /// Largest user distance in meters.
    pub max_distance: f64,
    /// Per-user noise standard deviation.
    pub sigma: f64,
    /// Total transmit power budget.
    pub power: f64,
}

impl SystemParams {
    pub fn new(
        antennas: usize,
        users: usize,
        gamma: f64,
        max_distance: f64,
        sigma: f64,
        power: f64,
    ) -> Result<Self, ModelError> {
        let p = Self {
            antennas,
            users,
            gamma,
            max_distance,
            sigma,
            power,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParam(m.to_string()));
        if self.antennas == 0 {
            return bad("antenna count must be positive");
        }
        if self.users == 0 {
            return bad("user count must be positive");
        }
        if !(self.gamma >= 0.0) {
            return bad("path-loss exponent must be nonnegative");
        }
        if !(self.max_distance >= 1.0) {
            return bad("maximum distance must be at least 1");
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return bad("noise standard deviation must be positive");
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return bad("power budget must be positive");
        }
        Ok(())
    }

    pub fn noise_power(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Same system with the power budget set from a transmit SNR in dB,
    /// `P = sigma^2 * 10^(dB/10)`.
    pub fn with_tx_snr_db(mut self, db: f64) -> Self {
        self.power = self.noise_power() * 10f64.powf(db / 10.0);
        self
    }
}

/// Channel vectors `h_i` together with the user distances they were drawn at.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    h: Vec<Vec<Complex64>>,
    d: Vec<f64>,
}

impl ChannelSet {
    pub fn new(h: Vec<Vec<Complex64>>, d: Vec<f64>) -> Result<Self, ModelError> {
        if h.is_empty() {
            return Err(ModelError::Shape("channel set needs at least one user".into()));
        }
        if h.len() != d.len() {
            return Err(ModelError::Shape(format!(
                "{} channels but {} distances",
                h.len(),
                d.len()
            )));
        }
        let t = h[0].len();
        if t == 0 || h.iter().any(|v| v.len() != t) {
            return Err(ModelError::Shape("channels must share a nonzero length".into()));
        }
        if d.iter().any(|&x| !(x >= 1.0)) {
            return Err(ModelError::InvalidParam("distances must be at least 1".into()));
        }
        Ok(Self { h, d })
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }

    pub fn antennas(&self) -> usize {
        self.h[0].len()
    }

    pub fn channel(&self, i: usize) -> &[Complex64] {
        &self.h[i]
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.h
    }

    pub fn distances(&self) -> &[f64] {
        &self.d
    }

    /// Channel set restricted to `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, ModelError> {
        let users = self.users();
        if let Some(&bad) = indices.iter().find(|&&i| i >= users) {
            return Err(ModelError::IndexOutOfRange { index: bad, users });
        }
        Self::new(
            indices.iter().map(|&i| self.h[i].clone()).collect(),
            indices.iter().map(|&i| self.d[i]).collect(),
        )
    }
}

/// Precoding vectors `w_i`, one per user.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    w: Vec<Vec<Complex64>>,
}

impl PrecoderSet {
    pub fn new(w: Vec<Vec<Complex64>>) -> Result<Self, ModelError> {
        if w.is_empty() {
            return Err(ModelError::Shape("precoder set needs at least one user".into()));
        }
        let t = w[0].len();
        if t == 0 || w.iter().any(|v| v.len() != t) {
            return Err(ModelError::Shape("precoders must share a nonzero length".into()));
        }
        if w.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(ModelError::InvalidParam("precoder entries must be finite".into()));
        }
        Ok(Self { w })
    }

    pub fn users(&self) -> usize {
        self.w.len()
    }

    pub fn antennas(&self) -> usize {
        self.w[0].len()
    }

    pub fn precoder(&self, i: usize) -> &[Complex64] {
        &self.w[i]
    }

    pub fn precoders(&self) -> &[Vec<Complex64>] {
        &self.w
    }

    pub fn total_power(&self) -> f64 {
        self.w.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// Every precoder multiplied by the same complex scalar.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            w: self
                .w
                .iter()
                .map(|v| v.iter().map(|c| c * factor).collect())
                .collect(),
        }
    }
}

/// `h^H w`.
pub fn inner(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    h.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

/// Squared magnitudes `G[i][m] = |h_i^H w_m|^2`.
pub fn gain_matrix(channels: &ChannelSet, precoders: &PrecoderSet) -> Vec<Vec<f64>> {
    channels
        .channels()
        .iter()
        .map(|h| {
            precoders
                .precoders()
                .iter()
                .map(|w| inner(h, w).norm_sqr())
                .collect()
        })
        .collect()
}

fn check_shapes(channels: &ChannelSet, precoders: &PrecoderSet) -> Result<(), ModelError> {
    if channels.users() != precoders.users() || channels.antennas() != precoders.antennas() {
        return Err(ModelError::Shape(format!(
            "channels are {}x{} but precoders are {}x{}",
            channels.users(),
            channels.antennas(),
            precoders.users(),
            precoders.antennas()
        )));
    }
    Ok(())
}

/// Equally spaced distances from 1 to `max_distance` (ascending).
pub fn make_distances(users: usize, max_distance: f64) -> Result<Vec<f64>, ModelError> {
    if users == 0 {
        return Err(ModelError::InvalidParam("user count must be positive".into()));
    }
    if !(max_distance >= 1.0) {
        return Err(ModelError::InvalidParam("maximum distance must be at least 1".into()));
    }
    if users == 1 {
        return Ok(vec![1.0]);
    }
    let step = (max_distance - 1.0) / (users - 1) as f64;
    Ok((0..users).map(|i| 1.0 + i as f64 * step).collect())
}

/// Distances assigned to users in decoding order: user 0 (weakest) sits at
/// `max_distance`, user `N-1` (strongest) at 1 meter.
pub fn user_distances(users: usize, max_distance: f64) -> Result<Vec<f64>, ModelError> {
    let mut d = make_distances(users, max_distance)?;
    d.reverse();
    Ok(d)
}

/// Rayleigh channels `h_i = sqrt(d_i^-gamma) g_i`, `g_i ~ CN(0, I)`.
pub fn sample_channels(
    params: &SystemParams,
    distances: &[f64],
    seed: u64,
) -> Result<ChannelSet, ModelError> {
    params.validate()?;
    if distances.len() != params.users {
        return Err(ModelError::Shape(format!(
            "{} distances for {} users",
            distances.len(),
            params.users
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let h = distances
        .iter()
        .map(|&d| {
            let amp = d.powf(-params.gamma).sqrt() * half;
            (0..params.antennas)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(amp * re, amp * im)
                })
                .collect()
        })
        .collect();
    ChannelSet::new(h, distances.to_vec())
}

/// SINR at user `i` when decoding the message of user `k`, with interference
/// from messages `k+1..N`.
pub fn sinr(
    channels: &ChannelSet,
    precoders: &PrecoderSet,
    i: usize,
    k: usize,
    sigma: f64,
) -> Result<f64, ModelError> {
    check_shapes(channels, precoders)?;
    let users = channels.users();
    for idx in [i, k] {
        if idx >= users {
            return Err(ModelError::IndexOutOfRange { index: idx, users });
        }
    }
    let h = channels.channel(i);
    let signal = inner(h, precoders.precoder(k)).norm_sqr();
    let interference: f64 = (k + 1..users)
        .map(|m| inner(h, precoders.precoder(m)).norm_sqr())
        .sum();
    Ok(signal / (interference + sigma * sigma))
}

fn sinr_from_gains(gains: &[Vec<f64>], i: usize, k: usize, noise: f64) -> f64 {
    let interference: f64 = gains[i][k + 1..].iter().sum();
    gains[i][k] / (interference + noise)
}

/// `min_{j >= k} SINR_j^k` and the first user attaining it.
pub fn min_cross_sinr(gains: &[Vec<f64>], k: usize, noise: f64) -> (usize, f64) {
    let mut best = (k, f64::INFINITY);
    for j in k..gains.len() {
        let s = sinr_from_gains(gains, j, k, noise);
        if s < best.1 {
            best = (j, s);
        }
    }
    best
}

/// Per-message rates of the complete formulation: message `k < N-1` is
/// limited by the weakest decoder among users `k..N`; the last message is
/// interference free.
pub fn rates_cnoma(gains: &[Vec<f64>], noise: f64) -> Vec<f64> {
    let n = gains.len();
    (0..n)
        .map(|k| {
            let s = if k + 1 == n {
                gains[k][k] / noise
            } else {
                min_cross_sinr(gains, k, noise).1
            };
            (1.0 + s).log2()
        })
        .collect()
}

/// Per-message rates keeping only the direct SINR of each user.
pub fn rates_anoma(gains: &[Vec<f64>], noise: f64) -> Vec<f64> {
    (0..gains.len())
        .map(|k| (1.0 + sinr_from_gains(gains, k, k, noise)).log2())
        .collect()
}

/// Sum rate with the full SIC decodability chain (bits/s/Hz).
pub fn sum_rate_cnoma(
    channels: &ChannelSet,
    precoders: &PrecoderSet,
    sigma: f64,
) -> Result<f64, ModelError> {
    check_shapes(channels, precoders)?;
    let gains = gain_matrix(channels, precoders);
    Ok(rates_cnoma(&gains, sigma * sigma).iter().sum())
}

/// Sum rate keeping only the direct SINR `SINR_k^k` of each message.
pub fn sum_rate_anoma(
    channels: &ChannelSet,
    precoders: &PrecoderSet,
    sigma: f64,
) -> Result<f64, ModelError> {
    check_shapes(channels, precoders)?;
    let gains = gain_matrix(channels, precoders);
    Ok(rates_anoma(&gains, sigma * sigma).iter().sum())
}

/// One violated link of an ordering chain `|h_k^H w_j|^2 >= |h_k^H w_{j+1}|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingViolation {
    pub observer: usize,
    pub position: usize,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `ordering_slack[k][j] = |h_k^H w_j|^2 - |h_k^H w_{j+1}|^2`.
    pub ordering_slack: Vec<Vec<f64>>,
    /// `P_th - sum_i ||w_i||^2`.
    pub power_slack: f64,
    pub violations: Vec<OrderingViolation>,
    pub power_violated: bool,
    pub tol: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty() && !self.power_violated
    }

    pub fn worst_ordering_slack(&self) -> f64 {
        self.ordering_slack
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Default absolute tolerance for [`check_noma_feasible`].
pub fn default_feasibility_tol(params: &SystemParams) -> f64 {
    1e-6 * params.power
}

/// Checks the power-ordering chain at every user and the total power budget.
/// Violations beyond `tol` (absolute, on squared magnitudes) are reported.
pub fn check_noma_feasible(
    channels: &ChannelSet,
    precoders: &PrecoderSet,
    params: &SystemParams,
    tol: f64,
) -> Result<FeasibilityReport, ModelError> {
    check_shapes(channels, precoders)?;
    if !(tol >= 0.0) {
        return Err(ModelError::InvalidParam("tolerance must be nonnegative".into()));
    }
    let gains = gain_matrix(channels, precoders);
    let mut violations = Vec::new();
    let ordering_slack: Vec<Vec<f64>> = gains
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.windows(2)
                .enumerate()
                .map(|(j, pair)| {
                    let slack = pair[0] - pair[1];
                    if slack < -tol {
                        violations.push(OrderingViolation {
                            observer: k,
                            position: j,
                            slack,
                        });
                    }
                    slack
                })
                .collect()
        })
        .collect();
    let power_slack = params.power - precoders.total_power();
    Ok(FeasibilityReport {
        ordering_slack,
        power_slack,
        violations,
        power_violated: power_slack < -tol,
        tol,
    })
}
