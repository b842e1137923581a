//! Linearization state carried between iterations.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{MmaError, Variant};
use crate::model::{self, ChannelSet, PrecoderSet, SystemParams};

/// Power split ratio between consecutive users at initialization.
pub const INIT_POWER_RATIO: f64 = 0.5;

/// Point about which every quadratic and bilinear term is linearized.
#[derive(Debug, Clone, PartialEq)]
pub struct MmaState {
    /// Interference-plus-noise bounds `wbar_k`, `k = 0..N-1`.
    pub wbar: Vec<f64>,
    pub r: Vec<f64>,
    /// Cross interference bounds `v_(k,j)`, `j > k`.
    pub v: BTreeMap<(usize, usize), f64>,
    /// `h_k^H w_k` for `k = 0..N-1` (excluding the last user).
    pub theta_kk: Vec<Complex64>,
    /// `h_j^H w_k` keyed by `(k, j)`, `j > k`.
    pub theta_jk: BTreeMap<(usize, usize), Complex64>,
    /// `h_N^H w_N`.
    pub theta_nn: Complex64,
    /// `h_k^H w_m` keyed by `(k, m)`, `m < N-1`.
    pub phi: BTreeMap<(usize, usize), Complex64>,
    pub precoders: PrecoderSet,
}

impl MmaState {
    /// Builds the state with every auxiliary tight at `precoders`: bounds equal
    /// their interference-plus-noise sums and `r_k - 1` equals the SINR that
    /// limits message `k` under `variant`.
    pub fn tight(
        channels: &ChannelSet,
        precoders: PrecoderSet,
        sigma: f64,
        variant: Variant,
    ) -> Result<Self, MmaError> {
        if channels.users() != precoders.users() || channels.antennas() != precoders.antennas() {
            return Err(MmaError::Inconsistent(format!(
                "channels {}x{} vs precoders {}x{}",
                channels.users(),
                channels.antennas(),
                precoders.users(),
                precoders.antennas()
            )));
        }
        let n = channels.users();
        let noise = sigma * sigma;
        let ip = |u: usize, m: usize| model::inner(channels.channel(u), precoders.precoder(m));
        let gains = model::gain_matrix(channels, &precoders);
        let interference = |u: usize, k: usize| -> f64 { gains[u][k + 1..].iter().sum::<f64>() };

        let wbar = (0..n - 1).map(|k| interference(k, k) + noise).collect();
        let mut v = BTreeMap::new();
        let mut theta_jk = BTreeMap::new();
        for k in 0..n.saturating_sub(1) {
            for j in k + 1..n {
                v.insert((k, j), interference(j, k) + noise);
                theta_jk.insert((k, j), ip(j, k));
            }
        }
        let mut phi = BTreeMap::new();
        for k in 0..n {
            for m in 0..n - 1 {
                phi.insert((k, m), ip(k, m));
            }
        }
        let rates = match variant {
            Variant::Cnoma => model::rates_cnoma(&gains, noise),
            Variant::Anoma => model::rates_anoma(&gains, noise),
        };
        let r = rates.iter().map(|x| x.exp2()).collect();
        Ok(Self {
            wbar,
            r,
            v,
            theta_kk: (0..n - 1).map(|k| ip(k, k)).collect(),
            theta_jk,
            theta_nn: ip(n - 1, n - 1),
            phi,
            precoders,
        })
    }

    pub fn users(&self) -> usize {
        self.r.len()
    }

    /// `sum_k log2 r_k`.
    pub fn log_objective(&self) -> f64 {
        self.r.iter().map(|x| x.log2()).sum()
    }

    /// `(prod_k r_k)^(1/N)`.
    pub fn geomean(&self) -> f64 {
        (self.log_objective() / self.users() as f64).exp2()
    }

    pub(crate) fn check(&self, channels: &ChannelSet) -> Result<(), MmaError> {
        let n = channels.users();
        let ok = self.r.len() == n
            && self.wbar.len() + 1 == n
            && self.theta_kk.len() + 1 == n
            && self.v.len() == n * (n - 1) / 2
            && self.theta_jk.len() == n * (n - 1) / 2
            && self.phi.len() == n * (n - 1)
            && self.precoders.users() == n
            && self.precoders.antennas() == channels.antennas();
        if ok {
            Ok(())
        } else {
            Err(MmaError::Inconsistent(format!(
                "state does not match {} users and {} antennas",
                n,
                channels.antennas()
            )))
        }
    }
}

/// Per-user powers `P rho^i (1 - rho) / (1 - rho^N)`, strictly descending
/// and summing to `P`.
pub fn initial_powers(users: usize, power: f64) -> Vec<f64> {
    let rho = INIT_POWER_RATIO;
    let norm = (1.0 - rho) / (1.0 - rho.powi(users as i32));
    (0..users).map(|i| power * rho.powi(i as i32) * norm).collect()
}

/// Common-direction precoders `sqrt(p_i) u` with a seeded random unit `u`.
pub fn initial_precoders(params: &SystemParams, seed: u64) -> PrecoderSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<Complex64> = (0..params.antennas)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    u.iter_mut().for_each(|c| *c /= norm);
    let w = initial_powers(params.users, params.power)
        .into_iter()
        .map(|p| u.iter().map(|c| c * p.sqrt()).collect())
        .collect();
    PrecoderSet::new(w).expect("uniform shapes")
}

/// Starting point feasible for the original problem, tight under the
/// complete formulation.
pub fn init_state(
    channels: &ChannelSet,
    params: &SystemParams,
    seed: u64,
) -> Result<MmaState, MmaError> {
    init_state_for(channels, params, seed, Variant::Cnoma)
}

/// As [`init_state`] with `r` tight for `variant`.
pub fn init_state_for(
    channels: &ChannelSet,
    params: &SystemParams,
    seed: u64,
    variant: Variant,
) -> Result<MmaState, MmaError> {
    params.validate()?;
    if channels.users() != params.users || channels.antennas() != params.antennas {
        return Err(MmaError::Inconsistent("channels do not match parameters".into()));
    }
    MmaState::tight(channels, initial_precoders(params, seed), params.sigma, variant)
}
