//! Zero-forcing comparison precoder with water-filling power allocation, and
//! random user-subset selection for overloaded cells.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{inner, ChannelSet, ModelError, PrecoderSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("channel matrix is rank deficient")]
    RankDeficient,
    #[error("zero forcing needs users <= antennas, got {users} users and {antennas} antennas")]
    Overloaded { users: usize, antennas: usize },
    #[error("cannot select {count} of {users} users")]
    SubsetTooLarge { count: usize, users: usize },
    #[error("invalid argument: {0}")]
    InvalidArg(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZfResult {
    pub precoders: PrecoderSet,
    pub powers: Vec<f64>,
    pub per_user_rates: Vec<f64>,
    pub sum_rate: f64,
}

/// Relative pivot size below which the stacked channel matrix counts as
/// rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Water-filling over parallel channels with gains `g_i`: maximizes
/// `sum log2(1 + p_i g_i / noise)` subject to `sum p_i = power`, `p_i >= 0`.
pub fn water_filling(gains: &[f64], power: f64, noise: f64) -> Result<Vec<f64>, BaselineError> {
    if !(power >= 0.0 && power.is_finite()) || !(noise > 0.0) {
        return Err(BaselineError::InvalidArg("power must be finite and nonnegative, noise positive".into()));
    }
    if gains.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(BaselineError::InvalidArg("gains must be positive".into()));
    }
    // floors sorted ascending; the water level covers the first `active` of them
    let mut floors: Vec<f64> = gains.iter().map(|g| noise / g).collect();
    floors.sort_by(f64::total_cmp);
    let mut level = 0.0;
    let mut prefix = 0.0;
    for (idx, &f) in floors.iter().enumerate() {
        prefix += f;
        let candidate = (power + prefix) / (idx + 1) as f64;
        let next = floors.get(idx + 1).copied().unwrap_or(f64::INFINITY);
        if candidate <= next {
            level = candidate;
            break;
        }
    }
    Ok(gains.iter().map(|g| (level - noise / g).max(0.0)).collect())
}

/// Zero-forcing directions (normalized pseudo-inverse columns) with
/// water-filled powers.
pub fn zf_precoders(channels: &ChannelSet, power: f64, sigma: f64) -> Result<ZfResult, BaselineError> {
    let n = channels.users();
    let t = channels.antennas();
    if n > t {
        return Err(BaselineError::Overloaded { users: n, antennas: t });
    }
    if !(sigma > 0.0) {
        return Err(BaselineError::InvalidArg("sigma must be positive".into()));
    }
    // columns of H^H are the channel vectors
    let hh = DMatrix::from_fn(t, n, |a, i| channels.channel(i)[a]);
    let qr = hh.qr();
    let q = qr.q();
    let r = qr.r();
    let rmax = (0..n).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    if (0..n).any(|i| r[(i, i)].norm() <= RANK_TOL * rmax) || rmax == 0.0 {
        return Err(BaselineError::RankDeficient);
    }
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(BaselineError::RankDeficient)?;
    // H F = I with F = Q R^{-H}
    let f = q * rinv.adjoint();
    let dirs: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            let col: Vec<Complex64> = f.column(i).iter().copied().collect();
            let nrm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            col.into_iter().map(|c| c / nrm).collect()
        })
        .collect();
    let gains: Vec<f64> = (0..n)
        .map(|i| inner(channels.channel(i), &dirs[i]).norm_sqr())
        .collect();
    let noise = sigma * sigma;
    let powers = water_filling(&gains, power, noise)?;
    let w: Vec<Vec<Complex64>> = dirs
        .iter()
        .zip(&powers)
        .map(|(d, &p)| d.iter().map(|c| c * p.sqrt()).collect())
        .collect();
    let per_user_rates: Vec<f64> = gains
        .iter()
        .zip(&powers)
        .map(|(g, p)| (1.0 + p * g / noise).log2())
        .collect();
    let sum_rate = per_user_rates.iter().sum();
    Ok(ZfResult {
        precoders: PrecoderSet::new(w)?,
        powers,
        per_user_rates,
        sum_rate,
    })
}

/// Uniform random subset of `count` users, returned in ascending order.
pub fn select_users(channels: &ChannelSet, count: usize, seed: u64) -> Result<Vec<usize>, BaselineError> {
    let users = channels.users();
    if count > users {
        return Err(BaselineError::SubsetTooLarge { count, users });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, users, count).into_vec();
    idx.sort_unstable();
    Ok(idx)
}
