//! Closed-form decoding-order probabilities, the scaled-channel construction
//! and complexity estimates.

use thiserror::Error;

use crate::model::ModelError;

pub mod complexity;
pub mod scaling;
pub mod probability;
pub mod special;

pub use complexity::{complexity_estimate, ComplexityEstimate};
pub use scaling::{dominance_threshold, scaled_channel_family, sinr_with_noise};
pub use probability::{
    haar_unitary_columns, mc_prob_decoding_order, prob_decoding_order, prob_decoding_order_approx, sample_sinr,
    sinr_cdf, ProbParams, Probability,
};
pub use special::{exp_integral_ei, psi, psi_scaled};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
