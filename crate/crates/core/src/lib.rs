//! Sum-rate maximization for downlink NOMA with multi-antenna transmitters.

pub mod analysis;
pub mod baseline;
pub mod conic;
pub mod harness;
pub mod mma;
pub mod model;
