//! The invariant law of the equation: Brownian-bridge base laws, the Gibbs
//! tilt `exp(2 int U)`, sup-norm distribution series and long-time checks.

pub mod bridge;
pub mod ergodic;
pub mod gibbs;
pub mod series;

pub use bridge::{BridgeMode, BridgeSample, BridgeSampler, Synthesis};
pub use ergodic::{ergodic_check, sup_norms_at, ErgodicConfig, ErgodicReport};
pub use gibbs::{ball_mass, gibbs_sample, integral_u, tilt_accept, BallMass, GibbsConfig, GibbsSampleBatch, ProposalRecord};
pub use series::{
    bm_sup_cdf, bm_sup_cdf_images, bm_sup_cdf_series, bridge_sup_cdf, bridge_sup_cdf_series, bridge_sup_cdf_theta,
    bridge_sup_log_cdf,
};
