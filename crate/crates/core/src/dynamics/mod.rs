//! Simulation of the stochastic heat equation with additive space-time white
//! noise and a gradient drift, in the Dirichlet sine basis.

pub mod girsanov;
pub mod modes;
pub mod path;
pub mod potential;
pub mod system;

pub use girsanov::{girsanov_log_weight, girsanov_weight, GirsanovAccumulator};
pub use modes::{
    ou_mode_step, ou_mode_step_noiseless, sample_convolution, sample_stationary, ModeState,
    OuCoefficients,
};
pub use path::GridPath;
pub use potential::{CertifiedBounds, Potential, PotentialFamily, TabulatedProfile};
pub use system::{integrate, IntegratorConfig, SpdeSystem, MAX_DRIFT_DT};
