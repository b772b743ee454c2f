//! Simulation and verification tools for systems of stochastic heat equations
//!
//! `du = (Δu + ∇U(u)) dt + dW` on `[0, 1]` with Dirichlet boundary conditions,
//! with `u` taking values in `R^d` and `W` a space-time white noise.
//!
//! Numerical kernels are generic over [`scalar::Real`] (`f32` or `f64`); the
//! Monte Carlo experiments in [`hitting`] and [`invariant`] run in `f64`.

pub mod capacity;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod hitting;
pub mod invariant;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod target;
pub mod verify;

pub use capacity::{cap, discretize_target, min_energy, CapacityEstimate, CapacityKernel, DiscreteMeasure, Discretization};
pub use dynamics::{integrate, GridPath, IntegratorConfig, ModeState, Potential, SpdeSystem};
pub use error::{Error, ErrorCategory, Result};
pub use grid::{GridFunction, SineBasis, SineMode};
pub use rng::{seed_derive, RngStream, StreamKey, Streams};
pub use scalar::Real;
pub use spectral::{SpaceTimePoint, SpectralTruncation};
pub use target::TargetSet;

pub type ModeState64 = ModeState<f64>;
pub type ModeState32 = ModeState<f32>;
pub type GridPath64 = GridPath<f64>;
pub type GridPath32 = GridPath<f32>;
pub type GridFunction64 = GridFunction<f64>;
pub type GridFunction32 = GridFunction<f32>;
pub type Potential64 = Potential<f64>;
pub type Potential32 = Potential<f32>;
pub type TargetSet64 = TargetSet<f64>;
pub type TargetSet32 = TargetSet<f32>;
pub type SpdeSystem64 = SpdeSystem<f64>;
pub type SpdeSystem32 = SpdeSystem<f32>;
pub type CapacityEstimate64 = CapacityEstimate<f64>;
pub type Truncation64 = SpectralTruncation<f64>;
pub type Truncation32 = SpectralTruncation<f32>;
