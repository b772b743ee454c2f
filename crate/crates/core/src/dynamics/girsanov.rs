//! Likelihood ratio between the drifted and driftless exponential-Euler chains.
//!
//! Per step and mode the driftless chain adds `eta ~ N(0, q^2)` while the
//! drifted chain adds `m + eta` with `m = gain * <grad U(u), phi_k>`. The
//! density ratio of the drifted to the driftless transition, evaluated along a
//! driftless path, is `exp(m eta / q^2 - m^2 / (2 q^2))`; the product over steps
//! and modes reweights driftless paths to the law of the drifted scheme.

use std::sync::Arc;

use super::modes::OuCoefficients;
use super::path::GridPath;
use super::potential::{CertifiedBounds, Potential};
use super::system::DriftProjector;
use crate::error::{Error, Result};
use crate::grid::SineBasis;
use crate::scalar::Real;

/// Streaming accumulator of the log-likelihood ratio.
pub struct GirsanovAccumulator<T: Real> {
    potential: Potential<T>,
    bounds: CertifiedBounds<T>,
    basis: Arc<SineBasis<T>>,
    projector: DriftProjector<T>,
    ou: Vec<OuCoefficients<T>>,
    drift: Vec<T>,
    log_weight: T,
    steps: usize,
}

impl<T: Real> GirsanovAccumulator<T> {
    pub fn new(potential: Potential<T>, basis: Arc<SineBasis<T>>, dt: T) -> Result<Self> {
        let bounds = potential.bounds()?;
        let d = potential.dim();
        let k_max = basis.k_max();
        Ok(Self {
            projector: DriftProjector::new(d, basis.intervals()),
            ou: OuCoefficients::table(k_max, dt),
            drift: vec![T::zero(); d * k_max],
            log_weight: T::zero(),
            steps: 0,
            potential,
            bounds,
            basis,
        })
    }

    /// Adds one step: `field` is the state before the step (node-major) and
    /// `eta` the noise increments that step added (component-major).
    pub fn observe(&mut self, field: &[T], eta: &[T]) -> Result<()> {
        if self.potential.is_zero() {
            self.steps += 1;
            return Ok(());
        }
        self.projector.project(
            &self.potential,
            &self.bounds,
            &self.basis,
            field,
            self.steps,
            &mut self.drift,
        )?;
        let k_max = self.basis.k_max();
        let half = T::lit(0.5);
        for (idx, (&f, &e)) in self.drift.iter().zip(eta).enumerate() {
            let c = &self.ou[idx % k_max];
            let m = c.gain * f;
            let var = c.noise_sd * c.noise_sd;
            self.log_weight += (m * e - half * m * m) / var;
        }
        self.steps += 1;
        Ok(())
    }

    pub fn log_weight(&self) -> T {
        self.log_weight
    }

    pub fn weight(&self) -> T {
        self.log_weight.exp()
    }
}

/// `log` of [`girsanov_weight`].
pub fn girsanov_log_weight<T: Real>(path: &GridPath<T>, potential: &Potential<T>) -> Result<T> {
    if !path.has_noise() {
        return Err(Error::State(
            "path carries no recorded noise increments; integrate with record_noise".into(),
        ));
    }
    if potential.dim() != path.dim() {
        return Err(Error::Configuration("potential and path dimensions differ".into()));
    }
    let basis = Arc::new(SineBasis::new(path.k_max(), path.intervals())?);
    let mut acc = GirsanovAccumulator::new(potential.clone(), basis, path.dt())?;
    for n in 0..path.n_times() - 1 {
        acc.observe(path.slice(n), path.noise(n).expect("noise present"))?;
    }
    Ok(acc.log_weight())
}

/// Weight turning expectations over driftless paths into expectations under
/// the drifted dynamics with potential `potential`.
pub fn girsanov_weight<T: Real>(path: &GridPath<T>, potential: &Potential<T>) -> Result<T> {
    Ok(girsanov_log_weight(path, potential)?.exp())
}
