//! Exponential-Euler integration of the drifted equation in sine-mode space.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::modes::{ModeState, OuCoefficients};
use super::path::GridPath;
use super::potential::{CertifiedBounds, Potential};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, SineBasis};
use crate::rng::RngStream;
use crate::scalar::Real;

/// Largest step accepted when the drift is nonzero.
pub const MAX_DRIFT_DT: f64 = 1e-2;

/// Relative slack allowed when checking drift values against `grad_sup`.
const DRIFT_BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig<T> {
    pub horizon: T,
    pub dt: T,
    pub n_x: usize,
    pub k_max: usize,
    /// `false` gives the deterministic flow `du = (u'' + grad U(u)) dt`.
    pub noise: bool,
    /// Keep every mode-space noise increment (needed for Girsanov weights).
    pub record_noise: bool,
    /// Start recording at this time; the field is advanced unrecorded until then.
    pub record_from: T,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(horizon: T, dt: T) -> Self {
        Self {
            horizon,
            dt,
            n_x: 128,
            k_max: 128,
            noise: true,
            record_noise: false,
            record_from: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::Configuration(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(Error::Configuration(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.record_from < T::zero() || self.record_from > self.horizon {
            return Err(Error::Configuration(
                "record_from must lie in [0, horizon]".into(),
            ));
        }
        if self.n_x < 2 || self.k_max == 0 {
            return Err(Error::Configuration("need n_x >= 2 and k_max >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps covering `[record_from, horizon]`.
    pub fn recorded_steps(&self) -> usize {
        steps_for(self.horizon - self.record_from, self.dt)
    }
}

/// Number of `dt` steps covering a span, tolerating round-off in `span / dt`.
pub(crate) fn steps_for<T: Real>(span: T, dt: T) -> usize {
    let r = (span / dt).to_f64_lossy();
    (r - 1e-9).ceil().max(0.0) as usize
}

/// Evaluates `grad U` at every node of `field` and projects each component
/// onto the sine basis by the trapezoid rule.
pub(crate) struct DriftProjector<T> {
    d: usize,
    grad: Vec<T>,
    comp: Vec<T>,
}

impl<T: Real> DriftProjector<T> {
    pub(crate) fn new(d: usize, n: usize) -> Self {
        Self {
            d,
            grad: vec![T::zero(); (n + 1) * d],
            comp: vec![T::zero(); n + 1],
        }
    }

    pub(crate) fn project(
        &mut self,
        pot: &Potential<T>,
        bounds: &CertifiedBounds<T>,
        basis: &SineBasis<T>,
        field: &[T],
        step: usize,
        out: &mut [T],
    ) -> Result<()> {
        let d = self.d;
        let k_max = basis.k_max();
        let limit = bounds.grad_sup * (T::one() + T::lit(DRIFT_BOUND_SLACK)) + T::min_positive_value();
        for (z, g) in field.chunks_exact(d).zip(self.grad.chunks_exact_mut(d)) {
            pot.gradient(z, g);
            for &gi in g.iter() {
                if !gi.is_finite() {
                    return Err(Error::Integration {
                        step,
                        message: "non-finite drift value".into(),
                    });
                }
                if gi.abs() > limit {
                    return Err(Error::Integration {
                        step,
                        message: format!(
                            "drift {gi} exceeds certified bound {}",
                            bounds.grad_sup
                        ),
                    });
                }
            }
        }
        for i in 0..d {
            for (c, g) in self.comp.iter_mut().zip(self.grad.chunks_exact(d)) {
                *c = g[i];
            }
            basis.project_trapezoid(&self.comp, &mut out[i * k_max..(i + 1) * k_max]);
        }
        Ok(())
    }
}

/// Streaming integrator holding the current mode state and its grid field.
pub struct SpdeSystem<T: Real> {
    state: ModeState<T>,
    basis: Arc<SineBasis<T>>,
    potential: Potential<T>,
    bounds: CertifiedBounds<T>,
    dt: T,
    ou: Vec<OuCoefficients<T>>,
    noise: bool,
    record_noise: bool,
    field: Vec<T>,
    scratch: Vec<T>,
    projector: DriftProjector<T>,
    drift: Vec<T>,
    last_noise: Vec<T>,
    steps: usize,
    base_time: T,
    base_steps: usize,
}

impl<T: Real> SpdeSystem<T> {
    pub fn new(
        state: ModeState<T>,
        potential: Potential<T>,
        basis: Arc<SineBasis<T>>,
        dt: T,
        noise: bool,
    ) -> Result<Self> {
        let bounds = potential.bounds()?;
        if potential.dim() != state.dim() {
            return Err(Error::Configuration(format!(
                "potential acts on R^{} but the field has {} components",
                potential.dim(),
                state.dim()
            )));
        }
        if basis.k_max() != state.k_max() {
            return Err(Error::Configuration("basis and state disagree on k_max".into()));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Configuration(format!("dt must be positive, got {dt}")));
        }
        if !potential.is_zero() && dt > T::lit(MAX_DRIFT_DT) {
            return Err(Error::Configuration(format!(
                "dt = {dt} exceeds {MAX_DRIFT_DT} with a nonzero drift"
            )));
        }
        let d = state.dim();
        let n = basis.intervals();
        let k_max = state.k_max();
        let mut sys = Self {
            ou: OuCoefficients::table(k_max, dt),
            field: vec![T::zero(); (n + 1) * d],
            scratch: vec![T::zero(); n + 1],
            projector: DriftProjector::new(d, n),
            drift: vec![T::zero(); d * k_max],
            last_noise: vec![T::zero(); d * k_max],
            state,
            basis,
            potential,
            bounds,
            dt,
            noise,
            record_noise: false,
            steps: 0,
            base_time: T::zero(),
            base_steps: 0,
        };
        sys.base_time = sys.state.time();
        sys.refresh_field();
        Ok(sys)
    }

    /// System started from grid samples `u0` with the configured discretization.
    pub fn from_initial(u0: &GridFunction<T>, potential: Potential<T>, cfg: &IntegratorConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let basis = Arc::new(SineBasis::new(cfg.k_max, cfg.n_x)?);
        let state = ModeState::from_initial(u0, cfg.k_max)?;
        let mut sys = Self::new(state, potential, basis, cfg.dt, cfg.noise)?;
        sys.record_noise = cfg.record_noise;
        Ok(sys)
    }

    pub fn set_record_noise(&mut self, on: bool) {
        self.record_noise = on;
    }

    fn refresh_field(&mut self) {
        self.state
            .reconstruct_into(&self.basis, &mut self.scratch, &mut self.field);
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn intervals(&self) -> usize {
        self.basis.intervals()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn time(&self) -> T {
        self.state.time()
    }

    /// Number of exponential-Euler steps taken so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn state(&self) -> &ModeState<T> {
        &self.state
    }

    pub fn basis(&self) -> &Arc<SineBasis<T>> {
        &self.basis
    }

    pub fn potential(&self) -> &Potential<T> {
        &self.potential
    }

    /// Current field on the grid, node-major.
    pub fn field(&self) -> &[T] {
        &self.field
    }

    pub fn sup_norm(&self) -> T {
        self.field.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Noise increments added in the last step, component-major like the modes.
    pub fn last_noise(&self) -> &[T] {
        &self.last_noise
    }

    /// Replaces the mode state (e.g. with a stationary draw) and resets the clock.
    pub fn reset(&mut self, state: ModeState<T>) -> Result<()> {
        if state.dim() != self.state.dim() || state.k_max() != self.state.k_max() {
            return Err(Error::State("replacement state has the wrong shape".into()));
        }
        self.base_time = state.time();
        self.base_steps = self.steps;
        self.state = state;
        self.refresh_field();
        Ok(())
    }

    /// One exponential-Euler step.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let drifted = !self.potential.is_zero();
        if drifted {
            self.projector.project(
                &self.potential,
                &self.bounds,
                &self.basis,
                &self.field,
                self.steps,
                &mut self.drift,
            )?;
        }
        let k_max = self.state.k_max();
        let coeffs = self.state.coeffs_mut();
        for (idx, a) in coeffs.iter_mut().enumerate() {
            let c = &self.ou[idx % k_max];
            let mut next = c.decay * *a;
            if drifted {
                next += c.gain * self.drift[idx];
            }
            if self.noise {
                let eta = c.noise_sd * T::standard_normal(rng);
                next += eta;
                if self.record_noise {
                    self.last_noise[idx] = eta;
                }
            }
            *a = next;
        }
        if !self.state.is_finite() {
            return Err(Error::Integration {
                step: self.steps,
                message: "non-finite mode coefficient".into(),
            });
        }
        self.steps += 1;
        let t = self.base_time + T::from_count(self.steps - self.base_steps) * self.dt;
        self.state.set_time(t);
        self.refresh_field();
        Ok(())
    }

    /// Advances to time `t` in a single exact transition. Only the driftless
    /// equation has an exact transition law, so this refuses a nonzero drift.
    pub fn jump_to<R: Rng + ?Sized>(&mut self, t: T, rng: &mut R) -> Result<()> {
        if !self.potential.is_zero() {
            return Err(Error::State("exact jumps need a zero potential".into()));
        }
        let span = t - self.state.time();
        if span < T::zero() {
            return Err(Error::State("cannot jump backwards in time".into()));
        }
        if span > T::zero() {
            let k_max = self.state.k_max();
            let table = OuCoefficients::table(k_max, span);
            for (idx, a) in self.state.coeffs_mut().iter_mut().enumerate() {
                let c = &table[idx % k_max];
                *a = c.decay * *a;
                if self.noise {
                    *a += c.noise_sd * T::standard_normal(rng);
                }
            }
        }
        self.base_time = t;
        self.base_steps = self.steps;
        self.state.set_time(t);
        self.refresh_field();
        Ok(())
    }
}

/// Simulates `u` from `u0` and records the reconstructed field at every step of
/// `[record_from, horizon]`.
pub fn integrate<T: Real>(
    u0: &GridFunction<T>,
    potential: &Potential<T>,
    cfg: &IntegratorConfig<T>,
    rng: &mut RngStream,
) -> Result<GridPath<T>> {
    let mut sys = SpdeSystem::from_initial(u0, potential.clone(), cfg)?;
    if cfg.record_from > T::zero() {
        sys.set_record_noise(false);
        if potential.is_zero() {
            sys.jump_to(cfg.record_from, rng)?;
        } else {
            let pre = steps_for(cfg.record_from, cfg.dt);
            for _ in 0..pre {
                sys.step(rng)?;
            }
        }
        sys.set_record_noise(cfg.record_noise);
    }
    let n_steps = cfg.recorded_steps();
    let mut path = GridPath::with_capacity(
        sys.dim(),
        cfg.n_x,
        cfg.k_max,
        cfg.dt,
        sys.time(),
        n_steps + 1,
        cfg.record_noise,
    );
    path.push(sys.field());
    for _ in 0..n_steps {
        sys.step(rng)?;
        path.push(sys.field());
        if cfg.record_noise {
            path.push_noise(sys.last_noise());
        }
    }
    path.set_provenance(rng.key().to_hex());
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{semigroup_apply, SpectralTruncation};
    use approx::assert_abs_diff_eq;

    #[test]
    fn noiseless_driftless_path_is_the_heat_flow() {
        let u0 = GridFunction::from_fn(1, 256, |x: f64, out| out[0] = x * (1.0 - x));
        let mut cfg = IntegratorConfig::new(0.2, 1e-2);
        cfg.noise = false;
        let mut rng = RngStream::new(0, 0, "test").unwrap();
        let path = integrate(&u0, &Potential::zero(1), &cfg, &mut rng).unwrap();
        let trunc = SpectralTruncation::new(128, 1e-3).unwrap();
        for n in [5usize, 10, 20] {
            for j in [16usize, 64, 100] {
                let t = path.time(n);
                let x = j as f64 / 128.0;
                let exact = semigroup_apply(&u0, t, x, &trunc).unwrap()[0];
                assert_abs_diff_eq!(path.value(n, j, 0), exact, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn large_steps_with_drift_are_rejected() {
        let u0 = GridFunction::<f64>::zeros(1, 128);
        let cfg = IntegratorConfig::new(1.0, 0.05);
        let mut rng = RngStream::new(0, 0, "test").unwrap();
        let pot = Potential::cosine(vec![1.0]).unwrap();
        assert!(matches!(
            integrate(&u0, &pot, &cfg, &mut rng),
            Err(Error::Configuration(_))
        ));
        assert!(integrate(&u0, &Potential::zero(1), &cfg, &mut rng).is_ok());
    }

    #[test]
    fn uncertified_potential_is_a_configuration_error() {
        let u0 = GridFunction::<f64>::zeros(1, 128);
        let cfg = IntegratorConfig::new(0.1, 1e-2);
        let mut rng = RngStream::new(0, 0, "test").unwrap();
        let pot = Potential::custom(1, |z: &[f64]| z[0].cos(), |z: &[f64], g: &mut [f64]| g[0] = -z[0].sin());
        assert!(matches!(
            integrate(&u0, &pot, &cfg, &mut rng),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn nan_drift_reports_the_step() {
        let u0 = GridFunction::<f64>::zeros(1, 128);
        let mut cfg = IntegratorConfig::new(0.1, 1e-2);
        cfg.k_max = 16;
        let mut rng = RngStream::new(0, 0, "test").unwrap();
        let pot = Potential::custom(1, |_: &[f64]| 0.0, |z: &[f64], g: &mut [f64]| g[0] = if z[0] > 0.3 { f64::NAN } else { 0.0 })
            .with_bounds(CertifiedBounds {
                sup_u: 0.0,
                grad_sup: 1.0,
                grad_lip: 1.0,
            });
        match integrate(&u0, &pot, &cfg, &mut rng) {
            Err(Error::Integration { step, .. }) => assert!(step > 0),
            other => panic!("expected integration error, got {other:?}"),
        }
    }

    #[test]
    fn identical_streams_give_identical_paths() {
        let u0 = GridFunction::<f64>::zeros(2, 64);
        let mut cfg = IntegratorConfig::new(0.05, 1e-3);
        cfg.n_x = 64;
        cfg.k_max = 32;
        let pot = Potential::cosine(vec![1.0, 0.5]).unwrap();
        let a = integrate(&u0, &pot, &cfg, &mut RngStream::new(5, 1, "noise").unwrap()).unwrap();
        let b = integrate(&u0, &pot, &cfg, &mut RngStream::new(5, 1, "noise").unwrap()).unwrap();
        assert_eq!(a.values(), b.values());
        let c = integrate(&u0, &pot, &cfg, &mut RngStream::new(5, 2, "noise").unwrap()).unwrap();
        assert_ne!(a.values(), c.values());
    }
}
