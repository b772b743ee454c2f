//! Mode-space state and exact Ornstein–Uhlenbeck transitions of single modes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{eigenvalue, GridFunction, SineBasis};
use crate::scalar::Real;
use crate::spectral::sine_coefficients;

/// One-step transition constants of mode `k` over a step `dt`:
/// `a <- decay * a + gain * f + noise_sd * xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuCoefficients<T> {
    pub decay: T,
    /// `(1 - e^{-lambda dt}) / lambda`, the exact integral of the decay factor.
    pub gain: T,
    pub noise_sd: T,
}

impl<T: Real> OuCoefficients<T> {
    pub fn new(k: usize, dt: T) -> Self {
        let lambda = eigenvalue::<T>(k);
        let x = lambda * dt;
        let decay = (-x).exp();
        // -expm1 keeps both quantities accurate when lambda dt is tiny.
        let one_minus = -(-x).exp_m1();
        let one_minus_sq = -(-(x + x)).exp_m1();
        Self {
            decay,
            gain: one_minus / lambda,
            noise_sd: (one_minus_sq / (lambda + lambda)).sqrt(),
        }
    }

    /// Coefficients for every mode `1..=k_max`.
    pub fn table(k_max: usize, dt: T) -> Vec<Self> {
        (1..=k_max).map(|k| Self::new(k, dt)).collect()
    }
}

/// Exact OU transition of a single mode coefficient over `dt`.
pub fn ou_mode_step<T: Real, R: Rng + ?Sized>(a: T, k: usize, dt: T, rng: &mut R) -> Result<T> {
    check_step(k, dt)?;
    let c = OuCoefficients::new(k, dt);
    Ok(c.decay * a + c.noise_sd * T::standard_normal(rng))
}

/// The same transition with the noise switched off.
pub fn ou_mode_step_noiseless<T: Real>(a: T, k: usize, dt: T) -> Result<T> {
    check_step(k, dt)?;
    Ok(OuCoefficients::new(k, dt).decay * a)
}

fn check_step<T: Real>(k: usize, dt: T) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("sine modes are numbered from 1".into()));
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Field `u_i(t, x) = sum_k a_{i,k} phi_k(x)` held by its sine coefficients,
/// component-major (`coeffs[i * k_max + k - 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState<T> {
    d: usize,
    k_max: usize,
    coeffs: Vec<T>,
    time: T,
}

impl<T: Real> ModeState<T> {
    pub fn zeros(d: usize, k_max: usize) -> Self {
        Self {
            d,
            k_max,
            coeffs: vec![T::zero(); d * k_max],
            time: T::zero(),
        }
    }

    pub fn from_coefficients(d: usize, k_max: usize, coeffs: Vec<T>, time: T) -> Result<Self> {
        if d == 0 || k_max == 0 || coeffs.len() != d * k_max {
            return Err(Error::Domain("coefficient array does not match d x k_max".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("mode coefficients must be finite".into()));
        }
        Ok(Self {
            d,
            k_max,
            coeffs,
            time,
        })
    }

    /// Projects grid samples of `u0` onto the first `k_max` modes.
    pub fn from_initial(u0: &GridFunction<T>, k_max: usize) -> Result<Self> {
        let coeffs = sine_coefficients(u0, k_max)?;
        Self::from_coefficients(u0.dim(), k_max, coeffs, T::zero())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub(crate) fn set_time(&mut self, t: T) {
        self.time = t;
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    /// Coefficients of component `i`.
    pub fn component(&self, i: usize) -> &[T] {
        &self.coeffs[i * self.k_max..(i + 1) * self.k_max]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Reconstructs the field on the basis grid, node-major (`out[j * d + i]`).
    /// `scratch` must hold `n + 1` values.
    pub fn reconstruct_into(&self, basis: &SineBasis<T>, scratch: &mut [T], out: &mut [T]) {
        debug_assert_eq!(basis.k_max(), self.k_max);
        let d = self.d;
        for i in 0..d {
            basis.synthesize(self.component(i), scratch);
            for (j, &v) in scratch.iter().enumerate() {
                out[j * d + i] = v;
            }
        }
    }

    pub fn reconstruct(&self, basis: &SineBasis<T>) -> GridFunction<T> {
        let n = basis.intervals();
        let mut scratch = vec![T::zero(); n + 1];
        let mut out = vec![T::zero(); (n + 1) * self.d];
        self.reconstruct_into(basis, &mut scratch, &mut out);
        GridFunction::from_values(self.d, n, out).expect("finite reconstruction")
    }

    /// Value of every component at a single point `x`.
    pub fn eval(&self, x: T) -> Vec<T> {
        let phis: Vec<T> = (1..=self.k_max)
            .map(|k| crate::grid::sine_eigenfunction(k, x))
            .collect();
        (0..self.d)
            .map(|i| self.component(i).iter().zip(&phis).map(|(&a, &p)| a * p).sum())
            .collect()
    }
}

/// Exact draw of the stochastic convolution `v(t, .)` started from zero:
/// independent modes with variance `(1 - e^{-2 lambda_k t}) / (2 lambda_k)`.
pub fn sample_convolution<T: Real, R: Rng + ?Sized>(
    t: T,
    d: usize,
    k_max: usize,
    rng: &mut R,
) -> Result<ModeState<T>> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let sds: Vec<T> = (1..=k_max).map(|k| OuCoefficients::new(k, t).noise_sd).collect();
    let mut state = ModeState::zeros(d, k_max);
    for i in 0..d {
        for (k, &sd) in sds.iter().enumerate() {
            state.coeffs[i * k_max + k] = sd * T::standard_normal(rng);
        }
    }
    state.time = t;
    Ok(state)
}

/// Draw from the stationary law of the driftless modes (variance `1 / (2 lambda_k)`).
pub fn sample_stationary<T: Real, R: Rng + ?Sized>(d: usize, k_max: usize, rng: &mut R) -> ModeState<T> {
    let mut state = ModeState::zeros(d, k_max);
    for i in 0..d {
        for k in 1..=k_max {
            let sd = (T::one() / (T::lit(2.0) * eigenvalue::<T>(k))).sqrt();
            state.coeffs[i * k_max + k - 1] = sd * T::standard_normal(rng);
        }
    }
    state
}
