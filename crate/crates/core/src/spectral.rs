//! Closed-form evaluators built on the Dirichlet sine expansion of the heat
//! kernel on [0, 1]: the Green kernel, the heat semigroup, variances and
//! covariances of the stochastic convolution, and the Gaussian densities
//! they determine.
//!
//! The Green kernel is `G(t, x, y) = sum_k exp(-pi^2 k^2 t) phi_k(x) phi_k(y)`
//! with `phi_k(x) = sqrt(2) sin(k pi x)`. Every series is truncated at
//! [`SpectralTruncation::k_max`]; evaluators whose truncation error decays
//! like `exp(-pi^2 k^2 t)` refuse to run where the tail exceeds
//! [`KERNEL_TAIL_TOLERANCE`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{eigenvalue, sine_eigenfunction, GridFunction};
use crate::quadrature::simpson_weights;
use crate::scalar::Real;

pub const KERNEL_TAIL_TOLERANCE: f64 = 1e-14;
pub const DEFAULT_K_MAX: usize = 128;
pub const DEFAULT_T_MIN: f64 = 1e-3;

/// Number of retained sine modes and the smallest time the truncation is certified for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralTruncation<T> {
    k_max: usize,
    t_min: T,
}

impl<T: Real> SpectralTruncation<T> {
    pub fn new(k_max: usize, t_min: T) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Domain("k_max must be at least 1".into()));
        }
        if !(t_min > T::zero()) {
            return Err(Error::Domain("t_min must be positive".into()));
        }
        let trunc = Self { k_max, t_min };
        let tail = trunc.kernel_tail_bound(t_min);
        if !(tail.to_f64_lossy() < KERNEL_TAIL_TOLERANCE) {
            return Err(Error::Precision(format!(
                "k_max = {k_max} leaves a kernel tail of {:e} at t_min = {t_min}; raise k_max",
                tail.to_f64_lossy()
            )));
        }
        Ok(trunc)
    }

    /// Truncation without the `t_min` certificate, for Galerkin simulations
    /// whose error is controlled by other means.
    pub fn uncertified(k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Domain("k_max must be at least 1".into()));
        }
        Ok(Self {
            k_max,
            t_min: T::infinity(),
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn t_min(&self) -> T {
        self.t_min
    }

    /// Upper bound on `sum_{k > k_max} exp(-pi^2 k^2 t)`, from the geometric
    /// bound on consecutive term ratios.
    pub fn kernel_tail_bound(&self, t: T) -> T {
        if t <= T::zero() {
            return T::infinity();
        }
        let pi2 = T::PI() * T::PI();
        let k1 = T::from_count(self.k_max + 1);
        let first = (-pi2 * k1 * k1 * t).exp();
        let ratio = (-pi2 * (T::lit(2.0) * k1 + T::one()) * t).exp();
        first / (T::one() - ratio)
    }

    /// Upper bound on the neglected part of the variance series,
    /// `sum_{k > k_max} 1 / (pi^2 k^2) <= 1 / (pi^2 k_max)`.
    pub fn variance_tail_bound(&self) -> T {
        T::one() / (T::PI() * T::PI() * T::from_count(self.k_max))
    }

    fn check_kernel(&self, t: T) -> Result<()> {
        let tail = self.kernel_tail_bound(t);
        if tail.to_f64_lossy() < KERNEL_TAIL_TOLERANCE {
            Ok(())
        } else {
            Err(Error::Precision(format!(
                "kernel tail {:e} at t = {t} exceeds {KERNEL_TAIL_TOLERANCE:e} with k_max = {}",
                tail.to_f64_lossy(),
                self.k_max
            )))
        }
    }
}

impl Default for SpectralTruncation<f64> {
    fn default() -> Self {
        Self::new(DEFAULT_K_MAX, DEFAULT_T_MIN).expect("default truncation is certified")
    }
}

impl Default for SpectralTruncation<f32> {
    fn default() -> Self {
        Self::new(DEFAULT_K_MAX, DEFAULT_T_MIN as f32).expect("default truncation is certified")
    }
}

/// A point `(t, x)` of `[0, inf) x [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint<T> {
    pub t: T,
    pub x: T,
}

impl<T: Real> SpaceTimePoint<T> {
    pub fn new(t: T, x: T) -> Result<Self> {
        if !(t >= T::zero()) || !t.is_finite() {
            return Err(Error::Domain(format!("time {t} must be finite and nonnegative")));
        }
        if !(T::zero() <= x && x <= T::one()) {
            return Err(Error::Domain(format!("space coordinate {x} must lie in [0, 1]")));
        }
        Ok(Self { t, x })
    }
}

/// Gaussian law `N(mean, variance * I_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMarginal<T> {
    pub mean: Vec<T>,
    pub variance: T,
}

impl<T: Real> GaussianMarginal<T> {
    pub fn density(&self, z: &[T]) -> T {
        assert_eq!(z.len(), self.mean.len(), "dimension mismatch");
        let d = T::from_count(self.mean.len());
        let r2: T = z
            .iter()
            .zip(&self.mean)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        let two_pi_var = T::lit(2.0) * T::PI() * self.variance;
        two_pi_var.powf(-d / T::lit(2.0)) * (-r2 / (T::lit(2.0) * self.variance)).exp()
    }

    pub fn peak_density(&self) -> T {
        let d = T::from_count(self.mean.len());
        (T::lit(2.0) * T::PI() * self.variance).powf(-d / T::lit(2.0))
    }
}

/// `G(t, x, y)` truncated at `k_max`.
pub fn green_kernel<T: Real>(p: SpaceTimePoint<T>, y: T, trunc: &SpectralTruncation<T>) -> Result<T> {
    if !(p.t > T::zero()) {
        return Err(Error::Domain("the Green kernel needs t > 0".into()));
    }
    if !(T::zero() <= y && y <= T::one()) {
        return Err(Error::Domain(format!("y = {y} must lie in [0, 1]")));
    }
    trunc.check_kernel(p.t)?;
    Ok((1..=trunc.k_max)
        .map(|k| {
            (-eigenvalue::<T>(k) * p.t).exp() * sine_eigenfunction(k, p.x) * sine_eigenfunction(k, y)
        })
        .sum())
}

/// Sine coefficients `<u_i, phi_k>` of each component, by composite Simpson on
/// the function's own grid. Returned component-major: `c[i * k_max + (k - 1)]`.
pub fn sine_coefficients<T: Real>(u0: &GridFunction<T>, k_max: usize) -> Result<Vec<T>> {
    let n = u0.intervals();
    let d = u0.dim();
    let w = simpson_weights(n, T::one() / T::from_count(n))?;
    let mut coeffs = vec![T::zero(); d * k_max];
    for k in 1..=k_max {
        for (j, &wj) in w.iter().enumerate() {
            let phi = crate::grid::sine_on_grid::<T>(k, j, n);
            if phi == T::zero() {
                continue;
            }
            for (i, &v) in u0.node(j).iter().enumerate() {
                coeffs[i * k_max + k - 1] += wj * phi * v;
            }
        }
    }
    Ok(coeffs)
}

/// Deterministic heat flow `lambda(t, x) = int G(t, x, v) u0(v) dv`, held in mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatFlow<T> {
    d: usize,
    k_max: usize,
    coeffs: Vec<T>,
}

impl<T: Real> HeatFlow<T> {
    pub fn new(u0: &GridFunction<T>, trunc: &SpectralTruncation<T>) -> Result<Self> {
        Ok(Self {
            d: u0.dim(),
            k_max: trunc.k_max,
            coeffs: sine_coefficients(u0, trunc.k_max)?,
        })
    }

    pub fn from_coefficients(d: usize, k_max: usize, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != d * k_max {
            return Err(Error::Domain("coefficient array has the wrong length".into()));
        }
        Ok(Self { d, k_max, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    /// The flow after an additional time `t` (coefficient-wise decay).
    pub fn advanced(&self, t: T) -> Self {
        let mut next = self.clone();
        for i in 0..self.d {
            for k in 1..=self.k_max {
                next.coeffs[i * self.k_max + k - 1] *= (-eigenvalue::<T>(k) * t).exp();
            }
        }
        next
    }

    /// `lambda(t, x)`, one entry per component.
    pub fn eval(&self, t: T, x: T) -> Vec<T> {
        let phis: Vec<T> = (1..=self.k_max)
            .map(|k| (-eigenvalue::<T>(k) * t).exp() * sine_eigenfunction(k, x))
            .collect();
        (0..self.d)
            .map(|i| {
                self.coeffs[i * self.k_max..(i + 1) * self.k_max]
                    .iter()
                    .zip(&phis)
                    .map(|(&c, &p)| c * p)
                    .sum()
            })
            .collect()
    }
}

/// `lambda(t, x)` for initial data sampled on a grid.
pub fn semigroup_apply<T: Real>(
    u0: &GridFunction<T>,
    t: T,
    x: T,
    trunc: &SpectralTruncation<T>,
) -> Result<Vec<T>> {
    if !(t >= T::zero()) {
        return Err(Error::Domain("semigroup time must be nonnegative".into()));
    }
    Ok(HeatFlow::new(u0, trunc)?.eval(t, x))
}

/// `sigma^2_{t,x} = int_0^t int_0^1 G(t - r, x, v)^2 dv dr`
/// `= sum_k phi_k(x)^2 (1 - exp(-2 pi^2 k^2 t)) / (2 pi^2 k^2)`.
pub fn sigma2<T: Real>(t: T, x: T, trunc: &SpectralTruncation<T>) -> T {
    if !(t > T::zero()) {
        return T::zero();
    }
    (1..=trunc.k_max)
        .map(|k| {
            let lam = eigenvalue::<T>(k);
            let phi = sine_eigenfunction(k, x);
            phi * phi * (-(-T::lit(2.0) * lam * t).exp_m1()) / (T::lit(2.0) * lam)
        })
        .sum()
}

/// Long-time variance `x (1 - x) / 2` of each component.
pub fn stationary_variance<T: Real>(x: T) -> T {
    x * (T::one() - x) / T::lit(2.0)
}

/// `Cov(v_i(t, x), v_i(s, y))` of one component of the stochastic convolution.
pub fn cov_v<T: Real>(t: T, x: T, s: T, y: T, trunc: &SpectralTruncation<T>) -> T {
    let m = t.min(s);
    if !(m > T::zero()) {
        return T::zero();
    }
    let gap = (t - s).abs();
    (1..=trunc.k_max)
        .map(|k| {
            let lam = eigenvalue::<T>(k);
            // exp(-lam (t + s)) (exp(2 lam m) - 1) rewritten without overflow.
            sine_eigenfunction(k, x)
                * sine_eigenfunction(k, y)
                * (-lam * gap).exp()
                * (-(-T::lit(2.0) * lam * m).exp_m1())
                / (T::lit(2.0) * lam)
        })
        .sum()
}

/// Law of `u(t, x)` for the drift-free equation started from `u0`.
pub fn marginal<T: Real>(
    p: SpaceTimePoint<T>,
    flow: &HeatFlow<T>,
    trunc: &SpectralTruncation<T>,
) -> Result<GaussianMarginal<T>> {
    if !(p.t > T::zero()) {
        return Err(Error::Domain("marginal density needs t > 0".into()));
    }
    let variance = sigma2(p.t, p.x, trunc);
    if !(variance > T::zero()) {
        return Err(Error::Domain(format!(
            "u({}, {}) is degenerate (pinned boundary)",
            p.t, p.x
        )));
    }
    Ok(GaussianMarginal {
        mean: flow.eval(p.t, p.x),
        variance,
    })
}

/// Density of `u(t, x)` at `z` for the drift-free equation.
pub fn marginal_density<T: Real>(
    p: SpaceTimePoint<T>,
    flow: &HeatFlow<T>,
    z: &[T],
    trunc: &SpectralTruncation<T>,
) -> Result<T> {
    Ok(marginal(p, flow, trunc)?.density(z))
}

/// Per-component 2x2 covariance of `(v(t, x), v(s, y))`.
pub fn pair_covariance<T: Real>(
    p1: SpaceTimePoint<T>,
    p2: SpaceTimePoint<T>,
    trunc: &SpectralTruncation<T>,
) -> [T; 3] {
    [
        sigma2(p1.t, p1.x, trunc),
        cov_v(p1.t, p1.x, p2.t, p2.x, trunc),
        sigma2(p2.t, p2.x, trunc),
    ]
}

/// Joint density of `(v(t, x), v(s, y))` at `(z1, z2)`, a product of `d`
/// identical bivariate Gaussians.
pub fn joint_density_v<T: Real>(
    p1: SpaceTimePoint<T>,
    p2: SpaceTimePoint<T>,
    z1: &[T],
    z2: &[T],
    trunc: &SpectralTruncation<T>,
) -> Result<T> {
    if z1.len() != z2.len() {
        return Err(Error::Domain("z1 and z2 must have the same dimension".into()));
    }
    if p1 == p2 {
        return Err(Error::Domain("joint density needs distinct points".into()));
    }
    if !(p1.t > T::zero() && p2.t > T::zero()) {
        return Err(Error::Domain("joint density needs positive times".into()));
    }
    let [a, c, b] = pair_covariance(p1, p2, trunc);
    let det = a * b - c * c;
    let floor = T::lit(1e-300).max(T::min_positive_value());
    if !(det >= floor) {
        return Err(Error::Degeneracy {
            first: format!("({}, {})", p1.t, p1.x),
            second: format!("({}, {})", p2.t, p2.x),
            determinant: det.to_f64_lossy(),
        });
    }
    let two = T::lit(2.0);
    let norm = T::one() / (two * T::PI() * det.sqrt());
    let mut quad = T::zero();
    for (&u, &v) in z1.iter().zip(z2) {
        quad += (b * u * u - two * c * u * v + a * v * v) / det;
    }
    Ok(norm.powi(z1.len() as i32) * (-quad / two).exp())
}

/// `|t - s|^{1/2} + |x - y|`.
pub fn parabolic_metric<T: Real>(p1: SpaceTimePoint<T>, p2: SpaceTimePoint<T>) -> T {
    (p1.t - p2.t).abs().sqrt() + (p1.x - p2.x).abs()
}
