//! Drift potentials `U: R^d -> R` with certified bounds.
//!
//! The simulated equation uses the drift `grad U`, so every potential used
//! for simulation must carry an upper bound on `U` (for Gibbs rejection
//! sampling) and sup-norm and Lipschitz bounds on `grad U`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Certified constants of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBounds<T> {
    /// `sup_z U(z)`, or an upper bound of it.
    pub sup_u: T,
    /// Bound on `max_i sup_z |dU/dz_i|`.
    pub grad_sup: T,
    /// Lipschitz constant of `grad U`.
    pub grad_lip: T,
}

type ValueFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// A user-supplied potential given by closures.
#[derive(Clone)]
pub struct CustomPotential<T> {
    value: ValueFn<T>,
    gradient: GradFn<T>,
}

impl<T> fmt::Debug for CustomPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomPotential")
    }
}

/// Monotone cubic (Fritsch–Carlson) interpolant of tabulated values on a
/// uniform grid over `[lo, hi]`, with zero end slopes and constant extension
/// outside the table, so the profile is C^1 with a Lipschitz derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedProfile<T> {
    lo: T,
    hi: T,
    values: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> TabulatedProfile<T> {
    pub fn new(lo: T, hi: T, values: Vec<T>) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Configuration("tabulated profile needs lo < hi".into()));
        }
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Configuration(
                "tabulated profile needs at least two finite values".into(),
            ));
        }
        let n = values.len() - 1;
        let h = (hi - lo) / T::from_count(n);
        let secants: Vec<T> = values.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![T::zero(); n + 1];
        for i in 1..n {
            if secants[i - 1] * secants[i] > T::zero() {
                slopes[i] = (secants[i - 1] + secants[i]) / T::lit(2.0);
            }
        }
        for (i, &s) in secants.iter().enumerate() {
            if s == T::zero() {
                slopes[i] = T::zero();
                slopes[i + 1] = T::zero();
                continue;
            }
            let a = slopes[i] / s;
            let b = slopes[i + 1] / s;
            let r2 = a * a + b * b;
            if r2 > T::lit(9.0) {
                let tau = T::lit(3.0) / r2.sqrt();
                slopes[i] = tau * a * s;
                slopes[i + 1] = tau * b * s;
            }
        }
        Ok(Self {
            lo,
            hi,
            values,
            slopes,
        })
    }

    fn step(&self) -> T {
        (self.hi - self.lo) / T::from_count(self.values.len() - 1)
    }

    fn locate(&self, s: T) -> Option<(usize, T)> {
        if s <= self.lo || s >= self.hi {
            return None;
        }
        let n = self.values.len() - 1;
        let pos = (s - self.lo) / self.step();
        let i = pos.floor().to_usize().unwrap_or(0).min(n - 1);
        Some((i, pos - T::from_count(i)))
    }

    pub fn value(&self, s: T) -> T {
        match self.locate(s) {
            None if s <= self.lo => self.values[0],
            None => *self.values.last().unwrap(),
            Some((i, u)) => {
                let h = self.step();
                let (u2, u3) = (u * u, u * u * u);
                let two = T::lit(2.0);
                let three = T::lit(3.0);
                (two * u3 - three * u2 + T::one()) * self.values[i]
                    + (u3 - two * u2 + u) * h * self.slopes[i]
                    + (-two * u3 + three * u2) * self.values[i + 1]
                    + (u3 - u2) * h * self.slopes[i + 1]
            }
        }
    }

    pub fn derivative(&self, s: T) -> T {
        match self.locate(s) {
            None => T::zero(),
            Some((i, u)) => self.interval_derivative(i, u),
        }
    }

    fn interval_derivative(&self, i: usize, u: T) -> T {
        let h = self.step();
        let six = T::lit(6.0);
        let u2 = u * u;
        (six * u2 - six * u) / h * self.values[i]
            + (T::lit(3.0) * u2 - T::lit(4.0) * u + T::one()) * self.slopes[i]
            + (-six * u2 + six * u) / h * self.values[i + 1]
            + (T::lit(3.0) * u2 - T::lit(2.0) * u) * self.slopes[i + 1]
    }

    fn interval_second_derivative(&self, i: usize, u: T) -> T {
        let h = self.step();
        (T::lit(12.0) * u - T::lit(6.0)) / (h * h) * (self.values[i] - self.values[i + 1])
            + (T::lit(6.0) * u - T::lit(4.0)) / h * self.slopes[i]
            + (T::lit(6.0) * u - T::lit(2.0)) / h * self.slopes[i + 1]
    }

    /// `(max g, max |g'|, max |g''|)`, exact for the piecewise cubic.
    pub fn extremes(&self) -> (T, T, T) {
        let max_value = self
            .values
            .iter()
            .fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut max_slope = T::zero();
        let mut max_curv = T::zero();
        for i in 0..self.values.len() - 1 {
            let c0 = self.interval_second_derivative(i, T::zero());
            let c1 = self.interval_second_derivative(i, T::one());
            max_curv = max_curv.max(c0.abs()).max(c1.abs());
            let mut cands = vec![T::zero(), T::one()];
            if c0 != c1 {
                let u = c0 / (c0 - c1);
                if u > T::zero() && u < T::one() {
                    cands.push(u);
                }
            }
            for u in cands {
                max_slope = max_slope.max(self.interval_derivative(i, u).abs());
            }
        }
        (max_value, max_slope, max_curv)
    }
}

/// Family of the potential.
#[derive(Debug, Clone)]
pub enum PotentialFamily<T> {
    Zero,
    /// `U(z) = sum_i a_i cos(z_i)`.
    Cosine { amplitudes: Vec<T> },
    /// `U(z) = sum_i g(z_i)` with a tabulated profile `g`.
    TabulatedSmooth(TabulatedProfile<T>),
    Custom(CustomPotential<T>),
}

/// A drift potential on `R^d`.
#[derive(Debug, Clone)]
pub struct Potential<T> {
    d: usize,
    family: PotentialFamily<T>,
    bounds: Option<CertifiedBounds<T>>,
}

impl<T: Real> Potential<T> {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            family: PotentialFamily::Zero,
            bounds: Some(CertifiedBounds {
                sup_u: T::zero(),
                grad_sup: T::zero(),
                grad_lip: T::zero(),
            }),
        }
    }

    pub fn cosine(amplitudes: Vec<T>) -> Result<Self> {
        if amplitudes.is_empty() || amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::Configuration(
                "cosine potential needs one finite amplitude per component".into(),
            ));
        }
        let sup_u = amplitudes.iter().map(|a| a.abs()).sum();
        let grad = amplitudes.iter().fold(T::zero(), |m, a| m.max(a.abs()));
        Ok(Self {
            d: amplitudes.len(),
            family: PotentialFamily::Cosine { amplitudes },
            bounds: Some(CertifiedBounds {
                sup_u,
                grad_sup: grad,
                grad_lip: grad,
            }),
        })
    }

    pub fn tabulated(d: usize, profile: TabulatedProfile<T>) -> Self {
        let (max_value, max_slope, max_curv) = profile.extremes();
        Self {
            d,
            family: PotentialFamily::TabulatedSmooth(profile),
            bounds: Some(CertifiedBounds {
                sup_u: T::from_count(d) * max_value,
                grad_sup: max_slope,
                grad_lip: max_curv,
            }),
        }
    }

    /// A potential given by closures. It carries no certificate until
    /// [`Potential::with_bounds`] supplies one.
    pub fn custom<V, G>(d: usize, value: V, gradient: G) -> Self
    where
        V: Fn(&[T]) -> T + Send + Sync + 'static,
        G: Fn(&[T], &mut [T]) + Send + Sync + 'static,
    {
        Self {
            d,
            family: PotentialFamily::Custom(CustomPotential {
                value: Arc::new(value),
                gradient: Arc::new(gradient),
            }),
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, bounds: CertifiedBounds<T>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> &PotentialFamily<T> {
        &self.family
    }

    pub fn tag(&self) -> &'static str {
        match self.family {
            PotentialFamily::Zero => "zero",
            PotentialFamily::Cosine { .. } => "cosine",
            PotentialFamily::TabulatedSmooth(_) => "tabulated",
            PotentialFamily::Custom(_) => "custom",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, PotentialFamily::Zero)
    }

    pub fn bounds(&self) -> Result<CertifiedBounds<T>> {
        self.bounds.ok_or_else(|| {
            Error::Configuration(format!(
                "{} potential carries no certified bounds (sup U, |grad U|, Lip grad U)",
                self.tag()
            ))
        })
    }

    pub fn value(&self, z: &[T]) -> T {
        debug_assert_eq!(z.len(), self.d);
        match &self.family {
            PotentialFamily::Zero => T::zero(),
            PotentialFamily::Cosine { amplitudes } => {
                amplitudes.iter().zip(z).map(|(&a, &zi)| a * zi.cos()).sum()
            }
            PotentialFamily::TabulatedSmooth(p) => z.iter().map(|&zi| p.value(zi)).sum(),
            PotentialFamily::Custom(c) => (c.value)(z),
        }
    }

    pub fn gradient(&self, z: &[T], out: &mut [T]) {
        debug_assert_eq!(z.len(), self.d);
        match &self.family {
            PotentialFamily::Zero => out.iter_mut().for_each(|o| *o = T::zero()),
            PotentialFamily::Cosine { amplitudes } => {
                for ((o, &a), &zi) in out.iter_mut().zip(amplitudes).zip(z) {
                    *o = -a * zi.sin();
                }
            }
            PotentialFamily::TabulatedSmooth(p) => {
                for (o, &zi) in out.iter_mut().zip(z) {
                    *o = p.derivative(zi);
                }
            }
            PotentialFamily::Custom(c) => (c.gradient)(z, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    fn check_certificate(pot: &Potential<f64>, spread: f64) {
        let b = pot.bounds().unwrap();
        let d = pot.dim();
        let mut rng = RngStream::new(11, 0, "potential").unwrap();
        let mut g = vec![0.0; d];
        let mut gp = vec![0.0; d];
        for _ in 0..2000 {
            let z: Vec<f64> = (0..d).map(|_| rng.random_range(-spread..spread)).collect();
            assert!(pot.value(&z) <= b.sup_u + 1e-12);
            pot.gradient(&z, &mut g);
            for (i, &gi) in g.iter().enumerate() {
                assert!(gi.abs() <= b.grad_sup + 1e-12);
                let h = 1e-6;
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += h;
                zm[i] -= h;
                let fd = (pot.value(&zp) - pot.value(&zm)) / (2.0 * h);
                assert!((fd - gi).abs() < 1e-6, "fd {fd} vs grad {gi}");
            }
            // Lipschitz along a random direction.
            let w: Vec<f64> = z.iter().map(|zi| zi + rng.random_range(-0.1..0.1)).collect();
            pot.gradient(&w, &mut gp);
            let dz = z.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            for (a, c) in g.iter().zip(&gp) {
                assert!((a - c).abs() <= b.grad_lip * dz + 1e-12);
            }
        }
    }

    #[test]
    fn cosine_certificate_holds() {
        check_certificate(&Potential::cosine(vec![1.0, -0.5, 0.25]).unwrap(), 10.0);
    }

    #[test]
    fn tabulated_certificate_holds() {
        let values = vec![0.0, 0.3, -0.2, 0.8, 0.8, 0.1, -0.4];
        let profile = TabulatedProfile::new(-2.0, 2.0, values).unwrap();
        check_certificate(&Potential::tabulated(2, profile), 3.0);
    }

    #[test]
    fn tabulated_profile_interpolates_nodes_without_overshoot() {
        let values = vec![0.0, 1.0, 1.0, 0.0, 2.0];
        let p = TabulatedProfile::new(0.0, 4.0, values.clone()).unwrap();
        for (i, v) in values.iter().enumerate() {
            assert!((p.value(i as f64) - v).abs() < 1e-14);
        }
        for i in 0..=4000 {
            let s = i as f64 / 1000.0;
            assert!(p.value(s) <= 2.0 + 1e-14 && p.value(s) >= -1e-14);
        }
        assert_eq!(p.derivative(-1.0), 0.0);
        assert_eq!(p.value(10.0), 2.0);
    }

    #[test]
    fn zero_potential_has_zero_gradient() {
        let p = Potential::<f64>::zero(3);
        let mut g = vec![1.0; 3];
        p.gradient(&[1.0, 2.0, 3.0], &mut g);
        assert_eq!(g, vec![0.0; 3]);
        assert!(p.is_zero());
        assert_eq!(p.bounds().unwrap().sup_u, 0.0);
    }

    #[test]
    fn uncertified_custom_potential_is_rejected_until_bounded() {
        let p = Potential::<f64>::custom(1, |z| -z[0] * z[0], |z, g| g[0] = -2.0 * z[0]);
        assert!(matches!(p.bounds(), Err(Error::Configuration(_))));
        let p = p.with_bounds(CertifiedBounds {
            sup_u: 0.0,
            grad_sup: 1.0,
            grad_lip: 2.0,
        });
        assert!(p.bounds().is_ok());
    }
}
