//! Uniform spatial grids on [0, 1] and the tabulated Dirichlet sine basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `phi_k(x) = sqrt(2) sin(k pi x)`, exactly zero at `x = 0` and `x = 1`.
pub fn sine_eigenfunction<T: Real>(k: usize, x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        return T::zero();
    }
    // Reduce k x modulo 2 before multiplying by pi to keep high modes accurate.
    let kx = T::from_count(k) * x;
    let two = T::lit(2.0);
    let r = kx - two * (kx / two).floor();
    T::SQRT_2() * (T::PI() * r).sin()
}

/// `phi_k(j / n)` with the argument reduced in integer arithmetic.
pub fn sine_on_grid<T: Real>(k: usize, j: usize, n: usize) -> T {
    let r = (k * j) % (2 * n);
    if r == 0 || r == n {
        return T::zero();
    }
    T::SQRT_2() * (T::PI() * T::from_count(r) / T::from_count(n)).sin()
}

/// Dirichlet Laplacian eigenvalue `pi^2 k^2`.
pub fn eigenvalue<T: Real>(k: usize) -> T {
    let kf = T::from_count(k);
    T::PI() * T::PI() * kf * kf
}

/// Index of a sine eigenmode (`k >= 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SineMode(usize);

impl SineMode {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("sine modes are numbered from 1".into()));
        }
        Ok(Self(k))
    }

    pub fn k(self) -> usize {
        self.0
    }

    pub fn eigenvalue<T: Real>(self) -> T {
        eigenvalue(self.0)
    }

    pub fn eval<T: Real>(self, x: T) -> T {
        sine_eigenfunction(self.0, x)
    }
}

/// Values of a `d`-component function at the nodes `x_j = j / n`, `j = 0..=n`,
/// stored node-major (`values[j * d + i]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction<T> {
    d: usize,
    n: usize,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn zeros(d: usize, n: usize) -> Self {
        Self {
            d,
            n,
            values: vec![T::zero(); (n + 1) * d],
        }
    }

    pub fn from_values(d: usize, n: usize, values: Vec<T>) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::Domain("grid needs d >= 1 and n >= 1".into()));
        }
        if values.len() != (n + 1) * d {
            return Err(Error::Domain(format!(
                "expected {} grid values for d={d}, n={n}, got {}",
                (n + 1) * d,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid values must be finite".into()));
        }
        Ok(Self { d, n, values })
    }

    /// Samples `f(x, out)` at every node; `out` has length `d`.
    pub fn from_fn<F: FnMut(T, &mut [T])>(d: usize, n: usize, mut f: F) -> Self {
        let mut g = Self::zeros(d, n);
        for j in 0..=n {
            let x = T::from_count(j) / T::from_count(n);
            f(x, &mut g.values[j * d..(j + 1) * d]);
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn node(&self, j: usize) -> &[T] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn x(&self, j: usize) -> T {
        T::from_count(j) / T::from_count(self.n)
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Component `i` as a contiguous vector over the nodes.
    pub fn component(&self, i: usize) -> Vec<T> {
        (0..=self.n).map(|j| self.values[j * self.d + i]).collect()
    }
}

/// Table of `phi_k(x_j)` for `k = 1..=k_max` and `j = 0..=n`, stored mode-major.
#[derive(Debug, Clone)]
pub struct SineBasis<T> {
    k_max: usize,
    n: usize,
    table: Vec<T>,
}

impl<T: Real> SineBasis<T> {
    pub fn new(k_max: usize, n: usize) -> Result<Self> {
        if k_max == 0 || n == 0 {
            return Err(Error::Domain("basis needs k_max >= 1 and n >= 1".into()));
        }
        let mut table = Vec::with_capacity(k_max * (n + 1));
        for k in 1..=k_max {
            table.extend((0..=n).map(|j| sine_on_grid::<T>(k, j, n)));
        }
        Ok(Self { k_max, n, table })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Row of mode `k` (1-based) over all nodes.
    #[inline]
    pub fn mode(&self, k: usize) -> &[T] {
        let w = self.n + 1;
        &self.table[(k - 1) * w..k * w]
    }

    /// `out[j] = sum_k coeffs[k-1] phi_k(x_j)`.
    pub fn synthesize(&self, coeffs: &[T], out: &mut [T]) {
        debug_assert_eq!(coeffs.len(), self.k_max);
        debug_assert_eq!(out.len(), self.n + 1);
        out.iter_mut().for_each(|v| *v = T::zero());
        for (k, &c) in coeffs.iter().enumerate() {
            if c == T::zero() {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.mode(k + 1)) {
                *o += c * p;
            }
        }
    }

    /// Trapezoid projection `coeffs[k-1] = (1/n) sum_j f_j phi_k(x_j)`; the
    /// boundary nodes carry no weight because every `phi_k` vanishes there.
    pub fn project_trapezoid(&self, f: &[T], coeffs: &mut [T]) {
        debug_assert_eq!(f.len(), self.n + 1);
        let h = T::one() / T::from_count(self.n);
        for (k, c) in coeffs.iter_mut().enumerate() {
            let row = self.mode(k + 1);
            let mut acc = T::zero();
            for (&fj, &p) in f.iter().zip(row) {
                acc += fj * p;
            }
            *c = acc * h;
        }
    }
}
