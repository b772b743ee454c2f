//! Recorded space-time paths and their flat binary dump.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Field values `u(t_n, x_j)` for `t_n = t0 + n dt` and `x_j = j / n_x`,
/// stored row-major as `[n_times][n_x + 1][d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath<T> {
    d: usize,
    n_x: usize,
    k_max: usize,
    dt: T,
    t0: T,
    values: Vec<T>,
    /// Mode-space noise increments of each step, `[n_times - 1][d][k_max]`.
    noise: Option<Vec<T>>,
    provenance: Option<String>,
}

impl<T: Real> GridPath<T> {
    pub(crate) fn with_capacity(
        d: usize,
        n_x: usize,
        k_max: usize,
        dt: T,
        t0: T,
        n_times: usize,
        record_noise: bool,
    ) -> Self {
        Self {
            d,
            n_x,
            k_max,
            dt,
            t0,
            values: Vec::with_capacity(n_times * (n_x + 1) * d),
            noise: record_noise.then(|| Vec::with_capacity(n_times.saturating_sub(1) * d * k_max)),
            provenance: None,
        }
    }

    /// Builds a path from raw values (no noise record).
    pub fn from_values(d: usize, n_x: usize, dt: T, t0: T, values: Vec<T>) -> Result<Self> {
        let row = (n_x + 1) * d;
        if d == 0 || n_x == 0 || values.is_empty() || values.len() % row != 0 {
            return Err(Error::Domain(format!(
                "path values do not form whole rows of {row} entries"
            )));
        }
        Ok(Self {
            d,
            n_x,
            k_max: 0,
            dt,
            t0,
            values,
            noise: None,
            provenance: None,
        })
    }

    pub(crate) fn push(&mut self, field: &[T]) {
        debug_assert_eq!(field.len(), (self.n_x + 1) * self.d);
        self.values.extend_from_slice(field);
    }

    pub(crate) fn push_noise(&mut self, eta: &[T]) {
        if let Some(n) = self.noise.as_mut() {
            n.extend_from_slice(eta);
        }
    }

    pub(crate) fn set_provenance(&mut self, key_hex: String) {
        self.provenance = Some(key_hex);
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn intervals(&self) -> usize {
        self.n_x
    }

    /// Number of modes used by the generating simulation (0 if unknown).
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn n_times(&self) -> usize {
        self.values.len() / ((self.n_x + 1) * self.d)
    }

    pub fn time(&self, n: usize) -> T {
        self.t0 + T::from_count(n) * self.dt
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.n_times()).map(|n| self.time(n)).collect()
    }

    pub fn x(&self, j: usize) -> T {
        T::from_count(j) / T::from_count(self.n_x)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Field at time index `n`, node-major.
    pub fn slice(&self, n: usize) -> &[T] {
        let row = (self.n_x + 1) * self.d;
        &self.values[n * row..(n + 1) * row]
    }

    pub fn value(&self, n: usize, j: usize, i: usize) -> T {
        self.slice(n)[j * self.d + i]
    }

    pub fn sup_norm(&self, n: usize) -> T {
        self.slice(n).iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Noise increments of step `n -> n + 1`, component-major.
    pub fn noise(&self, n: usize) -> Option<&[T]> {
        let w = self.d * self.k_max;
        self.noise.as_ref().and_then(|v| v.get(n * w..(n + 1) * w))
    }

    pub fn has_noise(&self) -> bool {
        self.noise.is_some()
    }

    /// Hex stream key of the generator that produced the path.
    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    /// Writes the flat little-endian dump: `d`, `n_x`, `n_times` as `u64`,
    /// `dt` as `f64`, then every value as `f64` in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.d as u64).to_le_bytes())?;
        w.write_all(&(self.n_x as u64).to_le_bytes())?;
        w.write_all(&(self.n_times() as u64).to_le_bytes())?;
        w.write_all(&self.dt.to_f64_lossy().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
        Ok(())
    }
}

impl GridPath<f64> {
    /// Reads a dump written by [`GridPath::write_binary`]; times restart at 0.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut buf)?;
            Ok(buf)
        };
        let d = u64::from_le_bytes(next(&mut r)?) as usize;
        let n_x = u64::from_le_bytes(next(&mut r)?) as usize;
        let n_times = u64::from_le_bytes(next(&mut r)?) as usize;
        let dt = f64::from_le_bytes(next(&mut r)?);
        let len = n_times
            .checked_mul(n_x + 1)
            .and_then(|v| v.checked_mul(d))
            .ok_or_else(|| Error::Io("path header overflows".into()))?;
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(f64::from_le_bytes(next(&mut r)?));
        }
        Self::from_values(d, n_x, dt, 0.0, values)
    }
}
