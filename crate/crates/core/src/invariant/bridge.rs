//! Brownian-bridge samplers on the grid `x_j = j / n`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, SineBasis};
use crate::scalar::Real;

/// Base law of the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeMode {
    /// Standard Brownian bridge, `Cov = min(x, y) - x y`.
    Standard,
    /// Stationary law of the driftless equation, `Cov = (min(x, y) - x y) / 2`.
    Stationary,
}

impl BridgeMode {
    pub fn variance_factor<T: Real>(self) -> T {
        match self {
            BridgeMode::Standard => T::one(),
            BridgeMode::Stationary => T::lit(0.5),
        }
    }
}

/// How a sample is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Synthesis {
    /// Sine series truncated at `k_max`, evaluated on the grid. Matches the
    /// law of a `k_max`-mode simulation exactly.
    Spectral { k_max: usize },
    /// Exact bridge values at the nodes; the reported sup-norm includes the
    /// excursions between nodes, drawn from the conditional bridge law.
    Nodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSample<T> {
    pub mode: BridgeMode,
    pub values: GridFunction<T>,
    /// `sup_x max_i |phi_i(x)|`: over the nodes for spectral synthesis, over
    /// the whole interval for nodal synthesis.
    pub sup_norm: T,
}

/// Reusable sampler; holds the sine table for spectral synthesis.
#[derive(Debug, Clone)]
pub struct BridgeSampler<T> {
    mode: BridgeMode,
    synthesis: Synthesis,
    d: usize,
    n: usize,
    basis: Option<SineBasis<T>>,
}

impl<T: Real> BridgeSampler<T> {
    pub fn new(mode: BridgeMode, synthesis: Synthesis, d: usize, n: usize) -> Result<Self> {
        if d == 0 || n < 1 {
            return Err(Error::Domain("bridge sampler needs d >= 1 and n >= 1".into()));
        }
        let basis = match synthesis {
            Synthesis::Spectral { k_max } => Some(SineBasis::new(k_max, n)?),
            Synthesis::Nodal => None,
        };
        Ok(Self {
            mode,
            synthesis,
            d,
            n,
            basis,
        })
    }

    pub fn mode(&self) -> BridgeMode {
        self.mode
    }

    pub fn synthesis(&self) -> Synthesis {
        self.synthesis
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BridgeSample<T> {
        let (d, n) = (self.d, self.n);
        let factor: T = self.mode.variance_factor();
        let mut values = vec![T::zero(); (n + 1) * d];
        let mut comp = vec![T::zero(); n + 1];
        let mut sup = T::zero();
        for i in 0..d {
            match &self.basis {
                Some(basis) => {
                    let coeffs: Vec<T> = (1..=basis.k_max())
                        .map(|k| {
                            let sd = (factor / (T::PI() * T::PI() * T::from_count(k * k))).sqrt();
                            sd * T::standard_normal(rng)
                        })
                        .collect();
                    basis.synthesize(&coeffs, &mut comp);
                    sup = comp.iter().fold(sup, |m, v| m.max(v.abs()));
                }
                None => {
                    nodal_bridge(factor, &mut comp, rng);
                    sup = sup.max(refined_sup(&comp, factor, rng));
                }
            }
            for (j, &v) in comp.iter().enumerate() {
                values[j * d + i] = v;
            }
        }
        BridgeSample {
            mode: self.mode,
            values: GridFunction::from_values(d, n, values).expect("finite bridge values"),
            sup_norm: sup,
        }
    }
}

/// Exact bridge with variance factor `s2` at nodes `j / n`:
/// `B(x_j) = W(x_j) - x_j W(1)` for a random walk `W` with `N(0, s2 / n)` steps.
fn nodal_bridge<T: Real, R: Rng + ?Sized>(s2: T, out: &mut [T], rng: &mut R) {
    let n = out.len() - 1;
    let sd = (s2 / T::from_count(n)).sqrt();
    out[0] = T::zero();
    for j in 1..=n {
        out[j] = out[j - 1] + sd * T::standard_normal(rng);
    }
    let end = out[n];
    for (j, v) in out.iter_mut().enumerate() {
        *v -= end * T::from_count(j) / T::from_count(n);
    }
    out[n] = T::zero();
}

/// Sup of `|B|` over `[0, 1]` given the node values, drawing for each cell the
/// maximum and the minimum of the bridge joining consecutive nodes. Each is
/// drawn from its exact conditional law; their dependence within a cell is
/// ignored, which only matters when both reach the level in the same cell.
fn refined_sup<T: Real, R: Rng + ?Sized>(nodes: &[T], s2: T, rng: &mut R) -> T {
    let n = nodes.len() - 1;
    let cell = s2 / T::from_count(n);
    let two = T::lit(2.0);
    let mut sup = T::zero();
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let diff2 = (b - a) * (b - a);
        let u = T::open01(rng);
        let hi = (a + b + (diff2 - two * cell * u.ln()).sqrt()) / two;
        let u = T::open01(rng);
        let lo = (a + b - (diff2 - two * cell * u.ln()).sqrt()) / two;
        sup = sup.max(hi).max(-lo);
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn endpoints_are_pinned() {
        let mut rng = RngStream::new(3, 0, "bridge").unwrap();
        for synthesis in [Synthesis::Nodal, Synthesis::Spectral { k_max: 32 }] {
            let s = BridgeSampler::<f64>::new(BridgeMode::Standard, synthesis, 2, 64).unwrap();
            for _ in 0..10 {
                let b = s.sample(&mut rng);
                assert_eq!(b.values.node(0), &[0.0, 0.0]);
                assert_eq!(b.values.node(64), &[0.0, 0.0]);
                assert!(b.sup_norm >= b.values.sup_norm());
            }
        }
    }

    #[test]
    fn refined_sup_of_a_flat_segment_follows_the_bridge_maximum_law() {
        // Max of a bridge from 0 to 0 over [0, 1]: P(M > y) = exp(-2 y^2).
        let mut rng = RngStream::new(4, 0, "bridge").unwrap();
        let n = 20_000;
        let above = (0..n)
            .filter(|_| {
                let u = f64::open01(&mut rng);
                (-2.0 * u.ln()).sqrt() / 2.0 > 0.5
            })
            .count();
        let p = (-0.5f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((above as f64 / n as f64 - p).abs() < 4.0 * se);
    }
}
