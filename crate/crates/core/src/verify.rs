//! Closed-form self-checks: kernel semigroup property, variance integrals,
//! the two representations of each sup law, and a Monte Carlo check of `F`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{eigenvalue, sine_eigenfunction};
use crate::invariant::{
    bm_sup_cdf_images, bm_sup_cdf_series, bridge_sup_cdf, bridge_sup_cdf_series, bridge_sup_cdf_theta,
    BridgeMode, BridgeSampler, Synthesis,
};
use crate::quadrature::{graded_left, simpson_weights, trapezoid_weights};
use crate::rng::Streams;
use crate::spectral::{green_kernel, sigma2, SpaceTimePoint, SpectralTruncation};
use crate::stats::ks_one_sample;
use crate::error::Result;

pub const CK_TOLERANCE: f64 = 1e-8;
pub const SIGMA2_TOLERANCE: f64 = 1e-10;
pub const DUAL_TOLERANCE: f64 = 1e-12;
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;
/// KS level of the Monte Carlo check.
pub const KS_ALPHA: f64 = 0.01;

const QUADRATURE_INTERVALS: usize = 1024;
const MC_BATCH: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub k_max: usize,
    /// Bridge sups drawn for the KS check.
    pub mc_samples: usize,
    /// Grid intervals of the sampled bridges.
    pub mc_intervals: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            k_max: 128,
            mc_samples: 1_000_000,
            mc_intervals: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Worst residual or test statistic.
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `max |int_0^1 phi_k phi_m - delta_km|` over `k, m <= 16`, by Simpson.
pub fn orthonormality_residual() -> f64 {
    let n = QUADRATURE_INTERVALS;
    let w = simpson_weights(n, 1.0 / n as f64).expect("even interval count");
    let mut worst: f64 = 0.0;
    for k in 1..=16 {
        for m in k..=16 {
            let v: f64 = w
                .iter()
                .enumerate()
                .map(|(j, &wj)| {
                    let x = j as f64 / n as f64;
                    wj * sine_eigenfunction(k, x) * sine_eigenfunction(m, x)
                })
                .sum();
            worst = worst.max((v - if k == m { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

/// Worst `|int G(t, x, z) G(s, z, y) dz - G(t + s, x, y)|` over a set of
/// `(t, s, x, y)` with `t, s >= 0.05`, 1024-interval Simpson in `z`.
pub fn chapman_kolmogorov_residual(k_max: usize) -> Result<f64> {
    let trunc = SpectralTruncation::new(k_max, 0.05)?;
    let n = QUADRATURE_INTERVALS;
    let w = simpson_weights(n, 1.0 / n as f64)?;
    let mut worst: f64 = 0.0;
    for &(t, s) in &[(0.05, 0.05), (0.05, 0.2), (0.1, 0.3), (0.5, 1.0)] {
        for &(x, y) in &[(0.5, 0.5), (0.2, 0.7), (0.05, 0.9), (0.33, 0.34)] {
            let mut lhs = 0.0;
            for (j, &wj) in w.iter().enumerate() {
                let z = j as f64 / n as f64;
                lhs += wj
                    * green_kernel(SpaceTimePoint::new(t, x)?, z, &trunc)?
                    * green_kernel(SpaceTimePoint::new(s, z)?, y, &trunc)?;
            }
            let rhs = green_kernel(SpaceTimePoint::new(t + s, x)?, y, &trunc)?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// `int_0^t int_0^1 G(r, x, v)^2 dv dr` with graded Gauss–Legendre in `r`
/// and the trapezoid rule in `v` (exact for the truncated kernel).
pub fn sigma2_by_quadrature(t: f64, x: f64, k_max: usize) -> f64 {
    let n = QUADRATURE_INTERVALS.max(2 * k_max);
    let w = trapezoid_weights(n, 1.0 / n as f64);
    let phi_x: Vec<f64> = (1..=k_max).map(|k| sine_eigenfunction(k, x)).collect();
    let table: Vec<Vec<f64>> = (0..=n)
        .map(|j| (1..=k_max).map(|k| sine_eigenfunction(k, j as f64 / n as f64)).collect())
        .collect();
    let lam: Vec<f64> = (1..=k_max).map(eigenvalue::<f64>).collect();
    let inner = |r: f64| -> f64 {
        let decay: Vec<f64> = lam.iter().zip(&phi_x).map(|(l, p)| (-l * r).exp() * p).collect();
        table
            .iter()
            .zip(&w)
            .map(|(row, &wj)| {
                let g: f64 = row.iter().zip(&decay).map(|(a, b)| a * b).sum();
                wj * g * g
            })
            .sum()
    };
    graded_left(inner, 0.0, t, 48, 24)
}

/// Worst `|sigma2 - quadrature|` over a few `(t, x)`.
pub fn sigma2_residual(k_max: usize) -> Result<f64> {
    let trunc = SpectralTruncation::uncertified(k_max)?;
    let pts = [(0.01, 0.5), (0.1, 0.3), (1.0, 0.5), (2.0, 0.9)];
    Ok(pts
        .par_iter()
        .map(|&(t, x)| (sigma2(t, x, &trunc) - sigma2_by_quadrature(t, x, k_max)).abs())
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max))
}

/// Worst disagreement of the two representations of `F` on `R` in `[0.3, 3]`.
pub fn bridge_dual_residual() -> f64 {
    (0..=270)
        .map(|i| 0.3 + i as f64 * 0.01)
        .map(|r: f64| (bridge_sup_cdf_series(r) - bridge_sup_cdf_theta(r)).abs())
        .fold(0.0, f64::max)
}

/// Worst disagreement of the two representations of `H` on `x` in `[0.3, 3]`.
pub fn bm_dual_residual() -> f64 {
    (0..=270)
        .map(|i| 0.3 + i as f64 * 0.01)
        .map(|x: f64| (bm_sup_cdf_series(x) - bm_sup_cdf_images(x)).abs())
        .fold(0.0, f64::max)
}

/// Sup-norms of `n` standard bridges (nodal synthesis with in-cell refinement).
pub fn bridge_sups(n: usize, intervals: usize, streams: &Streams) -> Result<Vec<f64>> {
    let sampler = BridgeSampler::<f64>::new(BridgeMode::Standard, Synthesis::Nodal, 1, intervals)?;
    let batches = n.div_ceil(MC_BATCH);
    let out: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = streams.stream(b as u64, "verify-sup");
            let len = MC_BATCH.min(n - b * MC_BATCH);
            (0..len).map(|_| sampler.sample(&mut rng).sup_norm).collect()
        })
        .collect();
    Ok(out.concat())
}

pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut checks = vec![
        Check::at_most("orthonormality", orthonormality_residual(), ORTHONORMAL_TOLERANCE),
        Check::at_most("chapman_kolmogorov", chapman_kolmogorov_residual(cfg.k_max)?, CK_TOLERANCE),
        Check::at_most("sigma2_quadrature", sigma2_residual(cfg.k_max)?, SIGMA2_TOLERANCE),
        Check::at_most("bridge_sup_dual", bridge_dual_residual(), DUAL_TOLERANCE),
        Check::at_most("bm_sup_dual", bm_dual_residual(), DUAL_TOLERANCE),
    ];
    if cfg.mc_samples > 0 {
        let sups = bridge_sups(cfg.mc_samples, cfg.mc_intervals, &Streams::new(cfg.seed))?;
        let ks = ks_one_sample(&sups, |r| if r > 0.0 { bridge_sup_cdf(r).unwrap_or(0.0) } else { 0.0 });
        checks.push(Check::at_most("bridge_sup_ks", ks.statistic, ks.critical(KS_ALPHA)));
    }
    Ok(VerifyReport { config: *cfg, checks })
}
