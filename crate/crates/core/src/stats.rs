//! Summary statistics and goodness-of-fit tests used by the Monte Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::invariant::series::bridge_sup_cdf;

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            n,
        }
    }

    /// `|mean - target| <= k * SE`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }

    /// Number of standard errors between the mean and `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

/// Sample variance with the large-sample standard error `sqrt((m4 - s^4) / n)`.
pub fn variance_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    MeanEstimate {
        mean: var,
        std_error: ((m4 - var * var).max(0.0) / n).sqrt(),
        n: xs.len(),
    }
}

/// Sample covariance with a delta-method standard error.
pub fn covariance_estimate(xs: &[f64], ys: &[f64]) -> MeanEstimate {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let est = MeanEstimate::from_samples(&prods);
    MeanEstimate {
        mean: est.mean * n / (n - 1.0),
        ..est
    }
}

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // The endpoints are exactly 0 and 1 at the extremes; the formula leaves ulps.
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits >= n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Kolmogorov–Smirnov test outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Effective sample size `n` (one-sample) or `n1 n2 / (n1 + n2)` (two-sample).
    pub effective_n: f64,
    pub p_value: f64,
}

impl KsResult {
    fn new(statistic: f64, effective_n: f64) -> Self {
        let sn = effective_n.sqrt();
        let lambda = (sn + 0.12 + 0.11 / sn) * statistic;
        Self {
            statistic,
            effective_n,
            p_value: kolmogorov_survival(lambda),
        }
    }

    /// Asymptotic critical distance `sqrt(-ln(alpha/2)/2) / sqrt(n_eff)`.
    pub fn critical(&self, alpha: f64) -> f64 {
        (-(alpha / 2.0).ln() / 2.0).sqrt() / self.effective_n.sqrt()
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.statistic < self.critical(alpha)
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        1.0
    } else {
        (1.0 - bridge_sup_cdf(lambda).unwrap_or(0.0)).clamp(0.0, 1.0)
    }
}

/// One-sample KS test of `samples` against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    KsResult::new(d, n)
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n1, n2) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let v = xs[i].min(ys[j]);
        while i < n1 && xs[i] <= v {
            i += 1;
        }
        while j < n2 && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    KsResult::new(d, ne)
}

/// Pearson chi-square homogeneity test on a `rows x 2` table of (success, failure) counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

pub fn chi_square_homogeneity(table: &[[u64; 2]]) -> ChiSquareResult {
    let rows = table.len();
    let total: u64 = table.iter().map(|r| r[0] + r[1]).sum();
    let col = [
        table.iter().map(|r| r[0]).sum::<u64>() as f64,
        table.iter().map(|r| r[1]).sum::<u64>() as f64,
    ];
    let mut stat = 0.0;
    for r in table {
        let row_total = (r[0] + r[1]) as f64;
        for c in 0..2 {
            let expected = row_total * col[c] / total as f64;
            if expected > 0.0 {
                stat += (r[c] as f64 - expected).powi(2) / expected;
            }
        }
    }
    let dof = rows.saturating_sub(1).max(1);
    ChiSquareResult {
        statistic: stat,
        dof,
        p_value: 1.0 - chi_square_cdf(stat, dof),
    }
}

pub fn chi_square_cdf(x: f64, dof: usize) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .cdf(x)
}
