//! Compact approximation of a target: the smallest contraction keeping a
//! given fraction of the capacity.

use crate::capacity::cap;
use crate::error::{Error, Result};
use crate::target::TargetSet;

const BISECTION_STEPS: usize = 20;

/// [`compact_core_with`] at order `d - 6` on 500 points.
pub fn compact_core(a: &TargetSet<f64>, fraction: f64) -> Result<TargetSet<f64>> {
    compact_core_with(a, fraction, a.dim() as f64 - 6.0, super::estimate::CAPACITY_POINTS)
}

/// Shrinks `a` about its own centers by the smallest factor `s` (to 20
/// bisection steps) with `Cap_beta(s A) >= fraction Cap_beta(A)`.
///
/// For `beta < 0` and for point clouds `a` is returned unchanged.
pub fn compact_core_with(a: &TargetSet<f64>, fraction: f64, beta: f64, m: usize) -> Result<TargetSet<f64>> {
    a.validate()?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Domain(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    if beta < 0.0 || a.is_finite_set() || matches!(a, TargetSet::PointCloud { .. }) {
        return Ok(a.clone());
    }
    let full = cap(a, beta, m)?.value;
    let ratio = |s: f64| -> Result<f64> { Ok(cap(&a.shrunk(s), beta, m)?.value / full) };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if ratio(mid)? >= fraction {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi >= 1.0 {
        return Err(Error::Approximation(format!(
            "no contraction reached capacity fraction {fraction} in {BISECTION_STEPS} bisection steps"
        )));
    }
    Ok(a.shrunk(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_order_returns_the_set() {
        let a = TargetSet::ball(vec![0.3, 0.3], 0.1);
        assert_eq!(compact_core(&a, 0.5).unwrap(), a);
    }

    #[test]
    fn point_clouds_are_already_compact() {
        let a = TargetSet::PointCloud {
            points: vec![vec![0.0; 7], vec![1.0; 7]],
            tolerance: 0.01,
        };
        assert_eq!(compact_core(&a, 0.5).unwrap(), a);
    }

    #[test]
    fn bad_fraction_is_rejected() {
        let a = TargetSet::ball(vec![0.0], 1.0);
        assert!(compact_core(&a, 1.0).is_err());
    }
}
