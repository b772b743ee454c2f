//! Grid-based hit detection.

use serde::{Deserialize, Serialize};

use super::config::Window;
use crate::dynamics::GridPath;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::target::TargetSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitResult {
    pub hit: bool,
    /// Smallest distance from a scanned grid value to the target.
    pub min_distance: f64,
    /// `(t_n, x_j)` of the first hit in time order (then space order).
    pub first_hit: Option<(f64, f64)>,
}

impl HitResult {
    pub fn none() -> Self {
        Self {
            hit: false,
            min_distance: f64::INFINITY,
            first_hit: None,
        }
    }
}

/// Scans one field slice (node-major) over the nodes `js`; returns the minimal
/// distance and the first node inside the target.
pub fn scan_field<T: Real>(
    field: &[T],
    d: usize,
    js: std::ops::RangeInclusive<usize>,
    a: &TargetSet<T>,
) -> (T, Option<usize>) {
    let mut best = T::infinity();
    for j in js {
        let dist = a.distance(&field[j * d..(j + 1) * d]);
        if dist < best {
            best = dist;
        }
        if dist == T::zero() {
            return (dist, Some(j));
        }
    }
    (best, None)
}

/// Time indices of `path` falling in `[t_lo, t_hi]`.
fn time_indices<T: Real>(path: &GridPath<T>, t: [f64; 2]) -> Result<std::ops::RangeInclusive<usize>> {
    let dt = path.dt().to_f64_lossy();
    let t0 = path.time(0).to_f64_lossy();
    let t_end = path.time(path.n_times() - 1).to_f64_lossy();
    let slack = 1e-9 * dt.max(1.0);
    if t[0] < t0 - slack || t[1] > t_end + slack {
        return Err(Error::Domain(format!(
            "window [{}, {}] is outside the simulated span [{t0}, {t_end}]",
            t[0], t[1]
        )));
    }
    let lo = ((t[0] - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let hi = (((t[1] - t0) / dt + 1e-9).floor() as usize).min(path.n_times() - 1);
    Ok(lo..=hi)
}

/// Checks whether some grid value `u(t_n, x_j)` with `(t_n, x_j)` in `I x J`
/// lies in `a`.
pub fn detect_hit<T: Real>(path: &GridPath<T>, a: &TargetSet<T>, window: &Window) -> Result<HitResult> {
    window.validate().map_err(|e| Error::Domain(e.to_string()))?;
    if a.dim() != path.dim() {
        return Err(Error::Domain("target and path dimensions differ".into()));
    }
    let ns = time_indices(path, window.t)?;
    let js = window.nodes(path.intervals());
    let mut res = HitResult::none();
    for n in ns {
        let (dist, hit) = scan_field(path.slice(n), path.dim(), js.clone(), a);
        res.min_distance = res.min_distance.min(dist.to_f64_lossy());
        if let Some(j) = hit {
            res.hit = true;
            res.first_hit = Some((path.time(n).to_f64_lossy(), path.x(j).to_f64_lossy()));
            res.min_distance = 0.0;
            break;
        }
    }
    Ok(res)
}
