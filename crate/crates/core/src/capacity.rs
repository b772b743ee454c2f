//! Riesz capacities of bounded sets by discrete energy minimization.
//!
//! For `beta > 0` the kernel is `r^{-beta}`, for `beta = 0` it is
//! `log_+(e / r)`, and for `beta < 0` every nonempty set has capacity 1.
//! The capacity is `1 / inf_mu E(mu)` over probability measures on the set,
//! approximated on a quasi-uniform point cloud with self-interaction
//! `k(h / 2)` (`h` the covering radius). The diagonal overstates the local
//! self-energy, so the discrete energy is biased up and the capacity down.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::target::TargetSet;

/// Iteration cap of the Frank–Wolfe solver.
pub const MAX_ITER: usize = 10_000;
/// Stop once the duality gap falls below this fraction of the energy.
pub const REL_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CapacityKernel<T> {
    Riesz { beta: T },
    Logarithmic,
    Constant,
}

impl<T: Real> CapacityKernel<T> {
    pub fn from_beta(beta: T) -> Self {
        if beta > T::zero() {
            CapacityKernel::Riesz { beta }
        } else if beta == T::zero() {
            CapacityKernel::Logarithmic
        } else {
            CapacityKernel::Constant
        }
    }

    pub fn eval(&self, r: T) -> T {
        match *self {
            CapacityKernel::Riesz { beta } => {
                if r == T::zero() {
                    T::infinity()
                } else if beta == T::one() {
                    r.recip()
                } else {
                    r.powf(-beta)
                }
            }
            CapacityKernel::Logarithmic => {
                if r == T::zero() {
                    T::infinity()
                } else {
                    (T::one() - r.ln()).max(T::zero())
                }
            }
            CapacityKernel::Constant => T::one(),
        }
    }
}

/// Point cloud approximating a target set, stored flat (`points[p * d + i]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization<T> {
    pub d: usize,
    pub points: Vec<T>,
    /// Largest distance from a point of the set to the cloud (probe estimate).
    pub covering_radius: T,
}

impl<T: Real> Discretization<T> {
    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, p: usize) -> &[T] {
        &self.points[p * self.d..(p + 1) * self.d]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure<T> {
    pub d: usize,
    /// Support points, flat.
    pub support: Vec<T>,
    pub weights: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinEnergy<T> {
    pub energy: T,
    pub measure: DiscreteMeasure<T>,
    pub iterations: usize,
    /// Final Frank–Wolfe duality gap.
    pub gap: T,
    /// Energy after every iteration (nonincreasing).
    pub trace: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate<T> {
    pub beta: T,
    pub value: T,
    /// Minimized discrete energy; `None` when a convention fixed the value.
    pub energy: Option<T>,
    pub m: usize,
    pub iterations: usize,
    pub covering_radius: T,
    pub gap: T,
    pub convention: Option<String>,
}

fn golden_angle<T: Real>() -> T {
    T::PI() * (T::lit(3.0) - T::lit(5.0).sqrt())
}

/// Splits `m` into parts proportional to `w` (largest remainder).
fn apportion<T: Real>(m: usize, w: &[T]) -> Vec<usize> {
    let total: T = w.iter().copied().sum();
    let exact: Vec<T> = w.iter().map(|&x| T::from_count(m) * x / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor().to_usize().unwrap_or(0)).collect();
    let mut left = m - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(b.cmp(&a))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// `n` quasi-uniform unit vectors in `R^d` for `d <= 3`.
fn sphere_points<T: Real>(d: usize, n: usize, twist: T, out: &mut Vec<T>) {
    match d {
        1 => {
            for p in 0..n {
                out.push(if p % 2 == 0 { T::one() } else { -T::one() });
            }
        }
        2 => {
            for p in 0..n {
                let a = T::lit(2.0) * T::PI() * (T::from_count(p) + twist) / T::from_count(n);
                out.push(a.cos());
                out.push(a.sin());
            }
        }
        3 => {
            let g = golden_angle::<T>();
            for p in 0..n {
                let z = T::one() - T::lit(2.0) * (T::from_count(p) + T::lit(0.5)) / T::from_count(n);
                let rho = (T::one() - z * z).max(T::zero()).sqrt();
                let phi = g * T::from_count(p) + twist;
                out.push(rho * phi.cos());
                out.push(rho * phi.sin());
                out.push(z);
            }
        }
        _ => unreachable!("sphere_points is used for d <= 3"),
    }
}

/// Axis counts of a lattice with about `m` points and near-equal spacing.
fn lattice_counts<T: Real>(side: &[T], m: usize) -> Vec<usize> {
    let active: Vec<usize> = (0..side.len()).filter(|&i| side[i] > T::zero()).collect();
    let mut counts = vec![1usize; side.len()];
    if active.is_empty() || m <= 1 {
        return counts;
    }
    let k = active.len();
    let geo = active
        .iter()
        .map(|&i| side[i].ln())
        .sum::<T>()
        / T::from_count(k);
    let base = T::from_count(m).powf(T::one() / T::from_count(k));
    for &i in &active {
        let c = (base * (side[i].ln() - geo).exp()).round();
        counts[i] = c.to_usize().unwrap_or(1).max(2);
    }
    counts
}

fn lattice_points<T: Real>(lo: &[T], hi: &[T], counts: &[usize], out: &mut Vec<T>) {
    let d = lo.len();
    let total: usize = counts.iter().product();
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        for i in 0..d {
            let v = if counts[i] == 1 {
                (lo[i] + hi[i]) * T::lit(0.5)
            } else {
                // `hi - lo` is rounded, so the last node can land an ulp past `hi`.
                (lo[i] + (hi[i] - lo[i]) * T::from_count(idx[i]) / T::from_count(counts[i] - 1)).min(hi[i])
            };
            out.push(v);
        }
        for i in 0..d {
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
        }
    }
}

fn ball_points<T: Real>(center: &[T], radius: T, m: usize) -> Vec<T> {
    let d = center.len();
    let mut unit = Vec::new();
    if radius == T::zero() || m <= 1 {
        return center.to_vec();
    }
    if d == 1 {
        for p in 0..m {
            let s = -T::one() + T::lit(2.0) * T::from_count(p) / T::from_count(m - 1);
            unit.push(s);
        }
    } else if d <= 3 {
        // Concentric shells r_l = l / L with point counts proportional to l^(d-1),
        // L chosen so radial and tangential spacings roughly match.
        let shells = if d == 2 {
            (T::from_count(m) / T::PI()).sqrt()
        } else {
            (T::lit(3.0) * T::from_count(m) / (T::lit(4.0) * T::PI())).cbrt()
        };
        let shells = shells.round().to_usize().unwrap_or(1).clamp(1, m);
        let w: Vec<T> = (1..=shells).map(|l| T::from_count(l).powi(d as i32 - 1)).collect();
        let counts = apportion(m, &w);
        for (l, &n) in counts.iter().enumerate() {
            let r = T::from_count(l + 1) / T::from_count(shells);
            let start = unit.len();
            sphere_points(d, n, T::lit(0.5) * T::from_count(l), &mut unit);
            for v in &mut unit[start..] {
                *v *= r;
            }
        }
    } else {
        // Lattice intersection, rescaled until it holds about m points.
        let vol_ratio = T::PI().powf(T::from_count(d) / T::lit(2.0))
            / libm_gamma(T::from_count(d) / T::lit(2.0) + T::one());
        let mut spacing = (vol_ratio / T::from_count(m)).powf(T::one() / T::from_count(d));
        let mut best = Vec::new();
        for _ in 0..8 {
            let n = (T::one() / spacing).floor().to_usize().unwrap_or(0);
            let mut pts = Vec::new();
            let count = 2 * n + 1;
            let mut idx = vec![0usize; d];
            for _ in 0..count.pow(d as u32) {
                let z: Vec<T> = idx
                    .iter()
                    .map(|&k| (T::from_count(k) - T::from_count(n)) * spacing)
                    .collect();
                if z.iter().map(|&v| v * v).sum::<T>() <= T::one() {
                    pts.extend(z);
                }
                for i in 0..d {
                    idx[i] += 1;
                    if idx[i] < count {
                        break;
                    }
                    idx[i] = 0;
                }
            }
            let got = pts.len() / d;
            best = pts;
            if got == 0 {
                spacing = spacing * T::lit(0.8);
                continue;
            }
            let ratio = T::from_count(got) / T::from_count(m);
            if (ratio - T::one()).abs() < T::lit(0.1) {
                break;
            }
            spacing = spacing * ratio.powf(T::one() / T::from_count(d));
        }
        unit = best;
    }
    let mut out = Vec::with_capacity(unit.len());
    for z in unit.chunks_exact(d) {
        for i in 0..d {
            out.push(center[i] + radius * z[i]);
        }
    }
    out
}

fn libm_gamma<T: Real>(x: T) -> T {
    T::lit(libm::tgamma(x.to_f64_lossy()))
}

fn raw_points<T: Real>(a: &TargetSet<T>, m: usize) -> Vec<T> {
    match a {
        TargetSet::Ball { center, radius } => ball_points(center, *radius, m),
        TargetSet::Box { lo, hi } => {
            let side: Vec<T> = lo.iter().zip(hi).map(|(&a, &b)| b - a).collect();
            let counts = lattice_counts(&side, m);
            let mut out = Vec::new();
            lattice_points(lo, hi, &counts, &mut out);
            out
        }
        TargetSet::Union { members } => {
            let w = vec![T::one(); members.len()];
            let counts = apportion(m.max(members.len()), &w);
            members
                .iter()
                .zip(counts)
                .flat_map(|(s, c)| raw_points(s, c.max(1)))
                .collect()
        }
        TargetSet::PointCloud { points, .. } => points.iter().flatten().copied().collect(),
    }
}

/// Dense probe points of the set used to estimate the covering radius.
fn probes<T: Real>(a: &TargetSet<T>, budget: usize) -> Vec<T> {
    match a {
        TargetSet::Ball { center, radius } => {
            let d = center.len();
            if *radius == T::zero() {
                return center.clone();
            }
            let (lo, hi) = a.bounding_box();
            let side: Vec<T> = lo.iter().zip(&hi).map(|(&x, &y)| y - x).collect();
            let counts = lattice_counts(&side, budget);
            let mut grid = Vec::new();
            lattice_points(&lo, &hi, &counts, &mut grid);
            let mut out: Vec<T> = grid
                .chunks_exact(d)
                .filter(|z| a.contains(z))
                .flatten()
                .copied()
                .collect();
            if d <= 3 {
                let n_surface = T::from_count(budget)
                    .powf(T::from_count(d - 1) / T::from_count(d))
                    .to_usize()
                    .unwrap_or(1)
                    * 4;
                let mut unit = Vec::new();
                sphere_points(d, n_surface.max(2), T::lit(0.25), &mut unit);
                for z in unit.chunks_exact(d) {
                    for i in 0..d {
                        out.push(center[i] + *radius * z[i]);
                    }
                }
            }
            out
        }
        TargetSet::Box { .. } => raw_points(a, budget),
        TargetSet::Union { members } => members
            .iter()
            .flat_map(|s| probes(s, budget / members.len() + 1))
            .collect(),
        TargetSet::PointCloud { points, .. } => points.iter().flatten().copied().collect(),
    }
}

fn covering_radius<T: Real>(d: usize, points: &[T], probe: &[T]) -> T {
    probe
        .par_chunks(d)
        .map(|z| {
            points
                .chunks_exact(d)
                .map(|p| {
                    p.iter()
                        .zip(z)
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum::<T>()
                })
                .fold(T::infinity(), |a, b| a.min(b))
        })
        .reduce(|| T::zero(), |a, b| a.max(b))
        .sqrt()
}

/// About `m` quasi-uniform points of `a` with their covering radius.
pub fn discretize_target<T: Real>(a: &TargetSet<T>, m: usize) -> Result<Discretization<T>> {
    a.validate()?;
    if m == 0 {
        return Err(Error::Domain("discretization size must be positive".into()));
    }
    let d = a.dim();
    let points = raw_points(a, m);
    let covering_radius = match a {
        TargetSet::PointCloud { tolerance, .. } => *tolerance,
        _ if a.is_finite_set() => T::zero(),
        _ => {
            let budget = (30 * (points.len() / d)).clamp(20_000, 200_000);
            covering_radius(d, &points, &probes(a, budget))
        }
    };
    Ok(Discretization {
        d,
        points,
        covering_radius,
    })
}

#[derive(Clone, Copy)]
enum Step {
    Toward,
    Away,
    Pairwise,
}

/// Minimizes `mu^T K mu` over probability vectors on the cloud by Frank–Wolfe
/// with away and pairwise steps and exact line search. The diagonal is `k(cutoff / 2)`.
pub fn min_energy<T: Real>(cloud: &Discretization<T>, beta: T, cutoff: T) -> Result<MinEnergy<T>> {
    if !(beta >= T::zero()) {
        return Err(Error::Domain("energy minimization needs beta >= 0".into()));
    }
    if cloud.is_empty() {
        return Err(Error::Domain("empty point cloud".into()));
    }
    if !(cutoff > T::zero()) {
        return Err(Error::Domain("self-interaction cutoff must be positive".into()));
    }
    let kernel = CapacityKernel::from_beta(beta);
    let m = cloud.len();
    let d = cloud.d;
    let diag = kernel.eval(cutoff / T::lit(2.0));
    let mut k = vec![T::zero(); m * m];
    k.par_chunks_mut(m).enumerate().for_each(|(p, row)| {
        let zp = cloud.point(p);
        for (q, v) in row.iter_mut().enumerate() {
            *v = if p == q {
                diag
            } else {
                let r = zp
                    .iter()
                    .zip(cloud.point(q))
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<T>()
                    .sqrt();
                // Coincident points would make the energy infinite; they
                // behave like a single point with the diagonal cutoff.
                if r == T::zero() {
                    diag
                } else {
                    kernel.eval(r)
                }
            };
        }
    });

    let mut mu = vec![T::one() / T::from_count(m); m];
    let mut kmu: Vec<T> = k
        .chunks_exact(m)
        .map(|row| row.iter().zip(&mu).map(|(&a, &b)| a * b).sum())
        .collect();
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>();
    let mut energy = dot(&mu, &kmu);
    let mut trace = vec![energy];
    let tol = T::lit(REL_GAP);
    let mut gap = T::infinity();
    let mut iterations = 0;
    while iterations < MAX_ITER {
        // Gradient is 2 K mu; compare its entries directly via kmu.
        let (s, &ks) = kmu
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let (a, &ka) = kmu
            .iter()
            .enumerate()
            .filter(|(i, _)| mu[*i] > T::zero())
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        gap = T::lit(2.0) * (energy - ks);
        if gap <= tol * energy {
            break;
        }
        iterations += 1;
        let row_s = &k[s * m..(s + 1) * m];
        let row_a = &k[a * m..(a + 1) * m];
        // Each candidate direction gives f(g) = E + 2 g b + g^2 c on [0, g_max];
        // the step with the largest exact decrease is taken.
        let two = T::lit(2.0);
        let w_a = mu[a];
        let away_max = if w_a < T::one() {
            w_a / (T::one() - w_a)
        } else {
            T::infinity()
        };
        let candidates = [
            (Step::Toward, ks - energy, row_s[s] - two * ks + energy, T::one()),
            (Step::Away, energy - ka, energy - two * ka + row_a[a], away_max),
            (Step::Pairwise, ks - ka, row_s[s] - two * row_s[a] + row_a[a], w_a),
        ];
        let (step, g, _) = candidates
            .iter()
            .map(|&(step, b, c, g_max)| {
                let g = if b >= T::zero() {
                    T::zero()
                } else if c > T::zero() {
                    (-b / c).min(g_max)
                } else {
                    g_max
                };
                (step, g, -(two * g * b + g * g * c))
            })
            .max_by(|x, y| x.2.partial_cmp(&y.2).unwrap())
            .unwrap();
        match step {
            Step::Toward => {
                for ((w, km), &kr) in mu.iter_mut().zip(kmu.iter_mut()).zip(row_s) {
                    *w *= T::one() - g;
                    *km = (T::one() - g) * *km + g * kr;
                }
                mu[s] += g;
            }
            Step::Away => {
                for ((w, km), &kr) in mu.iter_mut().zip(kmu.iter_mut()).zip(row_a) {
                    *w *= T::one() + g;
                    *km = (T::one() + g) * *km - g * kr;
                }
                mu[a] -= g;
                if g == away_max {
                    mu[a] = T::zero();
                }
            }
            Step::Pairwise => {
                for ((km, &rs), &ra) in kmu.iter_mut().zip(row_s).zip(row_a) {
                    *km += g * (rs - ra);
                }
                mu[s] += g;
                mu[a] -= g;
                if g == w_a {
                    mu[a] = T::zero();
                }
            }
        }
        for w in mu.iter_mut() {
            if *w < T::zero() {
                *w = T::zero();
            }
        }
        let new_energy = dot(&mu, &kmu);
        // Round-off can raise the energy by a few ulps at convergence.
        energy = new_energy.min(energy);
        trace.push(energy);
    }
    if gap > tol * energy {
        return Err(Error::Convergence {
            message: format!("Frank-Wolfe did not converge in {MAX_ITER} iterations"),
            gap: (gap / energy).to_f64_lossy(),
        });
    }
    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (p, &w) in mu.iter().enumerate() {
        if w > T::zero() {
            support.extend_from_slice(cloud.point(p));
            weights.push(w);
        }
    }
    let total: T = weights.iter().copied().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(MinEnergy {
        energy,
        measure: DiscreteMeasure {
            d,
            support,
            weights,
        },
        iterations,
        gap,
        trace,
    })
}

/// `Cap_beta(a)` estimated on about `m` points.
pub fn cap<T: Real>(a: &TargetSet<T>, beta: T, m: usize) -> Result<CapacityEstimate<T>> {
    a.validate()?;
    if !beta.is_finite() {
        return Err(Error::Domain("beta must be finite".into()));
    }
    if beta < T::zero() {
        return Ok(CapacityEstimate {
            beta,
            value: T::one(),
            energy: None,
            m: 0,
            iterations: 0,
            covering_radius: T::zero(),
            gap: T::zero(),
            convention: Some("negative order: every nonempty set has capacity 1".into()),
        });
    }
    if a.is_finite_set() {
        return Ok(CapacityEstimate {
            beta,
            value: T::zero(),
            energy: None,
            m: 0,
            iterations: 0,
            covering_radius: T::zero(),
            gap: T::zero(),
            convention: Some("finite sets are polar for beta >= 0".into()),
        });
    }
    let cloud = discretize_target(a, m)?;
    let res = min_energy(&cloud, beta, cloud.covering_radius)?;
    Ok(CapacityEstimate {
        beta,
        value: res.energy.recip(),
        energy: Some(res.energy),
        m: cloud.len(),
        iterations: res.iterations,
        covering_radius: cloud.covering_radius,
        gap: res.gap,
        convention: None,
    })
}
