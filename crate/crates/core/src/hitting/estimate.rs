//! Monte Carlo hitting probabilities over a space-time window.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Window};
use super::detect::scan_field;
use crate::capacity::{cap, CapacityEstimate};
use crate::dynamics::{GirsanovAccumulator, ModeState, Potential, SpdeSystem};
use crate::error::{Error, Result};
use crate::grid::SineBasis;
use crate::rng::Streams;
use crate::stats::{wilson_interval, MeanEstimate, Z_95};
use crate::target::TargetSet;

/// Number of histogram bins for the per-trial minimum distance.
pub const HISTOGRAM_BINS: usize = 20;
/// Discretization size of the capacity report.
pub const CAPACITY_POINTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub hit: bool,
    pub first_hit_time: Option<f64>,
    pub min_distance: f64,
}

/// Histogram of per-trial minimum distances; hits fall in `zero`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub zero: u64,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_distances(ds: &[f64]) -> Self {
        let zero = ds.iter().filter(|&&d| d == 0.0).count() as u64;
        let top = ds
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max);
        let width = if top > 0.0 { top / HISTOGRAM_BINS as f64 } else { 1.0 };
        let edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|b| b as f64 * width).collect();
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        for &d in ds.iter().filter(|&&d| d > 0.0 && d.is_finite()) {
            let b = ((d / width) as usize).min(HISTOGRAM_BINS - 1);
            counts[b] += 1;
        }
        Self { zero, edges, counts }
    }
}

/// Field modulus over one grid cell compared with the target's size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusDiagnostic {
    /// Mean over the window of the larger of the one-cell increments in `x` and `t`.
    pub grid_modulus: f64,
    /// Radius of a ball, half the shortest side of a box, or a point tolerance.
    pub target_scale: f64,
    /// Whether `target_scale >= 2 grid_modulus`; reported, not enforced.
    pub rule_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingEstimate {
    pub n_trials: usize,
    pub n_hits: usize,
    pub p_hat: f64,
    /// Wilson 95% interval.
    pub interval: [f64; 2],
    pub window: Window,
    pub min_distance_histogram: Histogram,
    /// `Cap_{d-6}(A)`, reported for comparison with the lower bound's shape.
    pub capacity: CapacityEstimate<f64>,
    pub epsilon: f64,
    pub modulus: ModulusDiagnostic,
    pub trials: Vec<TrialRecord>,
}

impl HittingEstimate {
    pub fn half_width(&self) -> f64 {
        (self.interval[1] - self.interval[0]) / 2.0
    }
}

/// Size of the target used by the modulus rule.
pub fn target_scale(a: &TargetSet<f64>) -> f64 {
    match a {
        TargetSet::Ball { radius, .. } => *radius,
        TargetSet::Box { lo, hi } => lo
            .iter()
            .zip(hi)
            .map(|(l, h)| (h - l) / 2.0)
            .fold(f64::INFINITY, f64::min),
        TargetSet::Union { members } => members.iter().map(target_scale).fold(0.0, f64::max),
        TargetSet::PointCloud { tolerance, .. } => *tolerance,
    }
}

struct TrialOutcome {
    record: TrialRecord,
    modulus_sum: f64,
    modulus_count: usize,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Simulates one path and scans the window.
fn run_trial(
    cfg: &ExperimentConfig,
    init: &ModeState<f64>,
    basis: &Arc<SineBasis<f64>>,
    a: &TargetSet<f64>,
    window: &Window,
    streams: &Streams,
    trial: usize,
) -> Result<TrialOutcome> {
    let pot = cfg.potential()?;
    let d = cfg.d;
    let mut rng = streams.stream(trial as u64, "hit");
    let mut sys = SpdeSystem::new(init.clone(), pot.clone(), basis.clone(), cfg.dt, true)?;
    let n_lo = (window.t[0] / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let n_hi = (window.t[1] / cfg.dt + 1e-9).floor() as usize;
    if pot.is_zero() {
        sys.jump_to(n_lo as f64 * cfg.dt, &mut rng)?;
    } else {
        for _ in 0..n_lo {
            sys.step(&mut rng)?;
        }
    }
    let js = window.nodes(cfg.n_x);
    let mut record = TrialRecord {
        trial,
        hit: false,
        first_hit_time: None,
        min_distance: f64::INFINITY,
    };
    let mut prev: Option<Vec<f64>> = None;
    let (mut modulus_sum, mut modulus_count) = (0.0, 0usize);
    for n in n_lo..=n_hi {
        if n > n_lo {
            sys.step(&mut rng)?;
        }
        let field = sys.field();
        for j in js.clone() {
            let here = &field[j * d..(j + 1) * d];
            let mut m = if j < cfg.n_x {
                euclid(here, &field[(j + 1) * d..(j + 2) * d])
            } else {
                0.0
            };
            if let Some(p) = &prev {
                m = m.max(euclid(here, &p[j * d..(j + 1) * d]));
            }
            modulus_sum += m;
            modulus_count += 1;
        }
        let (dist, hit) = scan_field(field, d, js.clone(), a);
        record.min_distance = record.min_distance.min(dist);
        if hit.is_some() {
            record.hit = true;
            record.first_hit_time = Some(n as f64 * cfg.dt);
            record.min_distance = 0.0;
            break;
        }
        prev = Some(field.to_vec());
    }
    Ok(TrialOutcome {
        record,
        modulus_sum,
        modulus_count,
    })
}

/// Estimates `P{u(I x J) meets A}` from `cfg.n_trials` independent paths.
pub fn hitting_probability(
    cfg: &ExperimentConfig,
    a: &TargetSet<f64>,
    window: &Window,
    streams: &Streams,
) -> Result<HittingEstimate> {
    cfg.validate()?;
    window.validate()?;
    a.validate()?;
    if a.dim() != cfg.d {
        return Err(Error::Configuration(format!(
            "target: dimension {} does not match d = {}",
            a.dim(),
            cfg.d
        )));
    }
    if !a.inside_cube(cfg.box_scale) {
        return Err(Error::Configuration(format!(
            "target: must lie inside [-M, M]^d with M = box_scale = {}",
            cfg.box_scale
        )));
    }
    let basis = Arc::new(SineBasis::new(cfg.k_max, cfg.n_x)?);
    let init = ModeState::from_initial(&cfg.initial()?, cfg.k_max)?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &init, &basis, a, window, streams, t))
        .collect::<Result<_>>()?;
    let n_hits = outcomes.iter().filter(|o| o.record.hit).count();
    let (lo, hi) = wilson_interval(n_hits, cfg.n_trials, Z_95);
    let dists: Vec<f64> = outcomes.iter().map(|o| o.record.min_distance).collect();
    let msum: f64 = outcomes.iter().map(|o| o.modulus_sum).sum();
    let mcount: usize = outcomes.iter().map(|o| o.modulus_count).sum();
    let grid_modulus = if mcount > 0 { msum / mcount as f64 } else { 0.0 };
    let scale = target_scale(a);
    Ok(HittingEstimate {
        n_trials: cfg.n_trials,
        n_hits,
        p_hat: n_hits as f64 / cfg.n_trials as f64,
        interval: [lo, hi],
        window: *window,
        min_distance_histogram: Histogram::from_distances(&dists),
        capacity: cap(a, cfg.d as f64 - 6.0, CAPACITY_POINTS)?,
        epsilon: cfg.epsilon,
        modulus: ModulusDiagnostic {
            grid_modulus,
            target_scale: scale,
            rule_met: scale >= 2.0 * grid_modulus,
        },
        trials: outcomes.into_iter().map(|o| o.record).collect(),
    })
}

/// `P{max_{t_n <= t_max} ||u(t_n)||_inf >= K}` for each level `K`, from
/// `cfg.n_trials` paths.
pub fn exit_tail_probabilities(
    cfg: &ExperimentConfig,
    levels: &[f64],
    t_max: f64,
    streams: &Streams,
) -> Result<Vec<MeanEstimate>> {
    cfg.validate()?;
    let basis = Arc::new(SineBasis::new(cfg.k_max, cfg.n_x)?);
    let init = ModeState::from_initial(&cfg.initial()?, cfg.k_max)?;
    let pot = cfg.potential()?;
    let n_steps = (t_max / cfg.dt - 1e-9).ceil() as usize;
    let sups: Vec<f64> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = streams.stream(t as u64, "tail");
            let mut sys = SpdeSystem::new(init.clone(), pot.clone(), basis.clone(), cfg.dt, true)?;
            let mut best = sys.sup_norm();
            for _ in 0..n_steps {
                sys.step(&mut rng)?;
                best = best.max(sys.sup_norm());
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(levels
        .iter()
        .map(|&k| {
            let ind: Vec<f64> = sups.iter().map(|&s| if s >= k { 1.0 } else { 0.0 }).collect();
            MeanEstimate::from_samples(&ind)
        })
        .collect())
}

/// Driftless simulation reweighted to the drifted law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEstimate {
    pub n_trials: usize,
    /// Mean likelihood ratio at the horizon; 1 in expectation.
    pub mean_weight: MeanEstimate,
    /// `E[w 1{hit}]`, an estimate of the drifted hitting probability.
    pub hit: MeanEstimate,
    /// Effective sample size `(sum w)^2 / sum w^2`.
    pub effective_size: f64,
}

/// Hitting probability of the drifted equation by Girsanov reweighting of
/// driftless paths run to `horizon` (at least the end of the window).
pub fn importance_hitting(
    cfg: &ExperimentConfig,
    a: &TargetSet<f64>,
    window: &Window,
    horizon: f64,
    streams: &Streams,
) -> Result<ImportanceEstimate> {
    cfg.validate()?;
    window.validate()?;
    a.validate()?;
    if horizon < window.t[1] {
        return Err(Error::Configuration("horizon: must cover the window".into()));
    }
    let target_pot = cfg.potential()?;
    let basis = Arc::new(SineBasis::new(cfg.k_max, cfg.n_x)?);
    let init = ModeState::from_initial(&cfg.initial()?, cfg.k_max)?;
    let n_lo = (window.t[0] / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let n_hi = (window.t[1] / cfg.dt + 1e-9).floor() as usize;
    let n_end = (horizon / cfg.dt + 1e-9).floor() as usize;
    let js = window.nodes(cfg.n_x);
    let pairs: Vec<(f64, f64)> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = streams.stream(t as u64, "hit-is");
            let mut sys = SpdeSystem::new(init.clone(), Potential::zero(cfg.d), basis.clone(), cfg.dt, true)?;
            sys.set_record_noise(true);
            let mut acc = GirsanovAccumulator::new(target_pot.clone(), basis.clone(), cfg.dt)?;
            let mut hit = n_lo == 0 && scan_field(sys.field(), cfg.d, js.clone(), a).1.is_some();
            let mut before = sys.field().to_vec();
            for n in 1..=n_end {
                sys.step(&mut rng)?;
                acc.observe(&before, sys.last_noise())?;
                before.copy_from_slice(sys.field());
                if !hit && n >= n_lo && n <= n_hi {
                    hit = scan_field(sys.field(), cfg.d, js.clone(), a).1.is_some();
                }
            }
            let w = acc.weight();
            Ok((w, if hit { w } else { 0.0 }))
        })
        .collect::<Result<_>>()?;
    let ws: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let hs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let s1: f64 = ws.iter().sum();
    let s2: f64 = ws.iter().map(|w| w * w).sum();
    Ok(ImportanceEstimate {
        n_trials: cfg.n_trials,
        mean_weight: MeanEstimate::from_samples(&ws),
        hit: MeanEstimate::from_samples(&hs),
        effective_size: s1 * s1 / s2,
    })
}
