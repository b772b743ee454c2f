//! Excursions between the balls of radius `N` and `K`, and the restart scheme
//! that looks for a hit shortly after each return to the inner ball.
//!
//! With `S_0` the first time `||u|| <= N`, `T_k` the first time after
//! `S_{k-1}` with `||u|| >= K` and `S_k` the first time after `T_k` with
//! `||u|| <= N`, excursion `k` scans the window `[S_{k-1} + w_0, S_{k-1} + w_1]`
//! (cut at `T_k`). All times are grid times.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::detect::scan_field;
use crate::dynamics::{sample_stationary, ModeState, SpdeSystem};
use crate::error::{Error, Result};
use crate::grid::SineBasis;
use crate::rng::{RngStream, Streams};
use crate::stats::{chi_square_homogeneity, wilson_interval, ChiSquareResult, Z_95};
use crate::target::TargetSet;

/// A Markov system observed through a norm and a target indicator.
pub trait ExcursionSystem {
    fn time(&self) -> f64;
    fn norm(&self) -> f64;
    fn in_target(&self) -> bool;
    fn advance(&mut self, rng: &mut RngStream) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartParams {
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Scan window, as offsets after each return time.
    pub window: [f64; 2],
    pub max_excursions: usize,
    /// Simulated-time budget; runs reaching it are censored.
    pub time_cap: f64,
    /// Stop at the first hit instead of recording every excursion.
    pub stop_on_hit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Hit,
    /// `max_excursions` windows scanned without success.
    Exhausted,
    /// The time budget ran out first.
    Censored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// `S_0`, absent if the inner ball was never reached.
    pub first_return: Option<f64>,
    /// `T_1, T_2, ...`
    pub exits: Vec<f64>,
    /// `S_1, S_2, ...`
    pub returns: Vec<f64>,
    /// Hit indicator of every fully scanned window.
    pub hits: Vec<bool>,
    /// Time of the first grid hit in any window.
    pub first_hit_time: Option<f64>,
    pub terminal: Terminal,
}

impl ExcursionRecord {
    /// Number of completed excursions (returns after an exit).
    pub fn completed(&self) -> usize {
        self.returns.len()
    }

    /// 1-based index of the first successful excursion.
    pub fn first_hit(&self) -> Option<usize> {
        self.hits.iter().position(|&h| h).map(|k| k + 1)
    }

    /// Whether the recorded times interlace `S_{k-1} <= T_k <= S_k`.
    pub fn interlaces(&self) -> bool {
        let Some(mut s) = self.first_return else {
            return self.exits.is_empty() && self.returns.is_empty();
        };
        for (k, &t) in self.exits.iter().enumerate() {
            if t < s {
                return false;
            }
            match self.returns.get(k) {
                Some(&r) if r >= t => s = r,
                Some(_) => return false,
                None => return k + 1 == self.exits.len(),
            }
        }
        self.returns.len() <= self.exits.len()
    }
}

/// Runs the excursion/restart scheme on `sys` until a hit (when requested),
/// `max_excursions` windows, or the time budget.
pub fn run_restarts<S: ExcursionSystem>(
    sys: &mut S,
    p: &RestartParams,
    rng: &mut RngStream,
) -> Result<ExcursionRecord> {
    let mut rec = ExcursionRecord {
        inner_radius: p.inner_radius,
        outer_radius: p.outer_radius,
        first_return: None,
        exits: Vec::new(),
        returns: Vec::new(),
        hits: Vec::new(),
        first_hit_time: None,
        terminal: Terminal::Censored,
    };
    while sys.norm() > p.inner_radius {
        if sys.time() >= p.time_cap {
            return Ok(rec);
        }
        sys.advance(rng)?;
    }
    let mut s = sys.time();
    rec.first_return = Some(s);
    while rec.hits.len() < p.max_excursions {
        let mut hit = false;
        loop {
            if sys.norm() >= p.outer_radius {
                rec.exits.push(sys.time());
                break;
            }
            let offset = sys.time() - s;
            if !hit && offset >= p.window[0] - 1e-9 && offset <= p.window[1] + 1e-9 && sys.in_target() {
                hit = true;
                rec.first_hit_time.get_or_insert(sys.time());
                if p.stop_on_hit {
                    rec.hits.push(true);
                    rec.terminal = Terminal::Hit;
                    return Ok(rec);
                }
            }
            if sys.time() >= p.time_cap {
                if offset > p.window[1] {
                    rec.hits.push(hit);
                }
                return Ok(rec);
            }
            sys.advance(rng)?;
        }
        rec.hits.push(hit);
        if hit && p.stop_on_hit {
            rec.terminal = Terminal::Hit;
            return Ok(rec);
        }
        if rec.hits.len() == p.max_excursions {
            break;
        }
        while sys.norm() > p.inner_radius {
            if sys.time() >= p.time_cap {
                return Ok(rec);
            }
            sys.advance(rng)?;
        }
        s = sys.time();
        rec.returns.push(s);
    }
    rec.terminal = if rec.hits.iter().any(|&h| h) {
        Terminal::Hit
    } else {
        Terminal::Exhausted
    };
    Ok(rec)
}

/// The stochastic heat equation as an [`ExcursionSystem`]: sup-norm over the
/// grid, target scanned over the nodes of `J`.
pub struct SpdeExcursions {
    sys: SpdeSystem<f64>,
    target: Option<TargetSet<f64>>,
    js: std::ops::RangeInclusive<usize>,
}

impl SpdeExcursions {
    pub fn new(sys: SpdeSystem<f64>, target: Option<TargetSet<f64>>, j: [f64; 2]) -> Self {
        let js = super::config::Window::new([0.0, 0.0], j).nodes(sys.intervals());
        Self { sys, target, js }
    }
}

impl ExcursionSystem for SpdeExcursions {
    fn time(&self) -> f64 {
        self.sys.time()
    }

    fn norm(&self) -> f64 {
        self.sys.sup_norm()
    }

    fn in_target(&self) -> bool {
        match &self.target {
            Some(a) => scan_field(self.sys.field(), self.sys.dim(), self.js.clone(), a).1.is_some(),
            None => false,
        }
    }

    fn advance(&mut self, rng: &mut RngStream) -> Result<()> {
        self.sys.step(rng)
    }
}

/// Three-state chain with norms `0, 1, 2`, used as an exactly solvable stand-in
/// for the equation. With `N` in `(0, 1)` and `K` in `(1, 2)`, returns are
/// visits to state 0, exits are visits to state 2, and the target is state 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeStateChain {
    /// Row-stochastic transition matrix.
    pub p: [[f64; 3]; 3],
    /// Time advanced per transition.
    pub h: f64,
    pub state: usize,
    pub steps: usize,
}

impl ThreeStateChain {
    pub fn new(p: [[f64; 3]; 3], h: f64) -> Result<Self> {
        for row in &p {
            if row.iter().any(|&v| v < 0.0) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::Domain("transition rows must be probability vectors".into()));
            }
        }
        if !(h > 0.0) {
            return Err(Error::Domain("time step must be positive".into()));
        }
        Ok(Self {
            p,
            h,
            state: 0,
            steps: 0,
        })
    }

    /// Exact probability that an excursion started in state 0 visits state 1
    /// at a time in `window` before visiting state 2.
    pub fn excursion_hit_probability(&self, window: [f64; 2]) -> f64 {
        // Mass still alive (not yet hit or exited), indexed by state 0 and 1.
        let mut alive = [1.0, 0.0];
        let mut hit = 0.0;
        let last = (window[1] / self.h + 1e-9).floor() as usize;
        for m in 1..=last {
            let next = [
                alive[0] * self.p[0][0] + alive[1] * self.p[1][0],
                alive[0] * self.p[0][1] + alive[1] * self.p[1][1],
            ];
            alive = next;
            let t = m as f64 * self.h;
            if t >= window[0] - 1e-9 {
                hit += alive[1];
                alive[1] = 0.0;
            }
        }
        hit
    }
}

impl ExcursionSystem for ThreeStateChain {
    fn time(&self) -> f64 {
        self.steps as f64 * self.h
    }

    fn norm(&self) -> f64 {
        self.state as f64
    }

    fn in_target(&self) -> bool {
        self.state == 1
    }

    fn advance(&mut self, rng: &mut RngStream) -> Result<()> {
        let u: f64 = rng.random();
        let row = &self.p[self.state];
        self.state = if u < row[0] {
            0
        } else if u < row[0] + row[1] {
            1
        } else {
            2
        };
        self.steps += 1;
        Ok(())
    }
}

/// How restart runs are started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartLaw {
    /// From the configured `u0`.
    Initial,
    /// From the stationary law of the driftless modes.
    Stationary,
}

fn spde_run(
    cfg: &ExperimentConfig,
    target: Option<&TargetSet<f64>>,
    basis: &Arc<SineBasis<f64>>,
    init: &ModeState<f64>,
    start: StartLaw,
    params: &RestartParams,
    streams: &Streams,
    replica: usize,
) -> Result<ExcursionRecord> {
    let mut rng = streams.stream(replica as u64, "restart");
    let state = match start {
        StartLaw::Initial => init.clone(),
        StartLaw::Stationary => sample_stationary(cfg.d, cfg.k_max, &mut rng),
    };
    let sys = SpdeSystem::new(state, cfg.potential()?, basis.clone(), cfg.dt, true)?;
    let mut ex = SpdeExcursions::new(sys, target.cloned(), cfg.window.x);
    run_restarts(&mut ex, params, &mut rng)
}

fn restart_params(cfg: &ExperimentConfig, stop_on_hit: bool, max_excursions: usize, time_cap: f64) -> Result<RestartParams> {
    Ok(RestartParams {
        inner_radius: cfg.inner_radius,
        outer_radius: cfg.exit_radius()?,
        window: cfg.window.t,
        max_excursions,
        time_cap,
        stop_on_hit,
    })
}

/// Crossing times of one path up to `cfg.horizon` (no target).
pub fn excursions(cfg: &ExperimentConfig, streams: &Streams, replica: usize) -> Result<ExcursionRecord> {
    cfg.validate()?;
    let basis = Arc::new(SineBasis::new(cfg.k_max, cfg.n_x)?);
    let init = ModeState::from_initial(&cfg.initial()?, cfg.k_max)?;
    let params = restart_params(cfg, false, usize::MAX, cfg.horizon)?;
    spde_run(cfg, None, &basis, &init, StartLaw::Initial, &params, streams, replica)
}

/// [`excursions`] for replicas `0..cfg.n_trials`.
pub fn excursion_batch(cfg: &ExperimentConfig, streams: &Streams) -> Result<Vec<ExcursionRecord>> {
    cfg.validate()?;
    let basis = Arc::new(SineBasis::new(cfg.k_max, cfg.n_x)?);
    let init = ModeState::from_initial(&cfg.initial()?, cfg.k_max)?;
    let params = restart_params(cfg, false, usize::MAX, cfg.horizon)?;
    (0..cfg.n_trials)
        .into_par_iter()
        .map(|r| spde_run(cfg, None, &basis, &init, StartLaw::Initial, &params, streams, r))
        .collect()
}

/// Probability of no hit within the first `n` excursions, `n = 0..=max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoHitCurve {
    pub q: Vec<f64>,
    /// Runs whose status after `n` excursions is known.
    pub at_risk: Vec<usize>,
}

impl NoHitCurve {
    pub fn from_records(records: &[ExcursionRecord], max: usize) -> Self {
        let mut q = Vec::with_capacity(max + 1);
        let mut at_risk = Vec::with_capacity(max + 1);
        for n in 0..=max {
            let mut known = 0usize;
            let mut none = 0usize;
            for r in records {
                match r.first_hit() {
                    Some(k) => {
                        known += 1;
                        if k > n {
                            none += 1;
                        }
                    }
                    None if r.hits.len() >= n => {
                        known += 1;
                        none += 1;
                    }
                    None => {}
                }
            }
            at_risk.push(known);
            q.push(if known > 0 { none as f64 / known as f64 } else { f64::NAN });
        }
        Self { q, at_risk }
    }

    /// Nonincreasing, and `ln q` convex within `z` delta-method standard
    /// errors, over the indices with at least `min_count` surviving runs.
    pub fn shape(&self, z: f64, min_count: usize) -> CurveShape {
        let ok = |n: usize| {
            self.q[n].is_finite() && (self.q[n] * self.at_risk[n] as f64) >= min_count as f64
        };
        let var = |n: usize| (1.0 - self.q[n]) / (self.q[n] * self.at_risk[n] as f64);
        let mut decreasing = true;
        let mut convex = true;
        let mut checked = 0;
        for n in 1..self.q.len() {
            if ok(n) && ok(n - 1) && self.q[n] > self.q[n - 1] {
                decreasing = false;
            }
        }
        for n in 1..self.q.len().saturating_sub(1) {
            if !(ok(n - 1) && ok(n) && ok(n + 1)) {
                continue;
            }
            checked += 1;
            let second = self.q[n + 1].ln() - 2.0 * self.q[n].ln() + self.q[n - 1].ln();
            let se = (var(n - 1) + 4.0 * var(n) + var(n + 1)).sqrt();
            if second < -z * se {
                convex = false;
            }
        }
        CurveShape {
            decreasing,
            log_convex: convex,
            second_differences_checked: checked,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveShape {
    pub decreasing: bool,
    pub log_convex: bool,
    pub second_differences_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub runs: usize,
    pub hits: usize,
    pub censored: usize,
    pub hit_fraction: f64,
    pub interval: [f64; 2],
    pub outer_radius: f64,
    pub curve: NoHitCurve,
    pub shape: CurveShape,
    pub records: Vec<ExcursionRecord>,
}

impl RestartSummary {
    pub fn from_records(records: Vec<ExcursionRecord>, max: usize, outer_radius: f64) -> Self {
        let runs = records.len();
        let hits = records.iter().filter(|r| r.terminal == Terminal::Hit).count();
        let censored = records.iter().filter(|r| r.terminal == Terminal::Censored).count();
        let (lo, hi) = wilson_interval(hits, runs, Z_95);
        let curve = NoHitCurve::from_records(&records, max);
        let shape = curve.shape(3.0, 1);
        Self {
            runs,
            hits,
            censored,
            hit_fraction: hits as f64 / runs.max(1) as f64,
            interval: [lo, hi],
            outer_radius,
            curve,
            shape,
            records,
        }
    }
}

/// Restart scheme for `cfg.n_trials` independent runs, each stopping at its
/// first hit of `a` or after `cfg.max_excursions` windows.
pub fn hit_until_success(
    cfg: &ExperimentConfig,
    a: &TargetSet<f64>,
    start: StartLaw,
    streams: &Streams,
) -> Result<RestartSummary> {
    restart_batch(cfg, a, start, true, streams)
}

/// As [`hit_until_success`], optionally recording every excursion's indicator
/// instead of stopping at the first hit.
pub fn restart_batch(
    cfg: &ExperimentConfig,
    a: &TargetSet<f64>,
    start: StartLaw,
    stop_on_hit: bool,
    streams: &Streams,
) -> Result<RestartSummary> {
    cfg.validate()?;
    a.validate()?;
    if a.dim() != cfg.d {
        return Err(Error::Configuration("target: dimension does not match d".into()));
    }
    if start == StartLaw::Stationary && !cfg.potential()?.is_zero() {
        return Err(Error::Configuration(
            "start: the stationary start is only available for a zero potential".into(),
        ));
    }
    let basis = Arc::new(SineBasis::new(cfg.k_max, cfg.n_x)?);
    let init = ModeState::from_initial(&cfg.initial()?, cfg.k_max)?;
    let params = restart_params(cfg, stop_on_hit, cfg.max_excursions, cfg.time_cap)?;
    let records: Vec<ExcursionRecord> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|r| spde_run(cfg, Some(a), &basis, &init, start, &params, streams, r))
        .collect::<Result<_>>()?;
    Ok(RestartSummary::from_records(records, cfg.max_excursions, params.outer_radius))
}

/// Runs the chain through the same scheme `runs` times.
pub fn chain_restarts(
    chain: &ThreeStateChain,
    params: &RestartParams,
    runs: usize,
    streams: &Streams,
) -> Result<Vec<ExcursionRecord>> {
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = streams.stream(r as u64, "chain");
            let mut c = chain.clone();
            run_restarts(&mut c, params, &mut rng)
        })
        .collect()
}

/// Chi-square homogeneity of the per-excursion hit indicators for
/// excursions `1..=k`, over runs that scanned at least `k` windows.
pub fn excursion_homogeneity(records: &[ExcursionRecord], k: usize) -> ChiSquareResult {
    let mut table = vec![[0u64; 2]; k];
    for r in records.iter().filter(|r| r.hits.len() >= k) {
        for (row, &h) in table.iter_mut().zip(&r.hits) {
            if h {
                row[0] += 1;
            } else {
                row[1] += 1;
            }
        }
    }
    chi_square_homogeneity(&table)
}
