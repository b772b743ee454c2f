//! Long-time convergence checks of the simulated field toward the invariant law.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bridge::{BridgeMode, Synthesis};
use super::gibbs::{gibbs_sample, GibbsConfig};
use crate::dynamics::{ModeState, Potential, SpdeSystem};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, SineBasis};
use crate::rng::Streams;
use crate::scalar::Real;
use crate::stats::{ks_two_sample, KsResult};

/// Smallest comparison time accepted (several relaxation times `1 / pi^2`).
pub const MIN_TIME: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicConfig {
    pub t1: f64,
    pub t2: f64,
    pub n: usize,
    pub k_max: usize,
    pub n_x: usize,
    /// Step of the exponential-Euler scheme; unused for a zero potential,
    /// whose transition is sampled exactly.
    pub dt: f64,
    /// Also compare the `t2` marginal with Gibbs draws on the same modes and grid.
    pub compare_gibbs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    /// `t1` versus `t2` sup-norm marginals.
    pub ks_times: KsResult,
    /// `t2` marginal versus the Gibbs law.
    pub ks_gibbs: Option<KsResult>,
    pub mean_sup_t1: f64,
    pub mean_sup_t2: f64,
    pub gibbs_acceptance_rate: Option<f64>,
}

/// Grid sup-norms of `n` independent copies of `u(t, .)` started from `u0`.
pub fn sup_norms_at<T: Real>(
    pot: &Potential<T>,
    u0: &GridFunction<T>,
    t: f64,
    cfg: &ErgodicConfig,
    streams: &Streams,
    purpose: &str,
) -> Result<Vec<f64>> {
    let basis = Arc::new(SineBasis::<T>::new(cfg.k_max, cfg.n_x)?);
    let init = ModeState::from_initial(u0, cfg.k_max)?;
    let t = T::lit(t);
    (0..cfg.n)
        .into_par_iter()
        .map(|r| {
            let mut rng = streams.stream(r as u64, purpose);
            let mut sys = SpdeSystem::new(init.clone(), pot.clone(), basis.clone(), T::lit(cfg.dt), true)?;
            if pot.is_zero() {
                sys.jump_to(t, &mut rng)?;
            } else {
                while sys.time() < t - T::lit(0.5 * cfg.dt) {
                    sys.step(&mut rng)?;
                }
            }
            Ok(sys.sup_norm().to_f64_lossy())
        })
        .collect()
}

pub fn ergodic_check<T: Real>(
    pot: &Potential<T>,
    u0: &GridFunction<T>,
    cfg: &ErgodicConfig,
    streams: &Streams,
) -> Result<ErgodicReport> {
    if cfg.t1 < MIN_TIME || cfg.t2 < MIN_TIME {
        return Err(Error::Domain(format!(
            "comparison times must be at least {MIN_TIME}, got {} and {}",
            cfg.t1, cfg.t2
        )));
    }
    if cfg.n < 2 {
        return Err(Error::Domain("need at least two paths".into()));
    }
    let a = sup_norms_at(pot, u0, cfg.t1, cfg, streams, "ergodic-t1")?;
    let b = sup_norms_at(pot, u0, cfg.t2, cfg, streams, "ergodic-t2")?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ks_gibbs, rate) = if cfg.compare_gibbs {
        let gcfg = GibbsConfig {
            d: u0.dim(),
            mode: BridgeMode::Stationary,
            synthesis: Synthesis::Spectral { k_max: cfg.k_max },
            n_x: cfg.n_x,
            n_target: cfg.n,
            keep_fields: false,
        };
        let g = gibbs_sample(pot, &gcfg, &streams.child(1))?;
        (Some(ks_two_sample(&b, &g.accepted_sups())), Some(g.acceptance_rate))
    } else {
        (None, None)
    };
    Ok(ErgodicReport {
        ks_times: ks_two_sample(&a, &b),
        ks_gibbs,
        mean_sup_t1: mean(&a),
        mean_sup_t2: mean(&b),
        gibbs_acceptance_rate: rate,
    })
}
