//! Rejection sampling of the Gibbs law `mu(dphi) ∝ exp(2 int U(phi)) mu0(dphi)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bridge::{BridgeMode, BridgeSample, BridgeSampler, Synthesis};
use crate::dynamics::Potential;
use crate::error::{Error, Result};
use crate::quadrature::trapezoid_weights;
use crate::rng::Streams;
use crate::scalar::Real;
use crate::stats::MeanEstimate;

/// Proposals per RNG stream.
pub const BATCH: usize = 256;
/// Batches generated per parallel round; fixed so results do not depend on
/// the number of workers.
const ROUND: usize = 16;
/// Proposal count after which a low acceptance rate is reported.
pub const EFFICIENCY_PROPOSALS: usize = 1_000_000;
pub const MIN_ACCEPTANCE: f64 = 1e-4;

/// Accepts with probability `min(1, exp(log_tilt - log_bound))`.
pub fn tilt_accept<R: Rng + ?Sized>(log_tilt: f64, log_bound: f64, rng: &mut R) -> bool {
    let a = log_tilt - log_bound;
    if a >= 0.0 {
        return true;
    }
    f64::open01(rng).ln() < a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub d: usize,
    pub mode: BridgeMode,
    pub synthesis: Synthesis,
    pub n_x: usize,
    pub n_target: usize,
    /// Keep the full grid values of accepted samples.
    pub keep_fields: bool,
}

/// One proposal: its sup-norm, `int U`, and whether it was accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub sup_norm: f64,
    pub integral_u: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSampleBatch<T> {
    pub potential: String,
    pub proposals: Vec<ProposalRecord>,
    pub accepted: usize,
    pub acceptance_rate: f64,
    /// Full fields of accepted samples when requested.
    pub samples: Vec<BridgeSample<T>>,
}

impl<T> GibbsSampleBatch<T> {
    pub fn accepted_sups(&self) -> Vec<f64> {
        self.proposals
            .iter()
            .filter(|p| p.accepted)
            .map(|p| p.sup_norm)
            .collect()
    }

    pub fn accepted_integral(&self) -> MeanEstimate {
        let v: Vec<f64> = self
            .proposals
            .iter()
            .filter(|p| p.accepted)
            .map(|p| p.integral_u)
            .collect();
        MeanEstimate::from_samples(&v)
    }

    pub fn proposal_integral(&self) -> MeanEstimate {
        let v: Vec<f64> = self.proposals.iter().map(|p| p.integral_u).collect();
        MeanEstimate::from_samples(&v)
    }

    /// Standard error of the acceptance rate.
    pub fn acceptance_std_error(&self) -> f64 {
        let n = self.proposals.len() as f64;
        let p = self.acceptance_rate;
        (p * (1.0 - p) / n).sqrt()
    }
}

/// `int_0^1 U(phi(x)) dx` by the composite trapezoid rule on the sample grid.
pub fn integral_u<T: Real>(pot: &Potential<T>, phi: &[T], d: usize, weights: &[T]) -> T {
    phi.chunks_exact(d)
        .zip(weights)
        .map(|(z, &w)| w * pot.value(z))
        .sum()
}

/// Draws `n_target` exact samples (up to the quadrature of `int U`) from the
/// Gibbs law by rejection from the base law.
pub fn gibbs_sample<T: Real>(
    pot: &Potential<T>,
    cfg: &GibbsConfig,
    streams: &Streams,
) -> Result<GibbsSampleBatch<T>> {
    let bounds = pot.bounds()?;
    if pot.dim() != cfg.d {
        return Err(Error::Configuration("potential and sample dimensions differ".into()));
    }
    let sampler = BridgeSampler::<T>::new(cfg.mode, cfg.synthesis, cfg.d, cfg.n_x)?;
    let weights = trapezoid_weights(cfg.n_x, T::one() / T::from_count(cfg.n_x));
    let log_bound = 2.0 * bounds.sup_u.to_f64_lossy();
    let zero = pot.is_zero();

    let run_batch = |b: usize| -> Vec<(ProposalRecord, Option<BridgeSample<T>>)> {
        let mut rng = streams.stream(b as u64, "gibbs");
        (0..BATCH)
            .map(|_| {
                let s = sampler.sample(&mut rng);
                let iu = if zero {
                    0.0
                } else {
                    integral_u(pot, s.values.values(), cfg.d, &weights).to_f64_lossy()
                };
                let accepted = zero || tilt_accept(2.0 * iu, log_bound, &mut rng);
                let rec = ProposalRecord {
                    sup_norm: s.sup_norm.to_f64_lossy(),
                    integral_u: iu,
                    accepted,
                };
                (rec, (accepted && cfg.keep_fields).then_some(s))
            })
            .collect()
    };

    let mut proposals = Vec::new();
    let mut samples = Vec::new();
    let mut accepted = 0usize;
    let mut next = 0usize;
    'outer: while accepted < cfg.n_target {
        let round: Vec<Vec<_>> = (next..next + ROUND).into_par_iter().map(run_batch).collect();
        next += ROUND;
        for (rec, s) in round.into_iter().flatten() {
            proposals.push(rec);
            if rec.accepted {
                accepted += 1;
                samples.extend(s);
                if accepted == cfg.n_target {
                    break 'outer;
                }
            }
        }
        if proposals.len() >= EFFICIENCY_PROPOSALS
            && (accepted as f64) < MIN_ACCEPTANCE * proposals.len() as f64
        {
            return Err(Error::Efficiency(format!(
                "acceptance rate {:e} after {} proposals; reduce the potential's oscillation (sup U - U)",
                accepted as f64 / proposals.len() as f64,
                proposals.len()
            )));
        }
    }
    let acceptance_rate = if proposals.is_empty() {
        1.0
    } else {
        accepted as f64 / proposals.len() as f64
    };
    Ok(GibbsSampleBatch {
        potential: pot.tag().to_string(),
        proposals,
        accepted,
        acceptance_rate,
        samples,
    })
}

/// Monte Carlo estimate of `mu(B(0, R))` and `mu(B(0, R)^c)` for the sup-norm ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallMass {
    pub radius: f64,
    pub inside: MeanEstimate,
    pub outside: MeanEstimate,
    pub acceptance_rate: f64,
}

pub fn ball_mass<T: Real>(
    pot: &Potential<T>,
    radius: f64,
    cfg: &GibbsConfig,
    streams: &Streams,
) -> Result<BallMass> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let cfg = GibbsConfig {
        keep_fields: false,
        ..*cfg
    };
    let batch = gibbs_sample(pot, &cfg, streams)?;
    let inside: Vec<f64> = batch
        .accepted_sups()
        .iter()
        .map(|&s| if s < radius { 1.0 } else { 0.0 })
        .collect();
    let outside: Vec<f64> = inside.iter().map(|v| 1.0 - v).collect();
    Ok(BallMass {
        radius,
        inside: MeanEstimate::from_samples(&inside),
        outside: MeanEstimate::from_samples(&outside),
        acceptance_rate: batch.acceptance_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn tilting_a_three_state_measure_is_exact() {
        // Base law (0.5, 0.3, 0.2) tilted by exp(2 u) with u = (0, 0.5, 1).
        let base = [0.5f64, 0.3, 0.2];
        let u = [0.0f64, 0.5, 1.0];
        let z: f64 = base.iter().zip(&u).map(|(p, v)| p * (2.0 * v).exp()).sum();
        let exact: Vec<f64> = base.iter().zip(&u).map(|(p, v)| p * (2.0 * v).exp() / z).collect();
        let mut rng = RngStream::new(9, 0, "toy").unwrap();
        let mut counts = [0usize; 3];
        let mut n = 0;
        while n < 50_000 {
            let r: f64 = rng.random();
            let s = if r < 0.5 { 0 } else if r < 0.8 { 1 } else { 2 };
            if tilt_accept(2.0 * u[s], 2.0, &mut rng) {
                counts[s] += 1;
                n += 1;
            }
        }
        for s in 0..3 {
            let p = counts[s] as f64 / n as f64;
            let se = (exact[s] * (1.0 - exact[s]) / n as f64).sqrt();
            assert!((p - exact[s]).abs() < 3.0 * se, "state {s}: {p} vs {}", exact[s]);
        }
    }

    #[test]
    fn zero_potential_accepts_everything() {
        let cfg = GibbsConfig {
            d: 1,
            mode: BridgeMode::Standard,
            synthesis: Synthesis::Nodal,
            n_x: 32,
            n_target: 300,
            keep_fields: true,
        };
        let b = gibbs_sample(&Potential::<f64>::zero(1), &cfg, &Streams::new(1)).unwrap();
        assert_eq!(b.acceptance_rate, 1.0);
        assert_eq!(b.accepted, 300);
        assert_eq!(b.samples.len(), 300);
    }

    #[test]
    fn uncertified_potential_is_rejected() {
        let cfg = GibbsConfig {
            d: 1,
            mode: BridgeMode::Standard,
            synthesis: Synthesis::Nodal,
            n_x: 32,
            n_target: 10,
            keep_fields: false,
        };
        let pot = Potential::<f64>::custom(1, |z: &[f64]| z[0], |_: &[f64], g: &mut [f64]| g[0] = 1.0);
        assert!(matches!(
            gibbs_sample(&pot, &cfg, &Streams::new(1)),
            Err(Error::Configuration(_))
        ));
    }
}
