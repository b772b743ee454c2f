//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured numbers. Seeds are fixed per criterion.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use heatsheet::capacity::cap;
use heatsheet::dynamics::{ModeState, Potential, SpdeSystem};
use heatsheet::grid::{GridFunction, SineBasis};
use heatsheet::hitting::{
    chain_restarts, hit_until_success, hitting_probability, importance_hitting, ExperimentConfig, PotentialConfig,
    RestartParams, StartLaw, ThreeStateChain, Window,
};
use heatsheet::invariant::{
    ball_mass, bridge_sup_cdf, ergodic_check, gibbs_sample, BridgeMode, ErgodicConfig, GibbsConfig, Synthesis,
};
use heatsheet::rng::Streams;
use heatsheet::spectral::{sigma2, stationary_variance, SpectralTruncation};
use heatsheet::stats::variance_estimate;
use heatsheet::target::TargetSet;
use heatsheet::verify::{run_verify, VerifyConfig};

struct Outcome {
    passed: bool,
    lines: Vec<String>,
    /// Every reported number, for the determinism rerun.
    numbers: Vec<f64>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            lines: Vec::new(),
            numbers: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String, numbers: &[f64]) {
        self.passed &= ok;
        self.lines.push(format!("  [{}] {line}", if ok { "ok" } else { "FAIL" }));
        self.numbers.extend_from_slice(numbers);
    }

    fn report(&self, id: usize, title: &str, started: Instant) {
        println!(
            "criterion {id} ({title}): {} in {:.1?}",
            if self.passed { "PASS" } else { "FAIL" },
            started.elapsed()
        );
        for l in &self.lines {
            println!("{l}");
        }
        assert!(self.passed, "criterion {id} failed");
    }
}

fn closed_form_suite() -> Outcome {
    let mut out = Outcome::new();
    let report = run_verify(&VerifyConfig {
        seed: 1,
        ..VerifyConfig::default()
    })
    .unwrap();
    for c in &report.checks {
        out.check(
            c.passed,
            format!("{}: {:.3e} (threshold {:.3e})", c.name, c.value, c.threshold),
            &[c.value],
        );
    }
    out
}

/// Field value at `x = 1/2` of `n` exact driftless samples at time `t`.
fn midpoint_values(t: f64, n: usize, streams: &Streams) -> Vec<f64> {
    let (k_max, n_x) = (128, 128);
    let basis = Arc::new(SineBasis::new(k_max, n_x).unwrap());
    (0..n)
        .into_par_iter()
        .map(|r| {
            let mut rng = streams.stream(r as u64, "exact");
            let mut sys =
                SpdeSystem::new(ModeState::zeros(1, k_max), Potential::zero(1), basis.clone(), 1e-3, true).unwrap();
            sys.jump_to(t, &mut rng).unwrap();
            sys.field()[n_x / 2]
        })
        .collect()
}

fn exact_sampler() -> Outcome {
    let mut out = Outcome::new();
    let streams = Streams::new(2);
    let trunc = SpectralTruncation::<f64>::default();
    let v1 = variance_estimate(&midpoint_values(1.0, 10_000, &streams));
    let s1 = sigma2(1.0, 0.5, &trunc);
    out.check(
        v1.within(s1, 3.0),
        format!("Var u(1, 0.5) = {:.5} +- {:.5} vs sigma2 = {s1:.5} (z = {:.2})", v1.mean, v1.std_error, v1.z_score(s1)),
        &[v1.mean, v1.std_error],
    );
    let v5 = variance_estimate(&midpoint_values(5.0, 10_000, &streams.child(1)));
    let s = stationary_variance(0.5);
    out.check(
        v5.within(s, 3.0),
        format!("Var u(5, 0.5) = {:.5} +- {:.5} vs {s} (z = {:.2})", v5.mean, v5.std_error, v5.z_score(s)),
        &[v5.mean, v5.std_error],
    );
    out
}

fn girsanov() -> Outcome {
    let mut out = Outcome::new();
    let cfg = ExperimentConfig {
        d: 1,
        potential: PotentialConfig::Cosine { amplitudes: vec![1.0] },
        k_max: 32,
        n_x: 64,
        dt: 1e-3,
        n_trials: 10_000,
        ..Default::default()
    };
    let window = Window::new([0.5, 1.0], [0.2, 0.8]);
    let a = TargetSet::ball(vec![1.0], 0.05);
    let is = importance_hitting(&cfg, &a, &window, 1.0, &Streams::new(3)).unwrap();
    let w = is.mean_weight;
    out.check(
        w.within(1.0, 3.0),
        format!(
            "mean weight {:.5} +- {:.5} (z = {:.2}, effective size {:.0})",
            w.mean,
            w.std_error,
            w.z_score(1.0),
            is.effective_size
        ),
        &[w.mean, w.std_error],
    );
    let direct = hitting_probability(&cfg, &a, &window, &Streams::new(3).child(1)).unwrap();
    let se_direct = (direct.p_hat * (1.0 - direct.p_hat) / direct.n_trials as f64).sqrt();
    let combined = (se_direct.powi(2) + is.hit.std_error.powi(2)).sqrt();
    let diff = (direct.p_hat - is.hit.mean).abs();
    out.check(
        diff <= 3.0 * combined,
        format!(
            "hit probability: direct {:.4} +- {se_direct:.4}, reweighted {:.4} +- {:.4}, |diff| = {diff:.4} (3 SE = {:.4})",
            direct.p_hat,
            is.hit.mean,
            is.hit.std_error,
            3.0 * combined
        ),
        &[direct.p_hat, is.hit.mean, is.hit.std_error],
    );
    out
}

fn capacity_oracle() -> Outcome {
    let mut out = Outcome::new();
    for r in [0.5f64, 1.0, 2.0] {
        let c = cap(&TargetSet::ball(vec![0.0; 3], r), 1.0, 2000).unwrap();
        let rel = (c.value - r).abs() / r;
        let rel_gap = c.gap / c.energy.unwrap();
        out.check(
            rel <= 0.05 && rel_gap <= 1e-6,
            format!(
                "Cap_1 B(0, {r}): {:.4} (rel err {:.2}%, gap / energy {rel_gap:.2e}, {} iterations)",
                c.value,
                100.0 * rel,
                c.iterations
            ),
            &[c.value, c.gap],
        );
    }
    for beta in [-0.5, -3.0, -5.0] {
        let c = cap(&TargetSet::cube(3, 0.25), beta, 2000).unwrap();
        out.check(c.value == 1.0, format!("Cap_{beta} of a cube: {}", c.value), &[c.value]);
    }
    let a = TargetSet::Box {
        lo: vec![0.0, 0.0, 0.0],
        hi: vec![1.0, 0.5, 0.25],
    };
    for (beta, c) in [(1.0f64, 2.0f64), (0.5, 3.0)] {
        let base = cap(&a, beta, 2000).unwrap().value;
        let scaled = cap(&a.scaled(c), beta, 2000).unwrap().value;
        let expect = f64::powf(c, beta);
        let rel = (scaled / base - expect).abs() / expect;
        out.check(
            rel <= 0.05,
            format!("scaling Cap_{beta}({c} A) / Cap_{beta}(A) = {:.4} vs {expect:.4}", scaled / base),
            &[base, scaled],
        );
    }
    out
}

fn restart_scale(dims: &[usize]) -> Outcome {
    let mut out = Outcome::new();
    for &d in dims {
        let cfg = ExperimentConfig {
            d,
            n_trials: 500,
            max_excursions: 20,
            inner_radius: 1.0,
            ..Default::default()
        };
        let a = TargetSet::ball(vec![0.3; d], 0.05 * (d as f64).sqrt());
        let s = hit_until_success(&cfg, &a, StartLaw::Initial, &Streams::new(5).child(d as u64)).unwrap();
        out.check(
            s.hit_fraction >= 0.99,
            format!(
                "d = {d}, K = {}: hit fraction {:.3} (Wilson [{:.3}, {:.3}], {} censored)",
                s.outer_radius, s.hit_fraction, s.interval[0], s.interval[1], s.censored
            ),
            &[s.hit_fraction, s.interval[0], s.interval[1]],
        );
        let q: Vec<String> = s.curve.q.iter().take(6).map(|v| format!("{v:.4}")).collect();
        out.check(
            s.shape.decreasing && s.shape.log_convex,
            format!(
                "d = {d}: no-hit curve [{}], decreasing {}, log-convex {} ({} second differences checked)",
                q.join(", "),
                s.shape.decreasing,
                s.shape.log_convex,
                s.shape.second_differences_checked
            ),
            &s.curve.q,
        );
    }
    out
}

fn toy_chain() -> Outcome {
    let mut out = Outcome::new();
    let chain = ThreeStateChain::new([[0.6, 0.1, 0.3], [0.3, 0.4, 0.3], [0.5, 0.05, 0.45]], 0.5).unwrap();
    let params = RestartParams {
        inner_radius: 0.5,
        outer_radius: 1.5,
        window: [1.0, 2.0],
        max_excursions: 5,
        time_cap: 1e9,
        stop_on_hit: true,
    };
    let c = chain.excursion_hit_probability(params.window);
    let runs = 10_000;
    let recs = chain_restarts(&chain, &params, runs, &Streams::new(6)).unwrap();
    for n in 1..=5 {
        let none = recs
            .iter()
            .filter(|r| r.first_hit().is_none_or(|k| k > n))
            .count();
        let p = none as f64 / runs as f64;
        let exact = (1.0 - c).powi(n as i32);
        let se = (exact * (1.0 - exact) / runs as f64).sqrt();
        out.check(
            (p - exact).abs() <= 3.0 * se,
            format!("n = {n}: no-hit {p:.4} vs (1 - c)^n = {exact:.4} (c = {c:.5}, SE {se:.4})"),
            &[p],
        );
    }
    out
}

fn invariant_suite() -> Outcome {
    let mut out = Outcome::new();
    let cfg = GibbsConfig {
        d: 1,
        mode: BridgeMode::Standard,
        synthesis: Synthesis::Nodal,
        n_x: 128,
        n_target: 10_000,
        keep_fields: false,
    };
    let zero = Potential::<f64>::zero(1);
    let batch = gibbs_sample(&zero, &cfg, &Streams::new(7)).unwrap();
    out.check(
        batch.acceptance_rate == 1.0,
        format!("zero potential acceptance rate {}", batch.acceptance_rate),
        &[batch.acceptance_rate],
    );
    let m = ball_mass(&zero, 1.0, &cfg, &Streams::new(7).child(1)).unwrap();
    let f = bridge_sup_cdf(1.0f64).unwrap();
    out.check(
        m.inside.within(f, 3.0),
        format!(
            "mu0(B(0, 1)) = {:.4} +- {:.4} vs F(1) = {f:.4} (z = {:.2})",
            m.inside.mean,
            m.inside.std_error,
            m.inside.z_score(f)
        ),
        &[m.inside.mean, m.inside.std_error],
    );

    let ec = ErgodicConfig {
        t1: 5.0,
        t2: 10.0,
        n: 2000,
        k_max: 128,
        n_x: 128,
        dt: 1e-3,
        compare_gibbs: true,
    };
    let u0 = GridFunction::from_fn(1, 128, |x: f64, o: &mut [f64]| o[0] = 2.0 * (std::f64::consts::PI * x).sin());
    let r = ergodic_check(&zero, &u0, &ec, &Streams::new(7).child(2)).unwrap();
    let g = r.ks_gibbs.unwrap();
    out.check(
        r.ks_times.passes(0.01) && g.passes(0.01),
        format!(
            "zero potential, ||u0|| = 2: KS t=5 vs t=10 D = {:.4} (p = {:.3}), t=10 vs Gibbs D = {:.4} (p = {:.3})",
            r.ks_times.statistic, r.ks_times.p_value, g.statistic, g.p_value
        ),
        &[r.ks_times.statistic, g.statistic],
    );

    let ec = ErgodicConfig {
        t1: 5.0,
        t2: 10.0,
        n: 2000,
        k_max: 64,
        n_x: 128,
        dt: 1e-2,
        compare_gibbs: true,
    };
    let cosine = Potential::cosine(vec![1.0]).unwrap();
    let r = ergodic_check(&cosine, &GridFunction::zeros(1, 128), &ec, &Streams::new(7).child(3)).unwrap();
    let g = r.ks_gibbs.unwrap();
    out.check(
        r.ks_times.passes(0.01) && g.passes(0.01),
        format!(
            "cosine a = 1: KS t=5 vs t=10 D = {:.4} (p = {:.3}), t=10 vs Gibbs D = {:.4} (p = {:.3}, acceptance {:.3})",
            r.ks_times.statistic,
            r.ks_times.p_value,
            g.statistic,
            g.p_value,
            r.gibbs_acceptance_rate.unwrap()
        ),
        &[r.ks_times.statistic, g.statistic],
    );
    out
}

#[test]
fn criterion_1_closed_form_suite() {
    let t = Instant::now();
    closed_form_suite().report(1, "closed-form suite", t);
}

#[test]
fn criterion_2_exact_sampler() {
    let t = Instant::now();
    exact_sampler().report(2, "exact sampler", t);
}

#[test]
fn criterion_3_girsanov() {
    let t = Instant::now();
    girsanov().report(3, "Girsanov martingale and reweighted hitting", t);
}

#[test]
fn criterion_4_capacity() {
    let t = Instant::now();
    capacity_oracle().report(4, "capacity oracle", t);
}

#[test]
fn criterion_5_hit_until_success() {
    let t = Instant::now();
    restart_scale(&[1, 2, 3]).report(5, "hitting with restarts, d = 1, 2, 3", t);
}

#[test]
fn criterion_6_toy_chain() {
    let t = Instant::now();
    toy_chain().report(6, "restart orchestrator on the three-state chain", t);
}

#[test]
fn criterion_7_invariant_measure() {
    let t = Instant::now();
    invariant_suite().report(7, "invariant measure", t);
}

#[test]
fn criterion_8_determinism() {
    let t = Instant::now();
    let mut out = Outcome::new();
    let runs: [(&str, fn() -> Outcome); 5] = [
        ("exact sampler", exact_sampler),
        ("capacity", capacity_oracle),
        ("restarts d = 1", || restart_scale(&[1])),
        ("toy chain", toy_chain),
        ("invariant measure", invariant_suite),
    ];
    for (name, f) in runs {
        let a = f().numbers;
        // The rerun uses a different worker count to catch order-dependent reductions.
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(f).numbers;
        let same = a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
        out.check(same, format!("{name}: {} numbers, bit-identical on rerun: {same}", a.len()), &[]);
    }
    out.report(8, "determinism", t);
}
