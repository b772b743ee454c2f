use std::sync::Arc;

use proptest::prelude::*;

use heatsheet::dynamics::*;
use heatsheet::grid::{eigenvalue, sine_eigenfunction, GridFunction, SineBasis};
use heatsheet::rng::RngStream;
use heatsheet::spectral::{cov_v, SpectralTruncation};
use heatsheet::stats::{chi_square_cdf, covariance_estimate, ks_one_sample, variance_estimate, MeanEstimate};

fn stream(replica: u64, purpose: &str) -> RngStream {
    RngStream::new(11, replica, purpose).unwrap()
}

fn driftless(d: usize, k_max: usize, n_x: usize, dt: f64) -> SpdeSystem<f64> {
    let basis = Arc::new(SineBasis::new(k_max, n_x).unwrap());
    SpdeSystem::new(ModeState::zeros(d, k_max), Potential::zero(d), basis, dt, true).unwrap()
}

#[test]
fn ou_step_has_the_exact_mean_and_variance() {
    let (a0, k, dt) = (0.3, 3, 0.01);
    let mut rng = stream(0, "ou");
    let draws: Vec<f64> = (0..100_000).map(|_| ou_mode_step(a0, k, dt, &mut rng).unwrap()).collect();
    let lambda: f64 = eigenvalue(k);
    let mean = a0 * (-lambda * dt).exp();
    let var = (1.0 - (-2.0 * lambda * dt).exp()) / (2.0 * lambda);
    let m = MeanEstimate::from_samples(&draws);
    assert!(m.within(mean, 4.0), "mean z = {}", m.z_score(mean));
    let v = variance_estimate(&draws);
    assert!(v.within(var, 4.0), "variance z = {}", v.z_score(var));
}

#[test]
fn two_half_steps_compose_to_one_step() {
    for k in [1usize, 5, 40] {
        for dt in [1e-4, 1e-2, 0.3] {
            let full = OuCoefficients::<f64>::new(k, dt);
            let half = OuCoefficients::<f64>::new(k, dt / 2.0);
            assert!((half.decay * half.decay - full.decay).abs() <= 1e-14);
            let var = half.decay * half.decay * half.noise_sd.powi(2) + half.noise_sd.powi(2);
            assert!((var - full.noise_sd.powi(2)).abs() <= 1e-14 * (1.0 + var));
            let gain = half.decay * half.gain + half.gain;
            assert!((gain - full.gain).abs() <= 1e-14);
        }
    }
}

#[test]
fn two_time_covariance_of_the_convolution() {
    // Nodes x = j / 10, so x = 0.6 is node 6 and x = 0.3 is node 3.
    let k_max = 64;
    let trunc = SpectralTruncation::uncertified(k_max).unwrap();
    let mut rng = stream(0, "cov");
    let mut sys = driftless(1, k_max, 10, 0.01);
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for _ in 0..100_000 {
        sys.reset(ModeState::zeros(1, k_max)).unwrap();
        sys.jump_to(0.1, &mut rng).unwrap();
        early.push(sys.field()[6]);
        sys.jump_to(0.2, &mut rng).unwrap();
        late.push(sys.field()[3]);
    }
    let want = cov_v(0.2, 0.3, 0.1, 0.6, &trunc);
    let got = covariance_estimate(&late, &early);
    assert!(got.within(want, 4.0), "cov {} vs {want}, z = {}", got.mean, got.z_score(want));
}

#[test]
fn stepping_preserves_the_stationary_law() {
    let (k_max, n_x) = (32, 16);
    let basis = Arc::new(SineBasis::new(k_max, n_x).unwrap());
    let mut sys = SpdeSystem::new(ModeState::zeros(1, k_max), Potential::zero(1), basis, 0.05, true).unwrap();
    let mut rng = stream(0, "stat");
    let want: f64 = (1..=k_max)
        .map(|k| sine_eigenfunction::<f64>(k, 0.5).powi(2) / (2.0 * eigenvalue::<f64>(k)))
        .sum();
    let mut mid = Vec::new();
    for _ in 0..20_000 {
        sys.reset(sample_stationary(1, k_max, &mut rng)).unwrap();
        for _ in 0..20 {
            sys.step(&mut rng).unwrap();
        }
        mid.push(sys.field()[n_x / 2]);
    }
    let v = variance_estimate(&mid);
    assert!(v.within(want, 4.0), "variance {} vs {want}", v.mean);
    assert!(MeanEstimate::from_samples(&mid).within(0.0, 4.0));
}

fn noiseless_midpoint(dt: f64) -> f64 {
    let u0 = GridFunction::from_fn(1, 64, |x: f64, o: &mut [f64]| o[0] = 8.0 * x * (1.0 - x));
    let mut cfg = IntegratorConfig::new(0.2, dt);
    cfg.noise = false;
    cfg.k_max = 16;
    cfg.n_x = 64;
    let pot = Potential::cosine(vec![3.0]).unwrap();
    let path = integrate(&u0, &pot, &cfg, &mut stream(0, "flow")).unwrap();
    path.value(path.n_times() - 1, 32, 0)
}

#[test]
fn drifted_flow_converges_at_first_order_in_dt() {
    let reference = noiseless_midpoint(1e-5);
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| (noiseless_midpoint(dt) - reference).abs())
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..2.5).contains(&ratio), "refinement ratio {ratio} ({errs:?})");
    }
}

/// Solves `m y = b` for symmetric positive definite `m` by Cholesky.
fn spd_solve(m: &[[f64; 4]; 4], b: &[f64; 4]) -> [f64; 4] {
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = if i == j { (m[i][i] - s).sqrt() } else { (m[i][j] - s) / l[j][j] };
        }
    }
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = [0.0; 4];
    for i in (0..4).rev() {
        x[i] = (y[i] - (i + 1..4).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

#[test]
fn four_point_marginal_is_the_predicted_gaussian() {
    let (k_max, n_x) = (64, 10);
    let trunc = SpectralTruncation::uncertified(k_max).unwrap();
    let nodes = [2usize, 4, 6, 8];
    let xs: Vec<f64> = nodes.iter().map(|&j| j as f64 / n_x as f64).collect();
    let mut cov = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            cov[a][b] = cov_v(1.0, xs[a], 1.0, xs[b], &trunc);
        }
    }
    let mut sys = driftless(1, k_max, n_x, 0.01);
    let mut rng = stream(0, "four");
    let mut d2 = Vec::new();
    for _ in 0..5000 {
        sys.reset(ModeState::zeros(1, k_max)).unwrap();
        sys.jump_to(1.0, &mut rng).unwrap();
        let z = [sys.field()[2], sys.field()[4], sys.field()[6], sys.field()[8]];
        let y = spd_solve(&cov, &z);
        d2.push(z.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>());
    }
    let ks = ks_one_sample(&d2, |v| chi_square_cdf(v, 4));
    assert!(ks.passes(0.01), "KS {:?}", ks);
}

#[test]
fn girsanov_weight_has_unit_mean_on_a_coarse_grid() {
    let u0 = GridFunction::from_fn(1, 32, |x: f64, o: &mut [f64]| o[0] = (std::f64::consts::PI * x).sin());
    let mut cfg = IntegratorConfig::new(0.5, 1e-2);
    cfg.k_max = 8;
    cfg.n_x = 32;
    cfg.record_noise = true;
    let pot = Potential::cosine(vec![1.5]).unwrap();
    let ws: Vec<f64> = (0..4000)
        .map(|r| {
            let path = integrate(&u0, &Potential::zero(1), &cfg, &mut stream(r, "girsanov")).unwrap();
            girsanov_weight(&path, &pot).unwrap()
        })
        .collect();
    let m = MeanEstimate::from_samples(&ws);
    assert!(m.within(1.0, 4.0), "mean weight {} +- {}", m.mean, m.std_error);
}

#[test]
fn recorded_path_layout() {
    let u0 = GridFunction::from_fn(2, 32, |x: f64, o: &mut [f64]| {
        o[0] = x * (1.0 - x);
        o[1] = -x * (1.0 - x);
    });
    let mut cfg = IntegratorConfig::new(0.5, 0.01);
    cfg.k_max = 16;
    cfg.n_x = 32;
    cfg.record_from = 0.3;
    cfg.record_noise = true;
    let pot = Potential::cosine(vec![1.0, 0.5]).unwrap();
    let path = integrate(&u0, &pot, &cfg, &mut stream(0, "layout")).unwrap();
    assert_eq!(path.n_times(), cfg.recorded_steps() + 1);
    assert_eq!(path.n_times(), 21);
    assert!((path.time(0) - 0.3).abs() < 1e-12);
    assert!((path.time(20) - 0.5).abs() < 1e-12);
    assert_eq!(path.values().len(), 21 * 33 * 2);
    assert!(path.has_noise());
    assert_eq!(path.noise(19).unwrap().len(), 2 * 16);
    assert!(path.noise(20).is_none());
    for n in 0..path.n_times() {
        for i in 0..2 {
            assert_eq!(path.value(n, 0, i), 0.0);
            assert!(path.value(n, 32, i).abs() < 1e-12);
        }
        let sup = path.slice(n).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(path.sup_norm(n), sup);
    }
    assert!(path.provenance().is_some());
}

#[test]
fn same_stream_gives_the_same_path() {
    let u0 = GridFunction::<f64>::zeros(1, 32);
    let mut cfg = IntegratorConfig::new(0.2, 0.01);
    cfg.k_max = 16;
    cfg.n_x = 32;
    let pot = Potential::cosine(vec![1.0]).unwrap();
    let a = integrate(&u0, &pot, &cfg, &mut stream(4, "det")).unwrap();
    let b = integrate(&u0, &pot, &cfg, &mut stream(4, "det")).unwrap();
    let c = integrate(&u0, &pot, &cfg, &mut stream(5, "det")).unwrap();
    assert_eq!(a.values(), b.values());
    assert_ne!(a.values(), c.values());
}

#[test]
fn f32_and_f64_systems_agree_without_noise() {
    let u64_ = GridFunction::from_fn(1, 32, |x: f64, o: &mut [f64]| o[0] = x * (1.0 - x));
    let u32_ = GridFunction::from_fn(1, 32, |x: f32, o: &mut [f32]| o[0] = x * (1.0 - x));
    let mut c64 = IntegratorConfig::new(0.1f64, 0.01);
    c64.noise = false;
    c64.k_max = 16;
    c64.n_x = 32;
    let mut c32 = IntegratorConfig::new(0.1f32, 0.01);
    c32.noise = false;
    c32.k_max = 16;
    c32.n_x = 32;
    let p64 = integrate(&u64_, &Potential::cosine(vec![1.0]).unwrap(), &c64, &mut stream(0, "p")).unwrap();
    let p32 = integrate(&u32_, &Potential::cosine(vec![1.0f32]).unwrap(), &c32, &mut stream(0, "p")).unwrap();
    for (a, b) in p64.values().iter().zip(p32.values()) {
        assert!((a - *b as f64).abs() < 1e-5);
    }
}

proptest! {
    #[test]
    fn binary_dump_round_trips(
        d in 1usize..3, n_x in 1usize..6, n_times in 1usize..5, dt in 1e-4f64..1.0,
        seed in any::<u64>(),
    ) {
        let len = d * (n_x + 1) * n_times;
        let mut rng = RngStream::new(seed, 0, "dump").unwrap();
        let values: Vec<f64> = (0..len).map(|_| rand::Rng::random::<f64>(&mut rng) - 0.5).collect();
        let path = GridPath::from_values(d, n_x, dt, 0.0, values).unwrap();
        let mut buf = Vec::new();
        path.write_binary(&mut buf).unwrap();
        prop_assert_eq!(buf.len(), 32 + 8 * len);
        prop_assert_eq!(GridPath::read_binary(buf.as_slice()).unwrap(), path);
    }

    #[test]
    fn ou_coefficients_stay_in_range(k in 1usize..500, dt in 1e-8f64..10.0) {
        let c = OuCoefficients::<f64>::new(k, dt);
        let lambda: f64 = eigenvalue(k);
        prop_assert!(c.decay > 0.0 || lambda * dt > 700.0);
        prop_assert!(c.decay <= 1.0);
        prop_assert!(c.gain > 0.0 && c.gain <= dt * (1.0 + 1e-12));
        prop_assert!(c.noise_sd > 0.0);
        prop_assert!(c.noise_sd.powi(2) <= dt * (1.0 + 1e-12));
        prop_assert!(c.noise_sd.powi(2) <= 1.0 / (2.0 * lambda) * (1.0 + 1e-12));
    }
}
