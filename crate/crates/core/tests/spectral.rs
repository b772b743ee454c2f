use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use heatsheet::grid::{sine_eigenfunction, GridFunction};
use heatsheet::quadrature::simpson;
use heatsheet::spectral::*;
use heatsheet::verify::sigma2_by_quadrature;

fn trunc() -> SpectralTruncation<f64> {
    SpectralTruncation::default()
}

fn pt(t: f64, x: f64) -> SpaceTimePoint<f64> {
    SpaceTimePoint::new(t, x).unwrap()
}

#[test]
fn chapman_kolmogorov_on_a_five_by_five_grid() {
    let tr = SpectralTruncation::new(128, 0.05).unwrap();
    let xs = [0.1, 0.3, 0.5, 0.7, 0.9];
    for &(s, t) in &[(0.05, 0.05), (0.05, 0.3)] {
        for &x in &xs {
            for &y in &xs {
                let lhs = simpson(
                    |z| green_kernel(pt(s, x), z, &tr).unwrap() * green_kernel(pt(t, z), y, &tr).unwrap(),
                    0.0,
                    1.0,
                    1024,
                )
                .unwrap();
                let rhs = green_kernel(pt(s + t, x), y, &tr).unwrap();
                assert!((lhs - rhs).abs() <= 1e-8, "s={s} t={t} x={x} y={y}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn sigma2_matches_double_quadrature_on_the_grid() {
    for &t in &[0.05, 0.1, 0.5, 1.0] {
        for i in 1..=9 {
            let x = i as f64 / 10.0;
            let closed = sigma2(t, x, &trunc());
            let quad = sigma2_by_quadrature(t, x, 128);
            assert!((closed - quad).abs() <= 1e-10, "t={t} x={x}: {closed} vs {quad}");
        }
    }
}

#[test]
fn long_time_variance_series_sums_to_one_eighth() {
    let tr = SpectralTruncation::uncertified(512).unwrap();
    let v = sigma2(1e3, 0.5, &tr);
    // Neglected odd terms beyond 512 sum to about 1 / (2 pi^2 512).
    assert_abs_diff_eq!(v, 0.125, epsilon = 2e-4);
    assert!(v < 0.125);
}

#[test]
fn parabola_flow_at_the_midpoint() {
    // <x(1-x), phi_k> = 4 sqrt(2) / (pi^3 k^3) for odd k, zero for even k.
    let u0 = GridFunction::from_fn(1, 256, |x: f64, o: &mut [f64]| o[0] = x * (1.0 - x));
    let got = semigroup_apply(&u0, 0.1, 0.5, &trunc()).unwrap()[0];
    let pi = std::f64::consts::PI;
    let want: f64 = (1..200)
        .step_by(2)
        .map(|k| {
            let kf = k as f64;
            4.0 * 2f64.sqrt() / (pi.powi(3) * kf.powi(3)) * (-pi * pi * kf * kf * 0.1).exp() * sine_eigenfunction(k, 0.5)
        })
        .sum();
    assert_abs_diff_eq!(got, want, epsilon = 1e-9);
}

#[test]
fn eigenfunction_initial_data_decays_exactly() {
    let u0 = GridFunction::from_fn(1, 256, |x: f64, o: &mut [f64]| o[0] = sine_eigenfunction(1, x));
    for &t in &[0.0, 0.01, 0.3] {
        for &x in &[0.2, 0.5, 0.9] {
            let v = semigroup_apply(&u0, t, x, &trunc()).unwrap()[0];
            let pi2 = std::f64::consts::PI.powi(2);
            assert_abs_diff_eq!(v, (-pi2 * t).exp() * sine_eigenfunction(1, x), epsilon = 1e-9);
        }
    }
}

#[test]
fn marginal_density_integrates_to_one() {
    let u0 = GridFunction::from_fn(1, 128, |x: f64, o: &mut [f64]| o[0] = 0.7 * sine_eigenfunction(2, x));
    let flow = HeatFlow::new(&u0, &trunc()).unwrap();
    for &(t, x) in &[(0.1, 0.5), (1.0, 0.3), (0.01, 0.05)] {
        let m = marginal(pt(t, x), &flow, &trunc()).unwrap();
        let sd = m.variance.sqrt();
        let mu = m.mean[0];
        let total = simpson(|z| m.density(&[z]), mu - 12.0 * sd, mu + 12.0 * sd, 2000).unwrap();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }
}

#[test]
fn marginal_density_is_bounded_below_on_the_box_uniformly_in_u0() {
    // Over ||u0|| <= N the mean stays in [-N, N]^d, so the density on [-M, M]^d
    // is at least (2 pi s)^{-d/2} exp(-d (M + N)^2 / (2 s)) with s = sigma2.
    let (n_bound, m_bound, d) = (1.0f64, 2.0f64, 2usize);
    let (t, x) = (1.5, 0.4);
    let s = sigma2(t, x, &trunc());
    let floor = (2.0 * std::f64::consts::PI * s).powf(-(d as f64) / 2.0)
        * (-(d as f64) * (m_bound + n_bound).powi(2) / (2.0 * s)).exp();
    assert!(floor > 0.0);
    for j in 0..8 {
        let amp = n_bound * (1.0 - j as f64 / 8.0) * if j % 2 == 0 { 1.0 } else { -1.0 };
        let u0 = GridFunction::from_fn(d, 128, |y: f64, o: &mut [f64]| {
            o[0] = amp * (std::f64::consts::PI * y).sin();
            o[1] = -amp * (3.0 * std::f64::consts::PI * y).sin().abs();
        });
        let flow = HeatFlow::new(&u0, &trunc()).unwrap();
        for a in -4..=4 {
            for b in -4..=4 {
                let z = [a as f64 * m_bound / 4.0, b as f64 * m_bound / 4.0];
                let p = marginal_density(pt(t, x), &flow, &z, &trunc()).unwrap();
                assert!(p >= floor * (1.0 - 1e-9), "density {p} below {floor}");
            }
        }
    }
}

/// Smallest `c` with `p <= c D^{-d/2} exp(-|z1 - z2|^2 / (c D))`, by bisection
/// on a log scale (the right side increases in `c`).
fn smallest_constant(p: f64, delta: f64, dz2: f64, d: usize) -> f64 {
    let rhs = |c: f64| c * delta.powf(-(d as f64) / 2.0) * (-dz2 / (c * delta)).exp();
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    assert!(rhs(hi) >= p);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if rhs(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn joint_density_satisfies_the_two_point_bound_with_a_fitted_constant() {
    let d = 2;
    let mut worst: f64 = 0.0;
    let ts: Vec<f64> = (0..10).map(|i| 1.0 + i as f64 / 9.0).collect();
    let xs: Vec<f64> = (0..10).map(|i| 0.2 + 0.6 * i as f64 / 9.0).collect();
    let zs = [[0.0, 0.0], [0.5, -0.5], [1.5, 1.0], [-2.0, 2.0]];
    for (i, &t) in ts.iter().enumerate() {
        for (j, &x) in xs.iter().enumerate() {
            let p1 = pt(ts[(i + 3) % 10], xs[(j + 7) % 10]);
            let p2 = pt(t, x);
            if p1 == p2 {
                continue;
            }
            let delta = parabolic_metric(p1, p2);
            for z1 in &zs {
                for z2 in &zs {
                    let p = joint_density_v(p1, p2, z1, z2, &trunc()).unwrap();
                    let dz2 = (z1[0] - z2[0]).powi(2) + (z1[1] - z2[1]).powi(2);
                    worst = worst.max(smallest_constant(p, delta, dz2, d));
                }
            }
        }
    }
    assert!(worst.is_finite() && worst < 1e3, "fitted constant {worst}");
}

#[test]
fn heat_flow_regularity_on_the_unit_window() {
    let pi = std::f64::consts::PI;
    let n_bound = 1.0;
    let s1: f64 = (1..=128).map(|k| k as f64 * (-pi * pi * (k * k) as f64).exp()).sum();
    let s2: f64 = (1..=128).map(|k| (k * k) as f64 * (-pi * pi * (k * k) as f64).exp()).sum();
    let (c1, c2) = (2.0 * n_bound * pi * s1, 2.0 * n_bound * pi * pi * s2);
    let shapes: [fn(f64) -> f64; 3] = [
        |x| (std::f64::consts::PI * x).sin(),
        |x| if x < 0.5 { 2.0 * x } else { 2.0 - 2.0 * x },
        |x| (7.0 * std::f64::consts::PI * x).sin(),
    ];
    for f in shapes {
        let u0 = GridFunction::from_fn(1, 256, |x: f64, o: &mut [f64]| o[0] = n_bound * f(x));
        let flow = HeatFlow::new(&u0, &trunc()).unwrap();
        for &t in &[1.0, 1.3, 2.0] {
            for &(x, y) in &[(0.2, 0.25), (0.5, 0.8), (0.1, 0.9)] {
                let dx = (flow.eval(t, x)[0] - flow.eval(t, y)[0]).abs();
                assert!(dx <= c1 * n_bound * (x - y).abs() + 1e-15);
            }
            for &s in &[1.0, 1.5, 2.0] {
                let dt = (flow.eval(t, 0.4)[0] - flow.eval(s, 0.4)[0]).abs();
                assert!(dt <= c2 * n_bound * (t - s).abs() + 1e-15);
            }
        }
    }
}

#[test]
fn kernel_flow_and_variance_vanish_on_the_boundary() {
    let u0 = GridFunction::from_fn(2, 64, |x: f64, o: &mut [f64]| {
        o[0] = x * (1.0 - x);
        o[1] = (3.0 * x).sin() * x * (1.0 - x);
    });
    for &x in &[0.0, 1.0] {
        assert_eq!(sigma2(0.4, x, &trunc()).abs(), 0.0);
        assert!(green_kernel(pt(0.2, x), 0.3, &trunc()).unwrap().abs() < 1e-13);
        for v in semigroup_apply(&u0, 0.1, x, &trunc()).unwrap() {
            assert!(v.abs() < 1e-13);
        }
    }
}

#[test]
fn small_times_need_more_modes() {
    let tr = SpectralTruncation::uncertified(16).unwrap();
    assert!(matches!(
        green_kernel(pt(1e-3, 0.5), 0.5, &tr),
        Err(heatsheet::Error::Precision(_))
    ));
    assert!(SpectralTruncation::<f64>::new(16, 1e-3).is_err());
}

proptest! {
    #[test]
    fn kernel_is_symmetric(t in 0.01f64..2.0, x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let a = green_kernel(pt(t, x), y, &trunc()).unwrap();
        let b = green_kernel(pt(t, y), x, &trunc()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn sigma2_increases_in_time_towards_the_stationary_value(x in 0.0f64..=1.0, t in 0.001f64..3.0, h in 0.0f64..1.0) {
        let a = sigma2(t, x, &trunc());
        let b = sigma2(t + h, x, &trunc());
        prop_assert!(a <= b + 1e-15);
        prop_assert!(b <= stationary_variance(x) + 1e-15);
    }

    #[test]
    fn covariance_is_dominated_by_the_variances(
        t in 0.01f64..2.0, s in 0.01f64..2.0, x in 0.0f64..=1.0, y in 0.0f64..=1.0,
    ) {
        let c = cov_v(t, x, s, y, &trunc());
        let bound = (sigma2(t, x, &trunc()) * sigma2(s, y, &trunc())).sqrt();
        prop_assert!(c.abs() <= bound * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn parabolic_metric_is_a_metric(
        t1 in 0.0f64..3.0, x1 in 0.0f64..=1.0,
        t2 in 0.0f64..3.0, x2 in 0.0f64..=1.0,
        t3 in 0.0f64..3.0, x3 in 0.0f64..=1.0,
    ) {
        let (a, b, c) = (pt(t1, x1), pt(t2, x2), pt(t3, x3));
        prop_assert_eq!(parabolic_metric(a, b), parabolic_metric(b, a));
        prop_assert!(parabolic_metric(a, c) <= parabolic_metric(a, b) + parabolic_metric(b, c) + 1e-12);
    }
}
