//! Fixed-node quadrature rules on uniform and graded grids.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Composite Simpson weights for `n` (even) uniform intervals of width `h`.
pub fn simpson_weights<T: Real>(n: usize, h: T) -> Result<Vec<T>> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::Domain(format!(
            "composite Simpson needs a positive even number of intervals, got {n}"
        )));
    }
    let third = h / T::lit(3.0);
    Ok((0..=n)
        .map(|j| {
            if j == 0 || j == n {
                third
            } else if j % 2 == 1 {
                T::lit(4.0) * third
            } else {
                T::lit(2.0) * third
            }
        })
        .collect())
}

/// Composite trapezoid weights for `n` uniform intervals of width `h`.
pub fn trapezoid_weights<T: Real>(n: usize, h: T) -> Vec<T> {
    (0..=n)
        .map(|j| if j == 0 || j == n { h / T::lit(2.0) } else { h })
        .collect()
}

/// Integrates `f` over `[a, b]` with composite Simpson on `n` intervals.
pub fn simpson<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, n: usize) -> Result<T> {
    let h = (b - a) / T::from_count(n);
    let w = simpson_weights(n, h)?;
    Ok(w
        .iter()
        .enumerate()
        .map(|(j, &wj)| wj * f(a + h * T::from_count(j)))
        .sum())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrates `f` over `[a, b]` with Gauss–Legendre panels graded geometrically
/// towards `a`, for integrands with an integrable singularity or boundary
/// layer at the left end. Panels are `[a + w r^(j+1), a + w r^j]` with ratio
/// `r = 1/2`, down to width `w * 2^-levels`, plus the final innermost panel.
pub fn graded_left<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    levels: usize,
    order: usize,
) -> f64 {
    let (x, w) = gauss_legendre(order);
    let mut panel = |lo: f64, hi: f64| -> f64 {
        let (c, r) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
        x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| wi * r * f(c + r * xi))
            .sum::<f64>()
    };
    let width = b - a;
    let mut total = 0.0;
    let mut hi = width;
    for _ in 0..levels {
        let lo = hi / 2.0;
        total += panel(a + lo, a + hi);
        hi = lo;
    }
    total + panel(a, a + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 4).unwrap();
        assert_abs_diff_eq!(v, 4.0 - 4.0 + 2.0, epsilon = 1e-14);
    }

    #[test]
    fn simpson_rejects_odd_interval_counts() {
        assert!(simpson_weights::<f64>(3, 0.1).is_err());
        assert!(simpson_weights::<f64>(0, 0.1).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_high_degree_polynomials() {
        for n in [1usize, 2, 5, 16, 31] {
            let (x, w) = gauss_legendre(n);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * n - 2;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(deg as i32)).sum();
            assert_abs_diff_eq!(q, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn graded_rule_handles_inverse_square_root() {
        let v = graded_left(|x| 1.0 / x.sqrt(), 0.0, 1.0, 60, 20);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-8);
    }
}
