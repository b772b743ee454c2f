//! Distribution functions of Brownian suprema.
//!
//! `F(R) = P(sup |B_0| <= R)` for the standard Brownian bridge on [0, 1] and
//! `H(x) = P(sup |B| <= x)` for standard Brownian motion on [0, 1], each with a
//! rapidly converging representation for small and for large arguments.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Below this radius `F` is evaluated through its theta-transformed series.
pub const BRIDGE_THETA_SWITCH: f64 = 0.8;
/// Above this level `H` is evaluated through its reflection (image) series.
pub const BM_IMAGE_SWITCH: f64 = 1.5;

const MAX_TERMS: usize = 100_000;

fn check_positive<T: Real>(v: T, name: &str) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `1 + 2 sum_{k>=1} (-1)^k exp(-2 k^2 R^2)`.
pub fn bridge_sup_cdf_series<T: Real>(r: T) -> T {
    let two = T::lit(2.0);
    let mut sum = T::one();
    for k in 1..=MAX_TERMS {
        let kf = T::from_count(k);
        let term = (-two * kf * kf * r * r).exp();
        if k % 2 == 1 {
            sum -= two * term;
        } else {
            sum += two * term;
        }
        if term < T::EPS * T::lit(1e-3) {
            break;
        }
    }
    sum
}

/// `sqrt(2 pi) / R * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 R^2))`.
pub fn bridge_sup_cdf_theta<T: Real>(r: T) -> T {
    let pi2 = T::PI() * T::PI();
    let mut sum = T::zero();
    for k in 1..=MAX_TERMS {
        let m = T::from_count(2 * k - 1);
        let term = (-m * m * pi2 / (T::lit(8.0) * r * r)).exp();
        sum += term;
        if term <= sum * T::EPS * T::lit(1e-3) || term == T::zero() {
            break;
        }
    }
    (T::lit(2.0) * T::PI()).sqrt() / r * sum
}

/// `F(R)`, the law of the sup-norm of a standard Brownian bridge.
pub fn bridge_sup_cdf<T: Real>(r: T) -> Result<T> {
    check_positive(r, "R")?;
    let v = if r < T::lit(BRIDGE_THETA_SWITCH) {
        bridge_sup_cdf_theta(r)
    } else {
        bridge_sup_cdf_series(r)
    };
    Ok(v.max(T::zero()).min(T::one()))
}

/// `ln F(R)`, finite for every `R > 0` even where `F` itself underflows.
pub fn bridge_sup_log_cdf<T: Real>(r: T) -> Result<T> {
    check_positive(r, "R")?;
    if r < T::lit(BRIDGE_THETA_SWITCH) {
        // ln(sqrt(2 pi)/R) - pi^2/(8 R^2) + ln(1 + sum_{k>=2} exp(-((2k-1)^2 - 1) pi^2 / (8 R^2)))
        let pi2 = T::PI() * T::PI();
        let mut rest = T::zero();
        for k in 2..=MAX_TERMS {
            let m = T::from_count(2 * k - 1);
            let term = (-(m * m - T::one()) * pi2 / (T::lit(8.0) * r * r)).exp();
            rest += term;
            if term <= T::EPS * T::lit(1e-3) {
                break;
            }
        }
        Ok(((T::lit(2.0) * T::PI()).sqrt() / r).ln() - pi2 / (T::lit(8.0) * r * r) + rest.ln_1p())
    } else {
        // 1 - F = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 R^2), kept separate for accuracy near 1.
        let two = T::lit(2.0);
        let mut tail = T::zero();
        for k in 1..=MAX_TERMS {
            let kf = T::from_count(k);
            let term = two * (-two * kf * kf * r * r).exp();
            if k % 2 == 1 {
                tail += term;
            } else {
                tail -= term;
            }
            if term < T::EPS * T::lit(1e-3) * tail.abs().max(T::min_positive_value()) {
                break;
            }
        }
        Ok((-tail).ln_1p())
    }
}

/// `(4/pi) sum_{k>=0} (-1)^k / (2k+1) exp(-(2k+1)^2 pi^2 / (8 x^2))`.
pub fn bm_sup_cdf_series<T: Real>(x: T) -> T {
    let pi2 = T::PI() * T::PI();
    let mut sum = T::zero();
    for k in 0..MAX_TERMS {
        let m = T::from_count(2 * k + 1);
        let term = (-m * m * pi2 / (T::lit(8.0) * x * x)).exp() / m;
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < T::EPS * T::lit(1e-3) {
            break;
        }
    }
    T::lit(4.0) / T::PI() * sum
}

/// Reflection form `sum_k (-1)^k [Phi((2k+1)x) - Phi((2k-1)x)]`, written with `erfc`.
pub fn bm_sup_cdf_images<T: Real>(x: T) -> T {
    let s = x / T::SQRT_2();
    let mut sum = T::one() - s.erfc();
    for k in 1..=MAX_TERMS {
        let lo = T::from_count(2 * k - 1) * s;
        let hi = T::from_count(2 * k + 1) * s;
        let term = lo.erfc() - hi.erfc();
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        if term < T::EPS * T::lit(1e-3) {
            break;
        }
    }
    sum
}

/// `H(x)`, the law of the sup of `|B|` over [0, 1].
pub fn bm_sup_cdf<T: Real>(x: T) -> Result<T> {
    check_positive(x, "x")?;
    let v = if x > T::lit(BM_IMAGE_SWITCH) {
        bm_sup_cdf_images(x)
    } else {
        bm_sup_cdf_series(x)
    };
    Ok(v.max(T::zero()).min(T::one()))
}
