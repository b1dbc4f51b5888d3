//! Gaussian tail from a power series and a continued fraction.

use crate::{OracleError, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
/// Below this argument the series is used, above it the continued fraction.
const SWITCH: f64 = 2.5;

/// `erfc(z)`.
pub fn erfc_oracle(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < 0.0 {
        return 2.0 - erfc_oracle(-z);
    }
    if z < SWITCH {
        1.0 - erf_series(z)
    } else {
        erfc_continued_fraction(z)
    }
}

// erf(z) = 2z/√π · e^{-z²} · Σ (2z²)^n / (2n+1)!!
fn erf_series(z: f64) -> f64 {
    let x = 2.0 * z * z;
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    let mut n = 0.0;
    while term > 1e-18 * sum {
        n += 1.0;
        term *= x / (2.0 * n + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * z * (-z * z).exp() * sum
}

// erfc(z) = e^{-z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))), modified Lentz.
fn erfc_continued_fraction(z: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    0.5 * FRAC_2_SQRT_PI * (-z * z).exp() / f
}

/// `Q(x) = ½·erfc(x/√2)`.
pub fn qfunc_oracle(x: f64) -> f64 {
    0.5 * erfc_oracle(x / std::f64::consts::SQRT_2)
}

/// `Q⁻¹(ε)` by bisection on [`qfunc_oracle`].
pub fn q_inv_oracle(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(OracleError::Invalid(format!("ε must lie in (0, 1), got {eps}")));
    }
    let (mut lo, mut hi) = (-38.0f64, 38.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if qfunc_oracle(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
