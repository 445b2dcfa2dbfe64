//! Error-function variants evaluated in double precision.

use std::f64::consts::PI;

/// Below this the direct product `e^{z²} erfc(z)` is accurate.
const ERFCX_SWITCH: f64 = 5.0;

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Scaled complementary error function `e^{z²} erfc(z)`.
///
/// Finite for all `z ≥ -26`; overflows to `+∞` for very negative `z`.
pub fn erfcx(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < 0.0 {
        return 2.0 * (z * z).exp() - erfcx(-z);
    }
    if z < ERFCX_SWITCH {
        return (z * z).exp() * libm::erfc(z);
    }
    erfcx_continued_fraction(z)
}

/// Lentz evaluation of `erfc(z) = e^{-z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + …))))`.
fn erfcx_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..200 {
        let a = 0.5 * k as f64;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (f * PI.sqrt())
}

/// `ln erfc(z)`, finite for every finite `z`.
pub fn ln_erfc(z: f64) -> f64 {
    if z <= 0.0 {
        libm::erfc(z).ln()
    } else {
        erfcx(z).ln() - z * z
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
