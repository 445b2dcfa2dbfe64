//! Reference profiles for the primitive `U`: the inviscid rarefaction wave
//! `W^R`, its derivative (the self-similar box profile), and the viscous
//! rarefaction `Z` solving `Z_t - ε Z_xx + A Z Z_x = 0`, `Z(x, 0) = sign(x)/2`.
//!
//! `Z` is evaluated in closed form through the Hopf–Cole substitution
//! `Z = -(2ε/A) ∂_x log θ`, where `θ` is the heat flow of
//! `exp(-A|x|/(4ε))`. With `k = A/(4ε)`, `s = √(4εt)`, `b = At/2` and
//! `z± = (b ± x)/s`,
//!
//! ```text
//! Z = ½ tanh(D/2),   D = -2kx + ln erfc(z₋) - ln erfc(z₊).
//! ```
//!
//! Working with `D` (a difference of log-erfc terms) keeps the evaluation
//! free of overflow and cancellation for `|x| ≫ √(εt)`. [`burgers_oracle`]
//! is an independent finite-volume solve used to validate it.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::Scalar;
use crate::special::{erfcx, ln_erfc};

fn check_time<T: Scalar>(t: T) -> Result<()> {
    if t > T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime(t.as_f64()))
    }
}

fn check_amplitude<T: Scalar>(a: T) -> Result<()> {
    if a > T::zero() && a.is_finite() {
        Ok(())
    } else {
        Err(invalid("A", format!("must be positive, got {a}")))
    }
}

/// Entropy solution of `W_t + A W W_x = 0`, `W(x, 0) = sign(x)/2`.
pub fn rarefaction<T: Scalar>(x: T, t: T, amplitude: T) -> Result<T> {
    check_time(t)?;
    check_amplitude(amplitude)?;
    let half = T::lit(0.5);
    let edge = amplitude * t * half;
    Ok(if x <= -edge {
        -half
    } else if x >= edge {
        half
    } else {
        x / (amplitude * t)
    })
}

/// `∂_x W^R`: `1/(At)` on `|x| < At/2`, zero elsewhere (including the kinks).
pub fn rarefaction_derivative<T: Scalar>(x: T, t: T, amplitude: T) -> Result<T> {
    check_time(t)?;
    check_amplitude(amplitude)?;
    let edge = amplitude * t * T::lit(0.5);
    Ok(if x.abs() < edge {
        T::one() / (amplitude * t)
    } else {
        T::zero()
    })
}

/// `W^R(·, t)` at the cell centres of `grid`.
pub fn rarefaction_field<T: Scalar>(grid: &Grid<T>, t: T, amplitude: T) -> Result<Field<T>> {
    check_time(t)?;
    check_amplitude(amplitude)?;
    Ok(grid.sample(t, |x| rarefaction(x, t, amplitude).expect("validated")))
}

/// One evaluation of the viscous rarefaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscousSample<T> {
    pub value: T,
    /// `1/2 - |Z|`, computed without cancellation.
    pub gap: T,
    /// `ln(1/2 - |Z|)`; finite even where `gap` underflows.
    pub log_gap: T,
    /// Set when `1/2 - |Z|` underflows; `value` is then `±1/2`.
    pub clamped: bool,
}

struct HopfCole {
    k: f64,
    s: f64,
    b: f64,
}

impl HopfCole {
    fn new(t: f64, amplitude: f64, eps: f64) -> Self {
        Self {
            k: amplitude / (4.0 * eps),
            s: (4.0 * eps * t).sqrt(),
            b: 0.5 * amplitude * t,
        }
    }

    fn exponent(&self, x: f64) -> f64 {
        let zm = (self.b - x) / self.s;
        let zp = (self.b + x) / self.s;
        -2.0 * self.k * x + ln_erfc(zm) - ln_erfc(zp)
    }

    fn exponent_slope(&self, x: f64) -> f64 {
        let zm = (self.b - x) / self.s;
        let zp = (self.b + x) / self.s;
        let c = 2.0 / (self.s * PI.sqrt());
        -2.0 * self.k + c * (1.0 / erfcx(zm) + 1.0 / erfcx(zp))
    }
}

fn check_viscous<T: Scalar>(t: T, amplitude: T, eps: T) -> Result<()> {
    check_time(t)?;
    check_amplitude(amplitude)?;
    if !(eps > T::zero() && eps.is_finite()) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    Ok(())
}

/// `Z(x, t)` with its distance to `±1/2`.
pub fn viscous_rarefaction_sample<T: Scalar>(x: T, t: T, amplitude: T, eps: T) -> Result<ViscousSample<T>> {
    check_viscous(t, amplitude, eps)?;
    let hc = HopfCole::new(t.as_f64(), amplitude.as_f64(), eps.as_f64());
    let d = hc.exponent(x.as_f64());
    let gap = 1.0 / (1.0 + d.abs().exp());
    let log_gap = -(d.abs() + (-d.abs()).exp().ln_1p());
    let value = 0.5 * (0.5 * d).tanh();
    let clamped = !(gap > 0.0) || !d.is_finite();
    let value = if d.is_nan() { 0.0 } else { value };
    Ok(ViscousSample {
        value: T::lit(value),
        gap: T::lit(gap),
        log_gap: T::lit(log_gap),
        clamped,
    })
}

/// `Z(x, t)` for viscosity `eps > 0`.
pub fn viscous_rarefaction<T: Scalar>(x: T, t: T, amplitude: T, eps: T) -> Result<T> {
    viscous_rarefaction_sample(x, t, amplitude, eps).map(|s| s.value)
}

/// `∂_x Z(x, t)`.
pub fn viscous_rarefaction_derivative<T: Scalar>(x: T, t: T, amplitude: T, eps: T) -> Result<T> {
    check_viscous(t, amplitude, eps)?;
    let hc = HopfCole::new(t.as_f64(), amplitude.as_f64(), eps.as_f64());
    let x = x.as_f64();
    let d = hc.exponent(x);
    let e = (-d.abs()).exp();
    // ¼ sech²(D/2) = e^{-|D|} / (1 + e^{-|D|})²
    let weight = e / ((1.0 + e) * (1.0 + e));
    if weight == 0.0 {
        return Ok(T::zero());
    }
    Ok(T::lit(weight * hc.exponent_slope(x)))
}

/// `Z(·, t)` at the cell centres of `grid`.
pub fn viscous_field<T: Scalar>(grid: &Grid<T>, t: T, amplitude: T, eps: T) -> Result<Field<T>> {
    check_viscous(t, amplitude, eps)?;
    let hc = HopfCole::new(t.as_f64(), amplitude.as_f64(), eps.as_f64());
    Ok(grid.sample(t, |x| T::lit(0.5 * (0.5 * hc.exponent(x.as_f64())).tanh())))
}

/// `∂_x Z(·, t)` at the cell centres of `grid`.
pub fn viscous_derivative_field<T: Scalar>(grid: &Grid<T>, t: T, amplitude: T, eps: T) -> Result<Field<T>> {
    check_viscous(t, amplitude, eps)?;
    Ok(grid.sample(t, |x| {
        viscous_rarefaction_derivative(x, t, amplitude, eps).expect("validated")
    }))
}

/// Finite-volume solution of `Z_t + (A Z²/2)_x = ε Z_xx` from `tanh(x/dx)/2`.
///
/// Godunov (upwind) flux for the convex Burgers flux, explicit central
/// diffusion, and Dirichlet ghosts `∓1/2` at the ends. The scheme is first
/// order, so the solve is repeated on the twice-refined mesh and the two are
/// Richardson-combined, `2 R(fine) - coarse`, with `R` averaging cell pairs.
/// Requires `dx ≤ ε/(5A)`.
pub fn burgers_oracle<T: Scalar>(grid: &Grid<T>, amplitude: T, eps: T, t: T) -> Result<Field<T>> {
    check_viscous(t, amplitude, eps)?;
    let (a, eps, t_end) = (amplitude.as_f64(), eps.as_f64(), t.as_f64());
    let dx = grid.dx().as_f64();
    let required = eps / (5.0 * a);
    if dx > required {
        return Err(Error::UnderResolved { dx, required });
    }
    let n = grid.len();
    let half_width = grid.half_width().as_f64();
    let coarse = upwind_burgers(half_width, n, a, eps, t_end);
    let fine = upwind_burgers(half_width, 2 * n, a, eps, t_end);
    let values = coarse
        .iter()
        .enumerate()
        .map(|(j, &c)| T::lit((fine[2 * j] + fine[2 * j + 1]) - c))
        .collect();
    Ok(Field {
        grid: *grid,
        values,
        time: t,
    })
}

fn upwind_burgers(half_width: f64, n: usize, a: f64, eps: f64, t_end: f64) -> Vec<f64> {
    let dx = 2.0 * half_width / n as f64;
    let mut z: Vec<f64> = (0..n)
        .map(|j| {
            let x = -half_width + (j as f64 + 0.5) * dx;
            0.5 * (x / dx).tanh()
        })
        .collect();
    let mut next = vec![0.0; n];
    let mut flux = vec![0.0; n + 1];
    let f = |v: f64| 0.5 * a * v * v;
    let godunov = |l: f64, r: f64| f(l.max(0.0)).max(f(r.min(0.0)));
    // Combined explicit stability: A|z| dt/dx + 2ε dt/dx² ≤ 0.8.
    let dt_max = 0.8 / (0.5 * a / dx + 2.0 * eps / (dx * dx));
    let mut time = 0.0;
    while time < t_end {
        let dt = dt_max.min(t_end - time);
        for i in 0..=n {
            let l = if i == 0 { -0.5 } else { z[i - 1] };
            let r = if i == n { 0.5 } else { z[i] };
            flux[i] = godunov(l, r) - eps * (r - l) / dx;
        }
        for j in 0..n {
            next[j] = z[j] - dt / dx * (flux[j + 1] - flux[j]);
        }
        std::mem::swap(&mut z, &mut next);
        time += dt;
    }
    z
}
