//! Measurement functionals over solver output: norms, distances to reference
//! profiles, decay-bound ratios, power-law rate fits and weak pairings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::{sign_convolution, KernelSpec};
use crate::quadrature::adaptive_simpson;
use crate::reference::{rarefaction, viscous_rarefaction};
use crate::scalar::{compensated_sum, Scalar};
use crate::solver::{primitive, RunOutput};
use crate::special::erf;

/// Exponent `p ∈ [1, ∞]`. Serialises as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub enum LpExponent {
    Finite(f64),
    Infinity,
}

impl LpExponent {
    pub const ONE: Self = LpExponent::Finite(1.0);
    pub const TWO: Self = LpExponent::Finite(2.0);
    pub const INF: Self = LpExponent::Infinity;

    pub fn validate(self) -> Result<Self> {
        match self {
            LpExponent::Finite(p) if !(p >= 1.0 && p.is_finite()) => {
                Err(invalid("p", format!("exponent must lie in [1, ∞], got {p}")))
            }
            _ => Ok(self),
        }
    }

    /// `(1 - p)/p`, the time exponent of the decay bound.
    fn decay_exponent(self) -> f64 {
        match self {
            LpExponent::Finite(p) => (1.0 - p) / p,
            LpExponent::Infinity => -1.0,
        }
    }

    fn reciprocal(self) -> f64 {
        match self {
            LpExponent::Finite(p) => 1.0 / p,
            LpExponent::Infinity => 0.0,
        }
    }
}

impl fmt::Display for LpExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpExponent::Finite(p) => write!(f, "{p}"),
            LpExponent::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ExponentRepr> for LpExponent {
    type Error = String;

    fn try_from(r: ExponentRepr) -> std::result::Result<Self, String> {
        let p = match r {
            ExponentRepr::Number(p) => LpExponent::Finite(p),
            ExponentRepr::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => LpExponent::Infinity,
                other => other
                    .parse::<f64>()
                    .map(LpExponent::Finite)
                    .map_err(|_| format!("invalid exponent `{s}`"))?,
            },
        };
        p.validate().map_err(|e| e.to_string())
    }
}

impl From<LpExponent> for ExponentRepr {
    fn from(p: LpExponent) -> Self {
        match p {
            LpExponent::Finite(p) => ExponentRepr::Number(p),
            LpExponent::Infinity => ExponentRepr::Text("inf".into()),
        }
    }
}

/// `(dx Σ|f_j|^p)^{1/p}`, or `max|f_j|` for `p = ∞`.
pub fn lp_norm<T: Scalar>(f: &Field<T>, p: LpExponent) -> Result<T> {
    p.validate()?;
    Ok(lp_of(&f.values, f.grid.dx(), p))
}

fn lp_of<T: Scalar>(values: &[T], dx: T, p: LpExponent) -> T {
    match p {
        LpExponent::Infinity => values.iter().fold(T::zero(), |m, v| m.max(v.abs())),
        LpExponent::Finite(1.0) => compensated_sum(values.iter().map(|v| v.abs())) * dx,
        LpExponent::Finite(2.0) => (compensated_sum(values.iter().map(|&v| v * v)) * dx).sqrt(),
        LpExponent::Finite(p) => {
            let pt = T::lit(p);
            (compensated_sum(values.iter().map(|v| v.abs().powf(pt))) * dx).powf(T::one() / pt)
        }
    }
}

/// `(A - ‖V_x‖₁)^{(1-p)/p} M^{1/p} t^{(1-p)/p}`; `(A - ‖V_x‖₁)^{-1} t^{-1}` at `p = ∞`.
pub fn decay_bound<T: Scalar>(p: LpExponent, t: T, amplitude: T, tv_vx: T, mass: T) -> Result<T> {
    p.validate()?;
    if !(t > T::zero()) {
        return Err(Error::NonPositiveTime(t.as_f64()));
    }
    let margin = amplitude - tv_vx;
    if !(margin > T::zero()) {
        return Err(Error::KernelSmallness {
            tv_vx: tv_vx.as_f64(),
            amplitude: amplitude.as_f64(),
        });
    }
    let e = T::lit(p.decay_exponent());
    Ok(margin.powf(e) * mass.powf(T::lit(p.reciprocal())) * t.powf(e))
}

/// `‖U - W^R(·, t)‖_p` on the grid of `big_u`, at `t = big_u.time`.
pub fn distance_to_rarefaction<T: Scalar>(big_u: &Field<T>, p: LpExponent, amplitude: T) -> Result<T> {
    p.validate()?;
    let t = big_u.time;
    if !(t > T::zero()) {
        return Err(Error::NonPositiveTime(t.as_f64()));
    }
    let g = big_u.grid;
    let diff: Vec<T> = big_u
        .values
        .iter()
        .enumerate()
        .map(|(j, &v)| Ok(v - rarefaction(g.center(j), t, amplitude)?))
        .collect::<Result<_>>()?;
    Ok(lp_of(&diff, g.dx(), p))
}

/// `‖U - Z(·, t)‖_p` for viscosity `eps`. At `eps = 0`, `Z` degenerates to `W^R`.
pub fn distance_to_viscous<T: Scalar>(big_u: &Field<T>, p: LpExponent, amplitude: T, eps: T) -> Result<T> {
    if eps == T::zero() {
        return distance_to_rarefaction(big_u, p, amplitude);
    }
    p.validate()?;
    let t = big_u.time;
    let g = big_u.grid;
    let diff: Vec<T> = big_u
        .values
        .iter()
        .enumerate()
        .map(|(j, &v)| Ok(v - viscous_rarefaction(g.center(j), t, amplitude, eps)?))
        .collect::<Result<_>>()?;
    Ok(lp_of(&diff, g.dx(), p))
}

/// Minimum span of a rate-fit window, in decades.
pub const MIN_FIT_DECADES: f64 = 1.5;
pub const MIN_FIT_SAMPLES: usize = 5;

/// Least-squares slope of `log(values)` against `log(times)`.
pub fn fit_rate<T: Scalar>(times: &[T], values: &[T]) -> Result<T> {
    if times.len() != values.len() {
        return Err(Error::RateFit("equally many times and values".into()));
    }
    if times.len() < MIN_FIT_SAMPLES {
        return Err(Error::RateFit(format!(
            "at least {MIN_FIT_SAMPLES} samples, got {}",
            times.len()
        )));
    }
    if let Some(v) = times.iter().chain(values).find(|v| !(**v > T::zero() && v.is_finite())) {
        return Err(Error::RateFit(format!("positive finite samples, got {v}")));
    }
    let lo = times.iter().copied().fold(T::infinity(), T::min);
    let hi = times.iter().copied().fold(T::zero(), T::max);
    if (hi / lo).log10() < T::lit(MIN_FIT_DECADES) - T::lit(1e-12) {
        return Err(Error::RateFit(format!(
            "a window spanning {MIN_FIT_DECADES} decades, got [{lo}, {hi}]"
        )));
    }
    let xs: Vec<f64> = times.iter().map(|t| t.as_f64().ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.as_f64().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(T::lit(sxy / sxx))
}

/// Smooth test function for weak pairings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TestFunction<T> {
    /// `exp(1 - 1/(1 - r²))`, `r = (x - center)/width`, supported on `|r| < 1`.
    Bump { center: T, width: T },
    /// `exp(-r²)`.
    GaussianTest { center: T, width: T },
}

/// The Gaussian test function is treated as supported on `|r| ≤ 10`.
const GAUSSIAN_SUPPORT: f64 = 10.0;

impl<T: Scalar> TestFunction<T> {
    fn center_width(&self) -> (T, T) {
        match *self {
            TestFunction::Bump { center, width } | TestFunction::GaussianTest { center, width } => (center, width),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, w) = self.center_width();
        if !(w > T::zero() && w.is_finite() && c.is_finite()) {
            return Err(invalid("test function", "needs finite center and positive width"));
        }
        Ok(())
    }

    pub fn eval(&self, x: T) -> T {
        let (c, w) = self.center_width();
        let r = (x - c) / w;
        match self {
            TestFunction::Bump { .. } => {
                let q = T::one() - r * r;
                if q <= T::zero() {
                    T::zero()
                } else {
                    (T::one() - T::one() / q).exp()
                }
            }
            TestFunction::GaussianTest { .. } => (-r * r).exp(),
        }
    }

    pub fn eval_x(&self, x: T) -> T {
        let (c, w) = self.center_width();
        let r = (x - c) / w;
        match self {
            TestFunction::Bump { .. } => {
                let q = T::one() - r * r;
                if q <= T::zero() {
                    T::zero()
                } else {
                    -T::lit(2.0) * r / (q * q) * self.eval(x) / w
                }
            }
            TestFunction::GaussianTest { .. } => -T::lit(2.0) * r * self.eval(x) / w,
        }
    }

    /// Interval outside which the function is zero (or negligible).
    pub fn support(&self) -> (T, T) {
        let (c, w) = self.center_width();
        let r = match self {
            TestFunction::Bump { .. } => w,
            TestFunction::GaussianTest { .. } => w * T::lit(GAUSSIAN_SUPPORT),
        };
        (c - r, c + r)
    }

    /// `∫_lo^hi φ`.
    pub fn integral(&self, lo: T, hi: T) -> T {
        let (c, w) = self.center_width();
        match self {
            TestFunction::GaussianTest { .. } => {
                let a = ((lo - c) / w).as_f64();
                let b = ((hi - c) / w).as_f64();
                w * T::lit(0.5 * std::f64::consts::PI.sqrt() * (erf(b) - erf(a)))
            }
            TestFunction::Bump { .. } => {
                let (s_lo, s_hi) = self.support();
                let (lo, hi) = (lo.max(s_lo), hi.min(s_hi));
                if hi <= lo {
                    return T::zero();
                }
                let panels = 64;
                let h = (hi - lo) / T::from_usize_lossy(panels);
                let f = |x: T| self.eval(x);
                (0..panels)
                    .map(|i| {
                        let a = lo + h * T::from_usize_lossy(i);
                        adaptive_simpson(&f, a, a + h, T::lit(1e-15).max(T::epsilon()))
                    })
                    .sum()
            }
        }
    }
}

fn check_support<T: Scalar>(lo: T, hi: T, field: &Field<T>) -> Result<()> {
    let l = field.grid.half_width();
    if lo < -l || hi > l {
        return Err(Error::SupportViolation {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            grid_lo: -l.as_f64(),
            grid_hi: l.as_f64(),
        });
    }
    Ok(())
}

/// Midpoint quadrature of `∫ u φ`.
pub fn weak_pairing<T: Scalar>(u: &Field<T>, phi: &TestFunction<T>) -> Result<T> {
    phi.validate()?;
    let (lo, hi) = phi.support();
    check_support(lo, hi, u)?;
    let g = u.grid;
    Ok(compensated_sum(u.values.iter().enumerate().map(|(j, &v)| v * phi.eval(g.center(j)))) * g.dx())
}

/// `-∫ W^R(x, t₀) φ_x(x) dx = (1/(A t₀)) ∫_{-At₀/2}^{At₀/2} φ`.
pub fn rarefaction_pairing<T: Scalar>(phi: &TestFunction<T>, t0: T, amplitude: T) -> Result<T> {
    phi.validate()?;
    if !(t0 > T::zero()) {
        return Err(Error::NonPositiveTime(t0.as_f64()));
    }
    if !(amplitude > T::zero()) {
        return Err(invalid("A", "must be positive"));
    }
    let edge = amplitude * t0 * T::lit(0.5);
    Ok(phi.integral(-edge, edge) / (amplitude * t0))
}

/// `∫ u^λ(x, t₀) φ(x) dx` with `u^λ(x, t) = λ u(λx, λt)`, evaluated as
/// `∫ u(y, λt₀) φ(y/λ) dy` on the stored checkpoint at `λt₀`.
pub fn rescaled_pairing<T: Scalar>(run: &RunOutput<T>, lambda: T, t0: T, phi: &TestFunction<T>) -> Result<T> {
    phi.validate()?;
    if !(lambda > T::zero()) {
        return Err(invalid("lambda", "must be positive"));
    }
    let u = run.at(lambda * t0)?;
    let (lo, hi) = phi.support();
    check_support(lo * lambda, hi * lambda, u)?;
    let g = u.grid;
    Ok(compensated_sum(
        u.values
            .iter()
            .enumerate()
            .map(|(j, &v)| v * phi.eval(g.center(j) / lambda)),
    ) * g.dx())
}

/// Allowed growth of the late-window maximum over the early one.
pub const LOG_BOUND_SLACK: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogBoundOutcome {
    /// Max of `d(t)/log(2+t)` over all samples with `t ≥ 1`.
    pub max_ratio: f64,
    /// Max over `[1, t_max/10]`.
    pub early_max: f64,
    /// Max over `[t_max/10, t_max]`.
    pub late_max: f64,
    pub pass: bool,
}

/// Checks that `d(t)/log(2+t)` stays bounded: its maximum over the last
/// decade may exceed the maximum over `[1, t_max/10]` by less than 10%.
pub fn log_bound_monitor<T: Scalar>(dist: &[T], times: &[T]) -> Result<LogBoundOutcome> {
    if dist.len() != times.len() || dist.is_empty() {
        return Err(invalid("log_bound_monitor", "needs equally many, nonempty samples"));
    }
    let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.as_f64()));
    let split = t_max / 10.0;
    let mut early = f64::NEG_INFINITY;
    let mut late = f64::NEG_INFINITY;
    for (d, t) in dist.iter().zip(times) {
        let t = t.as_f64();
        if t < 1.0 {
            continue;
        }
        let r = d.as_f64() / (2.0 + t).ln();
        if t <= split {
            early = early.max(r);
        }
        if t >= split {
            late = late.max(r);
        }
    }
    if !early.is_finite() || !late.is_finite() {
        return Err(invalid(
            "log_bound_monitor",
            "samples must cover both [1, t_max/10] and the last decade",
        ));
    }
    Ok(LogBoundOutcome {
        max_ratio: early.max(late),
        early_max: early,
        late_max: late,
        pass: late < (1.0 + LOG_BOUND_SLACK) * early,
    })
}

/// Per-checkpoint diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord<T> {
    pub t: T,
    pub mass: T,
    pub min_u: T,
    pub l1: T,
    pub l2: T,
    pub linf: T,
    /// `‖u‖₂ / decay_bound(2, t)`.
    pub bound2: T,
    /// `‖u‖_∞ / decay_bound(∞, t)`.
    pub boundinf: T,
    pub dwr2: T,
    pub dwrinf: T,
    /// `‖U - Z‖₁` (against `W^R` when `ε = 0`).
    pub dz1: T,
}

impl<T: Scalar> DiagnosticsRecord<T> {
    pub const CSV_HEADER: &'static str = "t,mass,min_u,l1,l2,linf,bound2,boundinf,dWR2,dWRinf,dZ1";

    /// Measures a density `u` (unit mass) at time `u.time > 0`.
    pub fn measure(u: &Field<T>, kernel: &KernelSpec<T>, eps: T) -> Result<Self> {
        let t = u.time;
        let a = kernel.amplitude();
        let tv = kernel.tv_vx();
        let mass = u.mass();
        let big_u = primitive(u);
        let l2 = lp_norm(u, LpExponent::TWO)?;
        let linf = lp_norm(u, LpExponent::INF)?;
        Ok(Self {
            t,
            mass,
            min_u: u.min(),
            l1: lp_norm(u, LpExponent::ONE)?,
            l2,
            linf,
            bound2: l2 / decay_bound(LpExponent::TWO, t, a, tv, mass)?,
            boundinf: linf / decay_bound(LpExponent::INF, t, a, tv, mass)?,
            dwr2: distance_to_rarefaction(&big_u, LpExponent::TWO, a)?,
            dwrinf: distance_to_rarefaction(&big_u, LpExponent::INF, a)?,
            dz1: distance_to_viscous(&big_u, LpExponent::ONE, a, eps)?,
        })
    }

    pub fn values(&self) -> [T; 11] {
        [
            self.t,
            self.mass,
            self.min_u,
            self.l1,
            self.l2,
            self.linf,
            self.bound2,
            self.boundinf,
            self.dwr2,
            self.dwrinf,
            self.dz1,
        ]
    }
}

/// `‖H * (Dφ) - 2φ‖_∞` on `grid`, where `Dφ` is the centred difference of the
/// samples of `phi` (one-sided at the ends). Second order in `dx` for smooth,
/// rapidly decaying `phi`.
pub fn sign_identity_residual<T: Scalar>(grid: &Grid<T>, phi: impl Fn(T) -> T) -> Result<T> {
    let f = grid.sample(T::zero(), phi);
    let n = f.values.len();
    let dx = grid.dx();
    let two = T::lit(2.0);
    let d: Vec<T> = (0..n)
        .map(|j| match j {
            0 => (f.values[1] - f.values[0]) / dx,
            _ if j == n - 1 => (f.values[j] - f.values[j - 1]) / dx,
            _ => (f.values[j + 1] - f.values[j - 1]) / (two * dx),
        })
        .collect();
    let hd = sign_convolution(&Field::new(*grid, d, T::zero())?)?;
    Ok(hd
        .values
        .iter()
        .zip(&f.values)
        .map(|(&h, &p)| (h - two * p).abs())
        .fold(T::zero(), T::max))
}
