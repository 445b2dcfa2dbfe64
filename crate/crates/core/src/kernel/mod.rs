//! Interaction kernels `K'(x) = -(A/2) sign(x) + V(x)` and the convolutions
//! the transport velocity is built from.
//!
//! Every constructible kernel satisfies the smallness condition
//! `‖V_x‖₁ < A`; the decay estimates of the solver diagnostics depend on it.

mod convolution;

pub(crate) use convolution::midpoint_cumulative;

pub use convolution::{
    interaction_velocity, sign_convolution, v_convolution, VConvolver, VelocityEvaluator, FFT_THRESHOLD,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::scalar::Scalar;

/// Shape of the smooth perturbation `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelFamily {
    /// `V ≡ 0`.
    ZeroV,
    /// `V(x) = β e^{-|x|}`.
    ExponentialBump,
    /// `V(x) = β e^{-x²}`.
    GaussianBump,
    /// `V(x) = β x e^{-x²}`.
    OddSmooth,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 4] = [
        KernelFamily::ZeroV,
        KernelFamily::ExponentialBump,
        KernelFamily::GaussianBump,
        KernelFamily::OddSmooth,
    ];
}

/// Absolute tolerance of the quadrature fallback for `‖V_x‖₁`.
pub const TV_QUADRATURE_TOL: f64 = 1e-10;

/// Beyond this distance every family is below `e^{-40}` relative to `β`.
const TAIL_CUTOFF: f64 = 40.0;

/// A validated interaction kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    amplitude: T,
    family: KernelFamily,
    beta: T,
    tv_vx: T,
}

/// Builds a kernel, rejecting any `(A, β)` with `‖V_x‖₁ ≥ A`.
pub fn make_kernel<T: Scalar>(family: KernelFamily, amplitude: T, beta: T) -> Result<KernelSpec<T>> {
    if !(amplitude.is_finite() && amplitude > T::zero()) {
        return Err(invalid(
            "A",
            format!("amplitude must be positive and finite, got {amplitude}"),
        ));
    }
    if !beta.is_finite() {
        return Err(invalid("beta", "must be finite"));
    }
    let beta = if family == KernelFamily::ZeroV { T::zero() } else { beta };
    let mut k = KernelSpec {
        amplitude,
        family,
        beta,
        tv_vx: T::zero(),
    };
    k.tv_vx = match family {
        KernelFamily::ZeroV => T::zero(),
        KernelFamily::ExponentialBump | KernelFamily::GaussianBump => T::lit(2.0) * beta.abs(),
        KernelFamily::OddSmooth => k.tv_vx_quadrature(),
    };
    if k.tv_vx >= amplitude {
        return Err(Error::KernelSmallness {
            tv_vx: k.tv_vx.as_f64(),
            amplitude: amplitude.as_f64(),
        });
    }
    Ok(k)
}

impl<T: Scalar> KernelSpec<T> {
    /// Jump amplitude `A`.
    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// `‖V_x‖₁`, cached at construction.
    pub fn tv_vx(&self) -> T {
        self.tv_vx
    }

    /// `A - ‖V_x‖₁ > 0`.
    pub fn decay_margin(&self) -> T {
        self.amplitude - self.tv_vx
    }

    pub fn has_perturbation(&self) -> bool {
        self.family != KernelFamily::ZeroV && self.beta != T::zero()
    }

    /// `V(x)`.
    pub fn v(&self, x: T) -> T {
        let b = self.beta;
        match self.family {
            KernelFamily::ZeroV => T::zero(),
            KernelFamily::ExponentialBump => b * (-x.abs()).exp(),
            KernelFamily::GaussianBump => b * (-x * x).exp(),
            KernelFamily::OddSmooth => b * x * (-x * x).exp(),
        }
    }

    /// `V'(x)`; at the kink of the exponential family the value is 0.
    pub fn v_x(&self, x: T) -> T {
        let b = self.beta;
        match self.family {
            KernelFamily::ZeroV => T::zero(),
            KernelFamily::ExponentialBump => -b * sign(x) * (-x.abs()).exp(),
            KernelFamily::GaussianBump => -T::lit(2.0) * b * x * (-x * x).exp(),
            KernelFamily::OddSmooth => b * (T::one() - T::lit(2.0) * x * x) * (-x * x).exp(),
        }
    }

    /// `K'(x) = -(A/2) H(x) + V(x)` with `H(0) = 0`.
    pub fn eval(&self, x: T) -> T {
        -self.amplitude * T::lit(0.5) * sign(x) + self.v(x)
    }

    /// Closed-form `‖V‖_∞`.
    pub fn sup_v(&self) -> T {
        let b = self.beta.abs();
        match self.family {
            KernelFamily::ZeroV => T::zero(),
            KernelFamily::ExponentialBump | KernelFamily::GaussianBump => b,
            KernelFamily::OddSmooth => b * T::lit(0.5).sqrt() * T::lit(-0.5).exp(),
        }
    }

    /// Lipschitz constant of `V`, i.e. `‖V_x‖_∞`.
    pub fn lip_v(&self) -> T {
        let b = self.beta.abs();
        match self.family {
            KernelFamily::ZeroV => T::zero(),
            KernelFamily::ExponentialBump => b,
            KernelFamily::GaussianBump => b * T::lit(2.0).sqrt() * T::lit(-0.5).exp(),
            KernelFamily::OddSmooth => b,
        }
    }

    /// `∫|V_x|` by adaptive Simpson on unit panels of `[-R, R]`.
    pub fn tv_vx_quadrature(&self) -> T {
        let f = |x: T| self.v_x(x).abs();
        let panels = 2 * TAIL_CUTOFF as usize;
        let tol = T::lit(TV_QUADRATURE_TOL / panels as f64).max(T::epsilon());
        (0..panels)
            .map(|i| {
                let lo = T::lit(i as f64 - TAIL_CUTOFF);
                adaptive_simpson(&f, lo, lo + T::one(), tol)
            })
            .sum()
    }

    /// Bound on `‖V‖₁` outside `[-r, r]`, i.e. the tail neglected when `V` is
    /// sampled on a finite window of half-width `r`.
    pub fn tail_mass_beyond(&self, r: T) -> T {
        let b = self.beta.abs();
        let r = r.max(T::zero());
        match self.family {
            KernelFamily::ZeroV => T::zero(),
            KernelFamily::ExponentialBump => T::lit(2.0) * b * (-r).exp(),
            KernelFamily::GaussianBump => b * T::PI().sqrt() * erfc_lossy(r),
            // ∫_r^∞ x e^{-x²} dx = e^{-r²}/2, both sides.
            KernelFamily::OddSmooth => b * (-r * r).exp(),
        }
    }
}

#[inline]
pub(crate) fn sign<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

fn erfc_lossy<T: Scalar>(x: T) -> T {
    T::lit(libm::erfc(x.as_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_v_is_trivially_admissible() {
        let k = make_kernel::<f64>(KernelFamily::ZeroV, 2.0, 0.0).unwrap();
        assert_eq!(k.tv_vx(), 0.0);
        assert_eq!(k.v(0.3), 0.0);
    }

    #[test]
    fn exponential_bump_total_variation() {
        let k = make_kernel::<f64>(KernelFamily::ExponentialBump, 2.0, 0.5).unwrap();
        assert_eq!(k.tv_vx(), 1.0);
        assert!((k.tv_vx_quadrature() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn smallness_condition_is_enforced() {
        let err = make_kernel::<f64>(KernelFamily::ExponentialBump, 1.0, 0.6).unwrap_err();
        match err {
            Error::KernelSmallness { tv_vx, amplitude } => {
                assert!((tv_vx - 1.2).abs() < 1e-15);
                assert_eq!(amplitude, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("‖V_x‖₁ = 1.2 ≥ A"));
        // Equality is also rejected.
        assert!(make_kernel::<f64>(KernelFamily::GaussianBump, 1.0, 0.5).is_err());
    }

    #[test]
    fn odd_smooth_quadrature_matches_closed_form() {
        // V goes 0 → -m → +m → 0 with m = β e^{-1/2}/√2, so ‖V_x‖₁ = 4m.
        let beta = 0.7;
        let k = make_kernel::<f64>(KernelFamily::OddSmooth, 2.0, beta).unwrap();
        let exact = 4.0 * beta * (-0.5f64).exp() / 2f64.sqrt();
        assert!((k.tv_vx() - exact).abs() < 1e-10, "{} vs {exact}", k.tv_vx());
    }

    #[test]
    fn gaussian_quadrature_matches_closed_form() {
        let k = make_kernel::<f64>(KernelFamily::GaussianBump, 3.0, -1.2).unwrap();
        assert!((k.tv_vx_quadrature() - 2.4).abs() < 1e-9);
    }

    #[test]
    fn sup_v_dominated_by_tv_and_matches_sampling() {
        for family in KernelFamily::ALL {
            let k = make_kernel::<f64>(family, 2.0, 0.6).unwrap();
            let sampled = (0..=20_000)
                .map(|i| -10.0 + 1e-3 * i as f64)
                .map(|x| k.v(x).abs())
                .fold(0.0, f64::max);
            assert!(sampled <= k.tv_vx() + 1e-15, "{family:?}");
            assert!((sampled - k.sup_v()).abs() < 1e-6, "{family:?}");
        }
    }

    #[test]
    fn perturbation_decays_at_infinity() {
        for family in KernelFamily::ALL {
            let k = make_kernel::<f64>(family, 2.0, 0.9).unwrap();
            assert!(k.v(50.0).abs() < 1e-20 && k.v(-50.0).abs() < 1e-20);
            assert!(k.tail_mass_beyond(30.0) < 1e-12);
        }
    }

    #[test]
    fn kernel_jumps_like_scaled_sign() {
        let k = make_kernel::<f64>(KernelFamily::GaussianBump, 2.0, 0.3).unwrap();
        let h = 1e-12;
        assert!((k.eval(h) - k.eval(-h) + 2.0).abs() < 1e-9);
        assert!((k.eval(0.0) - 0.3).abs() < 1e-15);
        assert!((k.eval(1e3) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_constant_bounds_sampled_slope() {
        for family in KernelFamily::ALL {
            let k = make_kernel::<f64>(family, 2.0, 0.6).unwrap();
            let sampled = (0..=20_000)
                .map(|i| -10.0 + 1e-3 * i as f64)
                .map(|x| k.v_x(x).abs())
                .fold(0.0, f64::max);
            assert!(sampled <= k.lip_v() + 1e-12, "{family:?}");
        }
    }
}
