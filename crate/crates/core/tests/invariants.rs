use nonlocal_aggregation::kernel::{interaction_velocity, sign_convolution, v_convolution, VConvolver};
use nonlocal_aggregation::reference::{rarefaction, viscous_rarefaction, viscous_rarefaction_derivative};
use nonlocal_aggregation::solver::{primitive, step, SolverConfig};
use nonlocal_aggregation::{make_kernel, Field64, Grid64, KernelFamily};
use proptest::prelude::*;

/// Nonnegative density on `[-10, 10]` with unit mass, built from random bumps.
fn density(n: usize) -> impl Strategy<Value = Field64> {
    prop::collection::vec((-3.0f64..3.0, 0.2f64..1.0, 0.1f64..1.0), 1..4).prop_map(move |bumps| {
        let g = Grid64::new(10.0, n).unwrap();
        let mut u = g.sample(0.0, |x| {
            bumps
                .iter()
                .map(|&(c, w, h)| h * (-(x - c) * (x - c) / (2.0 * w * w)).exp())
                .sum()
        });
        let m = u.mass();
        u.values.iter_mut().for_each(|v| *v /= m);
        u
    })
}

fn family() -> impl Strategy<Value = KernelFamily> {
    prop::sample::select(KernelFamily::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fft_matches_direct_convolution(u in density(256), beta in 0.0f64..0.9, fam in family(), big in any::<bool>()) {
        let u = if big {
            let g = Grid64::new(10.0, 1024).unwrap();
            let src = u.clone();
            g.sample(0.0, |x| {
                let j = ((x + 10.0) / src.grid.dx()).floor() as usize;
                src.values[j.min(255)]
            })
        } else {
            u
        };
        let k = make_kernel(fam, 2.0, beta).unwrap();
        let mut conv = VConvolver::new(&k, u.grid);
        prop_assert!(conv.uses_fft());
        let mut fast = vec![0.0; u.values.len()];
        let mut slow = vec![0.0; u.values.len()];
        conv.apply(&u.values, &mut fast);
        conv.apply_direct(&u.values, &mut slow);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn sign_only_velocity_is_nonincreasing(u in density(128), amplitude in 0.5f64..4.0) {
        let k = make_kernel(KernelFamily::ZeroV, amplitude, 0.0).unwrap();
        let a = interaction_velocity(&k, &u).unwrap();
        for w in a.values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn velocity_is_minus_a_times_primitive_plus_v_part(u in density(128), beta in 0.0f64..0.9, fam in family()) {
        let k = make_kernel(fam, 2.0, beta).unwrap();
        let a = interaction_velocity(&k, &u).unwrap();
        let big_u = primitive(&u);
        let vu = v_convolution(&k, &u).unwrap();
        for j in 0..a.values.len() {
            let expect = -2.0 * big_u.values[j] + vu.values[j];
            prop_assert!((a.values[j] - expect).abs() <= 1e-13);
        }
        let h = sign_convolution(&u).unwrap();
        for j in 0..h.values.len() {
            prop_assert!((h.values[j] - 2.0 * big_u.values[j]).abs() <= 1e-13);
        }
    }

    #[test]
    fn one_step_conserves_mass(u in density(200), beta in 0.0f64..0.9, fam in family(), eps in 0.0f64..1.0) {
        let k = make_kernel(fam, 2.0, beta).unwrap();
        let cfg = SolverConfig::new(eps, 1.0, vec![]).unwrap();
        let dt = nonlocal_aggregation::solver::stable_dt(&u, &k, &cfg).unwrap();
        let next = step(&u, &k, &cfg, dt).unwrap();
        prop_assert!((next.mass() - u.mass()).abs() <= 1e-13);
        prop_assert!(next.min() >= 0.0);
    }

    #[test]
    fn reflection_symmetry_is_preserved(c in 0.5f64..3.0, w in 0.3f64..0.8, beta in 0.0f64..0.9, odd in any::<bool>()) {
        let fam = if odd { KernelFamily::OddSmooth } else { KernelFamily::ZeroV };
        let k = make_kernel(fam, 2.0, beta).unwrap();
        let g = Grid64::new(10.0, 200).unwrap();
        let mut u = g.sample(0.0, |x| (-(x - c).powi(2) / (2.0 * w * w)).exp() + (-(x + c).powi(2) / (2.0 * w * w)).exp());
        let m = u.mass();
        u.values.iter_mut().for_each(|v| *v /= m);
        let cfg = SolverConfig::new(0.1, 1.0, vec![]).unwrap();
        for _ in 0..20 {
            let dt = nonlocal_aggregation::solver::stable_dt(&u, &k, &cfg).unwrap();
            u = step(&u, &k, &cfg, dt).unwrap();
        }
        let n = u.values.len();
        for j in 0..n / 2 {
            prop_assert!((u.values[j] - u.values[n - 1 - j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn viscous_profile_scales_diffusively(x in -20.0f64..20.0, t in 0.5f64..50.0, eps in 0.05f64..2.0, lambda in 0.25f64..8.0) {
        // U(λx, λt) solves the same equation with viscosity ε/λ.
        let a = viscous_rarefaction(lambda * x, lambda * t, 2.0, eps).unwrap();
        let b = viscous_rarefaction(x, t, 2.0, eps / lambda).unwrap();
        prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        let w1 = rarefaction(lambda * x, lambda * t, 2.0).unwrap();
        let w2 = rarefaction(x, t, 2.0).unwrap();
        prop_assert!((w1 - w2).abs() <= 1e-14);
    }

    #[test]
    fn viscous_profile_slope_obeys_one_sided_bound(x in -50.0f64..50.0, t in 0.1f64..100.0, eps in 0.05f64..2.0, amplitude in 0.5f64..3.0) {
        let zx = viscous_rarefaction_derivative(x, t, amplitude, eps).unwrap();
        prop_assert!(zx >= 0.0);
        prop_assert!(zx * amplitude * t <= 1.0 + 1e-9, "A t Z_x = {}", zx * amplitude * t);
        let z = viscous_rarefaction(x, t, amplitude, eps).unwrap();
        prop_assert!(z.abs() <= 0.5);
    }
}
