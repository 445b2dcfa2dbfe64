use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::KernelSpec;
use crate::error::Result;
use crate::grid::{Field, Grid};
use crate::scalar::Scalar;

/// Grids with at least this many cells convolve through the FFT.
pub const FFT_THRESHOLD: usize = 256;

const NEGATIVE_WARN: f64 = -1e-12;

/// Midpoint running integral `dx (Σ_{i<j} u_i + u_j / 2)`.
pub(crate) fn midpoint_cumulative<T: Scalar>(values: &[T], dx: T, out: &mut [T]) {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for (o, &v) in out.iter_mut().zip(values) {
        *o = (acc + half * v) * dx;
        acc = acc + v;
    }
}

fn sign_convolution_into<T: Scalar>(values: &[T], dx: T, out: &mut [T]) {
    midpoint_cumulative(values, dx, out);
    let mass = values.iter().copied().fold(T::zero(), |a, v| a + v) * dx;
    let two = T::lit(2.0);
    for o in out.iter_mut() {
        *o = two * *o - mass;
    }
}

/// `(H * u)(x_j) = 2 P(x_j) - M` with `P` the midpoint running integral and `M` the mass.
pub fn sign_convolution<T: Scalar>(u: &Field<T>) -> Result<Field<T>> {
    u.check_finite("sign_convolution input")?;
    let mut out = vec![T::zero(); u.values.len()];
    sign_convolution_into(&u.values, u.grid.dx(), &mut out);
    Ok(Field {
        grid: u.grid,
        values: out,
        time: u.time,
    })
}

/// Discrete linear convolution with `V` on a fixed grid.
///
/// `V` is sampled at the offsets `m dx`, `|m| < N`, which covers every pairwise
/// distance on `[-L, L]`. Large grids go through a zero-padded FFT whose kernel
/// spectrum is computed once.
pub struct VConvolver<T: Scalar> {
    grid: Grid<T>,
    /// `V(m dx)` for `m = -(N-1) ..= N-1`, stored at index `m + N - 1`.
    samples: Vec<T>,
    fft: Option<FftPath<T>>,
}

struct FftPath<T: Scalar> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    spectrum: Vec<Complex<T>>,
    buffer: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> VConvolver<T> {
    pub fn new(kernel: &KernelSpec<T>, grid: Grid<T>) -> Self {
        Self::with_threshold(kernel, grid, FFT_THRESHOLD)
    }

    /// Builds a convolver that uses the FFT when `N >= fft_threshold`.
    pub fn with_threshold(kernel: &KernelSpec<T>, grid: Grid<T>, fft_threshold: usize) -> Self {
        let n = grid.len();
        let dx = grid.dx();
        let samples: Vec<T> = (0..2 * n - 1)
            .map(|i| {
                let m = i as i64 - (n as i64 - 1);
                kernel.v(T::lit(m as f64) * dx)
            })
            .collect();
        let fft = (n >= fft_threshold).then(|| FftPath::new(&samples, n));
        Self { grid, samples, fft }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    /// Writes `dx Σ_i V(x_j - x_i) u_i` into `out`.
    pub fn apply(&mut self, u: &[T], out: &mut [T]) {
        let dx = self.grid.dx();
        match self.fft.as_mut() {
            Some(path) => path.apply(u, dx, out),
            None => direct(&self.samples, u, dx, out),
        }
    }

    /// The O(N²) sum regardless of grid size.
    pub fn apply_direct(&self, u: &[T], out: &mut [T]) {
        direct(&self.samples, u, self.grid.dx(), out);
    }
}

fn direct<T: Scalar>(samples: &[T], u: &[T], dx: T, out: &mut [T]) {
    let n = u.len();
    for (j, o) in out.iter_mut().enumerate() {
        // samples[j - i + n - 1] for i = 0..n, i.e. a reversed window.
        let window = &samples[j..j + n];
        let mut acc = T::zero();
        for (&ui, &vk) in u.iter().zip(window.iter().rev()) {
            acc = acc + ui * vk;
        }
        *o = acc * dx;
    }
}

impl<T: Scalar> FftPath<T> {
    fn new(samples: &[T], n: usize) -> Self {
        let m = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        // Circular layout: offset k >= 0 at index k, offset -k at index m - k.
        let mut spectrum = vec![Complex::new(T::zero(), T::zero()); m];
        for k in 0..n {
            spectrum[k].re = samples[k + n - 1];
        }
        for k in 1..n {
            spectrum[m - k].re = samples[n - 1 - k];
        }
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); scratch_len];
        forward.process_with_scratch(&mut spectrum, &mut scratch);
        Self {
            forward,
            inverse,
            spectrum,
            buffer: vec![Complex::new(T::zero(), T::zero()); m],
            scratch,
        }
    }

    fn apply(&mut self, u: &[T], dx: T, out: &mut [T]) {
        let zero = Complex::new(T::zero(), T::zero());
        let m = self.buffer.len();
        for (b, &v) in self.buffer.iter_mut().zip(u) {
            *b = Complex::new(v, T::zero());
        }
        self.buffer[u.len()..].fill(zero);
        self.forward.process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (b, s) in self.buffer.iter_mut().zip(&self.spectrum) {
            *b = *b * *s;
        }
        self.inverse.process_with_scratch(&mut self.buffer, &mut self.scratch);
        let scale = dx / T::from_usize_lossy(m);
        for (o, b) in out.iter_mut().zip(&self.buffer) {
            *o = b.re * scale;
        }
    }
}

/// `(V * u)(x_j) = dx Σ_i V(x_j - x_i) u_i`.
pub fn v_convolution<T: Scalar>(kernel: &KernelSpec<T>, u: &Field<T>) -> Result<Field<T>> {
    u.check_finite("v_convolution input")?;
    let mut out = vec![T::zero(); u.values.len()];
    if kernel.has_perturbation() {
        VConvolver::new(kernel, u.grid).apply(&u.values, &mut out);
    }
    Ok(Field {
        grid: u.grid,
        values: out,
        time: u.time,
    })
}

/// Reusable evaluator of `a = K' * u = -(A/2) (H * u) + V * u` on one grid.
pub struct VelocityEvaluator<T: Scalar> {
    kernel: KernelSpec<T>,
    grid: Grid<T>,
    convolver: Option<VConvolver<T>>,
    v_part: Vec<T>,
}

impl<T: Scalar> VelocityEvaluator<T> {
    pub fn new(kernel: KernelSpec<T>, grid: Grid<T>) -> Self {
        let convolver = kernel.has_perturbation().then(|| VConvolver::new(&kernel, grid));
        Self {
            kernel,
            grid,
            convolver,
            v_part: vec![T::zero(); grid.len()],
        }
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Writes the velocity at cell centres into `out`.
    pub fn velocity(&mut self, u: &[T], out: &mut [T]) {
        let dx = self.grid.dx();
        sign_convolution_into(u, dx, out);
        let scale = -self.kernel.amplitude() * T::lit(0.5);
        for o in out.iter_mut() {
            *o = *o * scale;
        }
        if let Some(conv) = self.convolver.as_mut() {
            conv.apply(u, &mut self.v_part);
            for (o, &v) in out.iter_mut().zip(&self.v_part) {
                *o = *o + v;
            }
        }
    }
}

/// `a = K' * u` on the grid of `u`.
pub fn interaction_velocity<T: Scalar>(kernel: &KernelSpec<T>, u: &Field<T>) -> Result<Field<T>> {
    u.check_finite("interaction_velocity input")?;
    let min = u.min();
    if min < T::lit(NEGATIVE_WARN) {
        log::warn!("interaction_velocity: density has negative values (min {min:e})");
    }
    let mut out = vec![T::zero(); u.values.len()];
    VelocityEvaluator::new(*kernel, u.grid).velocity(&u.values, &mut out);
    Ok(Field {
        grid: u.grid,
        values: out,
        time: u.time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_kernel, KernelFamily};

    fn gaussian(grid: &Grid<f64>, var: f64) -> Field<f64> {
        let norm = (2.0 * std::f64::consts::PI * var).sqrt();
        grid.sample(0.0, |x| (-x * x / (2.0 * var)).exp() / norm)
    }

    #[test]
    fn sign_convolution_vanishes_at_centre_of_symmetric_mass() {
        let g = Grid::<f64>::new(10.0, 400).unwrap();
        let h = sign_convolution(&gaussian(&g, 1.0)).unwrap();
        // x = 0 is the interface between cells 199 and 200.
        let mid = 0.5 * (h.values[199] + h.values[200]);
        assert!(mid.abs() < 1e-13);
        assert!((h.values[199] + h.values[200]).abs() < 1e-13);
    }

    #[test]
    fn sign_convolution_of_box_is_one_right_of_support() {
        let g = Grid::<f64>::new(4.0, 64).unwrap();
        let u = g.sample(0.0, |x| if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 });
        let h = sign_convolution(&u).unwrap();
        for (j, x) in g.centers().into_iter().enumerate() {
            if x >= 1.0 {
                assert!((h.values[j] - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sign_convolution_of_derivative_is_twice_the_function() {
        let g = Grid::<f64>::new(8.0, 1024).unwrap();
        let u = g.sample(0.0, |x| -2.0 * x * (-x * x).exp());
        let h = sign_convolution(&u).unwrap();
        let at_zero = 0.5 * (h.values[511] + h.values[512]);
        assert!((at_zero - 2.0).abs() < 1e-3, "{at_zero}");
    }

    #[test]
    fn zero_v_convolution_is_zero() {
        let g = Grid::<f64>::new(5.0, 300).unwrap();
        let k = make_kernel::<f64>(KernelFamily::ZeroV, 2.0, 0.0).unwrap();
        let w = v_convolution(&k, &gaussian(&g, 1.0)).unwrap();
        assert!(w.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn point_mass_reproduces_kernel() {
        let g = Grid::<f64>::new(8.0, 512).unwrap();
        let k = make_kernel::<f64>(KernelFamily::GaussianBump, 2.0, 0.7).unwrap();
        let mut u = g.zeros(0.0);
        let j0 = 256;
        u.values[j0] = 1.0 / g.dx();
        let w = v_convolution(&k, &u).unwrap();
        for j in 0..g.len() {
            let expected = k.v(g.center(j) - g.center(j0));
            assert!((w.values[j] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_bump_against_quadrature_oracle() {
        // V = e^{-x²}, u = N(0, 1/2): V * u is a Gaussian of the same family,
        // checked against direct O(N²) summation on the same grid.
        let g = Grid::<f64>::new(10.0, 1024).unwrap();
        let k = make_kernel::<f64>(KernelFamily::GaussianBump, 3.0, 1.0).unwrap();
        let u = gaussian(&g, 0.5);
        let w = v_convolution(&k, &u).unwrap();
        for j in [100, 400, 511, 700, 900] {
            let xj = g.center(j);
            let oracle: f64 = (0..g.len()).map(|i| k.v(xj - g.center(i)) * u.values[i]).sum::<f64>() * g.dx();
            assert!((w.values[j] - oracle).abs() < 1e-12 * oracle.abs().max(1e-3));
            // continuum value: (1/√2) e^{-x²/2}
            let continuum = (-xj * xj / 2.0).exp() / 2f64.sqrt();
            assert!((w.values[j] - continuum).abs() < 1e-8);
        }
    }

    #[test]
    fn velocity_far_right_of_support_is_minus_half_a() {
        let g = Grid::<f64>::new(8.0, 256).unwrap();
        let k = make_kernel::<f64>(KernelFamily::ZeroV, 2.0, 0.0).unwrap();
        let u = g.sample(0.0, |x| if (-2.0..-1.0).contains(&x) { 1.0 } else { 0.0 });
        let u = u.map(|v| v / (u.values.iter().sum::<f64>() * g.dx()));
        let a = interaction_velocity(&k, &u).unwrap();
        for (j, x) in g.centers().into_iter().enumerate() {
            if x > -1.0 {
                assert!((a.values[j] + 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn symmetric_density_has_odd_velocity() {
        let g = Grid::<f64>::new(8.0, 256).unwrap();
        let k = make_kernel::<f64>(KernelFamily::ZeroV, 2.0, 0.0).unwrap();
        let a = interaction_velocity(&k, &gaussian(&g, 1.0)).unwrap();
        for j in 0..128 {
            assert!((a.values[j] + a.values[255 - j]).abs() < 1e-14);
        }
    }
}
