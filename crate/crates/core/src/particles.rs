//! Interacting-particle model whose empirical measure approximates the
//! inviscid (`ε = 0`) equation.
//!
//! Each of `N` particles carries mass `1/N` and moves with velocity
//! `-(1/N) Σ_{i≠k} K'(X_k - X_i)`, the particle analogue of the transport
//! velocity `-K' * u` of the continuum solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::grid::{Field, Grid};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::scalar::Scalar;
use crate::solver::{initial_datum, InitialDatum, DEFAULT_BOUNDARY_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble<T> {
    pub positions: Vec<T>,
    /// `1/N`.
    pub weight: T,
    pub time: T,
    pub seed: u64,
}

impl<T: Scalar> ParticleEnsemble<T> {
    pub fn from_positions(positions: Vec<T>, seed: u64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(invalid("N", "need at least two particles"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(invalid("positions", "must be finite"));
        }
        let weight = T::one() / T::from_usize_lossy(positions.len());
        Ok(Self {
            positions,
            weight,
            time: T::zero(),
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn mean(&self) -> T {
        self.positions.iter().copied().sum::<T>() * self.weight
    }

    pub fn spread(&self) -> T {
        let lo = self.positions.iter().copied().fold(T::infinity(), T::min);
        let hi = self.positions.iter().copied().fold(T::neg_infinity(), T::max);
        hi - lo
    }

    /// Indices ordered by position.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.positions[a].partial_cmp(&self.positions[b]).expect("finite"));
        idx
    }

    pub fn sorted_positions(&self) -> Vec<T> {
        let mut xs = self.positions.clone();
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        xs
    }
}

/// Draws `n` i.i.d. positions from the density of `datum` (as discretised on
/// `grid`) by inverting its piecewise-linear CDF.
pub fn sample_particles<T: Scalar>(
    datum: &InitialDatum<T>,
    grid: &Grid<T>,
    n: usize,
    seed: u64,
) -> Result<ParticleEnsemble<T>> {
    if n < 2 {
        return Err(invalid("N", "need at least two particles"));
    }
    let u = initial_datum(datum, grid, T::lit(DEFAULT_BOUNDARY_TOL))?;
    let dx = grid.dx().as_f64();
    let mut edges = Vec::with_capacity(u.values.len() + 1);
    let mut acc = 0.0f64;
    edges.push(0.0);
    for v in &u.values {
        acc += v.as_f64() * dx;
        edges.push(acc);
    }
    let total = acc;
    let left = -grid.half_width().as_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n)
        .map(|_| {
            let r = rng.random::<f64>() * total;
            let j = edges.partition_point(|&c| c <= r).clamp(1, edges.len() - 1) - 1;
            let width = edges[j + 1] - edges[j];
            let frac = if width > 0.0 { (r - edges[j]) / width } else { 0.5 };
            T::lit(left + (j as f64 + frac) * dx)
        })
        .collect();
    ParticleEnsemble::from_positions(positions, seed)
}

/// Particle velocities, using the sorted-rank form of the sign interaction and
/// an O(N) two-sweep recursion for the exponential perturbation.
pub fn velocities<T: Scalar>(e: &ParticleEnsemble<T>, kernel: &KernelSpec<T>) -> Vec<T> {
    let order = e.order();
    let mut v = sign_velocities(e, kernel, &order);
    if kernel.has_perturbation() {
        let pert = match kernel.family() {
            KernelFamily::ExponentialBump => exponential_sums(e, kernel, &order),
            _ => direct_perturbation_sums(e, kernel),
        };
        for (vi, p) in v.iter_mut().zip(pert) {
            *vi = *vi - p * e.weight;
        }
    }
    v
}

/// `-(1/N) Σ_{i≠k} K'(X_k - X_i)` by direct summation.
pub fn velocities_direct<T: Scalar>(e: &ParticleEnsemble<T>, kernel: &KernelSpec<T>) -> Vec<T> {
    let xs = &e.positions;
    xs.iter()
        .enumerate()
        .map(|(k, &xk)| {
            let s: T = xs
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, &xi)| kernel.eval(xk - xi))
                .sum();
            -s * e.weight
        })
        .collect()
}

/// `(A/(2N)) (#{X_i < X_k} - #{X_i > X_k})`; tied particles exert no force.
fn sign_velocities<T: Scalar>(e: &ParticleEnsemble<T>, kernel: &KernelSpec<T>, order: &[usize]) -> Vec<T> {
    let n = e.len();
    let scale = kernel.amplitude() * T::lit(0.5) * e.weight;
    let mut v = vec![T::zero(); n];
    let mut start = 0;
    while start < n {
        let x = e.positions[order[start]];
        let mut end = start + 1;
        while end < n && e.positions[order[end]] == x {
            end += 1;
        }
        let less = start as f64;
        let greater = (n - end) as f64;
        let vel = scale * T::lit(less - greater);
        for &k in &order[start..end] {
            v[k] = vel;
        }
        start = end;
    }
    v
}

/// `Σ_{i≠k} β e^{-|X_k - X_i|}` for every `k` in O(N) after sorting.
fn exponential_sums<T: Scalar>(e: &ParticleEnsemble<T>, kernel: &KernelSpec<T>, order: &[usize]) -> Vec<T> {
    let n = e.len();
    let xs: Vec<T> = order.iter().map(|&k| e.positions[k]).collect();
    let mut left = vec![T::zero(); n];
    for r in 1..n {
        left[r] = (xs[r - 1] - xs[r]).exp() * (left[r - 1] + T::one());
    }
    let mut right = T::zero();
    let mut out = vec![T::zero(); n];
    for r in (0..n).rev() {
        if r + 1 < n {
            right = (xs[r] - xs[r + 1]).exp() * (right + T::one());
        }
        out[order[r]] = kernel.beta() * (left[r] + right);
    }
    out
}

fn direct_perturbation_sums<T: Scalar>(e: &ParticleEnsemble<T>, kernel: &KernelSpec<T>) -> Vec<T> {
    let xs = &e.positions;
    xs.iter()
        .enumerate()
        .map(|(k, &xk)| {
            xs.iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, &xi)| kernel.v(xk - xi))
                .sum()
        })
        .collect()
}

/// `0.5 · min gap / closing speed` over neighbouring pairs; `+∞` when no pair
/// approaches.
pub fn max_stable_dt<T: Scalar>(e: &ParticleEnsemble<T>, velocities: &[T]) -> T {
    let order = e.order();
    let mut dt = T::infinity();
    for w in order.windows(2) {
        let gap = e.positions[w[1]] - e.positions[w[0]];
        let closing = velocities[w[0]] - velocities[w[1]];
        if closing > T::zero() {
            dt = dt.min(gap / closing);
        }
    }
    T::lit(0.5) * dt
}

/// One forward-Euler step.
pub fn particle_step<T: Scalar>(e: &ParticleEnsemble<T>, kernel: &KernelSpec<T>, dt: T) -> ParticleEnsemble<T> {
    let v = velocities(e, kernel);
    advance(e, &v, dt)
}

fn advance<T: Scalar>(e: &ParticleEnsemble<T>, v: &[T], dt: T) -> ParticleEnsemble<T> {
    ParticleEnsemble {
        positions: e.positions.iter().zip(v).map(|(&x, &vx)| x + dt * vx).collect(),
        weight: e.weight,
        time: e.time + dt,
        seed: e.seed,
    }
}

/// Integrates to `t_end` with steps `min(dt_max, gap guard)`.
pub fn evolve_particles<T: Scalar>(
    e: &ParticleEnsemble<T>,
    kernel: &KernelSpec<T>,
    t_end: T,
    dt_max: T,
) -> Result<ParticleEnsemble<T>> {
    if !(dt_max > T::zero()) {
        return Err(invalid("dt", "must be positive"));
    }
    let mut cur = e.clone();
    while cur.time < t_end {
        let v = velocities(&cur, kernel);
        let remaining = t_end - cur.time;
        let dt = dt_max.min(max_stable_dt(&cur, &v));
        let (dt, lands) = if dt >= remaining {
            (remaining, true)
        } else {
            (dt, false)
        };
        cur = advance(&cur, &v, dt);
        if lands {
            cur.time = t_end;
        }
    }
    Ok(cur)
}

/// `F_N(x_j) = (1/N) #{k : X_k ≤ x_j}`.
pub fn empirical_cdf<T: Scalar>(e: &ParticleEnsemble<T>, grid: &Grid<T>) -> Field<T> {
    let xs = e.sorted_positions();
    let mut count = 0usize;
    let values = grid
        .centers()
        .into_iter()
        .map(|x| {
            while count < xs.len() && xs[count] <= x {
                count += 1;
            }
            T::from_usize_lossy(count) * e.weight
        })
        .collect();
    Field {
        grid: *grid,
        values,
        time: e.time,
    }
}

/// Kolmogorov–Smirnov distance between the sample and a continuous CDF.
pub fn ks_distance<T: Scalar>(e: &ParticleEnsemble<T>, cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = e.sorted_positions();
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(x.as_f64());
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}
