//! Conservative upwind finite-volume integration of
//! `u_t = ∂_x (ε u_x + a u)`, `a = K' * u`.
//!
//! Cell averages are advanced by explicit Euler with zero flux through both
//! ends of the domain, so the discrete mass `dx Σ u_j` changes only by
//! rounding. The transport velocity is `-a`; the donor cell at each interface
//! is chosen accordingly, which keeps the update monotone (and hence
//! nonnegative) under the CFL restriction of [`stable_dt`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::midpoint_cumulative;
use crate::kernel::{KernelSpec, VelocityEvaluator};
use crate::scalar::Scalar;

pub const DEFAULT_CFL: f64 = 0.4;
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-8;
/// States below this are reported as a positivity failure.
pub const POSITIVITY_TOL: f64 = -1e-10;
/// Floor on `‖a‖_∞` in the advective time-step bound.
const VELOCITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Viscosity `ε ≥ 0`.
    pub epsilon: T,
    /// Safety factor in `(0, 1]`.
    pub cfl: T,
    pub t_end: T,
    /// Sorted observation times; each is hit exactly.
    pub checkpoint_times: Vec<T>,
    /// Largest value tolerated in the two boundary cells.
    pub boundary_tol: T,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(epsilon: T, t_end: T, checkpoint_times: Vec<T>) -> Result<Self> {
        let cfg = Self {
            epsilon,
            cfl: T::lit(DEFAULT_CFL),
            t_end,
            checkpoint_times,
            boundary_tol: T::lit(DEFAULT_BOUNDARY_TOL),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_cfl(mut self, cfl: T) -> Result<Self> {
        self.cfl = cfl;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= T::zero() && self.epsilon.is_finite()) {
            return Err(invalid(
                "epsilon",
                format!("must be finite and ≥ 0, got {}", self.epsilon),
            ));
        }
        if !(self.cfl > T::zero() && self.cfl <= T::one()) {
            return Err(invalid("cfl", format!("must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end > T::zero() && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.boundary_tol > T::zero()) {
            return Err(invalid("boundary_tol", "must be positive"));
        }
        if self.checkpoint_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("checkpoint_times", "must be strictly increasing"));
        }
        if let Some(&last) = self.checkpoint_times.last() {
            if last > self.t_end {
                return Err(invalid(
                    "checkpoint_times",
                    format!("{last} exceeds t_end = {}", self.t_end),
                ));
            }
        }
        if self.checkpoint_times.first().is_some_and(|&t| t < T::zero()) {
            return Err(invalid("checkpoint_times", "must be nonnegative"));
        }
        Ok(())
    }

    /// Smallest positive gap in the schedule `0, checkpoints…, t_end`.
    pub fn output_gap(&self) -> T {
        let mut prev = T::zero();
        let mut gap = T::infinity();
        for &t in self.checkpoint_times.iter().chain(std::iter::once(&self.t_end)) {
            let d = t - prev;
            if d > T::zero() {
                gap = gap.min(d);
            }
            prev = t;
        }
        gap
    }
}

/// Shape of the initial density; always renormalised to unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InitialDatum<T> {
    Gaussian {
        center: T,
        variance: T,
    },
    Box {
        lo: T,
        hi: T,
    },
    /// Equal-weight Gaussians at `±offset`.
    DoubleBump {
        offset: T,
        variance: T,
    },
}

impl<T: Scalar> InitialDatum<T> {
    /// Radius beyond which the datum is negligible (six standard deviations
    /// for the Gaussian shapes).
    pub fn support_radius(&self) -> T {
        let six = T::lit(6.0);
        match *self {
            InitialDatum::Gaussian { center, variance } => center.abs() + six * variance.abs().sqrt(),
            InitialDatum::Box { lo, hi } => lo.abs().max(hi.abs()),
            InitialDatum::DoubleBump { offset, variance } => offset.abs() + six * variance.abs().sqrt(),
        }
    }

    /// Unnormalised cell values.
    fn raw_values(&self, grid: &Grid<T>) -> Result<Vec<T>> {
        let gauss = |x: T, c: T, var: T| (-(x - c) * (x - c) / (T::lit(2.0) * var)).exp();
        match *self {
            InitialDatum::Gaussian { center, variance } => {
                if !(variance > T::zero()) {
                    return Err(invalid("variance", "must be positive"));
                }
                Ok(grid.centers().into_iter().map(|x| gauss(x, center, variance)).collect())
            }
            InitialDatum::DoubleBump { offset, variance } => {
                if !(variance > T::zero()) {
                    return Err(invalid("variance", "must be positive"));
                }
                Ok(grid
                    .centers()
                    .into_iter()
                    .map(|x| gauss(x, offset, variance) + gauss(x, -offset, variance))
                    .collect())
            }
            InitialDatum::Box { lo, hi } => {
                if !(hi > lo) {
                    return Err(invalid("box", format!("need lo < hi, got [{lo}, {hi}]")));
                }
                let dx = grid.dx();
                let half = T::lit(0.5) * dx;
                // Exact overlap fraction of each cell with [lo, hi].
                Ok(grid
                    .centers()
                    .into_iter()
                    .map(|x| {
                        let overlap = (hi.min(x + half) - lo.max(x - half)).max(T::zero());
                        overlap / dx
                    })
                    .collect())
            }
        }
    }
}

/// Smallest half-width that keeps the solution away from the walls up to
/// `t_end`: `1.5 · (A t_end / 2)` plus the initial support radius. The edge of
/// the spreading profile travels at speed `A/2`.
pub fn required_half_width<T: Scalar>(amplitude: T, t_end: T, datum: &InitialDatum<T>) -> T {
    T::lit(1.5) * (amplitude * t_end * T::lit(0.5)) + datum.support_radius()
}

/// Samples `datum` on `grid`, renormalised to unit discrete mass.
pub fn initial_datum<T: Scalar>(datum: &InitialDatum<T>, grid: &Grid<T>, boundary_tol: T) -> Result<Field<T>> {
    let raw = datum.raw_values(grid)?;
    let mut u = Field::new(*grid, raw, T::zero())?;
    let mass = u.mass();
    if !(mass > T::zero() && mass.is_finite()) {
        return Err(invalid("initial datum", "has no mass on the grid"));
    }
    for v in &mut u.values {
        *v = *v / mass;
    }
    check_boundary(&u, boundary_tol)?;
    Ok(u)
}

fn check_boundary<T: Scalar>(u: &Field<T>, tol: T) -> Result<()> {
    let edge = u.values[0].abs().max(u.values[u.values.len() - 1].abs());
    if edge > tol {
        return Err(Error::BoundaryMass {
            time: u.time.as_f64(),
            value: edge.as_f64(),
            tol: tol.as_f64(),
        });
    }
    Ok(())
}

fn dt_bound<T: Scalar>(max_speed: T, dx: T, cfg: &SolverConfig<T>) -> T {
    let advective = dx / max_speed.max(T::lit(VELOCITY_FLOOR));
    let diffusive = if cfg.epsilon > T::zero() {
        dx * dx / (T::lit(2.0) * cfg.epsilon)
    } else {
        T::infinity()
    };
    cfg.cfl * advective.min(diffusive).min(cfg.output_gap())
}

/// `cfl · min(dx/‖a‖_∞, dx²/(2ε), output gap)` for the velocity of `u`.
pub fn stable_dt<T: Scalar>(u: &Field<T>, kernel: &KernelSpec<T>, cfg: &SolverConfig<T>) -> Result<T> {
    u.check_finite("stable_dt input")?;
    let mut a = vec![T::zero(); u.values.len()];
    VelocityEvaluator::new(*kernel, u.grid).velocity(&u.values, &mut a);
    let speed = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    Ok(dt_bound(speed, u.grid.dx(), cfg))
}

/// Time stepper holding the velocity evaluator and work arrays for one grid.
pub struct Stepper<T: Scalar> {
    evaluator: VelocityEvaluator<T>,
    cfg: SolverConfig<T>,
    velocity: Vec<T>,
    next: Vec<T>,
    steps: u64,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(kernel: KernelSpec<T>, grid: Grid<T>, cfg: SolverConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            evaluator: VelocityEvaluator::new(kernel, grid),
            cfg,
            velocity: vec![T::zero(); grid.len()],
            next: vec![T::zero(); grid.len()],
            steps: 0,
        })
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.cfg
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn check_grid(&self, u: &Field<T>) -> Result<()> {
        if u.grid.same_as(self.evaluator.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Refreshes the cached velocity for `u` and returns the stable step.
    pub fn stable_dt(&mut self, u: &Field<T>) -> T {
        self.evaluator.velocity(&u.values, &mut self.velocity);
        let speed = self.velocity.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        dt_bound(speed, u.grid.dx(), &self.cfg)
    }

    /// Advances `u` by `dt` (velocity recomputed from `u`).
    pub fn step(&mut self, u: &mut Field<T>, dt: T) -> Result<()> {
        self.check_grid(u)?;
        self.evaluator.velocity(&u.values, &mut self.velocity);
        self.apply(u, dt)
    }

    /// Advances `u` by `min(stable dt, t_limit - t)`, landing exactly on
    /// `t_limit` when it is reached. Returns the step taken.
    pub fn step_towards(&mut self, u: &mut Field<T>, t_limit: T) -> Result<T> {
        self.check_grid(u)?;
        let remaining = t_limit - u.time;
        let dt = self.stable_dt(u);
        // Avoid leaving a sliver step before the target.
        let (dt, lands) = if dt >= remaining * (T::one() - T::lit(1e-9)) {
            (remaining, true)
        } else {
            (dt, false)
        };
        self.apply(u, dt)?;
        if lands {
            u.time = t_limit;
        }
        Ok(dt)
    }

    /// Explicit Euler update using the cached velocity.
    fn apply(&mut self, u: &mut Field<T>, dt: T) -> Result<()> {
        let n = u.values.len();
        let dx = u.grid.dx();
        let eps = self.cfg.epsilon;
        let half = T::lit(0.5);
        let ratio = dt / dx;
        let flush = T::flush_threshold();
        let values = &u.values;
        let a = &self.velocity;

        let flux = |j: usize| -> T {
            // Interface j + 1/2.
            let a_face = half * (a[j] + a[j + 1]);
            let donor = if a_face > T::zero() { values[j + 1] } else { values[j] };
            eps * (values[j + 1] - values[j]) / dx + a_face * donor
        };

        let mut left = T::zero();
        for (j, (next, &cur)) in self.next.iter_mut().zip(values.iter()).enumerate() {
            let right = if j + 1 < n { flux(j) } else { T::zero() };
            let v = cur + ratio * (right - left);
            *next = if v.abs() < flush { T::zero() } else { v };
            left = right;
        }
        std::mem::swap(&mut u.values, &mut self.next);
        u.time = u.time + dt;
        self.steps += 1;

        let min = u.min();
        if min < T::lit(POSITIVITY_TOL) || !min.is_finite() {
            return Err(Error::Positivity {
                time: u.time.as_f64(),
                min: min.as_f64(),
            });
        }
        check_boundary(u, self.cfg.boundary_tol)
    }
}

/// One explicit step of size `dt`.
pub fn step<T: Scalar>(u: &Field<T>, kernel: &KernelSpec<T>, cfg: &SolverConfig<T>, dt: T) -> Result<Field<T>> {
    u.check_finite("step input")?;
    let mut stepper = Stepper::new(*kernel, u.grid, cfg.clone())?;
    let mut next = u.clone();
    stepper.step(&mut next, dt)?;
    Ok(next)
}

/// Advances `u0` to `cfg.t_end`, calling `observer` at every checkpoint in
/// `[u0.time, t_end]`.
pub fn evolve<T: Scalar>(
    u0: &Field<T>,
    kernel: &KernelSpec<T>,
    cfg: &SolverConfig<T>,
    mut observer: impl FnMut(&Field<T>),
) -> Result<Field<T>> {
    u0.check_finite("initial state")?;
    let mut stepper = Stepper::new(*kernel, u0.grid, cfg.clone())?;
    let mut u = u0.clone();
    let targets = cfg
        .checkpoint_times
        .iter()
        .copied()
        .filter(|&t| t >= u0.time)
        .map(|t| (t, true))
        .chain(std::iter::once((cfg.t_end, false)));
    for (target, observe) in targets {
        while u.time < target {
            stepper.step_towards(&mut u, target).map_err(|e| Error::AtTime {
                time: u.time.as_f64(),
                source: Box::new(e),
            })?;
        }
        if observe {
            observer(&u);
        }
    }
    Ok(u)
}

/// Checkpoint states of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub checkpoints: Vec<Field<T>>,
    pub final_state: Field<T>,
}

impl<T: Scalar> RunOutput<T> {
    /// Stored state at time `t` (relative tolerance 1e-9).
    pub fn at(&self, t: T) -> Result<&Field<T>> {
        let tol = T::lit(1e-9) * t.abs().max(T::one());
        self.checkpoints
            .iter()
            .find(|f| (f.time - t).abs() <= tol)
            .ok_or(Error::MissingCheckpoint(t.as_f64()))
    }

    pub fn times(&self) -> Vec<T> {
        self.checkpoints.iter().map(|f| f.time).collect()
    }
}

/// [`evolve`] keeping every checkpoint state.
pub fn evolve_recording<T: Scalar>(
    u0: &Field<T>,
    kernel: &KernelSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<RunOutput<T>> {
    let mut checkpoints = Vec::with_capacity(cfg.checkpoint_times.len());
    let final_state = evolve(u0, kernel, cfg, |u| checkpoints.push(u.clone()))?;
    Ok(RunOutput {
        checkpoints,
        final_state,
    })
}

/// `U(x_j) = dx (Σ_{i<j} u_i + u_j/2) - 1/2`.
pub fn primitive<T: Scalar>(u: &Field<T>) -> Field<T> {
    let mut values = vec![T::zero(); u.values.len()];
    midpoint_cumulative(&u.values, u.grid.dx(), &mut values);
    let half = T::lit(0.5);
    for v in &mut values {
        *v = *v - half;
    }
    Field {
        grid: u.grid,
        values,
        time: u.time,
    }
}
