//! Scenario orchestration. Every artifact is a pure function of the config.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use log::info;
use nonlocal_aggregation::diagnostics::{
    fit_rate, log_bound_monitor, lp_norm, rarefaction_pairing, rescaled_pairing, sign_identity_residual, LpExponent,
    TestFunction,
};
use nonlocal_aggregation::particles::{empirical_cdf, evolve_particles, sample_particles};
use nonlocal_aggregation::reference::{
    burgers_oracle, rarefaction, viscous_field, viscous_rarefaction_derivative, viscous_rarefaction_sample,
};
use nonlocal_aggregation::solver::{evolve_recording, initial_datum, primitive, POSITIVITY_TOL};
use nonlocal_aggregation::{io, DiagnosticsRecord64, Ensemble64, Field64, Grid64, Kernel64, RunOutput64};
use serde::Serialize;

use crate::config::{ExperimentConfig, Scenario};
use crate::error::CliError;
use crate::report::{write_json, Check, Claim, RateFit, Report};

pub const MASS_TOL: f64 = 1e-10;
pub const BOUND_SLACK: f64 = 1.05;
pub const LINF_DECAY_SLOPE: (f64, f64) = (-1.05, -0.90);
pub const RAREFACTION_SLOPE_INF: (f64, f64) = (-0.55, -0.30);
pub const RAREFACTION_SLOPE_2: (f64, f64) = (-0.35, -0.15);
pub const UNIFORMITY_FACTOR: f64 = 3.0;
pub const PAIRING_THRESHOLD: f64 = 0.02;
pub const MONOTONE_SLACK: f64 = 1.10;
pub const PARTICLE_DISTANCE: f64 = 0.05;
pub const PARTICLE_REDUCTION: (f64, f64) = (1.4, 2.6);
pub const IDENTITY_FACTOR: f64 = 3.5;
pub const PROFILE_SLOPE: (f64, f64) = (-0.6, -0.4);
pub const DERIVATIVE_GROWTH: f64 = 2.0;

/// Runs `cfg.scenario`, writes every artifact under `cfg.output` and returns
/// the report (also written as `report.json`).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let out = cfg.output.clone();
    fs::create_dir_all(&out).map_err(|source| CliError::Io {
        path: out.clone(),
        source,
    })?;
    write_json(&out.join("resolved_config.json"), cfg)?;
    let ctx = Ctx {
        cfg,
        kernel: cfg.kernel()?,
        out,
    };
    info!("running {} into {}", cfg.scenario, ctx.out.display());
    let checks = match cfg.scenario {
        Scenario::Decay => ctx.decay(),
        Scenario::Rarefaction => ctx.rarefaction(),
        Scenario::EpsilonLimit => ctx.epsilon_limit(),
        Scenario::Rescale => ctx.rescale(),
        Scenario::Particles => ctx.particles(),
        Scenario::Validate => ctx.validate(),
    }?;
    let report = Report::new(cfg.scenario, cfg.seed, checks);
    write_json(&ctx.out.join("report.json"), &report)?;
    Ok(report)
}

/// Sup-distance of one ensemble, plus its initial and final snapshots when
/// they are to be written out.
type EnsembleResult = (f64, Option<[Ensemble64; 2]>);

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    kernel: Kernel64,
    out: PathBuf,
}

/// One solver run of an ε-sweep.
struct Member {
    eps: f64,
    dir: PathBuf,
    run: RunOutput64,
    records: Vec<DiagnosticsRecord64>,
}

impl Member {
    fn label(&self) -> String {
        format!("eps={}", self.eps)
    }

    fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    fn mass_check(&self) -> Check {
        let drift = self.records.iter().map(|r| (r.mass - 1.0).abs()).fold(0.0, f64::max);
        Check::at_most(
            format!("mass_conservation[{}]", self.label()),
            Claim::Decay,
            drift,
            MASS_TOL,
        )
    }

    fn positivity_check(&self) -> Check {
        let min = self.records.iter().map(|r| r.min_u).fold(f64::INFINITY, f64::min);
        Check::at_least(
            format!("positivity[{}]", self.label()),
            Claim::Decay,
            min,
            POSITIVITY_TOL,
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn p_label(p: LpExponent) -> String {
    format!("p{p}")
}

/// Samples of `times`/`values` with `t` inside the fit window.
fn windowed(window: [f64; 2], times: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= window[0] && t <= window[1])
        .map(|(&t, &v)| (t, v))
        .unzip()
}

impl Ctx<'_> {
    fn scenario_err(&self, source: nonlocal_aggregation::Error) -> CliError {
        CliError::Scenario {
            scenario: self.cfg.scenario,
            source,
        }
    }

    /// Runs every ε of the sweep concurrently. Each member writes only into its
    /// own directory, so the outputs do not depend on scheduling.
    fn sweep(&self) -> Result<Vec<Member>, CliError> {
        let eps = &self.cfg.solver.epsilon;
        let results: Vec<Result<Member, CliError>> = thread::scope(|s| {
            let handles: Vec<_> = eps
                .iter()
                .map(|&e| {
                    let dir = if eps.len() == 1 {
                        self.out.clone()
                    } else {
                        self.out.join(format!("eps_{e}"))
                    };
                    s.spawn(move || self.run_member(e, dir))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep member panicked"))
                .collect()
        });
        results.into_iter().collect()
    }

    fn run_member(&self, eps: f64, dir: PathBuf) -> Result<Member, CliError> {
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let grid = self.cfg.grid()?;
        let solver = self.cfg.solver_config(eps)?;
        let u0 = initial_datum(&self.cfg.initial, &grid, solver.boundary_tol).map_err(|e| self.scenario_err(e))?;
        let run = evolve_recording(&u0, &self.kernel, &solver).map_err(|e| self.scenario_err(e))?;
        info!("{}: ε = {eps} finished", self.cfg.scenario);
        let records = run
            .checkpoints
            .iter()
            .map(|u| DiagnosticsRecord64::measure(u, &self.kernel, eps))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| self.scenario_err(e))?;
        let path = dir.join("diagnostics.csv");
        io::write_diagnostics(&path, &records).map_err(io_err(&path))?;
        if self.cfg.diagnostics.dump_profiles {
            for u in &run.checkpoints {
                let path = dir.join(format!("profile_t{}.csv", u.time));
                io::write_profile(&path, u).map_err(io_err(&path))?;
            }
        }
        Ok(Member { eps, dir, run, records })
    }

    fn write_fit(&self, dir: &Path, stem: &str, p: LpExponent, slope: f64, pass: bool) -> Result<(), CliError> {
        let fit = RateFit {
            p,
            slope,
            window: self.cfg.diagnostics.fit_window,
            pass,
        };
        write_json(&dir.join(format!("ratefit_{stem}_{}.json", p_label(p))), &fit)
    }

    fn fit(&self, times: &[f64], values: &[f64]) -> Result<f64, CliError> {
        let (t, v) = windowed(self.cfg.diagnostics.fit_window, times, values);
        fit_rate(&t, &v).map_err(|e| self.scenario_err(e))
    }

    fn decay(&self) -> Result<Vec<Check>, CliError> {
        let mut checks = Vec::new();
        for m in self.sweep()? {
            checks.push(m.mass_check());
            checks.push(m.positivity_check());
            let late: Vec<_> = m.records.iter().filter(|r| r.t >= 1.0).collect();
            let b2 = late.iter().map(|r| r.bound2).fold(0.0, f64::max);
            let binf = late.iter().map(|r| r.boundinf).fold(0.0, f64::max);
            checks.push(Check::at_most(
                format!("bound_ratio_p2[{}]", m.label()),
                Claim::Decay,
                b2,
                BOUND_SLACK,
            ));
            checks.push(Check::at_most(
                format!("bound_ratio_pinf[{}]", m.label()),
                Claim::Decay,
                binf,
                BOUND_SLACK,
            ));
            for &p in &self.cfg.diagnostics.p_list {
                let norms = m
                    .run
                    .checkpoints
                    .iter()
                    .map(|u| lp_norm(u, p))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| self.scenario_err(e))?;
                let slope = self.fit(&m.times(), &norms)?;
                let name = format!("decay_rate_{}[{}]", p_label(p), m.label());
                let check = match p {
                    LpExponent::Infinity => {
                        Check::within(name, Claim::Decay, slope, LINF_DECAY_SLOPE.0, LINF_DECAY_SLOPE.1)
                    }
                    // At least as fast as the bound's t^{(1-p)/p}, with the same slack.
                    LpExponent::Finite(q) => Check::at_most(name, Claim::Decay, slope, (1.0 - q) / q + 0.05),
                };
                self.write_fit(&m.dir, "u", p, slope, check.pass)?;
                checks.push(check);
            }
        }
        Ok(checks)
    }

    fn rarefaction(&self) -> Result<Vec<Check>, CliError> {
        let mut checks = Vec::new();
        for m in self.sweep()? {
            checks.push(m.mass_check());
            let times = m.times();
            for &p in &self.cfg.diagnostics.p_list {
                let (series, (lo, hi)): (Vec<f64>, _) = match p {
                    LpExponent::Infinity => (m.records.iter().map(|r| r.dwrinf).collect(), RAREFACTION_SLOPE_INF),
                    LpExponent::Finite(2.0) => (m.records.iter().map(|r| r.dwr2).collect(), RAREFACTION_SLOPE_2),
                    // Only p = 2 and p = ∞ carry acceptance intervals.
                    LpExponent::Finite(_) => continue,
                };
                let slope = self.fit(&times, &series)?;
                let check = Check::within(
                    format!("rarefaction_rate_{}[{}]", p_label(p), m.label()),
                    Claim::RarefactionRate,
                    slope,
                    lo,
                    hi,
                );
                self.write_fit(&m.dir, "dWR", p, slope, check.pass)?;
                checks.push(check);
            }
            let dz: Vec<f64> = m.records.iter().map(|r| r.dz1).collect();
            let monitor = log_bound_monitor(&dz, &times).map_err(|e| self.scenario_err(e))?;
            let growth = monitor.late_max / monitor.early_max;
            let name = format!("log_bound_dZ1[{}]", m.label());
            checks.push(Check::below(
                name,
                Claim::LogBound,
                growth,
                1.0 + nonlocal_aggregation::diagnostics::LOG_BOUND_SLACK,
            ));
        }
        Ok(checks)
    }

    fn epsilon_limit(&self) -> Result<Vec<Check>, CliError> {
        let members = self.sweep()?;
        let t = self.cfg.diagnostics.uniformity_time;
        let mut checks: Vec<Check> = members.iter().map(Member::mass_check).collect();
        #[derive(Serialize)]
        struct Row {
            epsilon: f64,
            normalized_distance: f64,
        }
        let mut rows = Vec::new();
        for m in &members {
            let r = m.records.iter().find(|r| r.t == t).expect("validated checkpoint");
            rows.push(Row {
                epsilon: m.eps,
                normalized_distance: r.dwrinf * t.sqrt() / (2.0 + t).ln(),
            });
        }
        write_json(&self.out.join("uniformity.json"), &rows)?;
        let max = rows.iter().map(|r| r.normalized_distance).fold(0.0, f64::max);
        let min = rows.iter().map(|r| r.normalized_distance).fold(f64::INFINITY, f64::min);
        checks.push(Check::below(
            format!("epsilon_uniformity[t={t}]"),
            Claim::InviscidLimit,
            max / min,
            UNIFORMITY_FACTOR,
        ));
        Ok(checks)
    }

    fn rescale(&self) -> Result<Vec<Check>, CliError> {
        let d = &self.cfg.diagnostics;
        let amplitude = self.kernel.amplitude();
        let mut checks = Vec::new();
        for m in self.sweep()? {
            checks.push(m.mass_check());
            let mut csv = String::from("lambda,test_function,pairing,reference,discrepancy\n");
            for (i, phi) in d.test_functions.iter().enumerate() {
                let reference = rarefaction_pairing(phi, d.t0, amplitude).map_err(|e| self.scenario_err(e))?;
                let mut gaps = Vec::new();
                for &lambda in &d.lambdas {
                    let pairing = rescaled_pairing(&m.run, lambda, d.t0, phi).map_err(|e| self.scenario_err(e))?;
                    let gap = (pairing - reference).abs();
                    csv.push_str(&format!(
                        "{},{i},{},{},{}\n",
                        io::fmt17(lambda),
                        io::fmt17(pairing),
                        io::fmt17(reference),
                        io::fmt17(gap)
                    ));
                    gaps.push(gap);
                }
                let kind = match phi {
                    TestFunction::Bump { .. } => "bump",
                    TestFunction::GaussianTest { .. } => "gaussian",
                };
                let tag = format!("{kind}{i},{}", m.label());
                // Largest ratio of consecutive discrepancies; ≤ 1.1 means non-increasing up to slack.
                let growth = gaps.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
                checks.push(Check::at_most(
                    format!("pairing_monotone[{tag}]"),
                    Claim::SelfSimilarLimit,
                    growth,
                    MONOTONE_SLACK,
                ));
                let last = *gaps.last().expect("validated λ list");
                let lambda = d.lambdas.last().expect("validated λ list");
                checks.push(Check::at_most(
                    format!("pairing_discrepancy[{tag},lambda={lambda}]"),
                    Claim::SelfSimilarLimit,
                    last,
                    PAIRING_THRESHOLD,
                ));
            }
            let path = m.dir.join("pairings.csv");
            fs::write(&path, csv).map_err(io_err(&path))?;
        }
        Ok(checks)
    }

    fn particles(&self) -> Result<Vec<Check>, CliError> {
        let cfg = self.cfg;
        let p = cfg.particles;
        let t_end = cfg.solver.t_end;
        let members = self.sweep()?;
        let m = &members[0];
        let mut checks = vec![m.mass_check()];
        let grid = cfg.grid()?;
        let reference = self.richardson_primitive(m.run.at(t_end).map_err(|e| self.scenario_err(e))?)?;

        let counts = [p.count, p.count * p.refinement];
        let seeds: Vec<u64> = (0..p.ensembles as u64).map(|s| cfg.seed.wrapping_add(s)).collect();
        let mut mean = Vec::new();
        #[derive(Serialize)]
        struct SizeSummary {
            n: usize,
            distances: Vec<f64>,
            mean_distance: f64,
        }
        let mut sizes = Vec::new();
        for &n in &counts {
            let results: Vec<Result<EnsembleResult, CliError>> = thread::scope(|s| {
                let handles: Vec<_> = seeds
                    .iter()
                    .enumerate()
                    .map(|(i, &seed)| {
                        let (grid, reference) = (&grid, &reference);
                        s.spawn(move || {
                            let e0 = sample_particles(&cfg.initial, grid, n, seed).map_err(|e| self.scenario_err(e))?;
                            let e1 = evolve_particles(&e0, &self.kernel, t_end, p.dt_max)
                                .map_err(|e| self.scenario_err(e))?;
                            let f = empirical_cdf(&e1, grid);
                            let dist = f
                                .values
                                .iter()
                                .zip(&reference.values)
                                .map(|(a, b)| (a - b - 0.5).abs())
                                .fold(0.0, f64::max);
                            Ok((dist, (i == 0).then_some([e0, e1])))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("ensemble panicked"))
                    .collect()
            });
            let mut distances = Vec::new();
            for r in results {
                let (dist, snapshots) = r?;
                if let Some([e0, e1]) = snapshots {
                    let path = self.out.join(format!("particles_N{n}.csv"));
                    io::write_particles(&path, &[&e0, &e1]).map_err(io_err(&path))?;
                }
                distances.push(dist);
            }
            let avg = distances.iter().sum::<f64>() / distances.len() as f64;
            info!("particles: N = {n}, mean sup-distance {avg:.3e}");
            mean.push(avg);
            sizes.push(SizeSummary {
                n,
                distances,
                mean_distance: avg,
            });
        }
        #[derive(Serialize)]
        struct Meta<'a> {
            seed: u64,
            seeds: &'a [u64],
            t_end: f64,
            dt_max: f64,
            sizes: Vec<SizeSummary>,
        }
        write_json(
            &self.out.join("particles_meta.json"),
            &Meta {
                seed: cfg.seed,
                seeds: &seeds,
                t_end,
                dt_max: p.dt_max,
                sizes,
            },
        )?;
        checks.push(Check::at_most(
            format!("particle_cdf_distance[N={}]", counts[0]),
            Claim::InviscidLimit,
            mean[0],
            PARTICLE_DISTANCE,
        ));
        checks.push(Check::within(
            format!("particle_refinement_factor[N={}->{}]", counts[0], counts[1]),
            Claim::InviscidLimit,
            mean[0] / mean[1],
            PARTICLE_REDUCTION.0,
            PARTICLE_REDUCTION.1,
        ));
        Ok(checks)
    }

    /// `U + 1/2` reference for the particle comparison: the primitive on the
    /// configured grid, Richardson-extrapolated against a run with twice the cells.
    fn richardson_primitive(&self, coarse: &Field64) -> Result<Field64, CliError> {
        let cfg = self.cfg;
        let fine_grid = Grid64::new(cfg.grid.half_width, 2 * cfg.grid.cells).map_err(|e| self.scenario_err(e))?;
        let mut solver = cfg.solver_config(0.0)?;
        solver.checkpoint_times = vec![cfg.solver.t_end];
        let u0 = initial_datum(&cfg.initial, &fine_grid, solver.boundary_tol).map_err(|e| self.scenario_err(e))?;
        let run = evolve_recording(&u0, &self.kernel, &solver).map_err(|e| self.scenario_err(e))?;
        let fine = primitive(run.at(cfg.solver.t_end).map_err(|e| self.scenario_err(e))?);
        let mut out = primitive(coarse);
        for (j, v) in out.values.iter_mut().enumerate() {
            *v = fine.values[2 * j] + fine.values[2 * j + 1] - *v;
        }
        Ok(out)
    }

    fn validate(&self) -> Result<Vec<Check>, CliError> {
        let cfg = self.cfg;
        let v = &cfg.validate;
        let mut checks = Vec::new();

        let residuals = v
            .identity_cells
            .iter()
            .map(|&n| {
                let g = Grid64::new(v.identity_half_width, n)?;
                sign_identity_residual(&g, |x: f64| (-x * x).exp())
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| self.scenario_err(e))?;
        let factor = residuals.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
        checks.push(Check::at_least(
            "sign_identity_refinement_factor",
            Claim::SignIdentity,
            factor,
            IDENTITY_FACTOR,
        ));

        let o = v.oracle;
        let g = Grid64::new(o.half_width, o.cells).map_err(|e| self.scenario_err(e))?;
        let oracle = burgers_oracle(&g, o.amplitude, o.epsilon, o.time).map_err(|e| self.scenario_err(e))?;
        let z = viscous_field(&g, o.time, o.amplitude, o.epsilon).map_err(|e| self.scenario_err(e))?;
        let err = z
            .values
            .iter()
            .zip(&oracle.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            "hopf_cole_vs_oracle",
            Claim::ViscousProfile,
            err,
            o.tolerance,
        ));

        let amplitude = self.kernel.amplitude();
        let times = &cfg.solver.checkpoints;
        let t_ref = cfg.diagnostics.fit_window[0];
        for &eps in &cfg.solver.epsilon {
            let label = format!("eps={eps}");
            let mut sup_dist = Vec::new();
            let mut slope_t = Vec::new();
            let mut outside = 0usize;
            let mut ref_t = None;
            for &t in times {
                let half = 0.5 * amplitude * t + 12.0 * (eps * t).sqrt() + 1.0;
                let h = 2.0 * half / (v.samples - 1) as f64;
                let mut dist: f64 = 0.0;
                let mut slope: f64 = 0.0;
                for i in 0..v.samples {
                    let x = -half + i as f64 * h;
                    let s = viscous_rarefaction_sample(x, t, amplitude, eps).map_err(|e| self.scenario_err(e))?;
                    if !(s.log_gap.is_finite() && s.value.abs() <= 0.5) {
                        outside += 1;
                    }
                    let w = rarefaction(x, t, amplitude).map_err(|e| self.scenario_err(e))?;
                    dist = dist.max((s.value - w).abs());
                    let zx = viscous_rarefaction_derivative(x, t, amplitude, eps).map_err(|e| self.scenario_err(e))?;
                    slope = slope.max(zx.abs());
                }
                sup_dist.push(dist);
                slope_t.push(slope * t);
                if t == t_ref {
                    ref_t = Some(slope * t);
                }
            }
            checks.push(Check::at_most(
                format!("profile_strictly_inside[{label}]"),
                Claim::ViscousProfile,
                outside as f64,
                0.0,
            ));
            let slope = self.fit(times, &sup_dist)?;
            let check = Check::within(
                format!("profile_rate_pinf[{label}]"),
                Claim::ViscousProfile,
                slope,
                PROFILE_SLOPE.0,
                PROFILE_SLOPE.1,
            );
            let dir = self.out.join(format!("eps_{eps}"));
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            self.write_fit(&dir, "Z", LpExponent::INF, slope, check.pass)?;
            checks.push(check);
            let base = ref_t.ok_or_else(|| CliError::Rule {
                rule: "checkpoints",
                message: format!("validate needs a checkpoint at t = {t_ref}"),
            })?;
            let growth = slope_t.iter().fold(0.0, |m: f64, &s| m.max(s)) / base;
            checks.push(Check::at_most(
                format!("derivative_times_t_growth[{label}]"),
                Claim::ViscousProfile,
                growth,
                DERIVATIVE_GROWTH,
            ));
            let t_max = times.last().copied().unwrap_or(1.0);
            let half = 0.625 * amplitude * t_max;
            let xs: Vec<f64> = (0..=400).map(|i| -half + i as f64 * half / 200.0).collect();
            let path = dir.join("reference.csv");
            io::write_reference(&path, &xs, times, amplitude, eps).map_err(|e| self.scenario_err(e))?;
        }
        Ok(checks)
    }
}
