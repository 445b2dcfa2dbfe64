//! Acceptance suite: drives the `aggregation` binary through every scenario
//! and prints one PASS/FAIL line per criterion. Exits nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_aggregation");

struct Run {
    dir: PathBuf,
    status: i32,
    report: Value,
}

impl Run {
    fn check(&self, name: &str) -> &Value {
        self.report["checks"]
            .as_array()
            .and_then(|cs| cs.iter().find(|c| c["name"] == name))
            .unwrap_or_else(|| panic!("{}: no check named {name}", self.dir.display()))
    }

    fn checks_with_claim(&self, claim: &str) -> Vec<&Value> {
        self.report["checks"]
            .as_array()
            .map(|cs| cs.iter().filter(|c| c["claim"] == claim).collect())
            .unwrap_or_default()
    }

    fn json(&self, rel: &str) -> Value {
        let text = fs::read_to_string(self.dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
        serde_json::from_str(&text).unwrap()
    }

    /// Rows of a diagnostics CSV keyed by column name.
    fn diagnostics(&self, rel: &str) -> Vec<BTreeMap<String, f64>> {
        let text = fs::read_to_string(self.dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
        let mut lines = text.lines();
        let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
        assert_eq!(
            header.join(","),
            "t,mass,min_u,l1,l2,linf,bound2,boundinf,dWR2,dWRinf,dZ1"
        );
        lines
            .map(|l| {
                header
                    .iter()
                    .cloned()
                    .zip(l.split(',').map(|v| v.parse().unwrap()))
                    .collect()
            })
            .collect()
    }
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn run(scenario: &str, tag: &str, config: Value) -> Run {
    let dir = root().join(tag);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let cfg_path = root().join(format!("{tag}.json"));
    fs::write(&cfg_path, config.to_string()).unwrap();
    let start = Instant::now();
    let out = Command::new(BIN)
        .args([scenario, "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn aggregation");
    let status = out.status.code().unwrap_or(-1);
    if status == 2 {
        panic!("{tag}: {}", String::from_utf8_lossy(&out.stderr));
    }
    eprintln!(
        "  [{tag}] {scenario} finished in {:.1?} (exit {status})",
        start.elapsed()
    );
    let report = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    Run { dir, status, report }
}

fn passed(c: &Value) -> bool {
    c["pass"].as_bool() == Some(true)
}

fn value(c: &Value) -> f64 {
    c["value"].as_f64().unwrap_or(f64::NAN)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Every `.csv` under `dir`, relative path → bytes.
fn csv_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn main() {
    let decay = run("decay", "decay_beta0.5", json!({}));
    let decay_zero = run(
        "decay",
        "decay_beta0",
        json!({"kernel": {"family": "ZeroV", "amplitude": 2.0, "beta": 0.0}}),
    );
    let rarefaction = run("rarefaction", "rarefaction", json!({}));
    let eps_limit = run("epsilon_limit", "epsilon_limit", json!({}));
    let rescale = run("rescale", "rescale", json!({}));
    let particles = run("particles", "particles", json!({}));
    let validate = run("validate", "validate", json!({}));

    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();

    // 1. Mass conservation at every checkpoint of a t_end = 1000 run.
    {
        let mut worst: f64 = 0.0;
        let mut rows = 0;
        for r in [&decay, &decay_zero] {
            for eps in ["0.1", "0"] {
                for row in r.diagnostics(&format!("eps_{eps}/diagnostics.csv")) {
                    worst = worst.max((row["mass"] - 1.0).abs());
                    rows += 1;
                }
            }
        }
        results.push((
            1,
            "mass conservation",
            outcome(
                worst <= 1e-10 && rows >= 40,
                format!("max |mass-1| = {worst:.2e} over {rows} checkpoints"),
            ),
        ));
    }

    // 2. Decay bound with exact constants, p in {2, inf}, beta in {0, 0.5}, eps in {0.1, 0}.
    {
        let mut worst: f64 = 0.0;
        for r in [&decay, &decay_zero] {
            for eps in ["0.1", "0"] {
                for row in r.diagnostics(&format!("eps_{eps}/diagnostics.csv")) {
                    if row["t"] >= 1.0 {
                        worst = worst.max(row["bound2"]).max(row["boundinf"]);
                    }
                }
            }
        }
        results.push((
            2,
            "decay bound",
            outcome(worst <= 1.05, format!("max bound ratio = {worst:.4}")),
        ));
    }

    // 3. Faster-than-diffusive decay of the sup norm.
    {
        let slopes: Vec<f64> = ["0.1", "0"]
            .iter()
            .map(|e| {
                decay.json(&format!("eps_{e}/ratefit_u_pinf.json"))["slope"]
                    .as_f64()
                    .unwrap()
            })
            .collect();
        let ok = slopes.iter().all(|s| (-1.05..=-0.90).contains(s));
        results.push((
            3,
            "sup-norm decay slope",
            outcome(ok, format!("slopes (eps 0.1, 0) = {slopes:.4?}")),
        ));
    }

    // 4. Convergence rate to the rarefaction wave.
    {
        let inf = rarefaction.json("ratefit_dWR_pinf.json");
        let two = rarefaction.json("ratefit_dWR_p2.json");
        let (si, s2) = (inf["slope"].as_f64().unwrap(), two["slope"].as_f64().unwrap());
        let ok =
            (-0.55..=-0.30).contains(&si) && (-0.35..=-0.15).contains(&s2) && inf["window"] == json!([10.0, 1000.0]);
        results.push((
            4,
            "rarefaction rate",
            outcome(ok, format!("slope inf = {si:.4}, slope 2 = {s2:.4}")),
        ));
    }

    // 5. Uniformity in epsilon.
    {
        let c = eps_limit.check("epsilon_uniformity[t=500]");
        let rows = eps_limit.json("uniformity.json");
        let eps: Vec<f64> = rows
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["epsilon"].as_f64().unwrap())
            .collect();
        let ok = passed(c) && eps == [0.5, 0.1, 0.02, 0.0];
        results.push((
            5,
            "epsilon uniformity",
            outcome(ok, format!("max/min normalized distance = {:.3}", value(c))),
        ));
    }

    // 6. Sign-kernel identity at second order.
    {
        let c = validate.check("sign_identity_refinement_factor");
        results.push((
            6,
            "sign identity convergence",
            outcome(passed(c) && value(c) >= 3.5, format!("min factor = {:.3}", value(c))),
        ));
    }

    // 7. Viscous profile: oracle match, interior, rate, derivative bound.
    {
        let cs = validate.checks_with_claim("lemma3.2");
        let ok = cs.len() == 7 && cs.iter().all(|c| passed(c));
        let oracle = value(validate.check("hopf_cole_vs_oracle"));
        let s1 = value(validate.check("profile_rate_pinf[eps=1]"));
        let s2 = value(validate.check("profile_rate_pinf[eps=0.1]"));
        results.push((
            7,
            "viscous profile checks",
            outcome(ok, format!("oracle err = {oracle:.2e}, slopes = {s1:.3}, {s2:.3}")),
        ));
    }

    // 8. Logarithmic bound on the distance to the viscous profile.
    {
        let c = rarefaction.check("log_bound_dZ1[eps=0.5]");
        results.push((
            8,
            "log-bound monitor",
            outcome(passed(c), format!("late/early = {:.3}", value(c))),
        ));
    }

    // 9. Rescaled pairings converge to the self-similar profile.
    {
        let cs = rescale.checks_with_claim("cor2.6");
        let ok = cs.len() == 4 && cs.iter().all(|c| passed(c));
        let finals: Vec<String> = cs
            .iter()
            .filter(|c| c["name"].as_str().unwrap().starts_with("pairing_discrepancy"))
            .map(|c| format!("{:.2e}", value(c)))
            .collect();
        results.push((
            9,
            "rescaled pairings",
            outcome(ok, format!("lambda=64 discrepancies = {finals:?}")),
        ));
    }

    // 10. Particle system against the inviscid PDE.
    {
        let d = particles.check("particle_cdf_distance[N=10000]");
        let f = particles.check("particle_refinement_factor[N=10000->40000]");
        let meta = particles.json("particles_meta.json");
        let ok = passed(d) && passed(f) && meta["sizes"][0]["n"] == 10_000 && meta["t_end"] == 50.0;
        results.push((
            10,
            "particle cross-check",
            outcome(ok, format!("distance = {:.2e}, reduction = {:.3}", value(d), value(f))),
        ));
    }

    // 11. Determinism.
    {
        let small = json!({
            "grid": {"half_width": 100.0, "cells": 2048},
            "particles": {"count": 400, "ensembles": 2}
        });
        let pairs = [
            (
                run(
                    "rescale",
                    "det_rescale_a",
                    json!({"diagnostics": {"dump_profiles": true}}),
                ),
                run(
                    "rescale",
                    "det_rescale_b",
                    json!({"diagnostics": {"dump_profiles": true}}),
                ),
            ),
            (
                run("particles", "det_particles_a", small.clone()),
                run("particles", "det_particles_b", small),
            ),
            (
                run("validate", "det_validate_a", json!({})),
                run("validate", "det_validate_b", json!({})),
            ),
        ];
        let mut files = 0;
        let mut ok = true;
        for (a, b) in &pairs {
            let (fa, fb) = (csv_files(&a.dir), csv_files(&b.dir));
            files += fa.len();
            ok &= !fa.is_empty() && fa == fb;
            ok &= fs::read(a.dir.join("report.json")).unwrap() == fs::read(b.dir.join("report.json")).unwrap();
        }
        results.push((
            11,
            "determinism",
            outcome(ok, format!("{files} CSV files compared byte for byte")),
        ));
    }

    // Exit status mirrors the report of every default run.
    let runs = [
        &decay,
        &decay_zero,
        &rarefaction,
        &eps_limit,
        &rescale,
        &particles,
        &validate,
    ];
    let status_ok = runs.iter().all(|r| (r.status == 0) == (r.report["pass"] == true));

    println!();
    let mut all = status_ok;
    for (n, name, o) in &results {
        println!(
            "criterion {n:>2} {name:<28} {}  {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        all &= o.pass;
    }
    println!(
        "exit status consistent with report.json: {}",
        if status_ok { "PASS" } else { "FAIL" }
    );
    if !all {
        std::process::exit(1);
    }
}
