//! Acceptance suite: runs the twelve criteria at their stated tolerances and prints one
//! line per criterion. Exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use autolab_core::hjb::{refinement_check, GridSpec};
use autolab_core::model::{self, HittingTime};
use autolab_core::policy::{compare_policies, evaluate_policy, make_policy, PolicyKind};
use autolab_core::stats::linear_fit;
use autolab_core::validation::{run_validation, ReferenceValues, ValidationReport};
use autolab_core::{ModelParams, SimConfig, DEFAULT_PRESET};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn tau(i: f64, wm: f64, p: &ModelParams) -> f64 {
    match model::expected_hitting_time(p.a0, i, wm, p).unwrap() {
        HittingTime::Finite(t) => t,
        HittingTime::Unbounded => f64::INFINITY,
    }
}

fn metric(r: &ValidationReport, id: &str, label: &str, key: &str) -> f64 {
    r.prediction(id).and_then(|p| p.condition(label)).and_then(|c| c.metrics.get(key).copied()).unwrap_or(f64::NAN)
}

fn closed_forms(p: &ModelParams) -> Outcome {
    let refs = ReferenceValues::bundled().unwrap();
    let mut worst_drift: f64 = 0.0;
    for row in &refs.table4.rows {
        let d = model::drift(row["i"], p).unwrap().value;
        worst_drift = worst_drift.max((d - row["drift"]).abs());
    }
    let mut worst_boundary: f64 = 0.0;
    for row in &refs.table3.rows {
        let b = model::disengagement_boundary(row["wm"], p).unwrap();
        worst_boundary = worst_boundary.max((b - row["boundary"]).abs());
    }
    let ic = model::critical_threshold(p).unwrap();
    outcome(
        worst_drift < 5e-4 && (ic - 1.531).abs() <= 1e-3 && worst_boundary < 1e-12,
        format!("I* = {ic:.4}, max drift diff {worst_drift:.1e}, max boundary diff {worst_boundary:.1e}"),
    )
}

fn hitting_analytics(p: &ModelParams) -> Outcome {
    let refs = ReferenceValues::bundled().unwrap();
    let t4 = tau(4.0, 4.0, p);
    let mut worst: f64 = 0.0;
    for row in &refs.table3.rows {
        let t = tau(4.0, row["wm"], p);
        worst = worst.max((t - row["expected_time"]).abs() / t);
    }
    outcome(
        (t4 - 2.4755).abs() < 5e-5 && (t4 - 2.48).abs() / 2.48 < 0.005 && worst < 0.02,
        format!("E[tau](I=4, WM=4) = {t4:.4}, worst table cell {:.2}%", 100.0 * worst),
    )
}

fn prediction_line(r: &ValidationReport, id: &str) -> String {
    let rec = r.prediction(id).unwrap();
    format!("{} {} = {:.4} (tolerance {})", id, rec.statistic, rec.value, rec.tolerance)
}

fn wm_slope(r: &ValidationReport, p: &ModelParams) -> Outcome {
    let wm = [2.0, 3.0, 4.0, 5.0, 6.0];
    let times: Vec<f64> = wm.iter().map(|&w| tau(4.0, w, p)).collect();
    let slope = linear_fit(&wm, &times).unwrap().slope;
    let rel = metric(r, "P4", "simulated slope", "rel_error");
    outcome(
        (slope - 0.756).abs() <= 0.03 && rel < 0.07 && r.prediction("P4").unwrap().passed,
        format!("analytic slope {slope:.4}, simulated slope relative error {:.2}%", 100.0 * rel),
    )
}

fn hjb_structure(p: &ModelParams) -> Outcome {
    let half = GridSpec::with_resolution(p, 100, 50);
    let (sol, deltas) = refinement_check(p, &half).unwrap();
    let argmax = sol.value_argmax_in_information(1.5, 0.0).unwrap();
    let worst = deltas.iter().map(|d| d.relative_change).fold(0.0, f64::max);
    let sol = Arc::new(sol);
    let policy = make_policy(PolicyKind::Optimal, p, Some(sol.clone())).unwrap();
    let r = evaluate_policy(&policy, p, &SimConfig::default()).unwrap();
    let v = sol.value_at(p.a0, p.i0, 0.0).unwrap();
    let verify = (r.mean_discounted_reward - v).abs() / v.abs();
    let interior = argmax > 0.0 && argmax < p.i_max;
    outcome(
        interior && sol.is_bang_bang() && worst < 0.02 && verify < 0.05,
        format!(
            "argmax_I V(1.5, I, 0) = {argmax:.3}, two-valued {}, refinement {:.2}%, verification {:.2}%",
            sol.is_bang_bang(),
            100.0 * worst,
            100.0 * verify
        ),
    )
}

fn policy_orderings(p: &ModelParams) -> Outcome {
    let sol = Arc::new(autolab_core::solve_hjb(p, &GridSpec::default_for(p)).unwrap());
    let mut failures = Vec::new();
    let mut bands = Vec::new();
    for seed in [42, 1042, 2042] {
        let cfg = SimConfig { n_paths: 1000, master_seed: seed, ..SimConfig::default() };
        let report = compare_policies(p, &cfg, sol.clone()).unwrap();
        failures.extend(report.checks.iter().filter(|c| !c.passed).map(|c| format!("seed {seed}: {}", c.name)));
        bands.push(format!(
            "{:.3}/{:.3}/{:.3}",
            report.max_transparency.disengagement_probability,
            report.optimal.disengagement_probability,
            report.no_transparency.disengagement_probability
        ));
    }
    let detail =
        if failures.is_empty() { format!("disengagement max/optimal/none per seed: {}", bands.join(", ")) } else { failures.join("; ") };
    outcome(failures.is_empty(), detail)
}

fn inverted_u(r: &ValidationReport) -> Outcome {
    let q = &r.tables.quality_peak;
    outcome(q.passed && (q.argmax - 2.0).abs() <= 0.5, format!("quality peaks at I = {} ({})", q.argmax, q.metric))
}

fn run_validate(dir: &Path, threads: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_autolab"))
        .args(["validate", "--seed", "42", "--threads", threads, "--out", dir.to_str().unwrap()])
        .output()
        .map(|o| o.status.code() == Some(0))
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let root = tempfile::TempDir::new().unwrap();
    let (a, b) = (root.path().join("threads-1"), root.path().join("threads-4"));
    if !run_validate(&a, "1") || !run_validate(&b, "4") {
        return outcome(false, "validate did not exit cleanly".into());
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let differing: Vec<String> =
        names.iter().filter(|n| fs::read(a.join(n)).ok() != fs::read(b.join(n)).ok()).map(|n| n.to_string_lossy().into_owned()).collect();
    let count_b = fs::read_dir(&b).unwrap().count();
    outcome(
        differing.is_empty() && count_b == names.len(),
        format!("{} files compared, {} differ {:?}", names.len(), differing.len(), differing),
    )
}

fn flagged_discrepancies(r: &ValidationReport) -> Outcome {
    let t = &r.tables;
    let flagged = |column: &str| t.cells().filter(|c| c.column == column && c.flagged).count();
    let columns = ["p_hit_10", "expected_a10", "quality"];
    let counts: Vec<usize> = columns.iter().map(|c| flagged(c)).collect();
    let json = r.to_json().unwrap();
    outcome(
        counts.iter().all(|&n| n > 0) && r.passed && json.contains("\"flagged\": true"),
        format!("flags raised: p_hit_10 {}, expected_a10 {}, quality {}; suite passed {}", counts[0], counts[1], counts[2], r.passed),
    )
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let o = f();
    (o, start.elapsed())
}

fn main() {
    let p = ModelParams::preset(DEFAULT_PRESET).unwrap();
    let mut results: Vec<(usize, Outcome, Duration, Duration)> = Vec::new();
    let mut push = |n: usize, (o, d): (Outcome, Duration), limit: Duration| results.push((n, o, d, limit));

    push(1, timed(|| closed_forms(&p)), Duration::from_secs(1));
    push(2, timed(|| hitting_analytics(&p)), Duration::from_secs(1));

    let start = Instant::now();
    let report = run_validation(&p, &SimConfig::default(), DEFAULT_PRESET).unwrap();
    let shared = start.elapsed();
    let pred = |id: &str| outcome(report.prediction(id).unwrap().passed, prediction_line(&report, id));
    push(3, (pred("P1"), shared), Duration::from_secs(30));
    let i4 = metric(&report, "P3", "I=4 mean in 2.49 +/- 0.1", "simulated");
    let p3 = report.prediction("P3").unwrap();
    push(
        4,
        (outcome(p3.passed && (i4 - 2.49).abs() <= 0.10, format!("{}, I=4 mean {i4:.4}", prediction_line(&report, "P3"))), shared),
        Duration::from_secs(120),
    );
    push(5, (wm_slope(&report, &p), shared), Duration::from_secs(120));
    let r2 = metric(&report, "P5", "exact sampler", "r2");
    push(6, (outcome(r2 >= 0.98, format!("exact-sampler quantile-line R^2 = {r2:.4}")), shared), Duration::from_secs(30));
    push(7, (pred("P2"), shared), Duration::from_secs(60));
    push(8, timed(|| hjb_structure(&p)), Duration::from_secs(300));
    push(9, timed(|| policy_orderings(&p)), Duration::from_secs(180));
    push(10, (inverted_u(&report), shared), Duration::from_secs(120));
    push(11, timed(determinism), Duration::from_secs(300));
    push(12, (flagged_discrepancies(&report), shared), Duration::from_secs(120));

    let mut failed = 0;
    for (n, o, d, limit) in &results {
        let ok = o.passed && d <= limit;
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {n:>2}: {} {} [{:.2}s, limit {}s]",
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            d.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
