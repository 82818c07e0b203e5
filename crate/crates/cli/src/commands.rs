//! Subcommand implementations.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use autolab_core::hjb::{read_solution, refinement_check, solve_hjb, write_solution, write_value_csv, ProbeDelta, SolveDiagnostics};
use autolab_core::model::{self, HittingTime};
use autolab_core::policy::{compare_policies_with_stats, evaluate_policy, make_policy, PolicyKind, PolicyReport};
use autolab_core::sim::{simulate_ensemble, simulate_path, write_ensemble_csv, write_path_csv};
use autolab_core::stats::linear_fit;
use autolab_core::validation::run_validation;
use autolab_core::{GridSpec, HjbSolution, ModelParams};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::output::{header, io_err, Outputs};
use crate::plots;
use crate::{CliError, What};

#[derive(Debug, Serialize)]
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

fn analysis_tables(p: &ModelParams, what: What) -> Result<Vec<(&'static str, Table)>, CliError> {
    let all = what == What::All;
    let mut out = Vec::new();
    let i_grid: Vec<f64> = (0..=50).map(|k| p.i_max * k as f64 / 50.0).collect();
    if all || what == What::CriticalThreshold {
        let i_star = model::critical_threshold(p)?;
        out.push(("critical_threshold", Table { columns: vec!["I_critical"], rows: vec![vec![i_star]] }));
    }
    if all || what == What::Drift {
        let rows = i_grid
            .iter()
            .map(|&i| {
                let d = model::drift(i, p)?;
                Ok(vec![i, d.value, if d.value >= 0.0 { 1.0 } else { 0.0 }])
            })
            .collect::<Result<_, CliError>>()?;
        out.push(("drift", Table { columns: vec!["I", "mu", "sustaining"], rows }));
    }
    if all || what == What::Moments {
        let mut rows = Vec::new();
        for i in (0..=p.i_max.floor() as usize).map(|k| k as f64) {
            for k in 0..=20 {
                let t = p.horizon * k as f64 / 20.0;
                let (loc, s2) = model::log_autonomy_params(t, i, p)?;
                rows.push(vec![i, t, model::mean_autonomy(t, i, p)?, model::variance_autonomy(t, i, p)?, loc, s2]);
            }
        }
        out.push(("moments", Table { columns: vec!["I", "t", "mean_A", "var_A", "log_mean", "log_var"], rows }));
    }
    if all || what == What::Hitting {
        let mut rows = Vec::new();
        for wm in [2.0, 3.0, 4.0, 5.0, 6.0] {
            for &i in i_grid.iter().step_by(5) {
                let tau = match model::expected_hitting_time(p.a0, i, wm, p)? {
                    HittingTime::Finite(x) => x,
                    HittingTime::Unbounded => f64::INFINITY,
                };
                let prob = model::hitting_probability(p.a0, i, wm, p.horizon, p)?;
                rows.push(vec![wm, i, model::disengagement_boundary(wm, p)?, tau, prob]);
            }
        }
        out.push(("hitting", Table { columns: vec!["wm", "I", "B", "expected_tau", "p_hit_by_horizon"], rows }));
    }
    if all || what == What::Boundary {
        let rows = (1..=8).map(|w| Ok(vec![w as f64, model::disengagement_boundary(w as f64, p)?])).collect::<Result<_, CliError>>()?;
        out.push(("boundary", Table { columns: vec!["wm", "B"], rows }));
    }
    if all || what == What::Quality {
        let rows = i_grid.iter().map(|&i| Ok(vec![i, model::quality(i, p)?])).collect::<Result<_, CliError>>()?;
        out.push(("quality", Table { columns: vec!["I", "Q"], rows }));
    }
    Ok(out)
}

pub fn analyze(cfg: &RunConfig, what: What) -> Result<(), CliError> {
    let mut out = Outputs::create(&cfg.out)?;
    let h = header(cfg);
    let tables = analysis_tables(&cfg.params, what)?;
    if what == What::CriticalThreshold {
        println!("{:.3}", tables[0].1.rows[0][0]);
    }
    match cfg.format {
        Format::Csv => {
            for (name, t) in &tables {
                out.write_table(&format!("analyze_{name}.csv"), &h, &t.columns, &t.rows)?;
            }
        }
        Format::Structured => {
            let map: serde_json::Map<String, Value> = tables
                .iter()
                .map(|(name, t)| Ok((name.to_string(), serde_json::to_value(t).map_err(|e| CliError::Io(e.to_string()))?)))
                .collect::<Result<_, CliError>>()?;
            out.write_document("analyze", Format::Structured, &h, &map)?;
        }
    }
    if what != What::CriticalThreshold {
        for (name, t) in &tables {
            match *name {
                "critical_threshold" => println!("critical threshold I* = {:.3}", t.rows[0][0]),
                _ => println!("{name}: {} rows", t.rows.len()),
            }
        }
    }
    out.write_manifest("analyze", Some(cfg), "ok")
}

fn load_solution(path: &Path, params: &ModelParams) -> Result<HjbSolution, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Input(format!("cannot open solution dump {}: {e}", path.display())))?;
    let (sol, _preset) =
        read_solution(&mut std::io::BufReader::new(file)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if sol.params != *params {
        return Err(CliError::Input(format!("solution dump {} was solved with different model parameters", path.display())));
    }
    Ok(sol)
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    report: PolicyReport,
    boundary_enabled: bool,
    horizon: f64,
    mean_absorption_time: Option<f64>,
    absorbed_paths: usize,
    censored_paths: usize,
}

pub fn simulate(cfg: &RunConfig, policy: &str, solution: Option<&Path>, dump_paths: usize) -> Result<(), CliError> {
    let mut out = Outputs::create(&cfg.out)?;
    let kind: PolicyKind = policy.parse().map_err(|e: autolab_core::Error| CliError::Input(e.to_string()))?;
    let p = &cfg.params;
    let sol = match (&kind, solution) {
        (PolicyKind::Optimal, None) => {
            return Err(CliError::Input("the optimal policy needs --solution <dump>".into()));
        }
        (PolicyKind::Optimal, Some(path)) => Some(Arc::new(load_solution(path, p)?)),
        _ => None,
    };
    let policy = make_policy(kind, p, sol)?;
    let stats = simulate_ensemble(&policy, p, &cfg.sim)?;
    let summary = SimulateSummary {
        report: PolicyReport::from_stats(&policy.kind().to_string(), &stats, p, cfg.sim.master_seed),
        boundary_enabled: cfg.sim.boundary_enabled,
        horizon: p.horizon,
        mean_absorption_time: stats.mean_absorption_time(),
        absorbed_paths: stats.absorption_times.len(),
        censored_paths: stats.censored(),
    };

    let h = header(cfg).with("policy", policy.kind());
    out.write_with("ensemble.csv", |w| write_ensemble_csv(w, &h, &stats))?;
    out.write_document("simulate_summary", cfg.format, &h, &summary)?;
    for k in 0..dump_paths.min(cfg.sim.n_paths) {
        let path = simulate_path(&policy, p, &cfg.sim, k)?;
        out.write_with(&format!("path_{k:05}.csv"), |w| write_path_csv(w, &h.clone().with("path_index", k), &path))?;
    }

    let r = &summary.report;
    println!("policy {}: {} paths, seed {}", r.policy, r.n_paths, r.seed);
    println!("  mean final autonomy      {:.4}", r.mean_final_autonomy);
    println!("  disengaged by horizon    {:.4}", r.disengagement_probability);
    match summary.mean_absorption_time {
        Some(t) => println!("  mean disengagement time  {t:.4} ({} censored)", summary.censored_paths),
        None => println!("  mean disengagement time  n/a (no path disengaged)"),
    }
    println!("  mean discounted reward   {:.4} (SE {:.4})", r.mean_discounted_reward, r.discounted_reward_se);
    out.write_manifest("simulate", Some(cfg), "ok")
}

#[derive(Debug, Serialize)]
struct Verification {
    value_at_initial_state: f64,
    simulated_discounted_reward: f64,
    standard_error: f64,
    relative_error: f64,
    n_paths: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    grid: GridSpec,
    diagnostics: SolveDiagnostics,
    bang_bang: bool,
    value_high_autonomy_moderate_information: f64,
    value_boundary_autonomy_high_information: f64,
    value_argmax_information_at_a_1_5_t0: f64,
    interior_argmax: bool,
    threshold_at_a_1_t_mid: f64,
    threshold_fit_slope: f64,
    threshold_fit_intercept: f64,
    provision_area: Vec<(f64, f64)>,
    refinement: Option<Vec<ProbeDelta>>,
    refinement_note: Option<String>,
    verification: Option<Verification>,
}

fn threshold_at(curve: &[(f64, f64)], a: f64) -> f64 {
    curve.iter().min_by(|x, y| (x.0 - a).abs().total_cmp(&(y.0 - a).abs())).map_or(f64::NAN, |c| c.1)
}

pub fn solve(cfg: &RunConfig, refine: bool, verify: bool) -> Result<(), CliError> {
    let mut out = Outputs::create(&cfg.out)?;
    let p = &cfg.params;
    let grid = cfg.grid_spec();
    grid.validate(p)?;
    let half = GridSpec { n_a: grid.n_a / 2, n_i: grid.n_i / 2, ..grid };
    let can_refine = grid.n_a.is_multiple_of(2) && grid.n_i.is_multiple_of(2) && half.validate(p).is_ok();
    let (sol, refinement, refinement_note) = if refine && can_refine {
        let (fine, deltas) = refinement_check(p, &half)?;
        (fine, Some(deltas), None)
    } else {
        let note = if refine { Some("grid cannot be halved to a valid grid; refinement skipped".to_string()) } else { None };
        (solve_hjb(p, &grid)?, None, note)
    };

    let t_mid = 0.5 * p.horizon;
    let curve = sol.threshold_curve(t_mid);
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve.iter().copied().unzip();
    let fit = linear_fit(&xs, &ys)?;
    let argmax = sol.value_argmax_in_information(1.5, 0.0)?;
    let sol = Arc::new(sol);
    let verification = if verify {
        let policy = make_policy(PolicyKind::Optimal, p, Some(sol.clone()))?;
        let r = evaluate_policy(&policy, p, &cfg.sim)?;
        let v = sol.value_at(p.a0, p.i0, 0.0)?;
        Some(Verification {
            value_at_initial_state: v,
            simulated_discounted_reward: r.mean_discounted_reward,
            standard_error: r.discounted_reward_se,
            relative_error: (r.mean_discounted_reward - v).abs() / v.abs(),
            n_paths: r.n_paths,
            seed: r.seed,
        })
    } else {
        None
    };
    let summary = SolveSummary {
        grid: sol.grid,
        diagnostics: sol.diagnostics,
        bang_bang: sol.is_bang_bang(),
        value_high_autonomy_moderate_information: sol.value_at(1.5, 1.0, 0.0)?,
        value_boundary_autonomy_high_information: sol.value_at(sol.grid.a_min, p.i_max, 0.0)?,
        value_argmax_information_at_a_1_5_t0: argmax,
        interior_argmax: argmax > 0.0 && argmax < p.i_max,
        threshold_at_a_1_t_mid: threshold_at(&curve, 1.0),
        threshold_fit_slope: fit.slope,
        threshold_fit_intercept: fit.intercept,
        provision_area: (0..sol.times.len()).map(|s| (sol.times[s], sol.provision_area(s))).collect(),
        refinement,
        refinement_note,
        verification,
    };

    let h = header(cfg)
        .with("grid", format!("{}x{} over [{}, {}] x [0, {}]", sol.grid.n_a, sol.grid.n_i, sol.grid.a_min, sol.grid.a_max, sol.grid.i_max))
        .with("n_t", sol.grid.n_t);
    out.write_with("solution.bin", |w| write_solution(w, &sol, &cfg.preset))?;
    out.write_document("solve_summary", cfg.format, &h, &summary)?;
    if cfg.format == Format::Csv {
        out.write_with("value.csv", |w| write_value_csv(w, &h, &sol, &[0.0, t_mid]))?;
    }
    plots::write_solution_figures(&mut out, &h, &sol)?;

    println!(
        "solved {}x{} grid, {} explicit steps (dt {:.3e})",
        sol.grid.n_a, sol.grid.n_i, sol.diagnostics.total_steps, sol.diagnostics.substep
    );
    println!("  V(1.5, 1.0, 0)          {:.4}", summary.value_high_autonomy_moderate_information);
    println!("  argmax_I V(1.5, I, 0)   {:.4}", argmax);
    println!("  threshold at A=1, t={t_mid}  {:.4}", summary.threshold_at_a_1_t_mid);
    if let Some(d) = &summary.refinement {
        let worst = d.iter().map(|x| x.relative_change).fold(0.0, f64::max);
        println!("  refinement max change   {:.4}%", 100.0 * worst);
    }
    if let Some(v) = &summary.verification {
        println!(
            "  simulated reward        {:.4} vs V {:.4} ({:.2}%)",
            v.simulated_discounted_reward,
            v.value_at_initial_state,
            100.0 * v.relative_error
        );
    }
    println!("wrote {}", out.path("solution.bin").display());
    out.write_manifest("solve", Some(cfg), "ok")
}

pub fn compare(cfg: &RunConfig, solution: &Path) -> Result<(), CliError> {
    let p = &cfg.params;
    let sol = Arc::new(load_solution(solution, p)?);
    let mut out = Outputs::create(&cfg.out)?;
    let (report, arms) = compare_policies_with_stats(p, &cfg.sim, sol)?;
    let h = header(cfg);
    out.write_document("compare", cfg.format, &h, &report)?;
    for (name, stats) in ["optimal", "max", "none"].iter().zip(&arms) {
        out.write_with(&format!("ensemble_{name}.csv"), |w| write_ensemble_csv(w, &h.clone().with("policy", name), stats))?;
    }
    plots::write_trajectory_figure(&mut out, &h, &report.trajectories)?;

    println!("{:<10} {:>12} {:>12} {:>12} {:>14}", "policy", "final A", "P(disengage)", "quality", "disc. reward");
    for r in [&report.optimal, &report.max_transparency, &report.no_transparency] {
        println!(
            "{:<10} {:>12.4} {:>12.4} {:>12.4} {:>14.4}",
            r.policy, r.mean_final_autonomy, r.disengagement_probability, r.mean_quality, r.mean_discounted_reward
        );
    }
    for c in &report.checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let status = if report.passed() { "ok" } else { "checks-failed" };
    out.write_manifest("compare", Some(cfg), status)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed("policy comparison ordering violated".into()))
    }
}

pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = Outputs::create(&cfg.out)?;
    let report = run_validation(&cfg.params, &cfg.sim, &cfg.preset)?;
    let h = header(cfg);
    match cfg.format {
        Format::Structured => {
            let text = report.to_json()? + "\n";
            out.write_text("validation.json", &text)?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .predictions
                .iter()
                .map(|p| {
                    vec![
                        p.id.clone(),
                        p.passed.to_string(),
                        p.skipped.is_some().to_string(),
                        autolab_core::artifact::fmt_f64(p.value),
                        autolab_core::artifact::fmt_f64(p.tolerance),
                        p.n_paths.to_string(),
                        p.seed.to_string(),
                    ]
                })
                .collect();
            out.write_with("validation_predictions.csv", |w| {
                h.write_comment(w)?;
                writeln!(w, "id,passed,skipped,value,tolerance,n_paths,seed")?;
                for r in &rows {
                    writeln!(w, "{}", r.join(","))?;
                }
                Ok(())
            })?;
            out.write_with("validation_tables.csv", |w| {
                h.write_comment(w)?;
                writeln!(w, "column,key,model,reference,check,flagged,passed")?;
                for c in report.tables.cells() {
                    writeln!(
                        w,
                        "{},{},{},{},{:?},{},{}",
                        c.column,
                        autolab_core::artifact::fmt_f64(c.key),
                        autolab_core::artifact::fmt_f64(c.model),
                        autolab_core::artifact::fmt_f64(c.reference),
                        c.check,
                        c.flagged,
                        c.passed
                    )?;
                }
                Ok(())
            })?;
        }
    }
    let summary = report.summary();
    out.write_text("validation_summary.txt", &summary)?;
    plots::write_validation_figures(&mut out, &h, &report.series)?;
    print!("{summary}");
    let status = if report.passed { "ok" } else { "checks-failed" };
    out.write_manifest("validate", Some(cfg), status)?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed("at least one prediction or table check failed".into()))
    }
}

fn read_json(dir: &Path, name: &str) -> Result<Option<Value>, CliError> {
    let path = dir.join(name);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn num(v: &Value) -> String {
    v.as_f64().map_or_else(|| v.to_string(), |x| format!("{x:.4}"))
}

/// Collates manifests and structured documents already present in `dir` into `report.md`.
pub fn report(dir: &Path) -> Result<(), CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Input(format!("cannot read output directory {}: {e}", dir.display())))?;
    let mut manifests: Vec<String> = entries
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .filter(|n| n.starts_with("manifest-") && n.ends_with(".json") && n != "manifest-report.json")
        .collect();
    manifests.sort();
    if manifests.is_empty() {
        return Err(CliError::Input(format!("no run manifests found in {}", dir.display())));
    }

    let mut md = String::from("# autolab report\n\nCollated from existing outputs; nothing was recomputed.\n\n## Runs\n\n");
    md.push_str("| command | status | preset | seed | paths | dt | overrides | files |\n|---|---|---|---|---|---|---|---|\n");
    let mut sources = Vec::new();
    for name in &manifests {
        let Some(m) = read_json(dir, name)? else { continue };
        sources.push(name.clone());
        let c = &m["config"];
        let overrides: Vec<String> = c["overrides"]
            .as_array()
            .map(|a| a.iter().map(|o| format!("{}={}", o["key"].as_str().unwrap_or("?"), o["value"].as_str().unwrap_or("?"))).collect())
            .unwrap_or_default();
        md.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            m["command"].as_str().unwrap_or("?"),
            m["status"].as_str().unwrap_or("?"),
            c["preset"].as_str().unwrap_or("-"),
            c["sim"]["master_seed"],
            c["sim"]["n_paths"],
            c["sim"]["dt"],
            if overrides.is_empty() { "-".to_string() } else { overrides.join(" ") },
            m["files"].as_array().map_or(0, |f| f.len()),
        ));
    }

    if let Some(v) = read_json(dir, "validation.json")? {
        sources.push("validation.json".into());
        md.push_str("\n## Validation\n\n| id | result | value | tolerance | statistic |\n|---|---|---|---|---|\n");
        for p in v["predictions"].as_array().into_iter().flatten() {
            let result = if !p["skipped"].is_null() {
                "SKIP"
            } else if p["passed"].as_bool() == Some(true) {
                "PASS"
            } else {
                "FAIL"
            };
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                p["id"].as_str().unwrap_or("?"),
                result,
                num(&p["value"]),
                num(&p["tolerance"]),
                p["statistic"].as_str().unwrap_or("")
            ));
        }
        let cells: Vec<&Value> =
            ["table3", "table4", "extra"].iter().flat_map(|t| v["tables"][t].as_array().into_iter().flatten()).collect();
        let flagged: Vec<String> = cells
            .iter()
            .filter(|c| c["flagged"].as_bool() == Some(true))
            .map(|c| {
                format!(
                    "{}@{} (model {}, reference {})",
                    c["column"].as_str().unwrap_or("?"),
                    c["key"],
                    num(&c["model"]),
                    num(&c["reference"])
                )
            })
            .collect();
        md.push_str(&format!(
            "\nTable cells: {} compared, {} failed, {} flagged.\n",
            cells.len(),
            cells.iter().filter(|c| c["passed"].as_bool() == Some(false)).count(),
            flagged.len()
        ));
        for f in flagged {
            md.push_str(&format!("- flagged: {f}\n"));
        }
        md.push_str(&format!("\nQuality peak at I = {}.\n", v["tables"]["quality_peak"]["argmax"]));
        md.push_str(&format!("\nOverall: {}\n", if v["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" }));
    }

    if let Some(doc) = read_json(dir, "compare.json")? {
        sources.push("compare.json".into());
        let b = &doc["body"];
        md.push_str("\n## Policy comparison\n\n| policy | final A | P(disengage) | quality | discounted reward |\n|---|---|---|---|---|\n");
        for arm in ["optimal", "max_transparency", "no_transparency"] {
            let r = &b[arm];
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                r["policy"].as_str().unwrap_or(arm),
                num(&r["mean_final_autonomy"]),
                num(&r["disengagement_probability"]),
                num(&r["mean_quality"]),
                num(&r["mean_discounted_reward"])
            ));
        }
        md.push('\n');
        for c in b["checks"].as_array().into_iter().flatten() {
            md.push_str(&format!(
                "- {} {} ({})\n",
                if c["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" },
                c["name"].as_str().unwrap_or("?"),
                c["detail"].as_str().unwrap_or("")
            ));
        }
    }

    if let Some(doc) = read_json(dir, "solve_summary.json")? {
        sources.push("solve_summary.json".into());
        let b = &doc["body"];
        md.push_str("\n## HJB solution\n\n");
        md.push_str(&format!("- grid: {} x {}, {} stored intervals\n", b["grid"]["n_a"], b["grid"]["n_i"], b["grid"]["n_t"]));
        md.push_str(&format!("- bang-bang: {}\n", b["bang_bang"]));
        md.push_str(&format!("- V(1.5, 1.0, 0) = {}\n", num(&b["value_high_autonomy_moderate_information"])));
        md.push_str(&format!(
            "- argmax over I of V(1.5, I, 0) = {} (interior: {})\n",
            num(&b["value_argmax_information_at_a_1_5_t0"]),
            b["interior_argmax"]
        ));
        md.push_str(&format!("- threshold at A = 1, mid-horizon: {}\n", num(&b["threshold_at_a_1_t_mid"])));
        for d in b["refinement"].as_array().into_iter().flatten() {
            md.push_str(&format!(
                "- refinement at ({}, {}, {}): {}%\n",
                d["a"],
                d["i"],
                d["t"],
                num(&(d["relative_change"].as_f64().unwrap_or(f64::NAN) * 100.0).into())
            ));
        }
        if !b["verification"].is_null() {
            let v = &b["verification"];
            md.push_str(&format!(
                "- simulated reward {} vs V(a0, i0, 0) {} (relative error {})\n",
                num(&v["simulated_discounted_reward"]),
                num(&v["value_at_initial_state"]),
                num(&v["relative_error"])
            ));
        }
    }

    if let Some(doc) = read_json(dir, "simulate_summary.json")? {
        sources.push("simulate_summary.json".into());
        let b = &doc["body"];
        let r = &b["report"];
        md.push_str("\n## Simulation\n\n");
        md.push_str(&format!(
            "- policy {}: final A {}, P(disengage) {}, mean disengagement time {}\n",
            r["policy"].as_str().unwrap_or("?"),
            num(&r["mean_final_autonomy"]),
            num(&r["disengagement_probability"]),
            num(&b["mean_absorption_time"])
        ));
    }

    let mut out = Outputs::create(dir)?;
    out.write_text("report.md", &md)?;
    let sources = serde_json::json!({ "command": "report", "sources": sources, "files": out.files() });
    let path = out.path("manifest-report.json");
    fs::write(&path, serde_json::to_string_pretty(&sources).map_err(|e| CliError::Io(e.to_string()))? + "\n")
        .map_err(|e| io_err(&path, e))?;
    println!("wrote {}", out.path("report.md").display());
    Ok(())
}
