//! Statistical checks of the model's five predictions and reproduction of the
//! working-memory and information-level tables.
//!
//! Every check is policy-free: information is pinned per condition and no HJB solve is
//! needed. All randomness flows from the configured master seed, and conditions share it
//! (common random numbers), so a report is reproducible from its recorded seed.

pub mod tables;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{ARTIFACT_VERSION, PSI_CONVENTION};
use crate::error::{Error, Result};
use crate::model;
use crate::params::ModelParams;
use crate::rng::{derive_seed, GENERATOR_ID};
use crate::sim::{sample_exact_ensemble, simulate_ensemble, PinnedInformation, SimConfig};
use crate::stats::{bootstrap_variance_se, linear_fit, mean_variance, normal_qq_points, normal_qq_r2};

pub use tables::{reproduce_tables, Cell, CellCheck, ReferenceValues, TableReproduction};

/// Information levels of the trajectory and variance checks.
pub const P1_LEVELS: [f64; 5] = [0.0, 1.0, 2.0, 3.0, 4.0];
pub const P1_MAX_REL_ERROR: f64 = 0.02;
pub const P1_DRIFT_TOLERANCE: f64 = 0.01;
pub const P2_BOOTSTRAP_RESAMPLES: usize = 1000;
pub const P2_SE_MULTIPLIER: f64 = 3.0;
/// Depleting-regime information levels of the hitting-time check.
pub const P3_LEVELS: [f64; 6] = [2.5, 3.0, 3.5, 4.0, 4.5, 5.0];
pub const P3_MAX_REL_ERROR: f64 = 0.07;
/// Simulated mean hitting time at `I = 4` must lie in `target ± band`.
pub const P3_I4_TARGET: f64 = 2.49;
pub const P3_I4_BAND: f64 = 0.10;
/// Horizon used for hitting-time experiments; long enough that censoring is negligible.
pub const HITTING_HORIZON: f64 = 100.0;
pub const P4_WM_LEVELS: [f64; 5] = [2.0, 3.0, 4.0, 5.0, 6.0];
pub const P4_INFORMATION: f64 = 4.0;
pub const P4_SLOPE_RANGE: (f64, f64) = (0.72, 0.80);
pub const P4_SIM_REL_ERROR: f64 = 0.07;
pub const P5_INFORMATION: f64 = 2.0;
pub const P5_MIN_R2: f64 = 0.98;

/// One condition (pinned information level, working memory, sampler) of a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
}

impl Condition {
    fn new(label: impl Into<String>, passed: bool, metrics: &[(&str, f64)]) -> Self {
        Self { label: label.into(), passed, metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }
}

/// Ensemble moments at one probe time, for redrawing the trajectory and variance panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub i: f64,
    pub t: f64,
    pub mean: f64,
    pub mean_theory: f64,
    pub variance: f64,
    pub variance_theory: f64,
    /// Bootstrap standard error of `variance` (zero when not computed).
    pub variance_se: f64,
}

/// Simulated against closed-form mean hitting time for one (information, capacity) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingPoint {
    pub i: f64,
    pub wm: f64,
    pub simulated: f64,
    pub theory: f64,
}

/// Raw series behind the checks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationSeries {
    pub moments: Vec<MomentPoint>,
    pub hitting_by_information: Vec<HittingPoint>,
    pub hitting_by_capacity: Vec<HittingPoint>,
    /// (theoretical normal quantile, standardised sample quantile) of exact log-autonomy.
    pub qq: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub description: String,
    /// Name of the headline statistic.
    pub statistic: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub n_paths: usize,
    pub seed: u64,
    /// Set when the check could not be carried out; the record then counts as passed.
    pub skipped: Option<String>,
    /// Remarks such as degenerate passes.
    pub note: Option<String>,
    pub conditions: Vec<Condition>,
}

impl PredictionRecord {
    fn new(id: &str, description: &str, statistic: &str, tolerance: f64, cfg: &SimConfig) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            statistic: statistic.into(),
            value: f64::NAN,
            tolerance,
            passed: false,
            n_paths: cfg.n_paths,
            seed: cfg.master_seed,
            skipped: None,
            note: None,
            conditions: Vec::new(),
        }
    }

    fn skip(mut self, reason: &str) -> Self {
        self.skipped = Some(reason.into());
        self.passed = true;
        self.value = 0.0;
        self
    }

    fn finish(mut self, value: f64) -> Self {
        self.value = value;
        self.passed = self.conditions.iter().all(|c| c.passed);
        self
    }

    pub fn condition(&self, label: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.label == label)
    }
}

fn probe_times(horizon: f64) -> Vec<f64> {
    (1..=10).map(|k| horizon * k as f64 / 10.0).collect()
}

fn require_paths(cfg: &SimConfig, min: usize) -> Result<()> {
    if cfg.n_paths < min {
        return Err(Error::InvalidInput(format!("at least {min} paths required, got {}", cfg.n_paths)));
    }
    Ok(())
}

/// Mean trajectories: exact-sampler ensemble means against the closed-form mean at ten
/// probe times, and the exponent fitted to the log-means against the drift.
pub fn validate_p1(params: &ModelParams, cfg: &SimConfig) -> Result<PredictionRecord> {
    p1(params, cfg, &mut ValidationSeries::default())
}

fn p1(params: &ModelParams, cfg: &SimConfig, series: &mut ValidationSeries) -> Result<PredictionRecord> {
    params.validate_structure()?;
    require_paths(cfg, 1)?;
    let times = probe_times(params.horizon);
    let mut rec = PredictionRecord::new(
        "P1",
        "exact-sampler mean autonomy follows a0 exp(mu(I) t)",
        "max relative error of the ensemble mean",
        P1_MAX_REL_ERROR,
        cfg,
    );
    let mut worst = 0.0f64;
    for &i in &P1_LEVELS {
        let ens = sample_exact_ensemble(i, &times, cfg.n_paths, cfg.master_seed, params)?;
        let mut max_err = 0.0f64;
        let mut log_means = Vec::with_capacity(times.len());
        for (k, &t) in times.iter().enumerate() {
            let (m, v) = mean_variance(&ens.values[k]);
            let theory = model::mean_autonomy(t, i, params)?;
            max_err = max_err.max(((m - theory) / theory).abs());
            series.moments.push(MomentPoint {
                i,
                t,
                mean: m,
                mean_theory: theory,
                variance: v,
                variance_theory: model::variance_autonomy(t, i, params)?,
                variance_se: 0.0,
            });
            log_means.push(m.ln());
        }
        let mu_hat = linear_fit(&times, &log_means)?.slope;
        let mu = model::drift(i, params)?.value;
        let passed = max_err <= P1_MAX_REL_ERROR && (mu_hat - mu).abs() <= P1_DRIFT_TOLERANCE;
        worst = worst.max(max_err);
        rec.conditions.push(Condition::new(format!("I={i}"), passed, &[("max_rel_error", max_err), ("mu_hat", mu_hat), ("mu", mu)]));
    }
    Ok(rec.finish(worst))
}

/// Variance growth: per-time exact-sampler variances against the closed-form variance
/// (bootstrap standard errors), and strict growth wherever the closed form grows over the
/// probe grid.
pub fn validate_p2(params: &ModelParams, cfg: &SimConfig) -> Result<PredictionRecord> {
    p2(params, cfg, &mut ValidationSeries::default())
}

fn p2(params: &ModelParams, cfg: &SimConfig, series: &mut ValidationSeries) -> Result<PredictionRecord> {
    params.validate_structure()?;
    require_paths(cfg, 2)?;
    let times = probe_times(params.horizon);
    let mut rec = PredictionRecord::new(
        "P2",
        "ensemble variance grows and matches a0^2 exp(2 mu t)(exp(sigma_a^2 t) - 1)",
        "max |sample - theory| in bootstrap standard errors",
        P2_SE_MULTIPLIER,
        cfg,
    );
    if params.sigma_a == 0.0 {
        for &i in &P1_LEVELS {
            rec.conditions.push(Condition::new(format!("I={i}"), true, &[("max_z", 0.0)]));
        }
        rec.note = Some("degenerate: sigma_a = 0, every variance is zero; monotonicity holds trivially".into());
        return Ok(rec.finish(0.0));
    }
    let mut worst = 0.0f64;
    for (c, &i) in P1_LEVELS.iter().enumerate() {
        let ens = sample_exact_ensemble(i, &times, cfg.n_paths, cfg.master_seed, params)?;
        let cells: Vec<(f64, f64, f64)> = times
            .par_iter()
            .enumerate()
            .map(|(k, &t)| {
                let var = mean_variance(&ens.values[k]).1;
                let se = bootstrap_variance_se(&ens.values[k], P2_BOOTSTRAP_RESAMPLES, derive_seed(cfg.master_seed, (c * 100 + k) as u64));
                let theory = model::variance_autonomy(t, i, params)?;
                Ok((var, se, theory))
            })
            .collect::<Result<_>>()?;
        for (&t, &(_, se, _)) in times.iter().zip(&cells) {
            if let Some(pt) = series.moments.iter_mut().find(|pt| pt.i == i && pt.t == t) {
                pt.variance_se = se;
            }
        }
        let max_z = cells.iter().map(|&(v, se, th)| (v - th).abs() / se.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        let theory_increasing = cells.windows(2).all(|w| w[1].2 > w[0].2);
        let sample_increasing = cells.windows(2).all(|w| w[1].0 > w[0].0);
        let mono_ok = !theory_increasing || sample_increasing;
        worst = worst.max(max_z);
        rec.conditions.push(Condition::new(
            format!("I={i}"),
            max_z <= P2_SE_MULTIPLIER && mono_ok,
            &[
                ("max_z", max_z),
                ("theory_increasing", f64::from(u8::from(theory_increasing))),
                ("sample_increasing", f64::from(u8::from(sample_increasing))),
                ("var_t1", cells[0].0),
                ("var_t1_theory", cells[0].2),
            ],
        ));
    }
    rec.note = Some(
        "strict growth is required where the closed-form variance grows over the probe times; \
         elsewhere the closed form itself declines and only agreement is checked"
            .into(),
    );
    Ok(rec.finish(worst))
}

fn hitting_config(cfg: &SimConfig) -> SimConfig {
    let n = (HITTING_HORIZON / cfg.dt).round().max(1.0) as usize;
    SimConfig { record_stride: n, boundary_enabled: true, ..*cfg }
}

/// Simulated mean hitting time with information pinned at `i`; `None` when nothing is absorbed.
fn simulated_hitting_time(params: &ModelParams, i: f64, cfg: &SimConfig) -> Result<(Option<f64>, usize)> {
    let p = ModelParams { horizon: HITTING_HORIZON, ..*params };
    let stats = simulate_ensemble(&PinnedInformation(i), &p, &hitting_config(cfg))?;
    Ok((stats.mean_absorption_time(), stats.censored()))
}

/// Disengagement timing in the depleting regime: simulated mean hitting time against the
/// closed form, worst case over the sweep.
pub fn validate_p3(params: &ModelParams, cfg: &SimConfig) -> Result<PredictionRecord> {
    p3(params, cfg, &mut ValidationSeries::default())
}

fn p3(params: &ModelParams, cfg: &SimConfig, series: &mut ValidationSeries) -> Result<PredictionRecord> {
    params.validate_structure()?;
    require_paths(cfg, 1)?;
    let mut rec = PredictionRecord::new(
        "P3",
        "simulated mean time to disengagement matches ln(a0/B)/(sigma_a^2/2 - mu)",
        "max relative error of the mean hitting time",
        P3_MAX_REL_ERROR,
        cfg,
    );
    let mut worst = 0.0f64;
    for &i in &P3_LEVELS {
        let label = format!("I={i}");
        let Some(theory) = model::expected_hitting_time(params.a0, i, params.wm, params)?.finite() else {
            rec.conditions.push(Condition::new(format!("{label} (sustaining, excluded)"), true, &[]));
            continue;
        };
        let (sim, censored) = simulated_hitting_time(params, i, cfg)?;
        let Some(sim) = sim else {
            rec.conditions.push(Condition::new(label, false, &[("theory", theory), ("censored", censored as f64)]));
            worst = f64::INFINITY;
            continue;
        };
        let err = ((sim - theory) / theory).abs();
        worst = worst.max(err);
        series.hitting_by_information.push(HittingPoint { i, wm: params.wm, simulated: sim, theory });
        rec.conditions.push(Condition::new(
            label,
            err <= P3_MAX_REL_ERROR,
            &[("simulated", sim), ("theory", theory), ("rel_error", err), ("censored", censored as f64)],
        ));
        if i == P4_INFORMATION {
            rec.conditions.push(Condition::new(
                format!("I={i} mean in {P3_I4_TARGET} +/- {P3_I4_BAND}"),
                (sim - P3_I4_TARGET).abs() <= P3_I4_BAND,
                &[("simulated", sim), ("target", P3_I4_TARGET)],
            ));
        }
    }
    rec.note = Some(format!("hitting horizon extended to {HITTING_HORIZON}; crossing times interpolated in log space"));
    Ok(rec.finish(worst))
}

/// Working-memory effect: slope of the mean hitting time on capacity, closed form and
/// simulated, at `I = 4`.
pub fn validate_p4(params: &ModelParams, cfg: &SimConfig) -> Result<PredictionRecord> {
    p4(params, cfg, &mut ValidationSeries::default())
}

fn p4(params: &ModelParams, cfg: &SimConfig, series: &mut ValidationSeries) -> Result<PredictionRecord> {
    params.validate_structure()?;
    require_paths(cfg, 1)?;
    let mut rec = PredictionRecord::new(
        "P4",
        "each working-memory item delays disengagement by a constant amount",
        "relative error of the simulated slope",
        P4_SIM_REL_ERROR,
        cfg,
    );
    let mut analytic = Vec::new();
    let mut simulated = Vec::new();
    for &wm in &P4_WM_LEVELS {
        let theory = model::expected_hitting_time(params.a0, P4_INFORMATION, wm, params)?
            .finite()
            .ok_or_else(|| Error::InvalidInput("working-memory sweep requires the depleting regime at I = 4".into()))?;
        let p = ModelParams { wm, ..*params };
        p.validate_structure()?;
        let (sim, censored) = simulated_hitting_time(&p, P4_INFORMATION, cfg)?;
        let sim = sim.unwrap_or(f64::NAN);
        series.hitting_by_capacity.push(HittingPoint { i: P4_INFORMATION, wm, simulated: sim, theory });
        rec.conditions.push(Condition::new(
            format!("WM={wm}"),
            sim.is_finite(),
            &[("theory", theory), ("simulated", sim), ("censored", censored as f64)],
        ));
        analytic.push(theory);
        simulated.push(sim);
    }
    let a_slope = linear_fit(&P4_WM_LEVELS, &analytic)?.slope;
    let s_slope = linear_fit(&P4_WM_LEVELS, &simulated).map(|f| f.slope).unwrap_or(f64::NAN);
    let err = ((s_slope - a_slope) / a_slope).abs();
    rec.conditions.push(Condition::new(
        "analytic slope",
        (P4_SLOPE_RANGE.0..=P4_SLOPE_RANGE.1).contains(&a_slope),
        &[("slope", a_slope), ("lower", P4_SLOPE_RANGE.0), ("upper", P4_SLOPE_RANGE.1)],
    ));
    rec.conditions.push(Condition::new("simulated slope", err <= P4_SIM_REL_ERROR, &[("slope", s_slope), ("rel_error", err)]));
    Ok(rec.finish(if err.is_nan() { f64::INFINITY } else { err }))
}

/// Log-normality of terminal autonomy at `I = 2`: normal quantile-line R² for the exact
/// sampler and for the Euler ensemble.
pub fn validate_p5(params: &ModelParams, cfg: &SimConfig) -> Result<PredictionRecord> {
    p5(params, cfg, &mut ValidationSeries::default())
}

fn p5(params: &ModelParams, cfg: &SimConfig, series: &mut ValidationSeries) -> Result<PredictionRecord> {
    params.validate_structure()?;
    let mut rec =
        PredictionRecord::new("P5", "log-autonomy at the horizon is normally distributed", "min quantile-line R^2", P5_MIN_R2, cfg);
    if params.sigma_a == 0.0 {
        return Ok(rec.skip("sigma_a = 0: terminal autonomy is deterministic, no distribution to test"));
    }
    require_paths(cfg, 3)?;
    let exact = sample_exact_ensemble(P5_INFORMATION, &[params.horizon], cfg.n_paths, cfg.master_seed, params)?;
    let logs: Vec<f64> = exact.values[0].iter().map(|a| a.ln()).collect();
    let r2_exact = normal_qq_r2(&logs)?;
    series.qq = normal_qq_points(&logs)?;
    let n = (params.horizon / cfg.dt).round().max(1.0) as usize;
    let euler_cfg = SimConfig { boundary_enabled: false, record_stride: n, ..*cfg };
    let stats = simulate_ensemble(&PinnedInformation(P5_INFORMATION), params, &euler_cfg)?;
    let logs: Vec<f64> = stats.final_a.iter().map(|a| a.ln()).collect();
    let r2_euler = normal_qq_r2(&logs)?;
    rec.conditions.push(Condition::new("exact sampler", r2_exact >= P5_MIN_R2, &[("r2", r2_exact)]));
    rec.conditions.push(Condition::new("log-space Euler", r2_euler >= P5_MIN_R2, &[("r2", r2_euler)]));
    // The tolerance is a lower bound, so the headline is the smaller R².
    Ok(rec.finish(r2_exact.min(r2_euler)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub artifact_version: String,
    pub preset: String,
    pub psi_convention: String,
    pub generator: String,
    pub seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    pub params: ModelParams,
    pub predictions: Vec<PredictionRecord>,
    pub tables: TableReproduction,
    pub series: ValidationSeries,
    pub passed: bool,
}

impl ValidationReport {
    pub fn prediction(&self, id: &str) -> Option<&PredictionRecord> {
        self.predictions.iter().find(|p| p.id == id)
    }

    /// Structured, machine-readable form (JSON).
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    /// Human-readable summary table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "validation  preset={}  seed={}  paths={}  dt={}", self.preset, self.seed, self.n_paths, self.dt);
        let _ = writeln!(s, "{:<4} {:<6} {:>12} {:>10}  statistic", "id", "result", "value", "tolerance");
        for p in &self.predictions {
            let result = match (&p.skipped, p.passed) {
                (Some(_), _) => "SKIP",
                (None, true) => "PASS",
                (None, false) => "FAIL",
            };
            let _ = writeln!(s, "{:<4} {:<6} {:>12.6} {:>10.4}  {}", p.id, result, p.value, p.tolerance, p.statistic);
            for c in &p.conditions {
                let metrics: Vec<String> = c.metrics.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
                let _ = writeln!(s, "       {} {:<28} {}", if c.passed { "ok  " } else { "FAIL" }, c.label, metrics.join(" "));
            }
            if let Some(r) = &p.skipped {
                let _ = writeln!(s, "       skipped: {r}");
            }
            if let Some(n) = &p.note {
                let _ = writeln!(s, "       note: {n}");
            }
        }
        let _ = writeln!(s, "\ntables (flag = disagreement beyond the reference's rounding)");
        let _ = writeln!(s, "{:<22} {:>6} {:>12} {:>10} {:<14} {:<5} result", "column", "key", "model", "reference", "check", "flag");
        for c in self.tables.cells() {
            let _ = writeln!(
                s,
                "{:<22} {:>6} {:>12.6} {:>10.4} {:<14} {:<5} {}",
                c.column,
                c.key,
                c.model,
                c.reference,
                format!("{:?}", c.check).to_lowercase(),
                if c.flagged { "yes" } else { "no" },
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        let q = &self.tables.quality_peak;
        let _ = writeln!(
            s,
            "quality peak at I={} (target {} +/- {}): {}",
            q.argmax,
            q.target,
            q.tolerance,
            if q.passed { "PASS" } else { "FAIL" }
        );
        let _ = writeln!(s, "overall: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

/// Runs P1 to P5 and the table reproductions.
pub fn run_validation(params: &ModelParams, cfg: &SimConfig, preset: &str) -> Result<ValidationReport> {
    cfg.validate(params.horizon)?;
    let mut series = ValidationSeries::default();
    let predictions = vec![
        p1(params, cfg, &mut series)?,
        p2(params, cfg, &mut series)?,
        p3(params, cfg, &mut series)?,
        p4(params, cfg, &mut series)?,
        p5(params, cfg, &mut series)?,
    ];
    let tables = reproduce_tables(params, cfg)?;
    let passed = predictions.iter().all(|p| p.passed) && tables.passed();
    Ok(ValidationReport {
        artifact_version: ARTIFACT_VERSION.into(),
        preset: preset.into(),
        psi_convention: PSI_CONVENTION.into(),
        generator: GENERATOR_ID.into(),
        seed: cfg.master_seed,
        n_paths: cfg.n_paths,
        dt: cfg.dt,
        params: *params,
        predictions,
        tables,
        series,
        passed,
    })
}
