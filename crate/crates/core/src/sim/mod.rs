//! Sample paths of the coupled autonomy / information system.
//!
//! Autonomy is advanced in log space, so it stays positive for any step size and is exact in
//! distribution whenever information is held constant over the step. Information takes an
//! Euler step driven by the control and by noise correlated with the autonomy noise, and is
//! clamped to `[0, i_max]`.

mod io;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model;
use crate::params::ModelParams;
use crate::rng::substream;
use crate::stats::mean_variance;

pub use io::{write_ensemble_csv, write_path_csv};

/// A feedback rule for the information-provision rate.
pub trait Control: Sync {
    /// Rate `u` at observed state `(a, i, t)`. Must lie in `[0, u_max]`.
    fn control(&self, a: f64, i: f64, t: f64) -> f64;

    /// When `Some(level)`, the simulator holds information fixed at `level` and ignores the
    /// control and the information noise.
    fn pinned_information(&self) -> Option<f64> {
        None
    }
}

impl<F> Control for F
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    fn control(&self, a: f64, i: f64, t: f64) -> f64 {
        self(a, i, t)
    }
}

/// Holds information at a fixed level; the control is irrelevant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinnedInformation(pub f64);

impl Control for PinnedInformation {
    fn control(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }

    fn pinned_information(&self) -> Option<f64> {
        Some(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Requested step; the actual step is `horizon / round(horizon / dt)`.
    pub dt: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Steps between recorded samples.
    pub record_stride: usize,
    pub boundary_enabled: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 0.01, n_paths: 5000, master_seed: 42, record_stride: 10, boundary_enabled: true }
    }
}

impl SimConfig {
    pub fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= horizon) {
            return Err(Error::InvalidInput(format!("dt must lie in (0, horizon = {horizon}], got {}", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidInput("n_paths must be >= 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidInput("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps and the step length actually used over `horizon`.
    pub fn steps(&self, horizon: f64) -> (usize, f64) {
        let n = (horizon / self.dt).round().max(1.0) as usize;
        (n, horizon / n as f64)
    }

    /// Times at which every path is sampled: each `record_stride`-th step plus the last one.
    pub fn record_times(&self, horizon: f64) -> Vec<f64> {
        record_steps(self, horizon).into_iter().map(|k| step_time(k, horizon, self.steps(horizon).0)).collect()
    }
}

fn record_steps(cfg: &SimConfig, horizon: f64) -> Vec<usize> {
    let (n, _) = cfg.steps(horizon);
    let mut steps: Vec<usize> = (0..=n).step_by(cfg.record_stride).collect();
    if *steps.last().unwrap_or(&0) != n {
        steps.push(n);
    }
    steps
}

#[inline]
fn step_time(k: usize, horizon: f64, n: usize) -> f64 {
    if k == n {
        horizon
    } else {
        horizon * k as f64 / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub a: f64,
    pub i: f64,
    /// Control applied over the step starting at `t` (0 once absorbed or pinned).
    pub u: f64,
    pub absorbed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorption {
    /// Interpolated crossing time.
    pub time: f64,
    /// Index of the step during which the crossing happened.
    pub step: usize,
}

/// Running integrals along one path up to `min(tau, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PathTotals {
    /// Integral of `exp(-delta s) r(A_s, I_s, u_s)`.
    pub discounted_reward: f64,
    /// Integral of `quality(I_s)`.
    pub quality_integral: f64,
    /// `min(tau, T)`.
    pub engaged_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub samples: Vec<Sample>,
    pub absorption: Option<Absorption>,
    /// `(A, I)` at the horizon, or `(B, I)` at absorption.
    pub terminal: (f64, f64),
    pub totals: PathTotals,
}

/// Autonomy at time `t` under constant information, from a standard normal draw `z`
/// (the Brownian value at `t` divided by `sqrt(t)`).
pub fn exact_constant_i_sample(t: f64, i: f64, z: f64, params: &ModelParams) -> Result<f64> {
    let (loc, s2) = model::log_autonomy_params(t, i, params)?;
    Ok((loc + s2.sqrt() * z).exp())
}

/// Simulates path number `path_index` of the ensemble described by `cfg`.
pub fn simulate_path<C: Control + ?Sized>(policy: &C, params: &ModelParams, cfg: &SimConfig, path_index: usize) -> Result<Path> {
    params.validate_structure()?;
    cfg.validate(params.horizon)?;
    if path_index >= cfg.n_paths {
        return Err(Error::InvalidInput(format!("path index {path_index} >= n_paths {}", cfg.n_paths)));
    }
    run_path(policy, params, cfg, path_index)
}

fn run_path<C: Control + ?Sized>(policy: &C, p: &ModelParams, cfg: &SimConfig, path_index: usize) -> Result<Path> {
    let horizon = p.horizon;
    let (n, h) = cfg.steps(horizon);
    let sqrt_h = h.sqrt();
    let pinned = policy.pinned_information();
    if let Some(level) = pinned {
        if !(0.0..=p.i_max).contains(&level) {
            return Err(Error::InvalidInput(format!("pinned information {level} outside [0, {}]", p.i_max)));
        }
    }
    let rho_perp = (1.0 - p.rho * p.rho).max(0.0).sqrt();
    let half_s2 = 0.5 * p.sigma_a * p.sigma_a;
    let ln_b = p.boundary().ln();
    let mut rng = substream(cfg.master_seed, path_index as u64);

    let mut ln_a = p.a0.ln();
    let mut i = pinned.unwrap_or(p.i0);
    let mut totals = PathTotals::default();
    let mut absorption = None;
    let mut samples = Vec::with_capacity(n / cfg.record_stride + 2);

    for k in 0..n {
        let t = step_time(k, horizon, n);
        let a = ln_a.exp();
        let u = if pinned.is_some() { 0.0 } else { policy.control(a, i, t) };
        if !(0.0..=p.u_max).contains(&u) {
            return Err(Error::ControlOutOfRange { u, u_max: p.u_max, t });
        }
        if k % cfg.record_stride == 0 {
            samples.push(Sample { t, a, i, u, absorbed: false });
        }

        let z_a: f64 = rng.sample(StandardNormal);
        let z_i: f64 = rng.sample(StandardNormal);
        let ln_next = ln_a + (p.drift_rate(i) - half_s2) * h + p.sigma_a * sqrt_h * z_a;

        // Fraction of this step spent above the boundary.
        let mut frac = 1.0;
        if cfg.boundary_enabled && ln_next <= ln_b {
            frac = if ln_a > ln_next { ((ln_a - ln_b) / (ln_a - ln_next)).clamp(0.0, 1.0) } else { 0.0 };
            absorption = Some(Absorption { time: t + frac * h, step: k });
        }
        let seg = frac * h;
        let q = p.quality_value(i);
        totals.discounted_reward += (-p.delta * t).exp() * (q - p.kappa * (p.a0 - a) * (p.a0 - a) - p.c * u) * seg;
        totals.quality_integral += q * seg;
        totals.engaged_time += seg;

        if let Some(abs) = absorption {
            return Ok(freeze(samples, abs, ln_b.exp(), i, totals, cfg, horizon, n, k + 1));
        }
        ln_a = ln_next;
        if pinned.is_none() {
            let z_corr = p.rho * z_a + rho_perp * z_i;
            i = (i + p.alpha0 * u * h + p.sigma_i * sqrt_h * z_corr).clamp(0.0, p.i_max);
        }
    }

    let a = ln_a.exp();
    let u_last = if pinned.is_some() { 0.0 } else { policy.control(a, i, horizon) };
    if !(0.0..=p.u_max).contains(&u_last) {
        return Err(Error::ControlOutOfRange { u: u_last, u_max: p.u_max, t: horizon });
    }
    samples.push(Sample { t: horizon, a, i, u: u_last, absorbed: false });
    Ok(Path { samples, absorption: None, terminal: (a, i), totals })
}

/// Fills the remaining record times with the frozen absorbed state.
#[allow(clippy::too_many_arguments)]
fn freeze(
    mut samples: Vec<Sample>,
    abs: Absorption,
    b: f64,
    i: f64,
    totals: PathTotals,
    cfg: &SimConfig,
    horizon: f64,
    n: usize,
    next_step: usize,
) -> Path {
    let first = next_step.div_ceil(cfg.record_stride) * cfg.record_stride;
    for k in (first..n).step_by(cfg.record_stride) {
        samples.push(Sample { t: step_time(k, horizon, n), a: b, i, u: 0.0, absorbed: true });
    }
    samples.push(Sample { t: horizon, a: b, i, u: 0.0, absorbed: true });
    Path { samples, absorption: Some(abs), terminal: (b, i), totals }
}

/// Aggregate statistics over an ensemble. Absorbed paths enter the per-time moments frozen
/// at the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_a: Vec<f64>,
    pub var_a: Vec<f64>,
    pub mean_i: Vec<f64>,
    /// Fraction of paths absorbed at or before each record time.
    pub absorbed_by_time: Vec<f64>,
    /// Fraction absorbed before the horizon.
    pub absorbed_fraction: f64,
    /// Crossing times of the absorbed paths, in path order.
    pub absorption_times: Vec<f64>,
    pub n_paths: usize,
    /// Per-path terminal autonomy (`B` for absorbed paths).
    pub final_a: Vec<f64>,
    pub discounted_reward: Vec<f64>,
    pub quality_integral: Vec<f64>,
    pub engaged_time: Vec<f64>,
}

impl EnsembleStats {
    pub fn mean_absorption_time(&self) -> Option<f64> {
        (!self.absorption_times.is_empty()).then(|| mean_variance(&self.absorption_times).0)
    }

    pub fn censored(&self) -> usize {
        self.n_paths - self.absorption_times.len()
    }
}

/// Runs every path of the ensemble (in parallel) and aggregates in path order, so the result
/// does not depend on the number of worker threads.
pub fn simulate_ensemble<C: Control + ?Sized>(policy: &C, params: &ModelParams, cfg: &SimConfig) -> Result<EnsembleStats> {
    params.validate_structure()?;
    cfg.validate(params.horizon)?;
    let paths = (0..cfg.n_paths).into_par_iter().map(|k| run_path(policy, params, cfg, k)).collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&paths))
}

fn aggregate(paths: &[Path]) -> EnsembleStats {
    let times: Vec<f64> = paths[0].samples.iter().map(|s| s.t).collect();
    let m = times.len();
    let mut mean_a = Vec::with_capacity(m);
    let mut var_a = Vec::with_capacity(m);
    let mut mean_i = Vec::with_capacity(m);
    let mut absorbed_by_time = Vec::with_capacity(m);
    let mut column = vec![0.0; paths.len()];
    for k in 0..m {
        for (slot, p) in column.iter_mut().zip(paths) {
            *slot = p.samples[k].a;
        }
        let (mean, var) = mean_variance(&column);
        mean_a.push(mean);
        var_a.push(var);
        mean_i.push(paths.iter().map(|p| p.samples[k].i).sum::<f64>() / paths.len() as f64);
        let t = times[k];
        let absorbed = paths.iter().filter(|p| p.absorption.is_some_and(|a| a.time <= t)).count();
        absorbed_by_time.push(absorbed as f64 / paths.len() as f64);
    }
    let absorption_times: Vec<f64> = paths.iter().filter_map(|p| p.absorption.map(|a| a.time)).collect();
    EnsembleStats {
        times,
        mean_a,
        var_a,
        mean_i,
        absorbed_by_time,
        absorbed_fraction: absorption_times.len() as f64 / paths.len() as f64,
        absorption_times,
        n_paths: paths.len(),
        final_a: paths.iter().map(|p| p.terminal.0).collect(),
        discounted_reward: paths.iter().map(|p| p.totals.discounted_reward).collect(),
        quality_integral: paths.iter().map(|p| p.totals.quality_integral).collect(),
        engaged_time: paths.iter().map(|p| p.totals.engaged_time).collect(),
    }
}

/// Boundary-free draws of `A_t` at a set of times under constant information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactEnsemble {
    pub times: Vec<f64>,
    /// `values[k][path]` is autonomy at `times[k]`.
    pub values: Vec<Vec<f64>>,
}

/// Samples `n_paths` exact paths at increasing positive `times`, using the same per-path
/// substreams as the simulator.
pub fn sample_exact_ensemble(i: f64, times: &[f64], n_paths: usize, seed: u64, params: &ModelParams) -> Result<ExactEnsemble> {
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] > 0.0) {
        return Err(Error::InvalidInput("exact sampling times must be positive and strictly increasing".into()));
    }
    let per_path = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let mut w = 0.0;
            let mut prev = 0.0;
            times
                .iter()
                .map(|&t| {
                    let z: f64 = rng.sample(StandardNormal);
                    w += (t - prev).sqrt() * z;
                    prev = t;
                    exact_constant_i_sample(t, i, w / t.sqrt(), params)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values = (0..times.len()).map(|k| per_path.iter().map(|p| p[k]).collect()).collect();
    Ok(ExactEnsemble { times: times.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quiet() -> ModelParams {
        let mut p = ModelParams::baseline();
        p.sigma_a = 0.0;
        p.sigma_i = 0.0;
        p
    }

    #[test]
    fn exact_sample_median_and_start() {
        let p = ModelParams::baseline();
        assert_abs_diff_eq!(exact_constant_i_sample(10.0, 3.0, 0.0, &p).unwrap(), (-1.6f64).exp(), epsilon = 1e-12);
        assert_eq!(exact_constant_i_sample(0.0, 3.0, 0.0, &p).unwrap(), p.a0);
    }

    #[test]
    fn noiseless_no_transparency_grows_exponentially() {
        let p = quiet();
        let cfg = SimConfig { n_paths: 1, ..SimConfig::default() };
        let path = simulate_path(&|_: f64, _: f64, _: f64| 0.0, &p, &cfg, 0).unwrap();
        assert!(path.absorption.is_none());
        for s in &path.samples {
            assert_abs_diff_eq!(s.a, (0.1 * s.t).exp(), epsilon = 1e-9);
            assert_eq!(s.i, 0.0);
        }
        assert_abs_diff_eq!(path.terminal.0, 1.0f64.exp(), epsilon = 1e-9);
    }

    #[test]
    fn noiseless_max_transparency_reaches_i_max() {
        let p = quiet();
        let cfg = SimConfig { n_paths: 1, boundary_enabled: false, ..SimConfig::default() };
        let path = simulate_path(&|_: f64, _: f64, _: f64| 1.0, &p, &cfg, 0).unwrap();
        assert_abs_diff_eq!(path.terminal.1, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn out_of_range_control_is_an_error() {
        let p = ModelParams::baseline();
        let cfg = SimConfig { n_paths: 1, ..SimConfig::default() };
        let err = simulate_path(&|_: f64, _: f64, _: f64| 1.5, &p, &cfg, 0).unwrap_err();
        assert!(matches!(err, Error::ControlOutOfRange { .. }));
        assert!(simulate_path(&|_: f64, _: f64, _: f64| -0.1, &p, &cfg, 0).is_err());
        assert!(simulate_path(&PinnedInformation(1.0), &p, &cfg, 1).is_err());
    }

    #[test]
    fn config_validation() {
        let h = 10.0;
        assert!(SimConfig { dt: 0.0, ..SimConfig::default() }.validate(h).is_err());
        assert!(SimConfig { dt: 11.0, ..SimConfig::default() }.validate(h).is_err());
        assert!(SimConfig { n_paths: 0, ..SimConfig::default() }.validate(h).is_err());
        assert!(SimConfig { record_stride: 0, ..SimConfig::default() }.validate(h).is_err());
        let cfg = SimConfig { dt: 0.3, record_stride: 4, ..SimConfig::default() };
        let times = cfg.record_times(h);
        assert_eq!(times.first(), Some(&0.0));
        assert_eq!(times.last(), Some(&10.0));
    }

    #[test]
    fn absorbed_paths_freeze_at_boundary() {
        let p = ModelParams::baseline();
        let cfg = SimConfig { n_paths: 50, record_stride: 7, ..SimConfig::default() };
        let b = p.boundary();
        let mut seen = 0;
        for k in 0..cfg.n_paths {
            let path = simulate_path(&PinnedInformation(4.0), &p, &cfg, k).unwrap();
            let times: Vec<f64> = path.samples.iter().map(|s| s.t).collect();
            assert!(times.windows(2).all(|w| w[1] > w[0]));
            assert_eq!(times, cfg.record_times(p.horizon));
            if let Some(abs) = path.absorption {
                seen += 1;
                for s in path.samples.iter().filter(|s| s.t >= abs.time) {
                    assert!(s.absorbed);
                    assert_eq!(s.a, b);
                }
                assert_abs_diff_eq!(path.totals.engaged_time, abs.time, epsilon = 1e-9);
            }
            assert!(path.samples.iter().all(|s| s.a > 0.0));
        }
        assert!(seen > 40);
    }

    #[test]
    fn single_path_ensemble_matches_path() {
        let p = ModelParams::baseline();
        let cfg = SimConfig { n_paths: 1, ..SimConfig::default() };
        let stats = simulate_ensemble(&PinnedInformation(2.0), &p, &cfg).unwrap();
        let path = simulate_path(&PinnedInformation(2.0), &p, &cfg, 0).unwrap();
        let a: Vec<f64> = path.samples.iter().map(|s| s.a).collect();
        assert_eq!(stats.mean_a, a);
        assert!(stats.var_a.iter().all(|&v| v == 0.0));
        assert_eq!(stats.final_a, vec![path.terminal.0]);
    }

    #[test]
    fn exact_ensemble_rejects_bad_times() {
        let p = ModelParams::baseline();
        assert!(sample_exact_ensemble(1.0, &[], 10, 1, &p).is_err());
        assert!(sample_exact_ensemble(1.0, &[0.0, 1.0], 10, 1, &p).is_err());
        assert!(sample_exact_ensemble(1.0, &[2.0, 1.0], 10, 1, &p).is_err());
    }
}
