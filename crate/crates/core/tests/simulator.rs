//! Statistical properties of the path simulator.

use autolab_core::model;
use autolab_core::sim::{sample_exact_ensemble, simulate_ensemble, simulate_path, PinnedInformation, SimConfig};
use autolab_core::stats::mean_variance;
use autolab_core::ModelParams;
use proptest::prelude::*;

fn cfg(n_paths: usize) -> SimConfig {
    SimConfig { n_paths, ..SimConfig::default() }
}

#[test]
fn exact_sampler_mean_at_i3() {
    let p = ModelParams::baseline();
    let ens = sample_exact_ensemble(3.0, &[10.0], 100_000, 7, &p).unwrap();
    let (m, v) = mean_variance(&ens.values[0]);
    let se = (v / 1e5).sqrt();
    let theory = model::mean_autonomy(10.0, 3.0, &p).unwrap();
    assert!((theory - 0.2466).abs() < 5e-4);
    assert!((m - theory).abs() < 3.0 * se, "{m} vs {theory} (se {se})");
}

#[test]
fn exact_sampler_moments_match_closed_forms() {
    let p = ModelParams::baseline();
    let n = 100_000;
    let times = [1.0, 5.0, 10.0];
    for i in [0.0, 2.0, 4.0] {
        let ens = sample_exact_ensemble(i, &times, n, 11, &p).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let xs = &ens.values[k];
            let (m, v) = mean_variance(xs);
            let se_mean = (v / n as f64).sqrt();
            assert!((m - model::mean_autonomy(t, i, &p).unwrap()).abs() < 3.0 * se_mean, "mean I={i} t={t}");
            // Standard error of the sample variance from the fourth central moment.
            let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
            let se_var = ((m4 - v * v) / n as f64).sqrt();
            assert!((v - model::variance_autonomy(t, i, &p).unwrap()).abs() < 3.0 * se_var, "var I={i} t={t}");
        }
    }
}

#[test]
fn euler_ensemble_mean_within_two_percent() {
    let p = ModelParams::baseline();
    let c = SimConfig { boundary_enabled: false, ..cfg(5000) };
    let stats = simulate_ensemble(&PinnedInformation(3.0), &p, &c).unwrap();
    for (t, m) in stats.times.iter().zip(&stats.mean_a).skip(1) {
        let theory = model::mean_autonomy(*t, 3.0, &p).unwrap();
        assert!(((m - theory) / theory).abs() < 0.02, "t={t}: {m} vs {theory}");
    }
}

#[test]
fn variance_grows_without_boundary() {
    let p = ModelParams::baseline();
    let c = SimConfig { boundary_enabled: false, record_stride: 100, ..cfg(5000) };
    let stats = simulate_ensemble(&PinnedInformation(1.0), &p, &c).unwrap();
    assert!(stats.var_a.windows(2).all(|w| w[1] > w[0]), "{:?}", stats.var_a);
}

/// Increments of log A and of I over many steps realise the configured correlation.
#[test]
fn noise_correlation_is_realised() {
    let p = ModelParams { i0: 2.5, ..ModelParams::baseline() };
    let c = SimConfig { boundary_enabled: false, record_stride: 1, ..cfg(1000) };
    let zero = |_: f64, _: f64, _: f64| 0.0;
    let (mut sxy, mut sxx, mut syy, mut sx, mut sy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..c.n_paths {
        let path = simulate_path(&zero, &p, &c, k).unwrap();
        for w in path.samples.windows(2) {
            let x = (w[1].a / w[0].a).ln();
            let y = w[1].i - w[0].i;
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
            n += 1.0;
        }
    }
    assert!(n >= 1e6);
    let cov = sxy / n - sx / n * sy / n;
    let r = cov / ((sxx / n - (sx / n).powi(2)) * (syy / n - (sy / n).powi(2))).sqrt();
    assert!((r - p.rho).abs() < 0.01, "sample correlation {r}");
}

fn mean_hitting_time(dt: f64, n: usize) -> (f64, f64) {
    let p = ModelParams { horizon: 100.0, ..ModelParams::baseline() };
    let c = SimConfig { dt, record_stride: 100_000, ..cfg(n) };
    let stats = simulate_ensemble(&PinnedInformation(4.0), &p, &c).unwrap();
    assert_eq!(stats.censored(), 0);
    let (m, v) = mean_variance(&stats.absorption_times);
    (m, (v / n as f64).sqrt())
}

#[test]
fn mean_hitting_time_at_i4() {
    let (m, se) = mean_hitting_time(0.01, 5000);
    assert!((m - 2.49).abs() <= 0.05, "mean tau {m}");
    assert!(se < 0.02);
}

#[test]
fn halving_dt_moves_mean_hitting_time_less_than_standard_error() {
    let (coarse, se) = mean_hitting_time(0.02, 5000);
    let (fine, _) = mean_hitting_time(0.01, 5000);
    assert!((coarse - fine).abs() < se, "dt 0.02: {coarse}, dt 0.01: {fine}, se {se}");
}

#[test]
fn ensemble_independent_of_worker_count() {
    let p = ModelParams::baseline();
    let policy = |a: f64, i: f64, _: f64| if a > 0.9 && i < 2.0 { 1.0 } else { 0.0 };
    let c = cfg(400);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| simulate_ensemble(&policy, &p, &c).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn autonomy_stays_positive(dt in 0.01f64..2.0, seed in any::<u64>(), sigma in 0.05f64..3.0) {
        let p = ModelParams { sigma_a: sigma, mu0: -0.5, ..ModelParams::baseline() };
        let c = SimConfig { dt, n_paths: 4, master_seed: seed, record_stride: 1, boundary_enabled: false };
        for k in 0..4 {
            let path = simulate_path(&PinnedInformation(5.0), &p, &c, k).unwrap();
            prop_assert!(path.samples.iter().all(|s| s.a > 0.0));
        }
    }

    #[test]
    fn absorbed_fraction_is_a_probability(seed in any::<u64>(), i in 0.0f64..5.0) {
        let p = ModelParams::baseline();
        let c = SimConfig { n_paths: 50, master_seed: seed, dt: 0.05, ..SimConfig::default() };
        let s = simulate_ensemble(&PinnedInformation(i), &p, &c).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.absorbed_fraction));
        prop_assert!(s.var_a.iter().all(|&v| v >= 0.0));
        prop_assert!(s.absorbed_by_time.windows(2).all(|w| w[1] >= w[0]));
    }
}
