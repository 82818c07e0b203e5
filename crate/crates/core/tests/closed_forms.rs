//! Closed forms checked against independent numerical oracles.

use autolab_core::model::{self, HittingTime, Regime};
use autolab_core::rng::substream;
use autolab_core::ModelParams;
use rand::Rng;
use rand_distr::StandardNormal;

/// Monte Carlo crossing probability of `ln A` under constant information. Each step also
/// accounts for a crossing between grid points through the Brownian-bridge law, so the
/// estimate carries no discrete-monitoring bias.
fn bridge_hitting_probability(i: f64, t_horizon: f64, n: usize, p: &ModelParams) -> (f64, f64) {
    let steps = 1000;
    let h = t_horizon / steps as f64;
    let s = p.sigma_a;
    let nu = p.drift_rate(i) - 0.5 * s * s;
    let b = model::disengagement_boundary(p.wm, p).unwrap().ln();
    let mut hits = 0usize;
    for k in 0..n {
        let mut rng = substream(2024, k as u64);
        let mut x = p.a0.ln();
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            let next = x + nu * h + s * h.sqrt() * z;
            let crossed = next <= b || {
                let bridge = (-2.0 * (x - b) * (next - b) / (s * s * h)).exp();
                rng.random::<f64>() < bridge
            };
            if crossed {
                hits += 1;
                break;
            }
            x = next;
        }
    }
    let ph = hits as f64 / n as f64;
    (ph, (ph * (1.0 - ph) / n as f64).sqrt())
}

#[test]
fn hitting_probability_matches_bridge_monte_carlo() {
    let p = ModelParams::baseline();
    for (i, t) in [(4.0, 2.0), (3.0, 3.0), (1.0, 10.0)] {
        let theory = model::hitting_probability(p.a0, i, p.wm, t, &p).unwrap();
        let (mc, se) = bridge_hitting_probability(i, t, 20_000, &p);
        assert!((mc - theory).abs() < 3.0 * se, "I={i} t={t}: mc {mc} theory {theory} se {se}");
    }
}

#[test]
fn expected_hitting_time_reference_points() {
    let p = ModelParams::baseline();
    let tau = |i: f64| match model::expected_hitting_time(p.a0, i, p.wm, &p).unwrap() {
        HittingTime::Finite(t) => t,
        HittingTime::Unbounded => panic!("unbounded at I={i}"),
    };
    assert!((tau(4.0) - 2.0f64.ln() / 0.28).abs() < 1e-12);
    assert!((tau(4.0) - 2.49).abs() < 0.02);
    assert!(tau(3.0) > tau(4.0) && tau(4.0) > tau(5.0));
    assert_eq!(model::expected_hitting_time(p.a0, 0.0, p.wm, &p).unwrap(), HittingTime::Unbounded);
}

#[test]
fn drift_changes_sign_at_threshold() {
    let p = ModelParams::baseline();
    let ic = model::critical_threshold(&p).unwrap();
    assert!((ic - 1.531).abs() < 5e-4);
    assert!(model::drift(ic - 1e-3, &p).unwrap().value > 0.0);
    assert!(model::drift(ic + 1e-3, &p).unwrap().value < 0.0);
    assert!(model::drift(ic, &p).unwrap().value.abs() < 1e-12);
    // Log-autonomy only turns downward once the drift falls below sigma^2 / 2.
    assert_eq!(model::drift(0.5, &p).unwrap().regime, Regime::Sustaining);
    assert_eq!(model::drift(ic, &p).unwrap().regime, Regime::Depleting);
}

/// Mean and variance agree with numerical integration of the lognormal density.
#[test]
fn moments_match_quadrature() {
    let p = ModelParams::baseline();
    for (t, i) in [(1.0, 0.0), (5.0, 2.0), (10.0, 4.0)] {
        let (loc, s2) = model::log_autonomy_params(t, i, &p).unwrap();
        let sd = s2.sqrt();
        let n = 20_000;
        let (lo, hi) = (loc - 10.0 * sd, loc + 10.0 * sd);
        let h = (hi - lo) / n as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for k in 0..=n {
            let y = lo + h * k as f64;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            let dens = (-(y - loc).powi(2) / (2.0 * s2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
            m1 += w * h * dens * y.exp();
            m2 += w * h * dens * (2.0 * y).exp();
        }
        let mean = model::mean_autonomy(t, i, &p).unwrap();
        let var = model::variance_autonomy(t, i, &p).unwrap();
        assert!(((m1 - mean) / mean).abs() < 1e-9, "mean t={t} I={i}");
        assert!(((m2 - m1 * m1 - var) / var).abs() < 1e-7, "var t={t} I={i}");
    }
}

#[test]
fn quality_peak_location() {
    let p = ModelParams::baseline();
    let star = model::quality_argmax(&p);
    assert!((star - (1.0 / (2.0 * p.beta_q)).sqrt()).abs() < 1e-12);
    let q = |i| model::quality(i, &p).unwrap();
    assert!(q(star) > q(star - 0.01) && q(star) > q(star + 0.01));
}
