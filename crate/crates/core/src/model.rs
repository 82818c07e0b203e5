//! Closed-form quantities of the autonomy model.
//!
//! Autonomy follows a geometric Brownian motion whose drift depends on the information
//! level, `dA = mu(I) A dt + sigma_a A dW`, with `mu(I) = mu0 - beta I - gamma I^2`.
//! Everything here is a pure function of a [`ModelParams`] record. None of these functions
//! calls [`ModelParams::validate`], so degenerate records (zero volatility, zero baseline
//! drift) can be evaluated directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::stats::normal_cdf;

/// Whether drift is strong enough to keep autonomy away from any lower barrier almost surely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `mu >= sigma_a^2 / 2`: log-autonomy drifts up (or not at all); expected hitting time is infinite.
    Sustaining,
    /// `mu < sigma_a^2 / 2`: the barrier is reached almost surely.
    Depleting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftValue {
    pub value: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HittingTime {
    Finite(f64),
    Unbounded,
}

impl HittingTime {
    pub fn finite(self) -> Option<f64> {
        match self {
            HittingTime::Finite(t) => Some(t),
            HittingTime::Unbounded => None,
        }
    }
}

fn check_information(i: f64) -> Result<()> {
    if i.is_nan() || i < 0.0 {
        return Err(Error::InvalidInput(format!("information level must be >= 0, got {i}")));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidInput(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

fn regime_of(value: f64, params: &ModelParams) -> Regime {
    if value < 0.5 * params.sigma_a * params.sigma_a {
        Regime::Depleting
    } else {
        Regime::Sustaining
    }
}

/// Drift of autonomy at information level `i`, tagged with its regime.
pub fn drift(i: f64, params: &ModelParams) -> Result<DriftValue> {
    check_information(i)?;
    let value = params.drift_rate(i);
    Ok(DriftValue { value, regime: regime_of(value, params) })
}

/// Information level at which drift changes sign (positive root of the quadratic drift).
pub fn critical_threshold(params: &ModelParams) -> Result<f64> {
    if !(params.gamma > 0.0) {
        return Err(Error::InvalidParameter { name: "gamma", reason: "must be > 0".into() });
    }
    let (b, g, m) = (params.beta, params.gamma, params.mu0);
    let disc = b * b + 4.0 * g * m;
    if disc < 0.0 {
        return Err(Error::InvalidParameter { name: "mu0", reason: "drift has no real root".into() });
    }
    // Rationalised form of (-b + sqrt(disc)) / 2g; avoids cancellation when 4gm << b^2.
    let root = 2.0 * m / (b + disc.sqrt());
    Ok(if root.is_finite() { root } else { (-b + disc.sqrt()) / (2.0 * g) })
}

/// Absorbing autonomy level for a working-memory capacity.
pub fn disengagement_boundary(wm: f64, params: &ModelParams) -> Result<f64> {
    let b = params.b0 - params.beta_wm * wm;
    if !(b > 0.0) {
        return Err(Error::InvalidInput(format!("boundary b0 - beta_wm*wm = {b} is not positive (wm = {wm})")));
    }
    Ok(b)
}

/// Boundary-free mean of autonomy at constant information.
pub fn mean_autonomy(t: f64, i: f64, params: &ModelParams) -> Result<f64> {
    check_time(t)?;
    check_information(i)?;
    Ok(params.a0 * (params.drift_rate(i) * t).exp())
}

/// Boundary-free variance of autonomy at constant information.
pub fn variance_autonomy(t: f64, i: f64, params: &ModelParams) -> Result<f64> {
    check_time(t)?;
    check_information(i)?;
    let s2 = params.sigma_a * params.sigma_a;
    Ok(params.a0 * params.a0 * (2.0 * params.drift_rate(i) * t).exp() * (s2 * t).exp_m1())
}

/// Location and squared scale of `ln A_t` (autonomy is log-normal at constant information).
pub fn log_autonomy_params(t: f64, i: f64, params: &ModelParams) -> Result<(f64, f64)> {
    check_time(t)?;
    check_information(i)?;
    let s2 = params.sigma_a * params.sigma_a;
    let location = params.a0.ln() + (params.drift_rate(i) - 0.5 * s2) * t;
    Ok((location, s2 * t))
}

/// Expected first time autonomy started at `a_start` reaches the boundary for capacity `wm`.
pub fn expected_hitting_time(a_start: f64, i: f64, wm: f64, params: &ModelParams) -> Result<HittingTime> {
    check_information(i)?;
    let b = disengagement_boundary(wm, params)?;
    if !(a_start > b) {
        return Err(Error::AlreadyDisengaged { a_start, boundary: b });
    }
    let gap = 0.5 * params.sigma_a * params.sigma_a - params.drift_rate(i);
    if gap > 0.0 {
        Ok(HittingTime::Finite((a_start / b).ln() / gap))
    } else {
        Ok(HittingTime::Unbounded)
    }
}

/// Probability that autonomy started at `a_start` touches the boundary within `t_horizon`,
/// from the reflection law for Brownian motion with drift applied to `ln A`.
pub fn hitting_probability(a_start: f64, i: f64, wm: f64, t_horizon: f64, params: &ModelParams) -> Result<f64> {
    check_information(i)?;
    if t_horizon.is_nan() || t_horizon < 0.0 {
        return Err(Error::InvalidInput(format!("horizon must be >= 0, got {t_horizon}")));
    }
    let b = disengagement_boundary(wm, params)?;
    if !(a_start > b) {
        return Err(Error::AlreadyDisengaged { a_start, boundary: b });
    }
    if t_horizon == 0.0 {
        return Ok(0.0);
    }
    let s = params.sigma_a;
    let nu = params.drift_rate(i) - 0.5 * s * s;
    let barrier = (b / a_start).ln();
    if s == 0.0 {
        // Deterministic log-path: crosses iff it is decreasing and gets there in time.
        return Ok(if nu < 0.0 && barrier / nu <= t_horizon { 1.0 } else { 0.0 });
    }
    let sd = s * t_horizon.sqrt();
    let direct = normal_cdf((barrier - nu * t_horizon) / sd);
    let log_weight = 2.0 * nu * barrier / (s * s);
    let reflected_cdf = normal_cdf((barrier + nu * t_horizon) / sd);
    let reflected = if reflected_cdf > 0.0 { (log_weight + reflected_cdf.ln()).exp() } else { 0.0 };
    Ok((direct + reflected).clamp(0.0, 1.0))
}

/// Decision quality: rises with information, then collapses under overload.
pub fn quality(i: f64, params: &ModelParams) -> Result<f64> {
    check_information(i)?;
    Ok(params.quality_value(i))
}

/// Information level maximising [`quality`].
pub fn quality_argmax(params: &ModelParams) -> f64 {
    1.0 / (2.0 * params.beta_q).sqrt()
}

pub fn autonomy_cost(a: f64, params: &ModelParams) -> Result<f64> {
    if a.is_nan() || a < 0.0 {
        return Err(Error::InvalidInput(format!("autonomy must be >= 0, got {a}")));
    }
    let gap = params.a0 - a;
    Ok(params.kappa * gap * gap)
}

/// Quality minus autonomy cost minus control cost.
pub fn instantaneous_reward(a: f64, i: f64, u: f64, params: &ModelParams) -> Result<f64> {
    if !(0.0..=params.u_max).contains(&u) {
        return Err(Error::InvalidInput(format!("control {u} outside [0, {}]", params.u_max)));
    }
    Ok(quality(i, params)? - autonomy_cost(a, params)? - params.c * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p() -> ModelParams {
        ModelParams::baseline()
    }

    #[test]
    fn drift_table_values() {
        assert_abs_diff_eq!(drift(0.0, &p()).unwrap().value, 0.100, epsilon = 1e-12);
        assert_abs_diff_eq!(drift(4.0, &p()).unwrap().value, -0.260, epsilon = 1e-12);
        assert_abs_diff_eq!(drift(5.0, &p()).unwrap().value, -0.400, epsilon = 1e-12);
        assert!(drift(-0.1, &p()).is_err());
    }

    #[test]
    fn drift_regimes() {
        // sigma_a^2 / 2 = 0.02; mu(1) = 0.04 sustains, mu(2) = -0.04 depletes.
        assert_eq!(drift(1.0, &p()).unwrap().regime, Regime::Sustaining);
        assert_eq!(drift(2.0, &p()).unwrap().regime, Regime::Depleting);
    }

    #[test]
    fn critical_threshold_cases() {
        assert_abs_diff_eq!(critical_threshold(&p()).unwrap(), 1.531, epsilon = 5e-4);
        let mut q = p();
        q.mu0 = 0.0;
        assert_eq!(critical_threshold(&q).unwrap(), 0.0);
        let mut q = p();
        q.beta = 0.0;
        q.mu0 = 0.09;
        q.gamma = 0.01;
        assert_abs_diff_eq!(critical_threshold(&q).unwrap(), 3.0, epsilon = 1e-12);
        q.gamma = 0.0;
        assert!(critical_threshold(&q).is_err());
    }

    #[test]
    fn critical_threshold_matches_bisection() {
        // Independent root of the drift polynomial by bisection.
        let q = p();
        let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q.drift_rate(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert_abs_diff_eq!(critical_threshold(&q).unwrap(), lo, epsilon = 1e-12);
    }

    #[test]
    fn boundaries() {
        assert_abs_diff_eq!(disengagement_boundary(2.0, &p()).unwrap(), 0.70, epsilon = 1e-12);
        assert_abs_diff_eq!(disengagement_boundary(4.0, &p()).unwrap(), 0.50, epsilon = 1e-12);
        assert_abs_diff_eq!(disengagement_boundary(6.0, &p()).unwrap(), 0.30, epsilon = 1e-12);
        assert!(disengagement_boundary(9.0, &p()).is_err());
        assert!(disengagement_boundary(10.0, &p()).is_err());
    }

    #[test]
    fn moments() {
        assert_eq!(mean_autonomy(0.0, 2.5, &p()).unwrap(), 1.0);
        assert_abs_diff_eq!(mean_autonomy(10.0, 3.0, &p()).unwrap(), 0.2466, epsilon = 5e-5);
        assert_abs_diff_eq!(mean_autonomy(10.0, 2.0, &p()).unwrap(), 0.6703, epsilon = 5e-5);
        assert_eq!(variance_autonomy(0.0, 1.0, &p()).unwrap(), 0.0);
        let mut q = p();
        q.sigma_a = 0.0;
        assert_eq!(variance_autonomy(7.0, 1.0, &q).unwrap(), 0.0);
        // e^{0.08} (e^{0.04} - 1)
        assert_abs_diff_eq!(variance_autonomy(1.0, 1.0, &p()).unwrap(), 0.04421, epsilon = 5e-6);
        assert!(mean_autonomy(-1.0, 0.0, &p()).is_err());
    }

    #[test]
    fn log_params() {
        let (loc, s2) = log_autonomy_params(10.0, 3.0, &p()).unwrap();
        assert_abs_diff_eq!(loc, -1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s2, 0.4, epsilon = 1e-12);
        let (loc, s2) = log_autonomy_params(5.0, 0.0, &p()).unwrap();
        assert_abs_diff_eq!(loc, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(s2, 0.2, epsilon = 1e-12);
        let (loc, s2) = log_autonomy_params(1e-12, 0.0, &p()).unwrap();
        assert_abs_diff_eq!(loc, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s2, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn hitting_times() {
        let t = expected_hitting_time(1.0, 4.0, 4.0, &p()).unwrap().finite().unwrap();
        assert_abs_diff_eq!(t, 2.4755, epsilon = 5e-5);
        assert_eq!(expected_hitting_time(1.0, 1.0, 4.0, &p()).unwrap(), HittingTime::Unbounded);
        assert!(matches!(expected_hitting_time(0.5, 4.0, 4.0, &p()), Err(Error::AlreadyDisengaged { .. })));
        let near = expected_hitting_time(0.5 + 1e-9, 4.0, 4.0, &p()).unwrap().finite().unwrap();
        assert!(near > 0.0 && near < 1e-7);
    }

    #[test]
    fn hitting_probability_edges() {
        assert_eq!(hitting_probability(1.0, 4.0, 4.0, 0.0, &p()).unwrap(), 0.0);
        assert!(hitting_probability(1.0, 0.0, 4.0, 0.01, &p()).unwrap() < 1e-6);
        assert!(hitting_probability(1.0, 4.0, 4.0, -1.0, &p()).is_err());
        let v = hitting_probability(1.0, 4.0, 4.0, 10.0, &p()).unwrap();
        assert!(v > 0.999 && v <= 1.0, "{v}");
    }

    #[test]
    fn hitting_probability_matches_series_formula() {
        // With upward log-drift nu > 0 the chance of ever touching B is (B/a)^{2 nu / s^2}.
        let q = p();
        let nu: f64 = q.drift_rate(0.0) - 0.02;
        let far = hitting_probability(1.0, 0.0, 4.0, 1e5, &q).unwrap();
        assert_abs_diff_eq!(far, 0.5_f64.powf(2.0 * nu / 0.04), epsilon = 1e-9);
    }

    #[test]
    fn quality_and_costs() {
        assert_eq!(quality(0.0, &p()).unwrap(), 0.0);
        assert_abs_diff_eq!(quality(2.0, &p()).unwrap(), 17.04, epsilon = 5e-3);
        assert_abs_diff_eq!(quality_argmax(&p()), 3.536, epsilon = 5e-4);
        // grid search cross-check
        let best = (0..=50_000).map(|k| k as f64 * 1e-4).fold((0.0, f64::MIN), |acc, i| {
            let q = p().quality_value(i);
            if q > acc.1 {
                (i, q)
            } else {
                acc
            }
        });
        assert_abs_diff_eq!(best.0, quality_argmax(&p()), epsilon = 2e-4);

        assert_eq!(autonomy_cost(1.0, &p()).unwrap(), 0.0);
        assert_abs_diff_eq!(autonomy_cost(0.5, &p()).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(autonomy_cost(0.0, &p()).unwrap(), 2.0, epsilon = 1e-12);

        assert_eq!(instantaneous_reward(1.0, 0.0, 0.0, &p()).unwrap(), 0.0);
        assert_abs_diff_eq!(instantaneous_reward(1.0, 2.0, 1.0, &p()).unwrap(), 16.54, epsilon = 5e-3);
        assert_abs_diff_eq!(instantaneous_reward(0.5, 0.0, 0.0, &p()).unwrap(), -0.5, epsilon = 1e-12);
        assert!(instantaneous_reward(1.0, 0.0, 1.5, &p()).is_err());
        assert!(instantaneous_reward(1.0, 0.0, -0.1, &p()).is_err());
    }

    #[test]
    fn wm_slope_of_hitting_time() {
        let times: Vec<f64> = (2..=6).map(|wm| expected_hitting_time(1.0, 4.0, wm as f64, &p()).unwrap().finite().unwrap()).collect();
        let fit = crate::stats::linear_fit(&[2.0, 3.0, 4.0, 5.0, 6.0], &times).unwrap();
        assert!((fit.slope - 0.756).abs() < 0.03, "{}", fit.slope);
    }

    #[test]
    fn quality_single_turning_point() {
        let q = p();
        let n = 5000;
        let grads: Vec<f64> = (0..n)
            .map(|k| {
                let i = q.i_max * k as f64 / n as f64;
                q.quality_value(i + 1e-6) - q.quality_value(i)
            })
            .collect();
        let changes = grads.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        assert_eq!(changes, 1);
    }

    proptest! {
        #[test]
        fn drift_strictly_decreasing(i in 0.0f64..10.0, d in 1e-6f64..1.0) {
            prop_assert!(p().drift_rate(i + d) < p().drift_rate(i));
        }

        #[test]
        fn drift_zero_at_threshold(mu0 in 0.01f64..1.0, beta in 0.0f64..1.0, gamma in 0.001f64..1.0) {
            let mut q = p();
            q.mu0 = mu0; q.beta = beta; q.gamma = gamma;
            let r = critical_threshold(&q).unwrap();
            prop_assert!(q.drift_rate(r).abs() < 1e-9);
        }

        #[test]
        fn hitting_time_decreasing_in_information(i in 1.6f64..8.0, d in 1e-3f64..1.0) {
            let a = expected_hitting_time(1.0, i, 4.0, &p()).unwrap().finite().unwrap();
            let b = expected_hitting_time(1.0, i + d, 4.0, &p()).unwrap().finite().unwrap();
            prop_assert!(b < a);
        }

        #[test]
        fn hitting_time_increasing_in_wm(wm in 0.0f64..7.5, d in 1e-3f64..1.0) {
            prop_assume!(wm + d < 8.9);
            let a = expected_hitting_time(1.0, 4.0, wm, &p()).unwrap().finite().unwrap();
            let b = expected_hitting_time(1.0, 4.0, wm + d, &p()).unwrap().finite().unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn hitting_probability_monotone(i in 1.6f64..5.0, di in 0.0f64..1.0, t in 0.0f64..20.0, dt in 0.0f64..5.0) {
            let q = p();
            let base = hitting_probability(1.0, i, 4.0, t, &q).unwrap();
            prop_assert!(hitting_probability(1.0, i, 4.0, t + dt, &q).unwrap() >= base - 1e-12);
            prop_assert!(hitting_probability(1.0, i + di, 4.0, t, &q).unwrap() >= base - 1e-12);
            prop_assert!((0.0..=1.0).contains(&base));
        }

        #[test]
        fn variance_increasing_when_growth_positive(i in 0.0f64..1.9, t in 0.0f64..20.0, d in 1e-3f64..2.0) {
            let q = p();
            prop_assume!(2.0 * q.drift_rate(i) + q.sigma_a * q.sigma_a > 0.0);
            prop_assert!(variance_autonomy(t + d, i, &q).unwrap() > variance_autonomy(t, i, &q).unwrap());
        }
    }
}
