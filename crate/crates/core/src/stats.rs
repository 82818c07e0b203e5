//! Small deterministic statistics helpers: normal distribution, moments, least squares,
//! quantile-line fit and bootstrap standard errors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::rng::substream;

/// Standard normal CDF via `erfc`, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile. `p` must lie in (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("quantile probability must be in (0, 1), got {p}")));
    }
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // One Halley step against the accurate CDF.
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let r = (normal_cdf(x) - p) / pdf;
    Ok(x - r / (1.0 + 0.5 * x * r))
}

/// Sample mean and unbiased variance. A single sample has variance 0.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1) as f64)
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    let (_, var) = mean_variance(xs);
    (var / xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Squared Pearson correlation of the two series.
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput(format!("linear fit needs two equal series of length >= 2 ({} vs {})", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidInput("linear fit with constant regressor".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r2 })
}

/// Normal quantile-quantile points for a sample: `(theoretical, ordered sample)`, with
/// theoretical quantiles placed on the plug-in normal (sample mean and sd) at plotting
/// positions `(k - 0.5) / n`.
pub fn normal_qq_points(sample: &[f64]) -> Result<Vec<(f64, f64)>> {
    if sample.len() < 3 {
        return Err(Error::InvalidInput("quantile plot needs at least 3 points".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mean, var) = mean_variance(&sorted);
    let sd = var.sqrt();
    let n = sorted.len() as f64;
    sorted.into_iter().enumerate().map(|(k, v)| Ok((mean + sd * normal_quantile((k as f64 + 0.5) / n)?, v))).collect()
}

/// R^2 of the straight-line fit through the normal quantile plot of `sample`.
pub fn normal_qq_r2(sample: &[f64]) -> Result<f64> {
    let pts = normal_qq_points(sample)?;
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(linear_fit(&x, &y)?.r2)
}

/// Bootstrap standard error of the sample variance, drawing `resamples` resamples from a
/// generator seeded by `seed`.
pub fn bootstrap_variance_se(sample: &[f64], resamples: usize, seed: u64) -> f64 {
    let n = sample.len();
    if n < 2 || resamples < 2 {
        return 0.0;
    }
    let mut rng: ChaCha8Rng = substream(seed, 0);
    let mut buf = vec![0.0; n];
    let stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = sample[rng.random_range(0..n)];
            }
            mean_variance(&buf).1
        })
        .collect();
    mean_variance(&stats).1.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_cdf_reference_values() {
        // Tabulated values of the standard normal distribution.
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_cdf(-1.959_963_984_540_054), 0.025, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_cdf(3.0), 0.998_650_101_968_369_9, epsilon = 1e-12);
        let tail = normal_cdf(-8.0);
        assert!((tail / 6.220_960_574_271_785e-16 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-6, 0.01, 0.2, 0.5, 0.77, 0.999] {
            assert_abs_diff_eq!(normal_cdf(normal_quantile(p).unwrap()), p, epsilon = 1e-12);
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn moments_and_fit() {
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert_abs_diff_eq!(v, 5.0 / 3.0, epsilon = 1e-15);
        assert_eq!(mean_variance(&[7.0]), (7.0, 0.0));

        let fit = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fit.r2, 1.0, epsilon = 1e-15);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(linear_fit(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn qq_of_normal_quantiles_is_a_line() {
        let n = 1000;
        let sample: Vec<f64> = (0..n).map(|k| 3.0 + 2.0 * normal_quantile((k as f64 + 0.5) / n as f64).unwrap()).collect();
        assert!(normal_qq_r2(&sample).unwrap() > 0.999_999);
        // A heavily skewed sample bends away from the line.
        let skewed: Vec<f64> = sample.iter().map(|x| (2.0 * x).exp()).collect();
        assert!(normal_qq_r2(&skewed).unwrap() < 0.9);
    }

    #[test]
    fn bootstrap_is_deterministic_and_sane() {
        let sample: Vec<f64> = (0..500).map(|k| normal_quantile((k as f64 + 0.5) / 500.0).unwrap()).collect();
        let a = bootstrap_variance_se(&sample, 400, 9);
        let b = bootstrap_variance_se(&sample, 400, 9);
        assert_eq!(a, b);
        // Normal data: SE of the variance is about sqrt(2 / (n - 1)).
        assert!((a / (2.0_f64 / 499.0).sqrt() - 1.0).abs() < 0.2, "{a}");
    }
}
