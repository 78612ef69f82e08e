//! Small descriptive-statistics helpers shared across modules.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Sample autocovariances (1/n normalization, mean removed) at lags 0..=max_lag.
pub fn sample_autocov(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    (0..=max_lag)
        .map(|k| {
            if k >= n {
                return 0.0;
            }
            let s: f64 = (0..n - k).map(|i| (x[i] - m) * (x[i + k] - m)).sum();
            s / n as f64
        })
        .collect()
}

/// Sample cross-covariance of `x[t + lag]` with `y[t]` (1/n, means removed).
pub fn sample_crosscov(x: &[f64], y: &[f64], lag: usize) -> f64 {
    let n = x.len().min(y.len());
    let mx = mean(&x[..n]);
    let my = mean(&y[..n]);
    (0..n - lag).map(|t| (x[t + lag] - mx) * (y[t] - my)).sum::<f64>() / n as f64
}

/// Linear-interpolation quantile (Hyndman–Fan type 7) of unsorted data.
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, p)
}

pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let n = v.len();
    if n == 1 {
        return v[0];
    }
    let h = (n as f64 - 1.0) * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

pub fn normal_sf(z: f64) -> f64 {
    1.0 - Normal::new(0.0, 1.0).unwrap().cdf(z)
}

/// Ordinary least squares of `y` on `x` with intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = if n > 2.0 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LinearFit {
        intercept,
        slope,
        slope_se,
    }
}

/// Skewness and excess-kurtosis z-tests for normality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityCheck {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub z_skew: f64,
    pub z_kurt: f64,
    pub p_skew: f64,
    pub p_kurt: f64,
}

impl NormalityCheck {
    /// True when neither statistic rejects at two-sided level `alpha`.
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_skew > alpha && self.p_kurt > alpha
    }
}

pub fn normality_check(x: &[f64]) -> NormalityCheck {
    let n = x.len() as f64;
    let m = mean(x);
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    // Exact finite-sample variances of the moment ratios under normality.
    let var_skew = 6.0 * (n - 2.0) / ((n + 1.0) * (n + 3.0));
    let var_kurt = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0).powi(2) * (n + 3.0) * (n + 5.0));
    let mean_kurt = -6.0 / (n + 1.0);
    let z_skew = skewness / var_skew.sqrt();
    let z_kurt = (excess_kurtosis - mean_kurt) / var_kurt.sqrt();
    NormalityCheck {
        skewness,
        excess_kurtosis,
        z_skew,
        z_kurt,
        p_skew: 2.0 * normal_sf(z_skew.abs()),
        p_kurt: 2.0 * normal_sf(z_kurt.abs()),
    }
}
