//! Monthly aggregation of daily returns, the horizon frameworks, and the
//! sample correlations between forward returns and backward realized variance.

use crate::error::{Error, Result};
use crate::simulate::DailySeries;

/// How the horizon `H̃` grows with the number of months `T̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggregationScheme {
    /// `H̃ = T̃^κ`.
    PowerLaw(f64),
    /// `H̃ = θ T̃`.
    LinearGrowth(f64),
}

impl AggregationScheme {
    pub fn power_law(kappa: f64) -> Result<Self> {
        check_unit("kappa", kappa)?;
        Ok(Self::PowerLaw(kappa))
    }

    pub fn linear(theta: f64) -> Result<Self> {
        check_unit("theta", theta)?;
        Ok(Self::LinearGrowth(theta))
    }

    pub fn param(&self) -> f64 {
        match *self {
            Self::PowerLaw(k) | Self::LinearGrowth(k) => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PowerLaw(_) => "power",
            Self::LinearGrowth(_) => "linear",
        }
    }

    /// Factor multiplying `ρ̂` in the test statistic: `√(T̃^{1−κ})` under the
    /// power law, 1 under linear growth.
    pub fn normalization(&self, t_tilde: usize) -> f64 {
        match *self {
            Self::PowerLaw(k) => (t_tilde as f64).powf(1.0 - k).sqrt(),
            Self::LinearGrowth(_) => 1.0,
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Horizon in months for `T̃` months of data: `⌊T̃^κ⌋` or `⌊θT̃⌋`, at least 1.
/// Fails when no forward/backward window pair fits (`2H̃ ≥ T̃`).
pub fn resolve_horizon(scheme: AggregationScheme, t_tilde: usize) -> Result<usize> {
    let t = t_tilde as f64;
    // The small offset keeps exact powers such as 64^0.5 from flooring down.
    let raw = match scheme {
        AggregationScheme::PowerLaw(k) => t.powf(k) + 1e-9,
        AggregationScheme::LinearGrowth(th) => th * t + 1e-9,
    };
    let h = (raw.floor() as usize).max(1);
    if 2 * h >= t_tilde {
        return Err(Error::InsufficientData(format!(
            "horizon {h} leaves no window pair in {t_tilde} months"
        )));
    }
    Ok(h)
}

/// Forward returns, backward realized variance and skip-`h` forward returns
/// for months `t̃ = H̃ ..= T̃ − H̃` (months numbered from 0, days from 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyPanel {
    pub m: usize,
    pub h_tilde: usize,
    pub h: usize,
    pub t_tilde: usize,
    /// Per-month sums of daily returns, months 1..=T̃.
    pub monthly_returns: Vec<f64>,
    pub monthly_rv: Vec<f64>,
    /// `R_{t̃, t̃+H̃}`, entry `i` is month `t̃ = H̃ + i`.
    pub forward: Vec<f64>,
    /// `RV_{t̃−H̃, t̃}`.
    pub backward: Vec<f64>,
    /// `R̃_{t̃, t̃+H̃}`: the forward window without its first `h` days.
    pub forward_skip: Vec<f64>,
}

impl MonthlyPanel {
    /// First month index of the stored windows.
    pub fn first_month(&self) -> usize {
        self.h_tilde
    }
}

/// Aggregate `series` into months of `m` days with horizon `H̃` and skip `h`.
/// Trailing days beyond `⌊T/m⌋` whole months are dropped.
pub fn build_panel(series: &DailySeries, m: usize, h_tilde: usize, h: usize) -> Result<MonthlyPanel> {
    if m == 0 || h_tilde == 0 {
        return Err(Error::InvalidParameter("m and the horizon must be positive".into()));
    }
    if h >= h_tilde * m {
        return Err(Error::InvalidParameter(format!(
            "skip {h} swallows the whole {}-day forward window",
            h_tilde * m
        )));
    }
    let t_tilde = series.len() / m;
    if t_tilde < 2 * h_tilde {
        return Err(Error::InsufficientData(format!(
            "{} days give {t_tilde} months, need at least {}",
            series.len(),
            2 * h_tilde
        )));
    }
    let r = &series.returns[..t_tilde * m];
    // prefix[k] = r_1 + ... + r_k.
    let mut pr = vec![0.0; r.len() + 1];
    let mut pq = vec![0.0; r.len() + 1];
    for (k, v) in r.iter().enumerate() {
        pr[k + 1] = pr[k] + v;
        pq[k + 1] = pq[k] + v * v;
    }
    let sum = |p: &[f64], first_day: usize, last_day: usize| p[last_day] - p[first_day - 1];
    let monthly_returns = (1..=t_tilde).map(|j| sum(&pr, (j - 1) * m + 1, j * m)).collect();
    let monthly_rv = (1..=t_tilde).map(|j| sum(&pq, (j - 1) * m + 1, j * m)).collect();
    let months = h_tilde..=t_tilde - h_tilde;
    let forward = months.clone().map(|t| sum(&pr, t * m + 1, (t + h_tilde) * m)).collect();
    let backward = months.clone().map(|t| sum(&pq, (t - h_tilde) * m + 1, t * m)).collect();
    let forward_skip = months.map(|t| sum(&pr, t * m + h + 1, (t + h_tilde) * m)).collect();
    Ok(MonthlyPanel {
        m,
        h_tilde,
        h,
        t_tilde,
        monthly_returns,
        monthly_rv,
        forward,
        backward,
        forward_skip,
    })
}

fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} window pairs, need at least 2",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::DegenerateVariance("forward returns"));
    }
    if syy.is_nan() || syy <= 0.0 {
        return Err(Error::DegenerateVariance("backward realized variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `ρ̂` over months `t̃ = H̃ ..= T̃ − H̃`.
pub fn rho_hat(panel: &MonthlyPanel) -> Result<f64> {
    correlation(&panel.forward, &panel.backward)
}

/// `ρ̃`: skip-`h` forward returns against backward RV over `t̃ = H̃+1 ..= T̃ − H̃`.
pub fn rho_tilde(panel: &MonthlyPanel) -> Result<f64> {
    correlation(&panel.forward_skip[1..], &panel.backward[1..])
}

/// Number of window pairs entering `ρ̂` and `ρ̃` respectively.
pub fn window_counts(panel: &MonthlyPanel) -> (usize, usize) {
    (panel.forward.len(), panel.forward.len() - 1)
}
