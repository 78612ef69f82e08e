//! Closed-form population moments of counts, returns and squared returns.
//!
//! Notation: `A_L = ∫_{L-1}^{L} e^{Z(s)} ds` and `B_L = A_L^2`, so that the
//! daily integrated intensity is `λ A_L`. Then
//! `cov(A_0, A_L) = e · I1(L)`, `cov(A_0, B_L) = e^{3/2} · I3(L)` and
//! `cov(B_0, B_L) = e^2 · I4(L)` with `I1`, `I3`, `I4` from [`crate::quadrature`].

use std::f64::consts::E;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fgn::{gamma_z, GammaSpec};
use crate::quadrature::{
    integrate_3d_alb0, integrate_4d_b0bl, integrate_nu_moments, weighted_lag_integral, NuMoments, QuadratureConfig,
};

/// Generative parameters of the single-shock model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Drift per transaction, in log-price units.
    pub mu: f64,
    /// Baseline intensity, transactions per day.
    pub lambda: f64,
    /// Standard deviation of the per-transaction shock.
    pub sigma_e: f64,
    pub gamma: GammaSpec,
}

impl ModelParams {
    pub fn new(mu: f64, lambda: f64, sigma_e: f64, c: f64, d: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(sigma_e.is_finite() && sigma_e >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_e must be nonnegative, got {sigma_e}"
            )));
        }
        Ok(Self {
            mu,
            lambda,
            sigma_e,
            gamma: GammaSpec::new(c, d)?,
        })
    }

    /// The calibration used throughout the tests and examples
    /// (μ = 1.419188e-6, λ = 128.2085, σ_e = 7.289e-4, c = 1).
    pub fn baseline(d: f64) -> Result<Self> {
        Self::new(1.419188e-6, 128.2085, 0.0007289, 1.0, d)
    }

    pub fn c(&self) -> f64 {
        self.gamma.c()
    }

    pub fn d(&self) -> f64 {
        self.gamma.d()
    }

    pub fn hurst(&self) -> f64 {
        self.gamma.hurst()
    }

    pub fn with_d(&self, d: f64) -> Result<Self> {
        Self::new(self.mu, self.lambda, self.sigma_e, self.c(), d)
    }
}

fn default_quad() -> &'static QuadratureConfig {
    static Q: OnceLock<QuadratureConfig> = OnceLock::new();
    Q.get_or_init(QuadratureConfig::default)
}

/// Dependence lag of the daily series under `d = 0`.
pub fn compute_h(c: f64) -> usize {
    let inv = 1.0 / c;
    if c < 1.0 {
        inv.floor() as usize + 1
    } else {
        ((inv - 1.0).floor() as i64 + 1).max(1) as usize
    }
}

/// Limit of the return/realized-variance correlation under long memory.
pub fn rho_limit(d: f64) -> f64 {
    4f64.powf(d) - 1.0
}

pub fn mean_count(p: &ModelParams) -> f64 {
    p.lambda * E.sqrt()
}

pub fn mean_return(p: &ModelParams) -> f64 {
    p.mu * mean_count(p)
}

/// `cov(A_0, A_L)`.
fn cov_aa(p: &ModelParams, lag: usize, q: &QuadratureConfig) -> f64 {
    E * weighted_lag_integral(&p.gamma, lag as f64, &q.lag)
}

/// `cov(A_0, B_L)`.
fn cov_ab(p: &ModelParams, lag: usize, q: &QuadratureConfig) -> f64 {
    E.powf(1.5) * integrate_3d_alb0(&p.gamma, lag as f64, &q.triple)
}

/// `cov(B_0, B_L)`.
fn cov_bb(p: &ModelParams, lag: usize, q: &QuadratureConfig) -> f64 {
    E * E * integrate_4d_b0bl(&p.gamma, lag as f64, &q.quadruple)
}

pub fn cov_counts(p: &ModelParams, lag: usize) -> f64 {
    cov_counts_with(p, lag, default_quad())
}

pub fn cov_counts_with(p: &ModelParams, lag: usize, q: &QuadratureConfig) -> f64 {
    let c = p.lambda.powi(2) * cov_aa(p, lag, q);
    if lag == 0 {
        c + mean_count(p)
    } else {
        c
    }
}

pub fn var_counts(p: &ModelParams) -> f64 {
    cov_counts(p, 0)
}

pub fn cov_returns(p: &ModelParams, lag: usize) -> f64 {
    cov_returns_with(p, lag, default_quad())
}

pub fn cov_returns_with(p: &ModelParams, lag: usize, q: &QuadratureConfig) -> f64 {
    let c = p.mu.powi(2) * p.lambda.powi(2) * cov_aa(p, lag, q);
    if lag == 0 {
        c + mean_count(p) * (p.mu.powi(2) + p.sigma_e.powi(2))
    } else {
        c
    }
}

pub fn var_return(p: &ModelParams) -> f64 {
    cov_returns(p, 0)
}

/// `cov(r_L, r_0^2)`; by time reversibility also `cov(r_0, r_L^2)`.
pub fn cov_return_sqreturn(p: &ModelParams, lag: usize) -> f64 {
    cov_return_sqreturn_with(p, lag, default_quad())
}

pub fn cov_return_sqreturn_with(p: &ModelParams, lag: usize, q: &QuadratureConfig) -> f64 {
    if p.mu == 0.0 {
        return 0.0;
    }
    let l2 = p.lambda.powi(2);
    let aa = cov_aa(p, lag, q);
    let ab = cov_ab(p, lag, q);
    p.mu.powi(3) * (p.lambda.powi(3) * ab + l2 * aa) + p.mu * p.sigma_e.powi(2) * l2 * aa
}

pub fn cov_sqreturns(p: &ModelParams, lag: usize) -> Result<f64> {
    cov_sqreturns_with(p, lag, default_quad())
}

/// `cov(r_0^2, r_L^2)`; at `lag = 0` this is `var(r^2)`.
pub fn cov_sqreturns_with(p: &ModelParams, lag: usize, q: &QuadratureConfig) -> Result<f64> {
    if lag == 0 {
        return var_sqreturn_with(p, q);
    }
    let (mu2, s2) = (p.mu.powi(2), p.sigma_e.powi(2));
    let lam = p.lambda;
    let aa = cov_aa(p, lag, q);
    let mut v = (mu2 + s2).powi(2) * lam.powi(2) * aa;
    if p.mu != 0.0 {
        v += 2.0 * mu2 * (mu2 + s2) * lam.powi(3) * cov_ab(p, lag, q) + mu2 * mu2 * lam.powi(4) * cov_bb(p, lag, q);
    }
    Ok(v)
}

/// Fourth raw moment of the daily return.
pub fn fourth_moment_return(p: &ModelParams, nu: &NuMoments) -> f64 {
    let (m2, s2) = (p.mu.powi(2), p.sigma_e.powi(2));
    let m4 = m2 * m2;
    (m4 + 6.0 * m2 * s2 + 3.0 * s2 * s2) * nu.m1
        + (7.0 * m4 + 18.0 * m2 * s2 + 3.0 * s2 * s2) * nu.m2
        + (6.0 * m4 + 6.0 * m2 * s2) * nu.m3
        + m4 * nu.m4
}

pub fn var_sqreturn(p: &ModelParams) -> Result<f64> {
    var_sqreturn_with(p, default_quad())
}

pub fn var_sqreturn_with(p: &ModelParams, q: &QuadratureConfig) -> Result<f64> {
    let nu = integrate_nu_moments(&p.gamma, p.lambda, q);
    let var = cov_returns_with(p, 0, q);
    let m = mean_return(p);
    let v = fourth_moment_return(p, &nu) - var * var - 2.0 * m * m * var - m.powi(4);
    if v > 0.0 {
        Ok(v)
    } else if p.mu == 0.0 && p.sigma_e == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance(v))
    }
}

/// Covariance of `H̃`-month aggregated returns `L` months apart, with `m`
/// days per month. Sums the daily autocovariances with the triangular
/// overlap weights `max(0, H̃m - |k - Lm|)`.
pub fn cov_aggregated_returns(p: &ModelParams, h_tilde: usize, m: usize, lag: usize) -> Result<f64> {
    if h_tilde == 0 || m == 0 {
        return Err(Error::InvalidParameter("h_tilde and m must be positive".into()));
    }
    let span = (h_tilde * m) as i64;
    let centre = (lag * m) as i64;
    let q = default_quad();
    let h = if p.d() == 0.0 {
        Some(compute_h(p.c()) as i64)
    } else {
        None
    };
    let mut total = 0.0;
    for k in (centre - span + 1)..(centre + span) {
        let w = span - (k - centre).abs();
        if w <= 0 {
            continue;
        }
        let ak = k.unsigned_abs() as i64;
        if h.is_some_and(|h| ak > h) {
            continue;
        }
        total += w as f64 * cov_returns_with(p, ak as usize, q);
    }
    Ok(total)
}

/// `cov(r_0, r_L^2)` for the two-shock model with a shared intensity path
/// `e^{Z}` and baseline intensities `λ_1`, `λ_2`.
pub fn cov_return_sqreturn_two_shock(buy: &ModelParams, sell: &ModelParams, lag: usize) -> Result<f64> {
    check_drift_pair(buy.mu, sell.mu)?;
    if buy.gamma != sell.gamma {
        return Err(Error::InvalidParameter(
            "two-shock model needs a common intensity kernel (same c and d)".into(),
        ));
    }
    let q = default_quad();
    // E[r_0 | A] = k2 A_0 and E[r_L^2 | A] = k1 A_L + k2^2 B_L.
    let k1 =
        (buy.mu.powi(2) + buy.sigma_e.powi(2)) * buy.lambda + (sell.mu.powi(2) + sell.sigma_e.powi(2)) * sell.lambda;
    let k2 = buy.mu * buy.lambda + sell.mu * sell.lambda;
    Ok(k2 * (k1 * cov_aa(buy, lag, q) + k2 * k2 * cov_ab(buy, lag, q)))
}

pub(crate) fn check_drift_pair(mu1: f64, mu2: f64) -> Result<()> {
    if mu1 > 0.0 && mu2 < 0.0 && mu1 + mu2 > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDriftPair { mu1, mu2 })
    }
}

/// Options for [`moment_table_with`].
#[derive(Debug, Clone)]
pub struct MomentOptions {
    pub quad: QuadratureConfig,
    /// Last lag computed by quadrature when `d > 0`.
    pub l_max: usize,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default(),
            l_max: 200,
        }
    }
}

/// Far-lag forms: the integrands flatten to their value at the window centre,
/// so `I1 ~ expm1(g)`, `I3 ~ K expm1(2g)`, `I4 ~ K^2 expm1(4g)` with
/// `g = gamma_z(L)` and `K = I1(0) + 1`. To first order in `g` these are the
/// `C gamma_z(L)` power-law tails.
#[derive(Debug, Clone, PartialEq)]
struct Tail {
    p: ModelParams,
    k: f64,
}

impl Tail {
    fn eval(&self, which: usize, lag: usize) -> f64 {
        let p = &self.p;
        let g = gamma_z(&p.gamma, lag as f64);
        let aa = E * g.exp_m1();
        let ab = E.powf(1.5) * self.k * (2.0 * g).exp_m1();
        let bb = E * E * self.k * self.k * (4.0 * g).exp_m1();
        let (mu2, s2, lam) = (p.mu * p.mu, p.sigma_e * p.sigma_e, p.lambda);
        match which {
            0 => mu2 * lam * lam * aa,
            1 => {
                (mu2 + s2).powi(2) * lam * lam * aa
                    + 2.0 * mu2 * (mu2 + s2) * lam.powi(3) * ab
                    + mu2 * mu2 * lam.powi(4) * bb
            }
            _ => p.mu.powi(3) * (lam.powi(3) * ab + lam * lam * aa) + p.mu * s2 * lam * lam * aa,
        }
    }
}

/// Population moments feeding the asymptotic test.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub h: usize,
    pub m: usize,
    pub var_r: f64,
    pub var_r2: f64,
    /// `cov_r[k-1] = cov(r_0, r_k)` for k = 1..=len.
    pub cov_r: Vec<f64>,
    pub cov_r2: Vec<f64>,
    /// `cov(r_k, r_0^2)`.
    pub cov_r_r2: Vec<f64>,
    pub a1: f64,
    pub a2: f64,
    pub s2: f64,
    /// Long-memory tail beyond the tabulated lags.
    tail: Option<Tail>,
}

impl MomentTable {
    pub fn max_lag(&self) -> usize {
        self.cov_r.len()
    }

    /// `S² / (A₁ A₂)`, the variance of the normalized modified statistic.
    pub fn variance_ratio(&self) -> f64 {
        self.s2 / (self.a1 * self.a2)
    }

    fn lookup(&self, list: &[f64], which: usize, lag: usize) -> f64 {
        if lag == 0 {
            return f64::NAN;
        }
        if lag <= list.len() {
            return list[lag - 1];
        }
        match &self.tail {
            Some(t) => t.eval(which, lag),
            None => 0.0,
        }
    }

    /// `cov(r_0, r_L)` for any `L >= 1`, using the power-law tail past the table.
    pub fn cov_r_at(&self, lag: usize) -> f64 {
        self.lookup(&self.cov_r, 0, lag)
    }

    pub fn cov_r2_at(&self, lag: usize) -> f64 {
        self.lookup(&self.cov_r2, 1, lag)
    }

    pub fn cov_r_r2_at(&self, lag: usize) -> f64 {
        self.lookup(&self.cov_r_r2, 2, lag)
    }
}

pub fn moment_table(p: &ModelParams, m: usize) -> Result<MomentTable> {
    moment_table_with(p, m, &MomentOptions::default())
}

pub fn moment_table_with(p: &ModelParams, m: usize, opts: &MomentOptions) -> Result<MomentTable> {
    if m == 0 {
        return Err(Error::InvalidParameter("days per month must be positive".into()));
    }
    let q = &opts.quad;
    let h = compute_h(p.c());
    let len = if p.d() == 0.0 { h } else { opts.l_max.max(h) };
    let var_r = cov_returns_with(p, 0, q);
    let var_r2 = var_sqreturn_with(p, q)?;
    let mut cov_r = Vec::with_capacity(len);
    let mut cov_r2 = Vec::with_capacity(len);
    let mut cov_r_r2 = Vec::with_capacity(len);
    for lag in 1..=len {
        cov_r.push(cov_returns_with(p, lag, q));
        cov_r2.push(cov_sqreturns_with(p, lag, q)?);
        cov_r_r2.push(cov_return_sqreturn_with(p, lag, q));
    }
    let a1 = var_r + 2.0 * cov_r[..h].iter().sum::<f64>();
    let a2 = var_r2 + 2.0 * cov_r2[..h].iter().sum::<f64>();
    // Double sum over |u|, |v| <= h of cov(r_0, r_u) cov(r_0^2, r_v^2).
    let sym = |var: f64, list: &[f64]| -> Vec<f64> {
        let mut v: Vec<f64> = list[..h].iter().rev().copied().collect();
        v.push(var);
        v.extend_from_slice(&list[..h]);
        v
    };
    let (u, w) = (sym(var_r, &cov_r), sym(var_r2, &cov_r2));
    let s2 = 2.0 / 3.0 * u.iter().map(|a| w.iter().map(|b| a * b).sum::<f64>()).sum::<f64>();
    let tail = if p.d() > 0.0 {
        Some(Tail {
            p: *p,
            k: weighted_lag_integral(&p.gamma, 0.0, &q.lag) + 1.0,
        })
    } else {
        None
    };
    Ok(MomentTable {
        h,
        m,
        var_r,
        var_r2,
        cov_r,
        cov_r2,
        cov_r_r2,
        a1,
        a2,
        s2,
        tail,
    })
}
