//! Method-of-moments estimation of `(μ, λ, σ_e, c, d)` from daily counts and returns.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::fgn::GammaSpec;
use crate::moments::{self, ModelParams};
use crate::quadrature::{weighted_lag_integral, QuadratureRule, DEFAULT_LAG_NODES};
use crate::simulate::DailySeries;
use crate::stats::{mean, sample_autocov};

pub const D_RANGE: (f64, f64) = (0.0, 0.49);
pub const C_RANGE: (f64, f64) = (0.05, 20.0);
/// Points of the coarse `d` scan that brackets every root of the two-lag system.
pub const D_SCAN_POINTS: usize = 50;
/// Iteration cap for each bisection (inner and outer separately).
pub const MAX_BISECTIONS: usize = 200;
/// Relative residual tolerance, measured against the first-lag covariance.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// The sample quantities the estimators consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub mean_return: f64,
    pub mean_count: f64,
    /// 1/n-normalized variances.
    pub var_return: f64,
    pub var_count: f64,
    /// Count autocovariances at `lags.0` and `lags.1`.
    pub gamma_count: (f64, f64),
    /// Count autocovariance at `lags.1 + 1`, used only to choose between
    /// multiple exact roots of the two-lag system.
    pub gamma_count_next: f64,
    pub lags: (usize, usize),
}

impl SampleMoments {
    pub fn from_series(series: &DailySeries, lags: (usize, usize)) -> Result<Self> {
        check_lags(lags)?;
        let counts = series.counts()?;
        if counts.len() <= lags.1 + 2 {
            return Err(Error::InsufficientData(format!(
                "{} days cannot support a lag-{} autocovariance",
                counts.len(),
                lags.1
            )));
        }
        let n: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
        let ac = sample_autocov(&n, lags.1 + 1);
        let rc = sample_autocov(&series.returns, 0);
        Ok(Self {
            mean_return: mean(&series.returns),
            mean_count: mean(&n),
            var_return: rc[0],
            var_count: ac[0],
            gamma_count: (ac[lags.0], ac[lags.1]),
            gamma_count_next: ac[lags.1 + 1],
            lags,
        })
    }

    /// Exact population values, for closed-loop checks.
    pub fn population(p: &ModelParams, lags: (usize, usize)) -> Result<Self> {
        check_lags(lags)?;
        Ok(Self {
            mean_return: moments::mean_return(p),
            mean_count: moments::mean_count(p),
            var_return: moments::var_return(p),
            var_count: moments::var_counts(p),
            gamma_count: (moments::cov_counts(p, lags.0), moments::cov_counts(p, lags.1)),
            gamma_count_next: moments::cov_counts(p, lags.1 + 1),
            lags,
        })
    }
}

fn check_lags(lags: (usize, usize)) -> Result<()> {
    if lags.0 == 0 || lags.1 <= lags.0 {
        return Err(Error::InvalidParameter(format!(
            "lag pair must satisfy 1 <= first < second, got {lags:?}"
        )));
    }
    Ok(())
}

/// `μ̂ = r̄ / ΔN̄`, `λ̂ = ΔN̄ / e^{1/2}`.
pub fn estimate_mu_lambda(s: &SampleMoments) -> Result<(f64, f64)> {
    if s.mean_count.is_nan() || s.mean_count <= 0.0 {
        return Err(Error::ZeroCounts);
    }
    Ok((s.mean_return / s.mean_count, s.mean_count / E.sqrt()))
}

/// `σ̂_e² = (σ̂_r² − μ̂² σ̂_ΔN²) / (λ̂ e^{1/2})`. A negative value is returned as
/// `NegativeVariance` carrying the raw estimate of `σ_e²`.
pub fn estimate_sigma_e(s: &SampleMoments, mu: f64, lambda: f64) -> Result<f64> {
    let v = (s.var_return - mu * mu * s.var_count) / (lambda * E.sqrt());
    if v < 0.0 {
        Err(Error::NegativeVariance(v))
    } else {
        Ok(v.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverDiagnostics {
    pub outer_iterations: usize,
    /// Lag-integral evaluations across all inner solves.
    pub evaluations: usize,
    /// Residuals of both moment equations divided by the first sample covariance.
    pub residual_first: f64,
    pub residual_second: f64,
    /// Exact roots found before the next-lag tie-break.
    pub roots: usize,
    pub converged: bool,
    /// `d̂` was pinned at 0 because the second-lag covariance sits at or below
    /// what a short-memory kernel implies.
    pub d_at_lower_bound: bool,
}

/// Solution of the two-lag moment system, or the best point found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdSolution {
    pub c: f64,
    pub d: f64,
    pub diagnostics: SolverDiagnostics,
}

struct Solver {
    rule: QuadratureRule,
    scale: f64,
    targets: (f64, f64),
    lags: (f64, f64),
    evaluations: usize,
}

impl Solver {
    fn model_cov(&mut self, c: f64, d: f64, lag: f64) -> f64 {
        self.evaluations += 1;
        let spec = GammaSpec::new(c, d).expect("solver stays inside the parameter box");
        self.scale * weighted_lag_integral(&spec, lag, &self.rule)
    }

    /// `c` matching the first-lag covariance at memory `d`. The model
    /// covariance decreases in `c`; out-of-range targets clamp to the box.
    fn solve_c(&mut self, d: f64) -> f64 {
        let (mut lo, mut hi) = C_RANGE;
        let t = self.targets.0;
        if self.model_cov(lo, d, self.lags.0) <= t {
            return lo;
        }
        if self.model_cov(hi, d, self.lags.0) >= t {
            return hi;
        }
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.model_cov(mid, d, self.lags.0) > t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn second_residual(&mut self, d: f64) -> (f64, f64) {
        let c = self.solve_c(d);
        (c, self.model_cov(c, d, self.lags.1) - self.targets.1)
    }
}

/// Solve `λ̂² e I1(L; c, d) = γ̂_ΔN(L)` at the two lags by nested bisection:
/// `c` on `[0.05, 20]` for the first lag inside `d` on `[0, 0.49]` for the second.
///
/// For `c < 1` the two-lag system can have two exact roots. Every sign change
/// of the outer residual on a coarse `d` scan is refined, and the root whose
/// implied covariance at the next lag is closest to the sample value wins.
/// With no interior root and the second-lag target at or below the
/// short-memory fit, `d̂ = 0` is returned as a constrained solution. Fails
/// with `NoRoot` if the residuals stay above tolerance.
pub fn estimate_c_d(s: &SampleMoments, lambda_hat: f64) -> Result<CdSolution> {
    let sol = solve_c_d(s, lambda_hat)?;
    if sol.diagnostics.converged {
        Ok(sol)
    } else {
        Err(Error::NoRoot(format!(
            "best point c = {}, d = {}, residuals {:.3e} / {:.3e}",
            sol.c, sol.d, sol.diagnostics.residual_first, sol.diagnostics.residual_second
        )))
    }
}

/// As [`estimate_c_d`], but an unconverged best point is returned rather than an error.
pub fn solve_c_d(s: &SampleMoments, lambda_hat: f64) -> Result<CdSolution> {
    let (g1, g2) = s.gamma_count;
    if g1.is_nan() || g1 <= 0.0 {
        return Err(Error::NegativeSampleCov(format!(
            "lag-{} count autocovariance {g1} is not positive",
            s.lags.0
        )));
    }
    if lambda_hat.is_nan() || lambda_hat <= 0.0 {
        return Err(Error::ZeroCounts);
    }
    let mut sv = Solver {
        rule: QuadratureRule::gauss_legendre(DEFAULT_LAG_NODES)?,
        scale: lambda_hat * lambda_hat * E,
        targets: (g1, g2),
        lags: (s.lags.0 as f64, s.lags.1 as f64),
        evaluations: 0,
    };
    let (dlo, dhi) = D_RANGE;
    let step = (dhi - dlo) / (D_SCAN_POINTS - 1) as f64;
    let scan: Vec<(f64, f64)> = (0..D_SCAN_POINTS)
        .map(|i| {
            let d = if i + 1 == D_SCAN_POINTS {
                dhi
            } else {
                dlo + i as f64 * step
            };
            (d, sv.second_residual(d).1)
        })
        .collect();
    let mut outer = 0;
    let mut roots = Vec::new();
    for w in scan.windows(2) {
        let ((mut lo, flo), (mut hi, fhi)) = (w[0], w[1]);
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        // An exact zero at the right end is picked up by the next window.
        if fhi == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        let rising = flo < 0.0;
        for _ in 0..MAX_BISECTIONS {
            outer += 1;
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (sv.second_residual(mid).1 < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    if scan[D_SCAN_POINTS - 1].1 == 0.0 {
        roots.push(dhi);
    }
    let at_lower = roots.is_empty() && scan[0].1 >= 0.0;
    let next_lag = (s.lags.1 + 1) as f64;
    let d = if at_lower {
        dlo
    } else if roots.is_empty() {
        // No root: keep the scan point with the smallest second residual.
        scan.iter().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0
    } else {
        let mut best = (f64::INFINITY, roots[0]);
        for &d in &roots {
            let c = sv.solve_c(d);
            let miss = (sv.model_cov(c, d, next_lag) - s.gamma_count_next).abs();
            if miss < best.0 {
                best = (miss, d);
            }
        }
        best.1
    };
    let c = sv.solve_c(d);
    let r1 = (sv.model_cov(c, d, sv.lags.0) - g1) / g1;
    let r2 = (sv.model_cov(c, d, sv.lags.1) - g2) / g1;
    let converged = r1.abs() <= RESIDUAL_TOL && (at_lower || r2.abs() <= RESIDUAL_TOL);
    Ok(CdSolution {
        c,
        d,
        diagnostics: SolverDiagnostics {
            outer_iterations: outer,
            evaluations: sv.evaluations,
            residual_first: r1,
            residual_second: r2,
            roots: roots.len(),
            converged,
            d_at_lower_bound: at_lower,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub mu_hat: f64,
    pub lambda_hat: f64,
    /// Zero when the raw variance estimate is negative, see `sigma_e_negative`.
    pub sigma_e_hat: f64,
    pub sigma_e_negative: bool,
    pub c_hat: f64,
    pub d_hat: f64,
    pub sample: SampleMoments,
    pub diagnostics: SolverDiagnostics,
}

impl EstimateReport {
    /// Fitted parameters with `d` replaced by `d`.
    pub fn params_with_d(&self, d: f64) -> Result<ModelParams> {
        ModelParams::new(self.mu_hat, self.lambda_hat, self.sigma_e_hat, self.c_hat, d)
    }

    /// The short-memory null model used by the predictability tests.
    pub fn null_params(&self) -> Result<ModelParams> {
        self.params_with_d(0.0)
    }
}

/// All five estimators from one set of sample moments. An unconverged
/// `(c, d)` solve is reported through `diagnostics.converged`, not as an error.
pub fn estimate_from_moments(s: &SampleMoments) -> Result<EstimateReport> {
    let (mu_hat, lambda_hat) = estimate_mu_lambda(s)?;
    let (sigma_e_hat, sigma_e_negative) = match estimate_sigma_e(s, mu_hat, lambda_hat) {
        Ok(v) => (v, false),
        Err(Error::NegativeVariance(_)) => (0.0, true),
        Err(e) => return Err(e),
    };
    let cd = solve_c_d(s, lambda_hat)?;
    Ok(EstimateReport {
        mu_hat,
        lambda_hat,
        sigma_e_hat,
        sigma_e_negative,
        c_hat: cd.c,
        d_hat: cd.d,
        sample: *s,
        diagnostics: cd.diagnostics,
    })
}

pub fn estimate(series: &DailySeries, lags: (usize, usize)) -> Result<EstimateReport> {
    estimate_from_moments(&SampleMoments::from_series(series, lags)?)
}

/// Estimated parameters with `d` forced to 0.
pub fn estimate_null(series: &DailySeries) -> Result<ModelParams> {
    estimate(series, (1, 2))?.null_params()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_lambda_arithmetic() {
        let s = SampleMoments {
            mean_return: 2e-4,
            mean_count: 200.0,
            var_return: 0.0,
            var_count: 0.0,
            gamma_count: (1.0, 0.0),
            gamma_count_next: 0.0,
            lags: (1, 2),
        };
        let (mu, lam) = estimate_mu_lambda(&s).unwrap();
        assert!((mu - 1e-6).abs() < 1e-20);
        assert!((lam - 200.0 / E.sqrt()).abs() < 1e-12);
        let s = SampleMoments {
            mean_count: 211.380081,
            ..s
        };
        assert!((estimate_mu_lambda(&s).unwrap().1 - 128.2085).abs() < 1e-5);
        let s = SampleMoments { mean_count: 0.0, ..s };
        assert_eq!(estimate_mu_lambda(&s), Err(Error::ZeroCounts));
    }

    #[test]
    fn sigma_boundary_and_negative() {
        let s = SampleMoments {
            mean_return: 0.0,
            mean_count: 100.0,
            var_return: 4e-12 * 900.0,
            var_count: 900.0,
            gamma_count: (1.0, 0.0),
            gamma_count_next: 0.0,
            lags: (1, 2),
        };
        assert_eq!(estimate_sigma_e(&s, 2e-6, 50.0).unwrap(), 0.0);
        let s = SampleMoments { var_return: 1e-9, ..s };
        assert!(matches!(
            estimate_sigma_e(&s, 2e-6, 50.0),
            Err(Error::NegativeVariance(_))
        ));
        let r = estimate_from_moments(&SampleMoments {
            mean_return: 2e-4,
            gamma_count: (3e4, 0.0),
            ..s
        })
        .unwrap();
        assert!(r.sigma_e_negative);
        assert_eq!(r.sigma_e_hat, 0.0);
    }

    #[test]
    fn closed_loop_grid() {
        for &c in &[0.5, 1.0, 2.0] {
            for &d in &[0.0, 0.15, 0.25, 0.35] {
                let p = ModelParams::new(1.419188e-6, 128.2085, 0.0007289, c, d).unwrap();
                let s = SampleMoments::population(&p, (1, 2)).unwrap();
                let r = estimate_from_moments(&s).unwrap();
                assert!(r.diagnostics.converged, "c={c} d={d}: {:?}", r.diagnostics);
                assert!((r.c_hat - c).abs() < 1e-6, "c={c} d={d}: c_hat {}", r.c_hat);
                assert!((r.d_hat - d).abs() < 1e-6, "c={c} d={d}: d_hat {}", r.d_hat);
                assert!((r.mu_hat / p.mu - 1.0).abs() < 1e-12);
                assert!((r.lambda_hat / p.lambda - 1.0).abs() < 1e-12);
                assert!((r.sigma_e_hat / p.sigma_e - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_lag_system_has_two_roots_below_unit_c() {
        let p = ModelParams::new(1.419188e-6, 128.2085, 0.0007289, 0.5, 0.15).unwrap();
        let s = SampleMoments::population(&p, (1, 2)).unwrap();
        let sol = estimate_c_d(&s, p.lambda).unwrap();
        assert_eq!(sol.diagnostics.roots, 2);
        assert!((sol.d - 0.15).abs() < 1e-6);
        // Same moments with the next lag pointing at the spurious root.
        let mut wrong = s;
        wrong.gamma_count_next = 0.0;
        assert!(estimate_c_d(&wrong, p.lambda).unwrap().d < 0.05);
    }

    #[test]
    fn closed_loop_other_lag_pair() {
        let p = ModelParams::new(1e-6, 100.0, 5e-4, 0.5, 0.25).unwrap();
        let s = SampleMoments::population(&p, (1, 3)).unwrap();
        let r = estimate_from_moments(&s).unwrap();
        assert!((r.c_hat - 0.5).abs() < 1e-6 && (r.d_hat - 0.25).abs() < 1e-6);
    }

    #[test]
    fn solver_errors() {
        let p = ModelParams::baseline(0.0).unwrap();
        let mut s = SampleMoments::population(&p, (1, 2)).unwrap();
        s.gamma_count.0 = -1.0;
        assert!(matches!(estimate_c_d(&s, p.lambda), Err(Error::NegativeSampleCov(_))));
        // Second lag larger than the first cannot be fit.
        s.gamma_count = (1000.0, 5000.0);
        assert!(matches!(estimate_c_d(&s, p.lambda), Err(Error::NoRoot(_))));
        assert!(SampleMoments::population(&p, (2, 2)).is_err());
    }

    #[test]
    fn negative_second_lag_pins_d_at_zero() {
        let p = ModelParams::baseline(0.0).unwrap();
        let mut s = SampleMoments::population(&p, (1, 2)).unwrap();
        s.gamma_count.1 = -150.0;
        let sol = estimate_c_d(&s, p.lambda).unwrap();
        assert_eq!(sol.d, 0.0);
        assert!(sol.diagnostics.d_at_lower_bound);
        assert!((sol.c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn counts_required() {
        let s = DailySeries::from_returns(None, vec![0.1; 50]);
        assert!(matches!(estimate(&s, (1, 2)), Err(Error::InsufficientData(_))));
    }
}
