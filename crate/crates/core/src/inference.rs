//! Tests of long-run return predictability, the GPH memory estimator and a
//! Monte Carlo harness over grids of horizons and sample sizes.

use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::aggregate::{build_panel, resolve_horizon, rho_hat, rho_tilde, AggregationScheme};
use crate::error::{Error, Result};
use crate::estimate;
use crate::moments::{self, compute_h, ModelParams};
use crate::rng::mix_seed;
use crate::simulate::{CountingMethod, DailySeries, PathConfig, PathSimulator, DEFAULT_STEPS_PER_DAY};
use crate::stats::{mean, normal_quantile, normal_sf, normality_check, ols, quantile, variance, NormalityCheck};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    Asymptotic,
    Bootstrap,
    SimulatedLinear,
}

impl TestMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Asymptotic => "asymptotic",
            Self::Bootstrap => "bootstrap",
            Self::SimulatedLinear => "simulated-critical-linear",
        }
    }
}

/// Which sample correlation enters the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Statistic {
    #[default]
    RhoHat,
    RhoTilde,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RhoHat => "rho_hat",
            Self::RhoTilde => "rho_tilde",
        }
    }
}

/// Where the short-memory null model comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullSource {
    /// Method-of-moments fit of the series at the given count lags, `d` set to 0.
    Estimated { lags: (usize, usize) },
    /// Fixed parameters; `d` is set to 0.
    Known(ModelParams),
}

impl Default for NullSource {
    fn default() -> Self {
        Self::Estimated { lags: (1, 2) }
    }
}

impl NullSource {
    fn resolve(&self, series: &DailySeries) -> Result<(ModelParams, Option<bool>)> {
        match self {
            Self::Estimated { lags } => {
                let r = estimate::estimate(series, *lags)?;
                Ok((r.null_params()?, Some(r.diagnostics.converged)))
            }
            Self::Known(p) => Ok((p.with_d(0.0)?, None)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub method: TestMethod,
    pub scheme: AggregationScheme,
    pub statistic_kind: Statistic,
    pub t_tilde: usize,
    pub h_tilde: usize,
    /// Days skipped at the start of each forward window (only used by `ρ̃`).
    pub h: usize,
    /// Normalized statistic, `normalization · ρ`.
    pub statistic: f64,
    pub normalization: f64,
    pub critical_value: f64,
    /// Asymptotic p-value, or the share of null replicates at or above the
    /// observed statistic for simulated methods.
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub null_params: ModelParams,
    /// Null replicates that produced a statistic (0 for the asymptotic test).
    pub replicates: usize,
    pub failed_replicates: usize,
    /// Convergence of the `(c, d)` solve when the null model was estimated.
    pub estimate_converged: Option<bool>,
    pub warning: Option<String>,
}

fn months(series: &DailySeries, m: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::InvalidParameter("days per month must be positive".into()));
    }
    Ok(series.len() / m)
}

/// Normalized statistic of `series` under `scheme`.
pub fn statistic(series: &DailySeries, m: usize, scheme: AggregationScheme, h: usize, kind: Statistic) -> Result<f64> {
    let t_tilde = months(series, m)?;
    let h_tilde = resolve_horizon(scheme, t_tilde)?;
    let panel = build_panel(series, m, h_tilde, h)?;
    let rho = match kind {
        Statistic::RhoHat => rho_hat(&panel)?,
        Statistic::RhoTilde => rho_tilde(&panel)?,
    };
    Ok(scheme.normalization(t_tilde) * rho)
}

/// Asymptotic test on `√(T̃^{1−κ}) ρ̃` with critical value
/// `z_{1−α} √(S²/(A₁A₂))` evaluated at the short-memory null.
pub fn test_asymptotic(
    series: &DailySeries,
    m: usize,
    kappa: f64,
    alpha: f64,
    null: &NullSource,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let scheme = AggregationScheme::power_law(kappa)?;
    let (p0, converged) = null.resolve(series)?;
    let h = compute_h(p0.c());
    let t_tilde = months(series, m)?;
    let h_tilde = resolve_horizon(scheme, t_tilde)?;
    let stat = statistic(series, m, scheme, h, Statistic::RhoTilde)?;
    let table = moments::moment_table(&p0, m)?;
    let sd = table.variance_ratio().sqrt();
    let critical_value = normal_quantile(1.0 - alpha) * sd;
    let warning =
        (kappa >= 1.0 / 3.0).then(|| format!("kappa = {kappa} is outside (0, 1/3) where the normal limit holds"));
    Ok(TestReport {
        method: TestMethod::Asymptotic,
        scheme,
        statistic_kind: Statistic::RhoTilde,
        t_tilde,
        h_tilde,
        h,
        statistic: stat,
        normalization: scheme.normalization(t_tilde),
        critical_value,
        p_value: normal_sf(stat / sd),
        reject: stat > critical_value,
        alpha,
        null_params: p0,
        replicates: 0,
        failed_replicates: 0,
        estimate_converged: converged,
        warning,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Settings for tests whose critical values come from simulated null paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub statistic: Statistic,
    pub null: NullSource,
    pub steps_per_day: usize,
    pub counting: CountingMethod,
}

impl SimulationOptions {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            alpha: DEFAULT_ALPHA,
            seed,
            statistic: Statistic::RhoHat,
            null: NullSource::default(),
            steps_per_day: DEFAULT_STEPS_PER_DAY,
            counting: CountingMethod::Durations,
        }
    }
}

pub const MIN_BOOTSTRAP_REPLICATES: usize = 100;

/// Parametric bootstrap under the power law: `B` null paths from the fitted
/// model with `d = 0`, critical value at their `1 − α` quantile.
pub fn test_bootstrap(series: &DailySeries, m: usize, kappa: f64, opts: &SimulationOptions) -> Result<TestReport> {
    let scheme = AggregationScheme::power_law(kappa)?;
    Ok(test_simulated(series, m, &[scheme], opts)?.remove(0))
}

/// Un-normalized `ρ̂` with `H̃ = ⌊θT̃⌋` against simulated null critical values.
/// Power does not tend to 1 under this framework.
pub fn test_linear_simulated(
    series: &DailySeries,
    m: usize,
    theta: f64,
    opts: &SimulationOptions,
) -> Result<TestReport> {
    let scheme = AggregationScheme::linear(theta)?;
    Ok(test_simulated(series, m, &[scheme], opts)?.remove(0))
}

/// Simulated-critical-value tests for several schemes sharing one set of null paths.
pub fn test_simulated(
    series: &DailySeries,
    m: usize,
    schemes: &[AggregationScheme],
    opts: &SimulationOptions,
) -> Result<Vec<TestReport>> {
    check_alpha(opts.alpha)?;
    if opts.replicates < MIN_BOOTSTRAP_REPLICATES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_BOOTSTRAP_REPLICATES} replicates, got {}",
            opts.replicates
        )));
    }
    let (p0, converged) = opts.null.resolve(series)?;
    let h = compute_h(p0.c());
    let t_tilde = months(series, m)?;
    let observed = schemes
        .iter()
        .map(|&s| statistic(series, m, s, h, opts.statistic))
        .collect::<Result<Vec<_>>>()?;
    let cfg = PathConfig {
        t_days: t_tilde * m,
        steps_per_day: opts.steps_per_day,
        days_per_month: m,
        seed: opts.seed,
        counting: opts.counting,
        ..PathConfig::new(t_tilde * m, opts.seed)
    };
    let sim = PathSimulator::new(&p0, &cfg)?;
    let pairs = opts.replicates.div_ceil(2);
    let per_pair: Vec<Result<[Vec<Option<f64>>; 2]>> = (0..pairs)
        .into_par_iter()
        .map(|k| {
            let (a, b) = sim.path_pair(mix_seed(opts.seed, 0, k as u64))?;
            let eval = |s: &DailySeries| -> Vec<Option<f64>> {
                schemes
                    .iter()
                    .map(|&sc| statistic(s, m, sc, h, opts.statistic).ok())
                    .collect()
            };
            Ok([eval(&a), eval(&b)])
        })
        .collect();
    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(opts.replicates); schemes.len()];
    let mut failed = vec![0usize; schemes.len()];
    let mut taken = 0;
    for pair in per_pair {
        for half in pair? {
            if taken == opts.replicates {
                break;
            }
            taken += 1;
            for (j, v) in half.into_iter().enumerate() {
                match v {
                    Some(x) => draws[j].push(x),
                    None => failed[j] += 1,
                }
            }
        }
    }
    schemes
        .iter()
        .enumerate()
        .map(|(j, &scheme)| {
            let null = &draws[j];
            if null.is_empty() {
                return Err(Error::InsufficientData("every null replicate failed".into()));
            }
            let stat = observed[j];
            let (critical_value, p_value, reject) = decide(stat, null, opts.alpha);
            let method = match scheme {
                AggregationScheme::PowerLaw(_) => TestMethod::Bootstrap,
                AggregationScheme::LinearGrowth(_) => TestMethod::SimulatedLinear,
            };
            Ok(TestReport {
                method,
                scheme,
                statistic_kind: opts.statistic,
                t_tilde,
                h_tilde: resolve_horizon(scheme, t_tilde)?,
                h,
                statistic: stat,
                normalization: scheme.normalization(t_tilde),
                critical_value,
                p_value,
                reject,
                alpha: opts.alpha,
                null_params: p0,
                replicates: null.len(),
                failed_replicates: failed[j],
                estimate_converged: converged,
                warning: None,
            })
        })
        .collect()
}

/// Critical value (type-7 `1 − α` quantile of the null draws), share of
/// draws at or above `stat`, and the one-sided decision.
pub fn decide(stat: f64, null: &[f64], alpha: f64) -> (f64, f64, bool) {
    let cv = quantile(null, 1.0 - alpha);
    let exceed = null.iter().filter(|&&v| v >= stat).count();
    (cv, exceed as f64 / null.len() as f64, stat > cv)
}

/// Log-periodogram regression fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GphFit {
    pub d_hat: f64,
    pub std_error: f64,
    pub bandwidth: usize,
}

pub const GPH_MIN_LEN: usize = 64;
pub const GPH_MIN_ORDINATES: usize = 4;

/// Regress `log I(ω_j)` on `−2 log ω_j` over `j = 1..=⌊n^exponent⌋`; the slope is `d̂`.
pub fn gph_regression(x: &[f64], exponent: f64) -> Result<GphFit> {
    let n = x.len();
    if n < GPH_MIN_LEN {
        return Err(Error::TooFewOrdinates {
            got: n,
            need: GPH_MIN_LEN,
        });
    }
    if !(exponent > 0.0 && exponent < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth exponent must lie in (0, 1), got {exponent}"
        )));
    }
    let bw = ((n as f64).powf(exponent) + 1e-9).floor() as usize;
    let bw = bw.min((n - 1) / 2);
    if bw < GPH_MIN_ORDINATES {
        return Err(Error::TooFewOrdinates {
            got: bw,
            need: GPH_MIN_ORDINATES,
        });
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * n as f64);
    let (mut xs, mut ys) = (Vec::with_capacity(bw), Vec::with_capacity(bw));
    for (j, z) in buf.iter().enumerate().take(bw + 1).skip(1) {
        let w = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        xs.push(-2.0 * w.ln());
        ys.push((z.norm_sqr() * norm).ln());
    }
    let fit = ols(&xs, &ys);
    Ok(GphFit {
        d_hat: fit.slope,
        std_error: fit.slope_se,
        bandwidth: bw,
    })
}

pub fn estimate_gph(x: &[f64], exponent: f64) -> Result<f64> {
    Ok(gph_regression(x, exponent)?.d_hat)
}

/// Per-replication hypothesis test run inside the Monte Carlo harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McTest {
    None,
    /// Asymptotic test (power-law schemes only).
    Asymptotic(NullSource),
    /// Bootstrap for power-law schemes, simulated critical values for linear ones.
    Simulated(SimulationOptions),
}

/// A grid of `(scheme, T̃)` cells, each with `reps` independent paths.
#[derive(Debug, Clone, PartialEq)]
pub struct McExperiment {
    pub params: ModelParams,
    pub m: usize,
    pub steps_per_day: usize,
    pub counting: CountingMethod,
    pub t_tildes: Vec<usize>,
    pub schemes: Vec<AggregationScheme>,
    pub reps: usize,
    pub base_seed: u64,
    pub alpha: f64,
    pub test: McTest,
}

impl McExperiment {
    pub fn new(
        params: ModelParams,
        t_tildes: Vec<usize>,
        schemes: Vec<AggregationScheme>,
        reps: usize,
        base_seed: u64,
    ) -> Self {
        Self {
            params,
            m: crate::simulate::DEFAULT_DAYS_PER_MONTH,
            steps_per_day: DEFAULT_STEPS_PER_DAY,
            counting: CountingMethod::Durations,
            t_tildes,
            schemes,
            reps,
            base_seed,
            alpha: DEFAULT_ALPHA,
            test: McTest::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McCell {
    pub scheme: AggregationScheme,
    pub t_tilde: usize,
    pub reps: usize,
    /// Replications where `ρ̂` or the test could not be computed.
    pub failed: usize,
    pub rho_hat: Vec<f64>,
    pub rho_tilde: Vec<f64>,
    pub mean_rho: f64,
    pub var_rho: f64,
    pub mean_rho_tilde: f64,
    pub var_rho_tilde: f64,
    pub rejection_rate: Option<f64>,
    /// Skewness/kurtosis check of the normalized `ρ̂`.
    pub normality: Option<NormalityCheck>,
}

/// `log var(ρ̂) = β₀ + β₁ log T̃` across the cells of one scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSlope {
    pub scheme: AggregationScheme,
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub cells: Vec<McCell>,
    pub slopes: Vec<McSlope>,
}

struct RepOutcome {
    rho_hat: Option<f64>,
    rho_tilde: Option<f64>,
    reject: Option<bool>,
}

fn run_rep(exp: &McExperiment, scheme: AggregationScheme, s: &DailySeries, rep_seed: u64) -> RepOutcome {
    let m = exp.m;
    let h = compute_h(exp.params.c());
    let t_tilde = s.len() / m;
    let panel = resolve_horizon(scheme, t_tilde).and_then(|ht| build_panel(s, m, ht, h));
    let (rho_hat_v, rho_tilde_v) = match &panel {
        Ok(p) => (rho_hat(p).ok(), rho_tilde(p).ok()),
        Err(_) => (None, None),
    };
    let reject = match exp.test {
        McTest::None => None,
        McTest::Asymptotic(null) => match scheme {
            AggregationScheme::PowerLaw(k) => test_asymptotic(s, m, k, exp.alpha, &null).ok().map(|r| r.reject),
            AggregationScheme::LinearGrowth(_) => None,
        },
        McTest::Simulated(opts) => {
            let o = SimulationOptions {
                seed: rep_seed,
                alpha: exp.alpha,
                ..opts
            };
            test_simulated(s, m, &[scheme], &o).ok().map(|r| r[0].reject)
        }
    };
    RepOutcome {
        rho_hat: rho_hat_v,
        rho_tilde: rho_tilde_v,
        reject,
    }
}

fn summarize(v: &[f64]) -> (f64, f64) {
    match v.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (v[0], f64::NAN),
        _ => (mean(v), variance(v)),
    }
}

/// Run every cell. Replication `2k` and `2k+1` of cell `i` share the path
/// seed `mix_seed(base_seed, i, k)` through the paired embedding draw, so
/// results do not depend on scheduling. Failing replications are counted,
/// not fatal.
pub fn run_mc_experiment(exp: &McExperiment) -> Result<McResult> {
    check_alpha(exp.alpha)?;
    if exp.reps == 0 || exp.t_tildes.is_empty() || exp.schemes.is_empty() {
        return Err(Error::InvalidParameter(
            "experiment needs reps, T̃ values and schemes".into(),
        ));
    }
    let mut cells = Vec::new();
    for (si, &scheme) in exp.schemes.iter().enumerate() {
        for (ti, &t_tilde) in exp.t_tildes.iter().enumerate() {
            let cell_idx = (si * exp.t_tildes.len() + ti) as u64;
            let mut cfg = PathConfig::new(t_tilde * exp.m, exp.base_seed);
            cfg.steps_per_day = exp.steps_per_day;
            cfg.days_per_month = exp.m;
            cfg.counting = exp.counting;
            let sim = PathSimulator::new(&exp.params, &cfg)?;
            let outcomes: Vec<RepOutcome> = (0..exp.reps.div_ceil(2))
                .into_par_iter()
                .flat_map_iter(|k| {
                    let seed = mix_seed(exp.base_seed, cell_idx, k as u64);
                    match sim.path_pair(seed) {
                        Ok((a, b)) => vec![
                            run_rep(exp, scheme, &a, mix_seed(seed, 1, 0)),
                            run_rep(exp, scheme, &b, mix_seed(seed, 1, 1)),
                        ],
                        Err(_) => (0..2)
                            .map(|_| RepOutcome {
                                rho_hat: None,
                                rho_tilde: None,
                                reject: None,
                            })
                            .collect(),
                    }
                })
                .collect();
            let outcomes = &outcomes[..exp.reps];
            let rh: Vec<f64> = outcomes.iter().filter_map(|o| o.rho_hat).collect();
            let rt: Vec<f64> = outcomes.iter().filter_map(|o| o.rho_tilde).collect();
            let decisions: Vec<bool> = outcomes.iter().filter_map(|o| o.reject).collect();
            let test_failures = match exp.test {
                McTest::None => 0,
                _ => outcomes.len() - decisions.len(),
            };
            let failed = (outcomes.len() - rh.len()).max(test_failures);
            let (mean_rho, var_rho) = summarize(&rh);
            let (mean_rho_tilde, var_rho_tilde) = summarize(&rt);
            let rejection_rate = (!decisions.is_empty())
                .then(|| decisions.iter().filter(|&&r| r).count() as f64 / decisions.len() as f64);
            let scale = scheme.normalization(t_tilde);
            let normality = (rh.len() >= 8).then(|| normality_check(&rh.iter().map(|v| v * scale).collect::<Vec<_>>()));
            cells.push(McCell {
                scheme,
                t_tilde,
                reps: exp.reps,
                failed,
                rho_hat: rh,
                rho_tilde: rt,
                mean_rho,
                var_rho,
                mean_rho_tilde,
                var_rho_tilde,
                rejection_rate,
                normality,
            });
        }
    }
    let slopes = exp
        .schemes
        .iter()
        .filter_map(|&scheme| {
            let (x, y): (Vec<f64>, Vec<f64>) = cells
                .iter()
                .filter(|c| c.scheme == scheme && c.var_rho > 0.0)
                .map(|c| ((c.t_tilde as f64).ln(), c.var_rho.ln()))
                .unzip();
            (x.len() >= 2).then(|| {
                let f = ols(&x, &y);
                McSlope {
                    scheme,
                    intercept: f.intercept,
                    slope: f.slope,
                }
            })
        })
        .collect();
    Ok(McResult { cells, slopes })
}

impl McResult {
    /// CSV with columns
    /// `framework,param,T_tilde,reps,mean_rho,var_rho,rejection_rate,slope_cell_marker,failed`.
    /// Slope rows have `T_tilde = *`, the intercept in `mean_rho` and the slope in `var_rho`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("framework,param,T_tilde,reps,mean_rho,var_rho,rejection_rate,slope_cell_marker,failed\n");
        for c in &self.cells {
            let rate = c.rejection_rate.map(|r| r.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},cell,{}\n",
                c.scheme.name(),
                c.scheme.param(),
                c.t_tilde,
                c.reps,
                c.mean_rho,
                c.var_rho,
                rate,
                c.failed
            ));
        }
        for s in &self.slopes {
            out.push_str(&format!(
                "{},{},*,,{},{},,slope,\n",
                s.scheme.name(),
                s.scheme.param(),
                s.intercept,
                s.slope
            ));
        }
        out
    }
}
