//! Sample paths of the model: intensity on a fine grid, the counting
//! process, and daily log prices and returns.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::fgn::{CirculantEmbedding, FgnGrid};
use crate::moments::{check_drift_pair, ModelParams};
use crate::rng;

pub const DEFAULT_STEPS_PER_DAY: usize = 50;
pub const DEFAULT_DAYS_PER_MONTH: usize = 20;
pub const DEFAULT_DURATION_POOL: u64 = 40_000_000;

/// How transaction counts are drawn from the cumulative intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountingMethod {
    /// Unit-rate exponential durations compared against the cumulative
    /// intensity, consumed lazily.
    #[default]
    Durations,
    /// One Poisson draw per day with mean equal to the day's intensity
    /// increment. Same law as `Durations`, far fewer random draws.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    pub t_days: usize,
    pub steps_per_day: usize,
    pub days_per_month: usize,
    pub seed: u64,
    /// Cap on exponential draws per path (durations method only).
    pub duration_pool: u64,
    pub counting: CountingMethod,
}

impl PathConfig {
    pub fn new(t_days: usize, seed: u64) -> Self {
        Self {
            t_days,
            steps_per_day: DEFAULT_STEPS_PER_DAY,
            days_per_month: DEFAULT_DAYS_PER_MONTH,
            seed,
            duration_pool: DEFAULT_DURATION_POOL,
            counting: CountingMethod::Durations,
        }
    }

    /// Days needed for `months` whole months.
    pub fn for_months(months: usize, seed: u64) -> Self {
        Self::new(months * DEFAULT_DAYS_PER_MONTH, seed)
    }

    pub fn with_counting(mut self, counting: CountingMethod) -> Self {
        self.counting = counting;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_days == 0 || self.steps_per_day == 0 || self.days_per_month == 0 {
            return Err(Error::InvalidParameter(
                "t_days, steps_per_day and days_per_month must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// fGn grid covering `t_days * steps_per_day` points, rounded up to a power of two.
    pub fn grid(&self) -> Result<FgnGrid> {
        let n = (self.t_days * self.steps_per_day).next_power_of_two().max(2);
        FgnGrid::new(n, 1.0 / self.steps_per_day as f64)
    }
}

/// Aligned per-day counts, returns and log prices.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    /// Transactions per day; absent for series ingested without counts.
    pub counts: Option<Vec<u64>>,
    pub returns: Vec<f64>,
    pub log_price: Vec<f64>,
    pub params: Option<ModelParams>,
    pub config: Option<PathConfig>,
}

impl DailySeries {
    /// Build from log prices; returns are their first differences with
    /// `log P(0) = 0`, so the difference identity holds exactly.
    pub fn from_log_prices(counts: Option<Vec<u64>>, log_price: Vec<f64>) -> Self {
        let returns = log_price
            .iter()
            .scan(0.0, |prev, &lp| {
                let r = lp - *prev;
                *prev = lp;
                Some(r)
            })
            .collect();
        Self {
            counts,
            returns,
            log_price,
            params: None,
            config: None,
        }
    }

    /// Build from returns alone; log prices are the running sum.
    pub fn from_returns(counts: Option<Vec<u64>>, returns: Vec<f64>) -> Self {
        let log_price = returns
            .iter()
            .scan(0.0, |acc, &r| {
                *acc += r;
                Some(*acc)
            })
            .collect();
        Self {
            counts,
            returns,
            log_price,
            params: None,
            config: None,
        }
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn counts(&self) -> Result<&[u64]> {
        self.counts
            .as_deref()
            .ok_or_else(|| Error::InsufficientData("series has no count column".into()))
    }
}

/// `Λ̃(k) = (1/M) Σ_{j ≤ kM} λ e^{X_j}` for k = 1..=t_days.
pub fn cumulative_intensity(lambda: f64, x: &[f64], steps_per_day: usize, t_days: usize) -> Vec<f64> {
    let scale = lambda / steps_per_day as f64;
    let mut acc = 0.0;
    x[..t_days * steps_per_day]
        .chunks_exact(steps_per_day)
        .map(|day| {
            acc += scale * day.iter().map(|v| v.exp()).sum::<f64>();
            acc
        })
        .collect()
}

/// Cumulative intensity of one path.
pub fn simulate_intensity(p: &ModelParams, cfg: &PathConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let emb = CirculantEmbedding::new(&p.gamma, &cfg.grid()?)?;
    let x = emb.sample_pair(&mut rng::stream(cfg.seed, rng::STREAM_FGN)).0;
    Ok(cumulative_intensity(p.lambda, &x, cfg.steps_per_day, cfg.t_days))
}

/// Daily counts from a cumulative intensity, using the duration stream of `cfg.seed`.
pub fn simulate_counts(cfg: &PathConfig, cum: &[f64]) -> Result<Vec<u64>> {
    let mut r = rng::stream(cfg.seed, rng::STREAM_DURATIONS);
    counts_from_intensity(cum, cfg.counting, cfg.duration_pool, &mut r)
}

fn counts_from_intensity(cum: &[f64], method: CountingMethod, pool: u64, r: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(cum.len());
    match method {
        CountingMethod::Durations => {
            let mut used: u64 = 0;
            let mut next = 0.0;
            let mut draw = |used: &mut u64| -> Result<f64> {
                if *used >= pool {
                    return Err(Error::DurationPoolExhausted { cap: pool });
                }
                *used += 1;
                Ok(Exp1.sample(r))
            };
            next += draw(&mut used)?;
            for &level in cum {
                let mut k = 0;
                while next <= level {
                    k += 1;
                    next += draw(&mut used)?;
                }
                out.push(k);
            }
        }
        CountingMethod::Poisson => {
            let mut prev = 0.0;
            for &level in cum {
                let inc = level - prev;
                prev = level;
                let k = if inc > 0.0 {
                    Poisson::new(inc)
                        .map_err(|e| Error::InvalidParameter(format!("poisson mean {inc}: {e}")))?
                        .sample(r) as u64
                } else {
                    0
                };
                out.push(k);
            }
        }
    }
    Ok(out)
}

/// Daily sums of `k` i.i.d. N(0, σ²) shocks, drawn as `σ √k Z`.
fn shock_sums(counts: &[u64], sigma: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    counts
        .iter()
        .map(|&k| {
            let z: f64 = r.sample(StandardNormal);
            sigma * (k as f64).sqrt() * z
        })
        .collect()
}

fn assemble(p: &ModelParams, counts: Vec<u64>, shocks: &[f64]) -> DailySeries {
    let mut n: u64 = 0;
    let mut s = 0.0;
    let lp: Vec<f64> = counts
        .iter()
        .zip(shocks)
        .map(|(&k, &e)| {
            n += k;
            s += e;
            p.mu * n as f64 + s
        })
        .collect();
    DailySeries::from_log_prices(Some(counts), lp)
}

/// Reusable simulator for many paths sharing parameters and length. The
/// circulant embedding is factorized once.
#[derive(Debug)]
pub struct PathSimulator {
    params: ModelParams,
    config: PathConfig,
    emb: CirculantEmbedding,
}

impl PathSimulator {
    pub fn new(p: &ModelParams, cfg: &PathConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            params: *p,
            config: *cfg,
            emb: CirculantEmbedding::new(&p.gamma, &cfg.grid()?)?,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &PathConfig {
        &self.config
    }

    fn build(&self, x: &[f64], seed: u64, dur: u64, shk: u64) -> Result<DailySeries> {
        let c = &self.config;
        let cum = cumulative_intensity(self.params.lambda, x, c.steps_per_day, c.t_days);
        let counts = counts_from_intensity(&cum, c.counting, c.duration_pool, &mut rng::stream(seed, dur))?;
        let shocks = shock_sums(&counts, self.params.sigma_e, &mut rng::stream(seed, shk));
        let mut s = assemble(&self.params, counts, &shocks);
        s.params = Some(self.params);
        s.config = Some(PathConfig { seed, ..*c });
        Ok(s)
    }

    /// One path; identical to `simulate_path` with the same seed.
    pub fn path(&self, seed: u64) -> Result<DailySeries> {
        let (x, _) = self.emb.sample_pair(&mut rng::stream(seed, rng::STREAM_FGN));
        self.build(&x, seed, rng::STREAM_DURATIONS, rng::STREAM_SHOCKS)
    }

    /// Two independent paths from one embedding draw. The first equals `path(seed)`.
    pub fn path_pair(&self, seed: u64) -> Result<(DailySeries, DailySeries)> {
        let (x, y) = self.emb.sample_pair(&mut rng::stream(seed, rng::STREAM_FGN));
        let a = self.build(&x, seed, rng::STREAM_DURATIONS, rng::STREAM_SHOCKS)?;
        let b = self.build(&y, seed, rng::STREAM_DURATIONS_PAIR, rng::STREAM_SHOCKS_PAIR)?;
        Ok((a, b))
    }
}

pub fn simulate_path(p: &ModelParams, cfg: &PathConfig) -> Result<DailySeries> {
    PathSimulator::new(p, cfg)?.path(cfg.seed)
}

/// Buy/sell model: two counting processes driven by the same log-intensity
/// path with baselines `λ_1`, `λ_2`, conditionally independent given it.
/// The returned counts are total transactions per day.
pub fn simulate_two_shock_path(buy: &ModelParams, sell: &ModelParams, cfg: &PathConfig) -> Result<DailySeries> {
    check_drift_pair(buy.mu, sell.mu)?;
    if buy.gamma != sell.gamma {
        return Err(Error::InvalidParameter(
            "two-shock model needs a common intensity kernel (same c and d)".into(),
        ));
    }
    cfg.validate()?;
    let emb = CirculantEmbedding::new(&buy.gamma, &cfg.grid()?)?;
    let x = emb.sample_pair(&mut rng::stream(cfg.seed, rng::STREAM_FGN)).0;
    let unit = cumulative_intensity(1.0, &x, cfg.steps_per_day, cfg.t_days);
    let side = |p: &ModelParams, dur: u64, shk: u64| -> Result<(Vec<u64>, Vec<f64>)> {
        let cum: Vec<f64> = unit.iter().map(|v| v * p.lambda).collect();
        let counts = counts_from_intensity(&cum, cfg.counting, cfg.duration_pool, &mut rng::stream(cfg.seed, dur))?;
        let shocks = shock_sums(&counts, p.sigma_e, &mut rng::stream(cfg.seed, shk));
        Ok((counts, shocks))
    };
    let (n1, e1) = side(buy, rng::STREAM_DURATIONS, rng::STREAM_SHOCKS)?;
    let (n2, e2) = side(sell, rng::STREAM_DURATIONS_SELL, rng::STREAM_SHOCKS_SELL)?;
    let (mut c1, mut c2, mut s) = (0u64, 0u64, 0.0);
    let mut total = Vec::with_capacity(cfg.t_days);
    let mut lp = Vec::with_capacity(cfg.t_days);
    for t in 0..cfg.t_days {
        c1 += n1[t];
        c2 += n2[t];
        s += e1[t] + e2[t];
        total.push(n1[t] + n2[t]);
        lp.push(buy.mu * c1 as f64 + sell.mu * c2 as f64 + s);
    }
    let mut out = DailySeries::from_log_prices(Some(total), lp);
    out.params = Some(*buy);
    out.config = Some(*cfg);
    Ok(out)
}
