//! `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::aggregate::AggregationScheme;
use crate::error::{Error, Result};
use crate::inference::{McTest, NullSource, SimulationOptions, Statistic, DEFAULT_ALPHA};
use crate::moments::ModelParams;
use crate::simulate::{
    CountingMethod, PathConfig, DEFAULT_DAYS_PER_MONTH, DEFAULT_DURATION_POOL, DEFAULT_STEPS_PER_DAY,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Framework {
    Power,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullKind {
    Estimated,
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McTestKind {
    None,
    Asymptotic,
    Simulated,
}

/// Every setting a subcommand may read. All fields have defaults except `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mu: f64,
    pub lambda: f64,
    pub sigma_e: f64,
    pub c: f64,
    pub d: f64,
    pub days: usize,
    /// Overrides `days` with `months * days_per_month` when set.
    pub months: Option<usize>,
    pub steps_per_day: usize,
    pub days_per_month: usize,
    pub counting: CountingMethod,
    pub duration_pool: u64,
    pub seed: Option<u64>,
    pub framework: Framework,
    pub kappa: f64,
    pub theta: f64,
    pub alpha: f64,
    pub reps: usize,
    pub bootstrap_reps: usize,
    pub statistic: Statistic,
    pub null: NullKind,
    pub lags: (usize, usize),
    pub bandwidth: f64,
    pub max_lag: usize,
    pub t_tildes: Vec<usize>,
    pub kappas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub mc_test: McTestKind,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ModelParams::baseline(0.0).expect("baseline parameters are valid");
        Self {
            mu: p.mu,
            lambda: p.lambda,
            sigma_e: p.sigma_e,
            c: p.c(),
            d: 0.0,
            days: 5000,
            months: None,
            steps_per_day: DEFAULT_STEPS_PER_DAY,
            days_per_month: DEFAULT_DAYS_PER_MONTH,
            counting: CountingMethod::Durations,
            duration_pool: DEFAULT_DURATION_POOL,
            seed: None,
            framework: Framework::Power,
            kappa: 0.3,
            theta: 0.05,
            alpha: DEFAULT_ALPHA,
            reps: 100,
            bootstrap_reps: 200,
            statistic: Statistic::RhoHat,
            null: NullKind::Estimated,
            lags: (1, 2),
            bandwidth: 0.5,
            max_lag: 5,
            t_tildes: vec![131, 262, 524],
            kappas: vec![0.1, 0.3],
            thetas: vec![],
            mc_test: McTestKind::None,
            input: None,
            out: None,
            threads: None,
        }
    }
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config {
        line,
        msg: format!("{key}: cannot parse '{v}'"),
    })
}

fn list<T: FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| num(line, key, s.trim())).collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Apply one `key = value` setting; `line` is used in error messages.
    pub fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        let bad = |msg: &str| Error::Config {
            line,
            msg: format!("{key}: {msg} '{v}'"),
        };
        match key {
            "mu" => self.mu = num(line, key, v)?,
            "lambda" => self.lambda = num(line, key, v)?,
            "sigma_e" => self.sigma_e = num(line, key, v)?,
            "c" => self.c = num(line, key, v)?,
            "d" => self.d = num(line, key, v)?,
            "days" => self.days = num(line, key, v)?,
            "months" => self.months = Some(num(line, key, v)?),
            "steps_per_day" => self.steps_per_day = num(line, key, v)?,
            "days_per_month" => self.days_per_month = num(line, key, v)?,
            "counting" => {
                self.counting = match v {
                    "durations" => CountingMethod::Durations,
                    "poisson" => CountingMethod::Poisson,
                    _ => return Err(bad("expected durations or poisson, got")),
                }
            }
            "duration_pool" => self.duration_pool = num(line, key, v)?,
            "seed" => self.seed = Some(num(line, key, v)?),
            "framework" => {
                self.framework = match v {
                    "power" => Framework::Power,
                    "linear" => Framework::Linear,
                    _ => return Err(bad("expected power or linear, got")),
                }
            }
            "kappa" => self.kappa = num(line, key, v)?,
            "theta" => self.theta = num(line, key, v)?,
            "alpha" => self.alpha = num(line, key, v)?,
            "reps" => self.reps = num(line, key, v)?,
            "bootstrap_reps" => self.bootstrap_reps = num(line, key, v)?,
            "statistic" => {
                self.statistic = match v {
                    "rho_hat" => Statistic::RhoHat,
                    "rho_tilde" => Statistic::RhoTilde,
                    _ => return Err(bad("expected rho_hat or rho_tilde, got")),
                }
            }
            "null" => {
                self.null = match v {
                    "estimated" => NullKind::Estimated,
                    "known" => NullKind::Known,
                    _ => return Err(bad("expected estimated or known, got")),
                }
            }
            "lags" => {
                let l: Vec<usize> = list(line, key, v)?;
                match l[..] {
                    [a, b] => self.lags = (a, b),
                    _ => return Err(bad("expected two comma-separated lags, got")),
                }
            }
            "bandwidth" => self.bandwidth = num(line, key, v)?,
            "max_lag" => self.max_lag = num(line, key, v)?,
            "t_tildes" => self.t_tildes = list(line, key, v)?,
            "kappas" => self.kappas = list(line, key, v)?,
            "thetas" => self.thetas = list(line, key, v)?,
            "mc_test" => {
                self.mc_test = match v {
                    "none" => McTestKind::None,
                    "asymptotic" => McTestKind::Asymptotic,
                    "simulated" => McTestKind::Simulated,
                    _ => return Err(bad("expected none, asymptotic or simulated, got")),
                }
            }
            "input" => self.input = Some(PathBuf::from(v)),
            "out" => self.out = Some(PathBuf::from(v)),
            "threads" => self.threads = Some(num(line, key, v)?),
            _ => {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key '{key}'"),
                })
            }
        }
        Ok(())
    }

    /// Check cross-field invariants. Errors carry `line` 0.
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config {
            line: 0,
            msg: e.to_string(),
        };
        self.params().map_err(wrap)?;
        self.path_config(0).validate().map_err(wrap)?;
        let unit = |k: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config {
                    line: 0,
                    msg: format!("{k} must lie in (0, 1), got {v}"),
                })
            }
        };
        unit("kappa", self.kappa)?;
        unit("theta", self.theta)?;
        unit("alpha", self.alpha)?;
        unit("bandwidth", self.bandwidth)?;
        for &k in &self.kappas {
            unit("kappas", k)?;
        }
        for &t in &self.thetas {
            unit("thetas", t)?;
        }
        if self.lags.0 == 0 || self.lags.1 <= self.lags.0 {
            return Err(Error::Config {
                line: 0,
                msg: "lags must satisfy 1 <= first < second".into(),
            });
        }
        if self.threads == Some(0) {
            return Err(Error::Config {
                line: 0,
                msg: "threads must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.mu, self.lambda, self.sigma_e, self.c, self.d)
    }

    pub fn t_days(&self) -> usize {
        self.months.map_or(self.days, |m| m * self.days_per_month)
    }

    pub fn path_config(&self, seed: u64) -> PathConfig {
        PathConfig {
            t_days: self.t_days(),
            steps_per_day: self.steps_per_day,
            days_per_month: self.days_per_month,
            seed,
            duration_pool: self.duration_pool,
            counting: self.counting,
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config {
            line: 0,
            msg: "this command needs a seed (--seed or 'seed = ...')".into(),
        })
    }

    pub fn scheme(&self) -> Result<AggregationScheme> {
        match self.framework {
            Framework::Power => AggregationScheme::power_law(self.kappa),
            Framework::Linear => AggregationScheme::linear(self.theta),
        }
    }

    pub fn null_source(&self) -> Result<NullSource> {
        Ok(match self.null {
            NullKind::Estimated => NullSource::Estimated { lags: self.lags },
            NullKind::Known => NullSource::Known(self.params()?),
        })
    }

    pub fn simulation_options(&self, seed: u64) -> Result<SimulationOptions> {
        Ok(SimulationOptions {
            replicates: self.bootstrap_reps,
            alpha: self.alpha,
            seed,
            statistic: self.statistic,
            null: self.null_source()?,
            steps_per_day: self.steps_per_day,
            counting: self.counting,
        })
    }

    pub fn mc_test(&self, seed: u64) -> Result<McTest> {
        Ok(match self.mc_test {
            McTestKind::None => McTest::None,
            McTestKind::Asymptotic => McTest::Asymptotic(self.null_source()?),
            McTestKind::Simulated => McTest::Simulated(self.simulation_options(seed)?),
        })
    }

    /// Resolved settings as `key = value` lines, in a fixed order. `out` and
    /// `threads` are left out since they do not affect results.
    pub fn to_lines(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut kv = |k: &str, val: String| v.push(format!("{k} = {val}"));
        kv("mu", self.mu.to_string());
        kv("lambda", self.lambda.to_string());
        kv("sigma_e", self.sigma_e.to_string());
        kv("c", self.c.to_string());
        kv("d", self.d.to_string());
        kv("days", self.days.to_string());
        if let Some(m) = self.months {
            kv("months", m.to_string());
        }
        kv("steps_per_day", self.steps_per_day.to_string());
        kv("days_per_month", self.days_per_month.to_string());
        kv(
            "counting",
            match self.counting {
                CountingMethod::Durations => "durations",
                CountingMethod::Poisson => "poisson",
            }
            .into(),
        );
        kv("duration_pool", self.duration_pool.to_string());
        if let Some(s) = self.seed {
            kv("seed", s.to_string());
        }
        kv(
            "framework",
            match self.framework {
                Framework::Power => "power",
                Framework::Linear => "linear",
            }
            .into(),
        );
        kv("kappa", self.kappa.to_string());
        kv("theta", self.theta.to_string());
        kv("alpha", self.alpha.to_string());
        kv("reps", self.reps.to_string());
        kv("bootstrap_reps", self.bootstrap_reps.to_string());
        kv("statistic", self.statistic.name().into());
        kv(
            "null",
            match self.null {
                NullKind::Estimated => "estimated",
                NullKind::Known => "known",
            }
            .into(),
        );
        kv("lags", format!("{},{}", self.lags.0, self.lags.1));
        kv("bandwidth", self.bandwidth.to_string());
        kv("max_lag", self.max_lag.to_string());
        kv("t_tildes", join(&self.t_tildes));
        kv("kappas", join(&self.kappas));
        kv("thetas", join(&self.thetas));
        kv(
            "mc_test",
            match self.mc_test {
                McTestKind::None => "none",
                McTestKind::Asymptotic => "asymptotic",
                McTestKind::Simulated => "simulated",
            }
            .into(),
        );
        if let Some(p) = &self.input {
            kv("input", p.display().to_string());
        }
        v
    }

    /// Provenance header: tool version, command, then every resolved setting.
    pub fn provenance(&self, command: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# coxret {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# command = {command}");
        for l in self.to_lines() {
            let _ = writeln!(s, "# {l}");
        }
        s
    }
}

/// Parse `key = value` lines on top of the defaults. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    apply_config(&mut cfg, text)?;
    Ok(cfg)
}

pub fn apply_config(cfg: &mut RunConfig, text: &str) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
            line: i + 1,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        cfg.set(i + 1, k.trim(), v.trim())?;
    }
    Ok(())
}

/// Recover the configuration recorded in an output file's provenance header.
/// Returns the command name and the settings.
pub fn config_from_provenance(text: &str) -> Result<(String, RunConfig)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.starts_with("# coxret ") => {}
        _ => {
            return Err(Error::Config {
                line: 1,
                msg: "not a coxret output file".into(),
            })
        }
    }
    let mut cfg = RunConfig::default();
    let mut command = None;
    for (i, l) in lines.enumerate() {
        let Some(body) = l.strip_prefix("# ") else { break };
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Config {
            line: i + 2,
            msg: format!("malformed header line '{l}'"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k == "command" {
            command = Some(v.to_string());
        } else {
            cfg.set(i + 2, k, v)?;
        }
    }
    let command = command.ok_or_else(|| Error::Config {
        line: 2,
        msg: "header has no command".into(),
    })?;
    Ok((command, cfg))
}
