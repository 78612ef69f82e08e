//! Command-line front end. Every output starts with a `#` provenance header
//! holding the tool version, the command and the resolved configuration;
//! passing the output file back through `--config` repeats the run.

pub mod config;
pub mod data;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::aggregate::AggregationScheme;
use crate::aggregate::{build_panel, resolve_horizon};
use crate::error::{Error, Result};
use crate::estimate;
use crate::inference::{self, McExperiment, TestReport};
use crate::moments::{self, compute_h};
use crate::simulate::simulate_path;
pub use config::{config_from_provenance, parse_config, RunConfig};

pub const THREADS_ENV: &str = "COXRET_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "coxret",
    version,
    about = "Cox-process return model: simulate, estimate, test"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Simulate one path and write day,count,return,log_price.
    Simulate,
    /// Monthly forward returns and backward realized variance of an input series.
    Aggregate,
    /// Population moments for the configured parameters.
    Moments,
    /// Method-of-moments estimates from an input series.
    Estimate,
    /// GPH memory estimate of the input returns.
    Gph,
    /// Asymptotic test with the normal critical value.
    TestAsymptotic,
    /// Parametric bootstrap test under the power-law horizon.
    TestBootstrap,
    /// Simulated-critical-value test under linear horizon growth.
    TestLinear,
    /// Monte Carlo table over T̃ values and horizon parameters.
    McTable,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Aggregate => "aggregate",
            Self::Moments => "moments",
            Self::Estimate => "estimate",
            Self::Gph => "gph",
            Self::TestAsymptotic => "test-asymptotic",
            Self::TestBootstrap => "test-bootstrap",
            Self::TestLinear => "test-linear",
            Self::McTable => "mc-table",
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// `key = value` file, or an earlier output whose header is replayed.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Input series CSV.
    #[arg(short, long, global = true)]
    input: Option<PathBuf>,
    /// Worker threads; overrides COXRET_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    #[arg(long = "bootstrap-reps", global = true)]
    bootstrap_reps: Option<usize>,
    /// Any config key, as `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = read_text(p)?;
            if text.starts_with("# coxret ") {
                config_from_provenance(&text)?.1
            } else {
                parse_config(&text)?
            }
        }
        None => RunConfig::default(),
    };
    for s in &common.set {
        let (k, v) = s.split_once('=').ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("--set expects key=value, got '{s}'"),
        })?;
        cfg.set(0, k.trim(), v.trim())?;
    }
    if let Some(v) = common.seed {
        cfg.seed = Some(v);
    }
    if let Some(v) = &common.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = &common.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = common.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = common.kappa {
        cfg.kappa = v;
        cfg.framework = config::Framework::Power;
    }
    if let Some(v) = common.theta {
        cfg.theta = v;
        cfg.framework = config::Framework::Linear;
    }
    if let Some(v) = common.reps {
        cfg.reps = v;
    }
    if let Some(v) = common.bootstrap_reps {
        cfg.bootstrap_reps = v;
    }
    cfg.threads = match common.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(s.trim().parse().map_err(|_| Error::Config {
                line: 0,
                msg: format!("{THREADS_ENV}: cannot parse '{s}'"),
            })?),
            Err(_) => cfg.threads,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn input_series(cfg: &RunConfig) -> Result<crate::simulate::DailySeries> {
    let p = cfg.input.as_ref().ok_or_else(|| Error::Config {
        line: 0,
        msg: "this command needs an input series (--input)".into(),
    })?;
    data::read_series(&read_text(p)?)
}

fn kv(out: &mut String, k: &str, v: impl std::fmt::Display) {
    let _ = writeln!(out, "{k} = {v}");
}

fn test_report(out: &mut String, r: &TestReport) {
    kv(out, "method", r.method.name());
    kv(out, "framework", r.scheme.name());
    kv(out, "param", r.scheme.param());
    kv(out, "statistic_kind", r.statistic_kind.name());
    kv(out, "T_tilde", r.t_tilde);
    kv(out, "H_tilde", r.h_tilde);
    kv(out, "h", r.h);
    kv(out, "statistic", r.statistic);
    kv(out, "normalization", r.normalization);
    kv(out, "critical_value", r.critical_value);
    kv(out, "p_value", r.p_value);
    kv(out, "reject", r.reject);
    kv(out, "alpha", r.alpha);
    kv(out, "null_mu", r.null_params.mu);
    kv(out, "null_lambda", r.null_params.lambda);
    kv(out, "null_sigma_e", r.null_params.sigma_e);
    kv(out, "null_c", r.null_params.c());
    kv(out, "replicates", r.replicates);
    kv(out, "failed_replicates", r.failed_replicates);
    if let Some(c) = r.estimate_converged {
        kv(out, "estimate_converged", c);
    }
    if let Some(w) = &r.warning {
        kv(out, "warning", w);
    }
}

fn run_command(cmd: Command, cfg: &RunConfig) -> Result<String> {
    let mut out = cfg.provenance(cmd.name());
    match cmd {
        Command::Simulate => {
            let seed = cfg.require_seed()?;
            let s = simulate_path(&cfg.params()?, &cfg.path_config(seed))?;
            out.push_str(&data::write_series(&s)?);
        }
        Command::Aggregate => {
            let s = input_series(cfg)?;
            let m = cfg.days_per_month;
            let scheme = cfg.scheme()?;
            let h_tilde = resolve_horizon(scheme, s.len() / m)?;
            let p = build_panel(&s, m, h_tilde, compute_h(cfg.c))?;
            out.push_str("t_tilde,R_forward,RV_backward,R_tilde_forward\n");
            for i in 0..p.forward.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    p.first_month() + i,
                    p.forward[i],
                    p.backward[i],
                    p.forward_skip[i]
                );
            }
        }
        Command::Moments => {
            let p = cfg.params()?;
            let t = moments::moment_table(&p, cfg.days_per_month)?;
            kv(&mut out, "mean_count", moments::mean_count(&p));
            kv(&mut out, "var_count", moments::var_counts(&p));
            kv(&mut out, "mean_return", moments::mean_return(&p));
            kv(&mut out, "var_return", t.var_r);
            kv(&mut out, "var_sqreturn", t.var_r2);
            kv(&mut out, "h", t.h);
            kv(&mut out, "A1", t.a1);
            kv(&mut out, "A2", t.a2);
            kv(&mut out, "S2", t.s2);
            kv(&mut out, "S2_over_A1A2", t.variance_ratio());
            kv(&mut out, "rho_limit", moments::rho_limit(p.d()));
            for lag in 1..=cfg.max_lag {
                kv(&mut out, &format!("cov_count.{lag}"), moments::cov_counts(&p, lag));
                kv(&mut out, &format!("cov_return.{lag}"), t.cov_r_at(lag));
                kv(&mut out, &format!("cov_return_sqreturn.{lag}"), t.cov_r_r2_at(lag));
                kv(&mut out, &format!("cov_sqreturn.{lag}"), t.cov_r2_at(lag));
            }
        }
        Command::Estimate => {
            let r = estimate::estimate(&input_series(cfg)?, cfg.lags)?;
            kv(&mut out, "mu_hat", r.mu_hat);
            kv(&mut out, "lambda_hat", r.lambda_hat);
            kv(&mut out, "sigma_e_hat", r.sigma_e_hat);
            kv(&mut out, "sigma_e_negative", r.sigma_e_negative);
            kv(&mut out, "c_hat", r.c_hat);
            kv(&mut out, "d_hat", r.d_hat);
            kv(
                &mut out,
                &format!("gamma_count.{}", r.sample.lags.0),
                r.sample.gamma_count.0,
            );
            kv(
                &mut out,
                &format!("gamma_count.{}", r.sample.lags.1),
                r.sample.gamma_count.1,
            );
            let dg = &r.diagnostics;
            kv(&mut out, "converged", dg.converged);
            kv(&mut out, "d_at_lower_bound", dg.d_at_lower_bound);
            kv(&mut out, "roots", dg.roots);
            kv(&mut out, "residual_first", dg.residual_first);
            kv(&mut out, "residual_second", dg.residual_second);
            kv(&mut out, "outer_iterations", dg.outer_iterations);
            kv(&mut out, "evaluations", dg.evaluations);
        }
        Command::Gph => {
            let s = input_series(cfg)?;
            let f = inference::gph_regression(&s.returns, cfg.bandwidth)?;
            kv(&mut out, "n", s.len());
            kv(&mut out, "bandwidth", f.bandwidth);
            kv(&mut out, "d_hat", f.d_hat);
            kv(&mut out, "std_error", f.std_error);
        }
        Command::TestAsymptotic => {
            let s = input_series(cfg)?;
            let r = inference::test_asymptotic(&s, cfg.days_per_month, cfg.kappa, cfg.alpha, &cfg.null_source()?)?;
            test_report(&mut out, &r);
        }
        Command::TestBootstrap => {
            let s = input_series(cfg)?;
            let opts = cfg.simulation_options(cfg.require_seed()?)?;
            test_report(
                &mut out,
                &inference::test_bootstrap(&s, cfg.days_per_month, cfg.kappa, &opts)?,
            );
        }
        Command::TestLinear => {
            let s = input_series(cfg)?;
            let opts = cfg.simulation_options(cfg.require_seed()?)?;
            test_report(
                &mut out,
                &inference::test_linear_simulated(&s, cfg.days_per_month, cfg.theta, &opts)?,
            );
        }
        Command::McTable => {
            let seed = cfg.require_seed()?;
            let schemes = cfg
                .kappas
                .iter()
                .map(|&k| AggregationScheme::power_law(k))
                .chain(cfg.thetas.iter().map(|&t| AggregationScheme::linear(t)))
                .collect::<Result<Vec<_>>>()?;
            let mut exp = McExperiment::new(cfg.params()?, cfg.t_tildes.clone(), schemes, cfg.reps, seed);
            exp.m = cfg.days_per_month;
            exp.steps_per_day = cfg.steps_per_day;
            exp.counting = cfg.counting;
            exp.alpha = cfg.alpha;
            exp.test = cfg.mc_test(seed)?;
            out.push_str(&inference::run_mc_experiment(&exp)?.to_csv());
        }
    }
    Ok(out)
}

/// Run the command line `args` (including the program name) and return the exit code:
/// 0 success, 2 configuration, 3 numerical failure, 4 insufficient data, 1 I/O.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(&cli.common)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config {
        line: 0,
        msg: format!("thread pool: {e}"),
    })?;
    let text = pool.install(|| run_command(cli.command, &cfg))?;
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
