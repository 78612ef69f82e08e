//! Acceptance criteria. Runs as a plain binary (`harness = false`) so each
//! criterion prints one PASS/FAIL line. Pass criterion numbers as arguments
//! to run a subset, e.g. `cargo test --release --test acceptance -- 1 8`.

use std::time::Instant;

use coxret::aggregate::AggregationScheme;
use coxret::estimate::{estimate, estimate_from_moments, SampleMoments};
use coxret::fgn::{FgnGrid, FgnStream, GammaSpec};
use coxret::inference::{
    estimate_gph, run_mc_experiment, test_simulated, McExperiment, McTest, NullSource, SimulationOptions,
};
use coxret::moments::{self, moment_table, ModelParams};
use coxret::rng::mix_seed;
use coxret::simulate::{CountingMethod, DailySeries, PathConfig, PathSimulator};
use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

// Tolerances and sizes, fixed before any run.
const SEED: u64 = 20_260_101;
const Z_MAX: f64 = 4.0;
const C1_PATHS: usize = 200;
const C1_DAYS: usize = 5_000;
const C2_PATHS: usize = 100;
const C3_REPS: usize = 300;
const C3_BAND: f64 = 0.15;
const C4_REPS: usize = 200;
const C4_Z_DROP: f64 = 2.0;
const C5_ASY_REPS: usize = 500;
const C5_BOOT_OUTER: usize = 200;
const C5_BOOT_B: usize = 200;
const C5_BOOT_BAND: (f64, f64) = (0.02, 0.10);
const C6_OUTER: usize = 200;
const C6_B: usize = 200;
const C6_TARGET: (f64, f64) = (0.356, 0.072);
const C6_BAND: f64 = 0.1;
const C7_CLOSED_TOL: f64 = 1e-6;
const C7_PATHS: usize = 100;
const C7_DAYS: usize = 83_886;
const C7_REL_TOL: f64 = 0.01;
const C7_ABS_TOL: f64 = 0.01;
const C8_TOL: f64 = 1e-12;
const C9_SEEDS: usize = 50;
const C9_LEN: usize = 80_000;
const C9_MASK: f64 = 0.15;
const C9_MASK_SHARE: f64 = 0.90;
const C9_FGN_TOL: f64 = 0.05;

const M: usize = 20;
const D_LONG: f64 = 0.3545;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard error of the mean of independent draws.
fn se(x: &[f64]) -> f64 {
    let m = mean(x);
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
    (v / x.len() as f64).sqrt()
}

/// `mean_t (x_{t+lag} - mx)(y_t - my)` over the available pairs.
fn lag_cov(x: &[f64], y: &[f64], lag: usize, mx: f64, my: f64) -> f64 {
    let n = x.len() - lag;
    (0..n).map(|t| (x[t + lag] - mx) * (y[t] - my)).sum::<f64>() / n as f64
}

fn demeaned_lag_cov(x: &[f64], y: &[f64], lag: usize) -> f64 {
    lag_cov(x, y, lag, mean(x), mean(y))
}

fn counts_f64(s: &DailySeries) -> Vec<f64> {
    s.counts
        .as_ref()
        .expect("simulated paths carry counts")
        .iter()
        .map(|&c| c as f64)
        .collect()
}

fn squares(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v * v).collect()
}

/// `n` independent paths, two per embedding draw.
fn paths(p: &ModelParams, days: usize, counting: CountingMethod, n: usize, stream: u64) -> Vec<DailySeries> {
    let cfg = PathConfig::new(days, SEED).with_counting(counting);
    let sim = PathSimulator::new(p, &cfg).unwrap();
    let mut out: Vec<DailySeries> = (0..n.div_ceil(2))
        .into_par_iter()
        .flat_map_iter(|k| {
            let (a, b) = sim.path_pair(mix_seed(SEED, stream, k as u64)).unwrap();
            [a, b]
        })
        .collect();
    out.truncate(n);
    out
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn power(k: f64) -> AggregationScheme {
    AggregationScheme::power_law(k).unwrap()
}

fn c1_moment_oracle() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, d) in [0.0, 0.35].into_iter().enumerate() {
        let p = ModelParams::baseline(d).unwrap();
        let (mc, mr) = (moments::mean_count(&p), moments::mean_return(&p));
        let m2 = moments::var_return(&p) + mr * mr;
        let population = [
            mc,
            moments::var_counts(&p),
            moments::var_return(&p),
            moments::cov_returns(&p, 1),
            moments::cov_return_sqreturn(&p, 1),
            moments::cov_sqreturns(&p, 1).unwrap(),
        ];
        // Centring at the known means keeps each per-path estimate unbiased
        // even when d > 0 makes the sample mean converge slowly.
        let per_path: Vec<[f64; 6]> = paths(&p, C1_DAYS, CountingMethod::Durations, C1_PATHS, 100 + i as u64)
            .iter()
            .map(|s| {
                let n = counts_f64(s);
                let r = &s.returns;
                let r2 = squares(r);
                [
                    mean(&n),
                    lag_cov(&n, &n, 0, mc, mc),
                    lag_cov(r, r, 0, mr, mr),
                    lag_cov(r, r, 1, mr, mr),
                    lag_cov(r, &r2, 1, mr, m2),
                    lag_cov(&r2, &r2, 1, m2, m2),
                ]
            })
            .collect();
        let z: Vec<f64> = (0..6)
            .map(|j| {
                let col: Vec<f64> = per_path.iter().map(|v| v[j]).collect();
                (mean(&col) - population[j]) / se(&col)
            })
            .collect();
        let worst = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        pass &= worst <= Z_MAX;
        parts.push(format!(
            "d={d}: z=[{}]",
            z.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", ")
        ));
    }
    outcome(pass, format!("{} (|z| <= {Z_MAX})", parts.join("; ")))
}

fn c2_h_dependence() -> Outcome {
    let p = ModelParams::baseline(0.0).unwrap();
    let exact_zero = (2..=12).all(|l| {
        moments::cov_counts(&p, l) == 0.0
            && moments::cov_returns(&p, l) == 0.0
            && moments::cov_return_sqreturn(&p, l) == 0.0
            && moments::cov_sqreturns(&p, l).unwrap() == 0.0
    });
    let per_path: Vec<[f64; 4]> = paths(&p, C1_DAYS, CountingMethod::Durations, C2_PATHS, 200)
        .iter()
        .map(|s| {
            let n = counts_f64(s);
            let r = &s.returns;
            let r2 = squares(r);
            [
                demeaned_lag_cov(&n, &n, 2),
                demeaned_lag_cov(r, r, 2),
                demeaned_lag_cov(&r2, &r2, 2),
                demeaned_lag_cov(r, &r2, 2),
            ]
        })
        .collect();
    let z: Vec<f64> = (0..4)
        .map(|j| {
            let col: Vec<f64> = per_path.iter().map(|v| v[j]).collect();
            mean(&col) / se(&col)
        })
        .collect();
    let worst = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let pass = exact_zero && worst <= Z_MAX;
    outcome(
        pass,
        format!(
            "population lags 2..12 exactly zero: {exact_zero}; lag-2 z (counts, r, r^2, r/r^2) = [{}]",
            z.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c3_variance_slopes() -> Outcome {
    let t_tildes = vec![131, 262, 524];
    let schemes = vec![power(0.1), power(0.3), AggregationScheme::linear(0.05).unwrap()];
    let mut exp = McExperiment::new(
        ModelParams::baseline(0.0).unwrap(),
        t_tildes.clone(),
        schemes.clone(),
        C3_REPS,
        SEED,
    );
    exp.counting = CountingMethod::Poisson;
    let res = run_mc_experiment(&exp).unwrap();
    let mut pass = res.cells.iter().all(|c| c.failed == 0);
    let mut parts = Vec::new();
    for scheme in schemes {
        let vars: Vec<f64> = res
            .cells
            .iter()
            .filter(|c| c.scheme == scheme)
            .map(|c| c.var_rho)
            .collect();
        let x: Vec<f64> = t_tildes.iter().map(|&t| (t as f64).ln()).collect();
        let y: Vec<f64> = vars.iter().map(|v| v.ln()).collect();
        let slope = ols_slope(&x, &y);
        let reported = res.slopes.iter().find(|s| s.scheme == scheme).unwrap().slope;
        pass &= (slope - reported).abs() < 1e-9;
        let ok = match scheme {
            AggregationScheme::PowerLaw(k) => (slope - (k - 1.0)).abs() <= C3_BAND,
            AggregationScheme::LinearGrowth(_) => slope.abs() < C3_BAND,
        };
        pass &= ok;
        let target = match scheme {
            AggregationScheme::PowerLaw(k) => format!("{:.2} +/- {C3_BAND}", k - 1.0),
            AggregationScheme::LinearGrowth(_) => format!("|slope| < {C3_BAND}"),
        };
        parts.push(format!(
            "{} {}: var [{}] slope {slope:.3} (want {target})",
            scheme.name(),
            scheme.param(),
            vars.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>().join(", ")
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c4_limit_approach() -> Outcome {
    let t_tildes = vec![131, 524, 2097];
    let mut exp = McExperiment::new(
        ModelParams::baseline(D_LONG).unwrap(),
        t_tildes,
        vec![power(0.1)],
        C4_REPS,
        SEED,
    );
    exp.counting = CountingMethod::Poisson;
    let res = run_mc_experiment(&exp).unwrap();
    let limit = moments::rho_limit(D_LONG);
    let stats: Vec<(f64, f64)> = res.cells.iter().map(|c| (mean(&c.rho_hat), se(&c.rho_hat))).collect();
    let mut pass = res.cells.iter().all(|c| c.failed == 0);
    for w in stats.windows(2) {
        let z = (w[1].0 - w[0].0) / (w[0].1.powi(2) + w[1].1.powi(2)).sqrt();
        pass &= z >= -C4_Z_DROP;
    }
    let (first, last) = (stats[0].0, stats[stats.len() - 1].0);
    pass &= last > first && (limit - last).abs() < (limit - first).abs();
    outcome(
        pass,
        format!(
            "mean rho_hat at T~=131,524,2097: {} (limit {limit:.4}; steps >= -{C4_Z_DROP} SE, net increase toward limit)",
            stats.iter().map(|(m, s)| format!("{m:.4}+/-{s:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

/// Exact two-sided 95% acceptance region of Binomial(n, p), as counts.
fn binomial_band(n: u64, p: f64) -> (u64, u64) {
    let b = Binomial::new(p, n).unwrap();
    let lo = (0..=n).find(|&k| b.cdf(k) >= 0.025).unwrap();
    let hi = (0..=n).find(|&k| b.cdf(k) >= 0.975).unwrap();
    (lo, hi)
}

fn c5_null_size() -> Outcome {
    let null = ModelParams::baseline(0.0).unwrap();
    let mut exp = McExperiment::new(null, vec![1048], vec![power(0.3)], C5_ASY_REPS, SEED);
    exp.counting = CountingMethod::Poisson;
    exp.test = McTest::Asymptotic(NullSource::Known(null));
    let cell = &run_mc_experiment(&exp).unwrap().cells[0];
    let (lo, hi) = binomial_band(C5_ASY_REPS as u64, 0.05);
    let asy = cell.rejection_rate.unwrap();
    let asy_hits = (asy * C5_ASY_REPS as f64).round() as u64;
    let asy_ok = cell.failed == 0 && (lo..=hi).contains(&asy_hits);

    let mut opts = SimulationOptions::new(C5_BOOT_B, 0);
    opts.counting = CountingMethod::Poisson;
    let mut exp = McExperiment::new(null, vec![1048], vec![power(0.3)], C5_BOOT_OUTER, mix_seed(SEED, 5, 0));
    exp.counting = CountingMethod::Poisson;
    exp.test = McTest::Simulated(opts);
    let cell = &run_mc_experiment(&exp).unwrap().cells[0];
    let boot = cell.rejection_rate.unwrap();
    let boot_ok = cell.failed == 0 && boot >= C5_BOOT_BAND.0 && boot <= C5_BOOT_BAND.1;
    outcome(
        asy_ok && boot_ok,
        format!(
            "asymptotic size {asy:.3} ({asy_hits}/{C5_ASY_REPS}, band {lo}..={hi}); bootstrap size {boot:.3} over {C5_BOOT_OUTER}x{C5_BOOT_B} (band {:.2}..{:.2})",
            C5_BOOT_BAND.0, C5_BOOT_BAND.1
        ),
    )
}

fn c6_power_ordering() -> Outcome {
    let p = ModelParams::baseline(D_LONG).unwrap();
    let schemes = [power(0.1), power(0.7)];
    let cfg = PathConfig::new(1048 * M, SEED).with_counting(CountingMethod::Poisson);
    let sim = PathSimulator::new(&p, &cfg).unwrap();
    let decisions: Vec<Option<[bool; 2]>> = (0..C6_OUTER.div_ceil(2))
        .into_par_iter()
        .flat_map_iter(|k| {
            let (a, b) = sim.path_pair(mix_seed(SEED, 600, k as u64)).unwrap();
            [a, b].into_iter().enumerate().map(move |(j, s)| {
                let mut opts = SimulationOptions::new(C6_B, mix_seed(SEED, 601 + j as u64, k as u64));
                opts.counting = CountingMethod::Poisson;
                test_simulated(&s, M, &schemes, &opts)
                    .ok()
                    .map(|r| [r[0].reject, r[1].reject])
            })
        })
        .collect();
    let ok: Vec<[bool; 2]> = decisions.iter().take(C6_OUTER).flatten().copied().collect();
    let failed = C6_OUTER - ok.len();
    let rate = |i: usize| ok.iter().filter(|d| d[i]).count() as f64 / ok.len().max(1) as f64;
    let (p1, p7) = (rate(0), rate(1));
    let pass = failed == 0 && p1 > p7 && (p1 - C6_TARGET.0).abs() <= C6_BAND && (p7 - C6_TARGET.1).abs() <= C6_BAND;
    outcome(
        pass,
        format!(
            "power kappa=0.1: {p1:.3} (target {:.3} +/- {C6_BAND}), kappa=0.7: {p7:.3} (target {:.3} +/- {C6_BAND}), failed {failed}/{C6_OUTER}",
            C6_TARGET.0, C6_TARGET.1
        ),
    )
}

fn c7_estimator_recovery() -> Outcome {
    let mut worst: f64 = 0.0;
    for c in [0.5, 1.0, 2.0] {
        for d in [0.0, 0.15, 0.25, 0.35] {
            let p = ModelParams::new(1.419188e-6, 128.2085, 0.0007289, c, d).unwrap();
            let e = estimate_from_moments(&SampleMoments::population(&p, (1, 2)).unwrap()).unwrap();
            let errs = [
                e.mu_hat / p.mu - 1.0,
                e.lambda_hat / p.lambda - 1.0,
                e.sigma_e_hat / p.sigma_e - 1.0,
                e.c_hat - c,
                e.d_hat - d,
            ];
            worst = errs.iter().fold(worst, |a, v| a.max(v.abs()));
        }
    }
    let closed_ok = worst <= C7_CLOSED_TOL;

    let p = ModelParams::baseline(0.0).unwrap();
    let fits: Vec<_> = paths(&p, C7_DAYS, CountingMethod::Poisson, C7_PATHS, 700)
        .iter()
        .map(|s| estimate(s, (1, 2)))
        .collect();
    let failed = fits.iter().filter(|f| f.is_err()).count();
    let fits: Vec<_> = fits.into_iter().flatten().collect();
    let avg = |f: &dyn Fn(&coxret::estimate::EstimateReport) -> f64| mean(&fits.iter().map(f).collect::<Vec<_>>());
    let rel = [
        avg(&|e| e.mu_hat) / p.mu - 1.0,
        avg(&|e| e.lambda_hat) / p.lambda - 1.0,
        avg(&|e| e.sigma_e_hat) / p.sigma_e - 1.0,
    ];
    let (d_bar, c_bar) = (avg(&|e| e.d_hat), avg(&|e| e.c_hat));
    let sim_ok = failed == 0
        && rel.iter().all(|r| r.abs() < C7_REL_TOL)
        && d_bar.abs() < C7_ABS_TOL
        && (c_bar - 1.0).abs() < C7_ABS_TOL;
    outcome(
        closed_ok && sim_ok,
        format!(
            "closed loop max error {worst:.2e} (tol {C7_CLOSED_TOL:e}); {C7_PATHS} paths: rel err mu {:.4}, lambda {:.4}, sigma_e {:.4} (tol {C7_REL_TOL}), mean d {d_bar:.4}, mean c {c_bar:.4} (tol {C7_ABS_TOL}), failed {failed}",
            rel[0], rel[1], rel[2]
        ),
    )
}

fn c8_factorization() -> Outcome {
    let mut grid = Vec::new();
    for mu in [0.0, 1.419188e-6, 1e-4] {
        for lambda in [5.0, 128.2085, 400.0] {
            for sigma in [1e-5, 0.0007289] {
                for c in [0.3, 0.5, 1.0, 2.0, 4.0] {
                    grid.push(ModelParams::new(mu, lambda, sigma, c, 0.0).unwrap());
                }
            }
        }
    }
    for c in [0.5, 1.0, 2.0] {
        for d in [0.15, 0.35] {
            grid.push(ModelParams::new(1.419188e-6, 128.2085, 0.0007289, c, d).unwrap());
        }
    }
    let mut worst: f64 = 0.0;
    for p in &grid {
        let t = moment_table(p, M).unwrap();
        let h = t.h as i64;
        let g1 = |u: i64| {
            if u == 0 {
                moments::var_return(p)
            } else {
                moments::cov_returns(p, u.unsigned_abs() as usize)
            }
        };
        let g2 = |v: i64| {
            if v == 0 {
                moments::var_sqreturn(p).unwrap()
            } else {
                moments::cov_sqreturns(p, v.unsigned_abs() as usize).unwrap()
            }
        };
        let mut s2 = 0.0;
        for u in -h..=h {
            for v in -h..=h {
                s2 += g1(u) * g2(v);
            }
        }
        s2 *= 2.0 / 3.0;
        let a1 = g1(0) + 2.0 * (1..=h).map(g1).sum::<f64>();
        let a2 = g2(0) + 2.0 * (1..=h).map(g2).sum::<f64>();
        for err in [
            s2 / (2.0 / 3.0 * a1 * a2) - 1.0,
            t.s2 / s2 - 1.0,
            t.variance_ratio() * 1.5 - 1.0,
        ] {
            worst = worst.max(err.abs());
        }
    }
    outcome(
        worst <= C8_TOL,
        format!(
            "{} parameter points, max relative error {worst:.2e} (tol {C8_TOL:e})",
            grid.len()
        ),
    )
}

fn c9_gph_masking() -> Outcome {
    let p = ModelParams::baseline(0.35).unwrap();
    let model: Vec<f64> = paths(&p, C9_LEN, CountingMethod::Poisson, C9_SEEDS, 900)
        .iter()
        .map(|s| estimate_gph(&s.returns, 0.5).unwrap())
        .collect();
    let masked = model.iter().filter(|d| d.abs() < C9_MASK).count();
    let share = masked as f64 / C9_SEEDS as f64;

    let spec = GammaSpec::new(1.0, 0.35).unwrap();
    let grid = FgnGrid::new(C9_LEN.next_power_of_two(), 1.0).unwrap();
    let mut stream = FgnStream::new(&spec, &grid, mix_seed(SEED, 901, 0)).unwrap();
    let raw: Vec<f64> = (0..C9_SEEDS)
        .map(|_| estimate_gph(&stream.next_sequence()[..C9_LEN], 0.5).unwrap())
        .collect();
    let raw_mean = mean(&raw);
    let pass = share >= C9_MASK_SHARE && (raw_mean - 0.35).abs() < C9_FGN_TOL;
    outcome(
        pass,
        format!(
            "model returns |d_hat| < {C9_MASK} in {masked}/{C9_SEEDS} (need {:.0}%), mean d_hat {:.3}; raw fGn mean d_hat {raw_mean:.3} (0.35 +/- {C9_FGN_TOL})",
            C9_MASK_SHARE * 100.0,
            mean(&model)
        ),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    (1, "moment oracle agreement", c1_moment_oracle),
    (2, "h-dependence", c2_h_dependence),
    (3, "variance-scaling slopes", c3_variance_slopes),
    (4, "long-memory limit approach", c4_limit_approach),
    (5, "null size", c5_null_size),
    (6, "power ordering", c6_power_ordering),
    (7, "estimator recovery", c7_estimator_recovery),
    (8, "factorization identity", c8_factorization),
    (9, "GPH masking", c9_gph_masking),
];

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (n, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {n} ({name}): {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failures += usize::from(!o.pass);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
