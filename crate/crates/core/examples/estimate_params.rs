//! Method-of-moments fit, first from exact population moments, then from a
//! simulated path.
//!
//! `cargo run --release --example estimate_params -- [d] [days] [seed]`

use coxret::estimate::{estimate, estimate_from_moments, EstimateReport, SampleMoments};
use coxret::moments::ModelParams;
use coxret::simulate::{simulate_path, CountingMethod, PathConfig};

fn show(label: &str, e: &EstimateReport) {
    println!(
        "{label:<12} mu {:.6e}  lambda {:.4}  sigma_e {:.6e}  c {:.4}  d {:.4}  (roots {}, converged {})",
        e.mu_hat, e.lambda_hat, e.sigma_e_hat, e.c_hat, e.d_hat, e.diagnostics.roots, e.diagnostics.converged
    );
}

fn main() -> coxret::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: f64 = args.next().map_or(0.25, |s| s.parse().expect("d"));
    let days: usize = args.next().map_or(83_886, |s| s.parse().expect("days"));
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed"));

    let p = ModelParams::baseline(d)?;
    println!(
        "truth        mu {:.6e}  lambda {:.4}  sigma_e {:.6e}  c {:.4}  d {:.4}",
        p.mu,
        p.lambda,
        p.sigma_e,
        p.c(),
        d
    );
    show(
        "population",
        &estimate_from_moments(&SampleMoments::population(&p, (1, 2))?)?,
    );
    let s = simulate_path(&p, &PathConfig::new(days, seed).with_counting(CountingMethod::Poisson))?;
    show("simulated", &estimate(&s, (1, 2))?);
    Ok(())
}
