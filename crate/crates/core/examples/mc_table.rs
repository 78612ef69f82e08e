//! Small Monte Carlo grid: variance of rho_hat across sample sizes, with
//! fitted log-log slopes, written as CSV to stdout.
//!
//! `cargo run --release --example mc_table -- [reps] [seed]`

use coxret::aggregate::AggregationScheme;
use coxret::inference::{run_mc_experiment, McExperiment, McTest, NullSource};
use coxret::moments::ModelParams;
use coxret::simulate::CountingMethod;

fn main() -> coxret::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().map_or(100, |s| s.parse().expect("reps"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let p = ModelParams::baseline(0.0)?;
    let schemes = vec![
        AggregationScheme::power_law(0.1)?,
        AggregationScheme::power_law(0.3)?,
        AggregationScheme::linear(0.05)?,
    ];
    let mut exp = McExperiment::new(p, vec![131, 262, 524], schemes, reps, seed);
    exp.counting = CountingMethod::Poisson;
    exp.test = McTest::Asymptotic(NullSource::Known(p));
    let res = run_mc_experiment(&exp)?;
    print!("{}", res.to_csv());
    for s in &res.slopes {
        eprintln!("{} {}: slope {:.3}", s.scheme.name(), s.scheme.param(), s.slope);
    }
    Ok(())
}
