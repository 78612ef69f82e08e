//! Simulate one daily path and summarize it.
//!
//! `cargo run --release --example simulate_path -- [d] [days] [seed]`

use coxret::moments::{mean_count, mean_return, ModelParams};
use coxret::simulate::{simulate_path, CountingMethod, PathConfig};
use coxret::stats::{mean, variance};

fn main() -> coxret::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: f64 = args.next().map_or(0.35, |s| s.parse().expect("d"));
    let days: usize = args.next().map_or(5_000, |s| s.parse().expect("days"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let p = ModelParams::baseline(d)?;
    for counting in [CountingMethod::Durations, CountingMethod::Poisson] {
        let cfg = PathConfig::new(days, seed).with_counting(counting);
        let s = simulate_path(&p, &cfg)?;
        let counts: Vec<f64> = s.counts()?.iter().map(|&c| c as f64).collect();
        println!("{counting:?} counting, {days} days, d = {d}");
        println!(
            "  mean count   {:>12.4}  (population {:.4})",
            mean(&counts),
            mean_count(&p)
        );
        println!(
            "  mean return  {:>12.4e}  (population {:.4e})",
            mean(&s.returns),
            mean_return(&p)
        );
        println!("  return sd    {:>12.4e}", variance(&s.returns).sqrt());
        println!("  final log P  {:>12.6}", s.log_price[days - 1]);
    }
    Ok(())
}
