//! Long memory in the intensity is nearly invisible to GPH on returns.
//!
//! `cargo run --release --example gph_masking -- [seeds]`

use coxret::fgn::{FgnGrid, FgnStream, GammaSpec};
use coxret::inference::gph_regression;
use coxret::moments::ModelParams;
use coxret::simulate::{simulate_path, CountingMethod, PathConfig};
use coxret::stats::mean;

const LEN: usize = 80_000;

fn main() -> coxret::Result<()> {
    let seeds: u64 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("seeds"));
    let d = 0.35;
    let p = ModelParams::baseline(d)?;
    let mut on_returns = Vec::new();
    let mut on_counts = Vec::new();
    for seed in 0..seeds {
        let s = simulate_path(&p, &PathConfig::new(LEN, seed).with_counting(CountingMethod::Poisson))?;
        let counts: Vec<f64> = s.counts()?.iter().map(|&c| c as f64).collect();
        on_returns.push(gph_regression(&s.returns, 0.5)?.d_hat);
        on_counts.push(gph_regression(&counts, 0.5)?.d_hat);
    }
    let mut stream = FgnStream::new(
        &GammaSpec::new(1.0, d)?,
        &FgnGrid::new(LEN.next_power_of_two(), 1.0)?,
        99,
    )?;
    let raw: Vec<f64> = (0..seeds)
        .map(|_| gph_regression(&stream.next_sequence()[..LEN], 0.5).map(|f| f.d_hat))
        .collect::<Result<_, _>>()?;

    println!("true d = {d}, {seeds} series of length {LEN}, bandwidth n^0.5");
    println!("  returns   mean d_hat {:.3}", mean(&on_returns));
    println!("  counts    mean d_hat {:.3}", mean(&on_counts));
    println!("  raw fGn   mean d_hat {:.3}", mean(&raw));
    Ok(())
}
