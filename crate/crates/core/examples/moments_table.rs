//! Closed-form moments of the daily series and the asymptotic-test ingredients.
//!
//! `cargo run --release --example moments_table`

use coxret::moments::{
    compute_h, cov_counts, cov_return_sqreturn, cov_returns, cov_sqreturns, moment_table, rho_limit, ModelParams,
};

fn main() -> coxret::Result<()> {
    for d in [0.0, 0.15, 0.35] {
        let p = ModelParams::baseline(d)?;
        println!("d = {d}  (h = {}, rho limit {:.4})", compute_h(p.c()), rho_limit(d));
        println!("  lag  cov(N0,NL)     cov(r0,rL)     cov(rL,r0^2)   cov(r0^2,rL^2)");
        for lag in 0..=4 {
            println!(
                "  {lag:>3}  {:<13.6e}  {:<13.6e}  {:<13.6e}  {:<13.6e}",
                cov_counts(&p, lag),
                cov_returns(&p, lag),
                cov_return_sqreturn(&p, lag),
                cov_sqreturns(&p, lag)?
            );
        }
    }
    let t = moment_table(&ModelParams::baseline(0.0)?, 20)?;
    println!(
        "null table: A1 = {:.6e}, A2 = {:.6e}, S2 = {:.6e}, S2/(A1 A2) = {:.12}",
        t.a1,
        t.a2,
        t.s2,
        t.variance_ratio()
    );
    Ok(())
}
