//! SINR law of one link: mean, CDF in both forms, and the exponential limit.
//!
//! ```bash
//! cargo run --example sinr_distribution
//! ```

use pfs_core::mcs::linear_to_db;
use pfs_core::sinr::{asymptotic_distribution, build_distribution, mean_sinr, LinkProfile};

fn main() -> pfs_core::Result<()> {
    let link = LinkProfile::new(1.0, vec![0.4, 0.15, 0.05], 0.02)?;
    let law = build_distribution(&link)?;
    let limit = asymptotic_distribution(link.p0, link.total_interference(), link.n0)?;

    println!(
        "interference-as-noise SINR  {:>8.3} dB",
        linear_to_db(link.average_power_sinr())
    );
    println!(
        "mean SINR                   {:>8.3} dB",
        linear_to_db(mean_sinr(&law)?)
    );
    println!(
        "exponential-limit mean      {:>8.3} dB",
        linear_to_db(limit.mean())
    );
    println!();
    println!(
        "{:>8} {:>14} {:>14} {:>14}",
        "z (dB)", "cdf", "cdf (product)", "limit cdf"
    );
    for db in (-10..=20).step_by(5) {
        let z = 10f64.powf(db as f64 / 10.0);
        println!(
            "{db:>8} {:>14.10} {:>14.10} {:>14.10}",
            law.cdf(z)?,
            law.cdf_product(z)?,
            limit.cdf(z)?
        );
    }
    Ok(())
}
