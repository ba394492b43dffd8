//! Who wins an RB, and how a terminal's SINR looks given that it won.

use pfs_core::analytic::{scheduling_probability, AnalyticConfig, CellPopulation, ScheduledSinr};
use pfs_core::sinr::LinkProfile;
use pfs_core::Frame;

fn main() -> pfs_core::Result<()> {
    let links = [
        LinkProfile::new(1.0, vec![0.5], 0.1)?,
        LinkProfile::new(1.0, vec![0.05, 0.02], 0.1)?,
        LinkProfile::new(0.2, vec![0.01], 0.1)?,
        LinkProfile::new(0.6, vec![0.3, 0.2, 0.1], 0.1)?,
    ];
    let pop = CellPopulation::from_terminal_links(&links, Frame::lte(1))?;
    let cfg = AnalyticConfig::default();

    let mut total = 0.0;
    for j in 0..links.len() {
        let p = scheduling_probability(j, &pop, 0, &cfg)?;
        total += p;
        let law = ScheduledSinr::new(&pop, j, 0, &cfg)?;
        let median = bisect(|z| law.cdf(z).unwrap_or(f64::NAN) - 0.5, 0.0, 1e4);
        println!(
            "terminal {j}: P[scheduled] = {p:.6}  mean SINR {:>7.3}  scheduled median {:>7.3}",
            pop.mean(j, 0),
            median
        );
    }
    println!("sum of scheduling probabilities: {total:.9}");
    Ok(())
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
