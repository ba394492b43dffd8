//! Splitting a fixed interference power over more and more stations drives
//! the SINR law, and the exact rates, to the exponential limit.

use pfs_core::analytic::AnalyticConfig;
use pfs_core::mcs::McsTable;
use pfs_core::report::convergence_sweep;
use pfs_core::scenario::load_scenario_file;

fn main() -> pfs_core::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/edge_cell.json");
    let scn = load_scenario_file(&path)?;
    let rows = convergence_sweep(
        &scn,
        &McsTable::default_cqi(),
        6,
        &AnalyticConfig::default(),
    )?;
    println!("{:>5} {:>14} {:>14}", "I", "cdf distance", "rate gap");
    for r in rows {
        println!(
            "{:>5} {:>14.6} {:>14.6}",
            r.interferers, r.cdf_distance, r.rate_gap
        );
    }
    Ok(())
}
