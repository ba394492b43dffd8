//! One MCS for all RBs a terminal wins in a slot, set by the weakest of them.

use pfs_core::analytic::{
    relaxed_mcs_throughput, unique_mcs_rate_closed_form, unique_mcs_throughput, AnalyticConfig,
    CellPopulation,
};
use pfs_core::mcs::McsTable;
use pfs_core::sinr::LinkProfile;
use pfs_core::Frame;

fn main() -> pfs_core::Result<()> {
    let links = [
        LinkProfile::new(1.0, vec![0.08, 0.02], 0.01)?,
        LinkProfile::new(0.3, vec![0.1], 0.01)?,
        LinkProfile::new(0.05, vec![0.04, 0.01], 0.01)?,
    ];
    let table = McsTable::default_cqi();
    let cfg = AnalyticConfig::default();
    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>10}",
        "N", "terminal", "relaxed", "unique", "expansion"
    );
    for n_rb in [1, 3, 6, 12] {
        let pop = CellPopulation::from_terminal_links(&links, Frame::lte(n_rb))?;
        let relaxed = relaxed_mcs_throughput(&pop, &table, &cfg)?;
        let unique = unique_mcs_throughput(&pop, &table, &cfg)?;
        for j in 0..links.len() {
            let expansion = unique_mcs_rate_closed_form(&pop, j, &table, &cfg)?;
            println!(
                "{n_rb:>4} {j:>10} {:>10.4} {:>10.4} {:>10.4}",
                relaxed[j].rate / 1e6,
                unique[j].rate / 1e6,
                expansion.rate / 1e6
            );
        }
    }
    Ok(())
}
