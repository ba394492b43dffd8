//! Monte-Carlo PFS against the exact model, with both MCS rules.

use pfs_core::analytic::{
    relaxed_mcs_throughput, unique_mcs_throughput, AnalyticConfig, CellPopulation,
};
use pfs_core::mcs::McsTable;
use pfs_core::simulator::{empirical_sinr_gain, relative_error, run_pfs, McsRule, SimConfig};
use pfs_core::sinr::LinkProfile;
use pfs_core::Frame;

fn main() -> pfs_core::Result<()> {
    let links = [
        LinkProfile::new(1.0, vec![0.1, 0.03], 0.01)?,
        LinkProfile::new(0.4, vec![0.2, 0.05], 0.01)?,
        LinkProfile::new(0.1, vec![0.06, 0.02], 0.01)?,
        LinkProfile::new(0.7, vec![0.6, 0.3], 0.01)?,
    ];
    let frame = Frame::lte(6);
    let table = McsTable::default_cqi();
    let cfg = AnalyticConfig::default();
    let pop = CellPopulation::from_terminal_links(&links, frame)?;
    let matrix: Vec<Vec<LinkProfile>> = links.iter().map(|l| vec![l.clone(); frame.n_rb]).collect();

    let sim_cfg = SimConfig::new(100_000, frame.window, 7);
    let relaxed_sim = run_pfs(&matrix, &table, &frame, &sim_cfg)?;
    let unique_cfg = sim_cfg.clone().with_mcs_rule(McsRule::Unique);
    let unique_sim = run_pfs(&matrix, &table, &frame, &unique_cfg)?;
    let relaxed = relaxed_mcs_throughput(&pop, &table, &cfg)?;
    let unique = unique_mcs_throughput(&pop, &table, &cfg)?;
    let gains = empirical_sinr_gain(&relaxed_sim);

    println!("terminal  relaxed model / sim (err %)   unique model / sim (err %)   SINR gain");
    for j in 0..links.len() {
        println!(
            "{j:>8}  {:>7.4} / {:>7.4} ({:>5.2})     {:>7.4} / {:>7.4} ({:>5.2})   {:>6.3}",
            relaxed[j].rate / 1e6,
            relaxed_sim.throughput[j] / 1e6,
            relative_error(relaxed[j].rate, relaxed_sim.throughput[j]).unwrap_or(f64::NAN),
            unique[j].rate / 1e6,
            unique_sim.throughput[j] / 1e6,
            relative_error(unique[j].rate, unique_sim.throughput[j]).unwrap_or(f64::NAN),
            gains[j].unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
