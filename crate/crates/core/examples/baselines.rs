//! The approximate models next to the exact one for a cell with a strong
//! neighbour at the edge.

use pfs_core::analytic::{relaxed_mcs_throughput, AnalyticConfig, CellPopulation};
use pfs_core::baselines::{
    gaussian_throughput, ian_throughput, iid_priority_throughput, simple_throughput,
    unique_mcs_ian_throughput, IanSinr,
};
use pfs_core::mcs::McsTable;
use pfs_core::sinr::LinkProfile;
use pfs_core::Frame;

fn main() -> pfs_core::Result<()> {
    let links = [
        LinkProfile::new(1.0, vec![0.01], 0.001)?,
        LinkProfile::new(1.0, vec![0.2, 0.05], 0.001)?,
        // Cell edge: the neighbour is received three times stronger than the server.
        LinkProfile::new(1.0, vec![3.0, 0.4], 0.001)?,
    ];
    let frame = Frame::lte(4);
    let table = McsTable::default_cqi();
    let cfg = AnalyticConfig::default();
    let pop = CellPopulation::from_terminal_links(&links, frame)?;
    let ian = IanSinr::from_terminal_links(&links, frame.n_rb)?;

    let exact: Vec<f64> = relaxed_mcs_throughput(&pop, &table, &cfg)?
        .into_iter()
        .map(|r| r.rate)
        .collect();
    let columns = [
        ("exact", exact),
        ("simple", simple_throughput(&ian, &frame, &table)?),
        ("ian", ian_throughput(&ian, &frame, &table)?),
        ("gaussian", gaussian_throughput(&ian, &frame, &table)?),
        ("iid_prio", iid_priority_throughput(&pop, &table)?),
        (
            "uniq_ian",
            unique_mcs_ian_throughput(&ian, &frame, &table, &cfg)?,
        ),
    ];
    print!("{:>9}", "terminal");
    for (name, _) in &columns {
        print!(" {name:>10}");
    }
    println!("   (Mbit/s)");
    for j in 0..links.len() {
        print!("{j:>9}");
        for (_, rates) in &columns {
            print!(" {:>10.4}", rates[j] / 1e6);
        }
        println!();
    }
    Ok(())
}
