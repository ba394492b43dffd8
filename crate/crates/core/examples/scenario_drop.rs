//! Random single-cell drop, link profiles from the pathloss law, and the
//! scenario file it round-trips through.

use pfs_core::mcs::linear_to_db;
use pfs_core::scenario::{generate_drop, load_scenario, terminal_links, DropParams};

fn main() -> pfs_core::Result<()> {
    let scn = generate_drop(&DropParams {
        terminals: 6,
        seed: 2024,
        ..DropParams::default()
    });
    let json = scn.to_json();
    assert_eq!(load_scenario(&json)?, scn);

    for (t, link) in scn.terminals.iter().zip(terminal_links(&scn)?) {
        let d = t.position[0].hypot(t.position[1]);
        println!(
            "{:>4} at {:>6.1} m: p0 {:>9.3e} W, interference {:>9.3e} W, IaN SINR {:>6.2} dB",
            t.id,
            d,
            link.p0,
            link.total_interference(),
            linear_to_db(link.average_power_sinr())
        );
    }
    println!("\n{} bytes of scenario JSON", json.len());
    Ok(())
}
