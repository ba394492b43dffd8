//! The many-interferer limit: exponential SINR laws, closed-form rates and
//! the harmonic SINR gain of PFS.

use pfs_core::analytic::{
    pfs_sinr_gain, scheduled_mean_dense, ultra_dense_relaxed_throughput,
    ultra_dense_unique_mcs_throughput,
};
use pfs_core::mcs::McsTable;
use pfs_core::Frame;

fn main() -> pfs_core::Result<()> {
    println!("{:>3} {:>10} {:>12}", "J", "gain", "gain step");
    let mut previous = 0.0;
    for j in [1, 2, 3, 5, 10, 20, 50] {
        let g = pfs_sinr_gain(j)?;
        println!("{j:>3} {g:>10.6} {:>12.6}", g - previous);
        previous = g;
    }

    // p0 = 1, total interference 0.5, noise 0.1: mean SINR 1/0.6.
    println!(
        "\nscheduled mean SINR with 4 terminals: {:.4}",
        scheduled_mean_dense(1.0, 0.5, 0.1, 4)?
    );

    let means = [0.5, 2.0, 8.0, 30.0];
    let frame = Frame::lte(10);
    let table = McsTable::default_cqi();
    let relaxed = ultra_dense_relaxed_throughput(&means, &frame, &table)?;
    let unique = ultra_dense_unique_mcs_throughput(&means, &frame, &table)?;
    println!("\n{:>8} {:>12} {:>12}", "mean", "relaxed", "unique");
    for ((m, r), u) in means.iter().zip(&relaxed).zip(&unique) {
        println!("{m:>8.2} {:>12.4} {:>12.4}", r / 1e6, u / 1e6);
    }
    Ok(())
}
