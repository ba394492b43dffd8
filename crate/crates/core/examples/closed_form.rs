//! The closed-form primitive of the scheduled-SINR density, checked against
//! adaptive quadrature on every MCS interval.

use pfs_core::analytic::{build_antiderivative, joint_density, AnalyticConfig, CellPopulation};
use pfs_core::mcs::McsTable;
use pfs_core::numerics::{integrate, QuadratureConfig};
use pfs_core::sinr::LinkProfile;
use pfs_core::Frame;

fn main() -> pfs_core::Result<()> {
    let links = [
        LinkProfile::new(1.0, vec![0.3, 0.07], 0.02)?,
        LinkProfile::new(0.5, vec![0.11], 0.02)?,
        LinkProfile::new(0.2, vec![0.05, 0.013], 0.02)?,
    ];
    let pop = CellPopulation::from_terminal_links(&links, Frame::lte(1))?;
    let cfg = AnalyticConfig::default();
    let table = McsTable::default_cqi();
    let j = 0;
    let terms = build_antiderivative(j, &pop, 0, &cfg)?;
    println!(
        "{} opponent subsets, {} elementary terms",
        terms.subset_count(),
        terms.term_count()
    );
    let quad = QuadratureConfig::oracle().with_tail_scale(pop.mean(j, 0));
    println!(
        "{:>10} {:>10} {:>22} {:>22} {:>10}",
        "z_m", "z_m+1", "closed form", "quadrature", "condition"
    );
    for (lo, hi, _) in table.intervals() {
        let cf = terms.definite(lo, hi)?;
        let q = integrate(|z| joint_density(&pop, j, 0, z), lo, hi, &quad)?;
        println!(
            "{lo:>10.4} {hi:>10.4} {:>22.15e} {q:>22.15e} {:>10.1e}",
            cf.value, cf.condition
        );
    }
    Ok(())
}
