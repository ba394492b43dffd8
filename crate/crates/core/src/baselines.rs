//! Approximate throughput models from the literature, kept for comparison
//! with the exact model and the simulator.
//!
//! All of them except the i.i.d.-priority model replace the fading
//! interference by its mean power, working from `Z̃ = p0/(P + N0)`.

use rayon::prelude::*;

use crate::analytic::{unique_mcs_throughput, AnalyticConfig, CellPopulation};
use crate::error::{ensure_finite_positive, Error, Result};
use crate::frame::Frame;
use crate::mcs::McsTable;
use crate::numerics::{integrate, std_normal_cdf, std_normal_pdf, QuadratureConfig};
use crate::sinr::{LinkProfile, SinrDistribution};

/// Interference-as-noise SINR `Z̃_{j,n}` of every terminal on every RB.
#[derive(Debug, Clone, PartialEq)]
pub struct IanSinr {
    tilde_z: Vec<Vec<f64>>,
}

impl IanSinr {
    pub fn new(tilde_z: Vec<Vec<f64>>) -> Result<Self> {
        if tilde_z.is_empty() {
            return Err(Error::Validation("need at least one terminal".into()));
        }
        let n = tilde_z[0].len();
        if n == 0 {
            return Err(Error::Validation("need at least one RB".into()));
        }
        for row in &tilde_z {
            if row.len() != n {
                return Err(Error::Validation(
                    "all terminals need the same number of RBs".into(),
                ));
            }
            for &z in row {
                ensure_finite_positive("IaN SINR", z)?;
            }
        }
        Ok(Self { tilde_z })
    }

    pub fn from_links(links: &[Vec<LinkProfile>]) -> Result<Self> {
        Self::new(
            links
                .iter()
                .map(|row| row.iter().map(LinkProfile::average_power_sinr).collect())
                .collect(),
        )
    }

    /// One link per terminal, the same on each of `n_rb` RBs.
    pub fn from_terminal_links(links: &[LinkProfile], n_rb: usize) -> Result<Self> {
        Self::new(
            links
                .iter()
                .map(|l| vec![l.average_power_sinr(); n_rb])
                .collect(),
        )
    }

    pub fn terminals(&self) -> usize {
        self.tilde_z.len()
    }

    pub fn rbs(&self) -> usize {
        self.tilde_z[0].len()
    }

    pub fn get(&self, j: usize, rb: usize) -> f64 {
        self.tilde_z[j][rb]
    }

    fn check_frame(&self, frame: &Frame) -> Result<()> {
        frame.validate()?;
        if frame.n_rb != self.rbs() {
            return Err(Error::Validation(format!(
                "frame has {} RBs, SINR matrix has {}",
                frame.n_rb,
                self.rbs()
            )));
        }
        Ok(())
    }
}

fn bit_rate(frame: &Frame, table: &McsTable) -> f64 {
    table.symbols_per_rb() / frame.t_tti
}

/// Mean and spread of the spectral efficiency `C(Z̃·X)`, `X` unit exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianRateParams {
    pub mu: f64,
    pub sigma: f64,
}

/// Moments of `C(Z̃·X)` from the exponential interval masses.
pub fn gaussian_rate_params(tilde_z: f64, table: &McsTable) -> GaussianRateParams {
    let survival = |z: f64| {
        if z.is_infinite() {
            0.0
        } else {
            (-z / tilde_z).exp()
        }
    };
    let (mut m1, mut m2) = (0.0, 0.0);
    for (lo, hi, c) in table.intervals() {
        let mass = survival(lo) - survival(hi);
        m1 += c * mass;
        m2 += c * c * mass;
    }
    GaussianRateParams {
        mu: m1,
        sigma: (m2 - m1 * m1).max(0.0).sqrt(),
    }
}

/// Efficiency at the mean SINR, shared round-robin: `Σ_n C(Z̃)/(J·T)`.
pub fn simple_throughput(ian: &IanSinr, frame: &Frame, table: &McsTable) -> Result<Vec<f64>> {
    ian.check_frame(frame)?;
    let k = bit_rate(frame, table) / ian.terminals() as f64;
    Ok((0..ian.terminals())
        .map(|j| {
            k * (0..ian.rbs())
                .map(|n| table.efficiency_at(ian.get(j, n)))
                .sum::<f64>()
        })
        .collect())
}

/// `F^J` at `z` for an exponential law with mean `mean`.
fn exp_cdf_power(z: f64, mean: f64, power: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    (power * (-(-z / mean).exp()).ln_1p()).exp()
}

/// Exact PFS model applied to exponential laws with means `Z̃`.
///
/// With every law exponential the normalized SINRs are identically
/// distributed, and the rate integral collapses to `Σ_m c_m ΔF^J / J` per RB.
pub fn ian_throughput(ian: &IanSinr, frame: &Frame, table: &McsTable) -> Result<Vec<f64>> {
    ian.check_frame(frame)?;
    let jf = ian.terminals() as f64;
    let k = bit_rate(frame, table);
    Ok((0..ian.terminals())
        .map(|j| {
            let per_slot: f64 = (0..ian.rbs())
                .map(|n| {
                    let mean = ian.get(j, n);
                    table
                        .intervals()
                        .map(|(lo, hi, c)| {
                            c * (exp_cdf_power(hi, mean, jf) - exp_cdf_power(lo, mean, jf))
                        })
                        .sum::<f64>()
                        / jf
                })
                .sum();
            k * per_slot
        })
        .collect())
}

/// Gaussian rate surrogate: each RB's efficiency is normal with the moments of
/// [`gaussian_rate_params`], and the RB goes to the largest `R/μ`.
///
/// The integral over the standardized own rate starts at 0, so a terminal only
/// collects rate from realizations above its mean. Terminals with `μ = 0`
/// never win and do not compete; a terminal with `σ = 0` always sits exactly at
/// its mean and wins whenever every competitor falls below theirs.
pub fn gaussian_throughput(ian: &IanSinr, frame: &Frame, table: &McsTable) -> Result<Vec<f64>> {
    ian.check_frame(frame)?;
    let k = bit_rate(frame, table);
    let quad = QuadratureConfig::default().with_tolerances(1e-13, 1e-10);
    (0..ian.terminals())
        .into_par_iter()
        .map(|j| {
            let mut per_slot = 0.0;
            for n in 0..ian.rbs() {
                let params: Vec<GaussianRateParams> = (0..ian.terminals())
                    .map(|g| gaussian_rate_params(ian.get(g, n), table))
                    .collect();
                per_slot += gaussian_rb_rate(j, &params, &quad)?;
            }
            Ok(k * per_slot)
        })
        .collect()
}

fn gaussian_rb_rate(
    j: usize,
    params: &[GaussianRateParams],
    quad: &QuadratureConfig,
) -> Result<f64> {
    let own = params[j];
    if own.mu == 0.0 {
        return Ok(0.0);
    }
    let rivals: Vec<GaussianRateParams> = params
        .iter()
        .enumerate()
        .filter(|&(g, p)| g != j && p.mu > 0.0)
        .map(|(_, p)| *p)
        .collect();
    if own.sigma == 0.0 {
        // Metric pinned at 1: win when every random rival is below its mean,
        // ties with other deterministic rivals split evenly.
        let random = rivals.iter().filter(|p| p.sigma > 0.0).count() as i32;
        let tied = rivals.iter().filter(|p| p.sigma == 0.0).count() as f64;
        return Ok(own.mu * 0.5f64.powi(random) / (1.0 + tied));
    }
    let integrand = |z: f64| {
        let win: f64 = rivals
            .iter()
            .map(|g| {
                if g.sigma == 0.0 {
                    1.0
                } else {
                    std_normal_cdf(g.mu * own.sigma / (own.mu * g.sigma) * z)
                }
            })
            .product();
        (z * own.sigma + own.mu) * std_normal_pdf(z) * win
    };
    integrate(integrand, 0.0, f64::INFINITY, quad)
}

/// Rate integral with each opponent replaced by an independent copy of the
/// terminal's own exact law: `Σ_m c_m (F^J(z_{m+1}) - F^J(z_m)) / J` per RB.
pub fn iid_priority_throughput(pop: &CellPopulation, table: &McsTable) -> Result<Vec<f64>> {
    let jf = pop.terminals() as f64;
    let k = table.symbols_per_rb() / pop.frame().t_tti;
    Ok((0..pop.terminals())
        .map(|j| {
            let per_slot: f64 = (0..pop.rbs())
                .map(|n| iid_priority_rb(pop.law(j, n), jf, table))
                .sum();
            k * per_slot
        })
        .collect())
}

fn iid_priority_rb(law: &SinrDistribution, jf: f64, table: &McsTable) -> f64 {
    let power = |z: f64| {
        if z == f64::INFINITY {
            1.0
        } else {
            (jf * law.cdf_at(z).ln()).exp()
        }
    };
    table
        .intervals()
        .map(|(lo, hi, c)| c * (power(hi) - power(lo)))
        .sum::<f64>()
        / jf
}

/// Unique-MCS model run on exponential laws with means `Z̃`.
pub fn unique_mcs_ian_throughput(
    ian: &IanSinr,
    frame: &Frame,
    table: &McsTable,
    cfg: &AnalyticConfig,
) -> Result<Vec<f64>> {
    ian.check_frame(frame)?;
    let laws = (0..ian.terminals())
        .map(|j| {
            (0..ian.rbs())
                .map(|n| SinrDistribution::exponential_mean(ian.get(j, n)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let pop = CellPopulation::new(laws, *frame)?;
    Ok(unique_mcs_throughput(&pop, table, cfg)?
        .into_iter()
        .map(|r| r.rate)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{
        relaxed_mcs_throughput, ultra_dense_relaxed_throughput, ultra_dense_unique_mcs_rate,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    const K: f64 = 168.0 / 1e-3;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn ian(values: &[f64], n_rb: usize) -> IanSinr {
        IanSinr::new(values.iter().map(|&z| vec![z; n_rb]).collect()).unwrap()
    }

    #[test]
    fn simple_cases() {
        let t = McsTable::default_cqi();
        let f = Frame::lte(4);
        let top = simple_throughput(&ian(&[1e4], 4), &f, &t).unwrap();
        assert!(rel(top[0], 4.0 * K * t.max_efficiency()) < 1e-15);
        let low = simple_throughput(&ian(&[0.1], 4), &f, &t).unwrap();
        assert_eq!(low[0], 0.0);
        let four = simple_throughput(&ian(&[3.0, 1.0, 2.0, 5.0], 4), &f, &t).unwrap();
        let two = simple_throughput(&ian(&[3.0, 1.0], 4), &f, &t).unwrap();
        assert!(rel(two[0], 2.0 * four[0]) < 1e-15);
    }

    #[test]
    fn ian_matches_dense_for_symmetric_users() {
        let t = McsTable::default_cqi();
        let f = Frame::lte(3);
        let r = ian_throughput(&ian(&[2.5, 2.5, 2.5], 3), &f, &t).unwrap();
        let d = ultra_dense_relaxed_throughput(&[2.5, 2.5, 2.5], &f, &t).unwrap();
        for (a, b) in r.iter().zip(&d) {
            assert!(rel(*a, *b) < 1e-14);
        }
    }

    #[test]
    fn ian_single_user_is_outage_weighted() {
        let t = McsTable::default_cqi();
        let f = Frame::lte(1);
        let r = ian_throughput(&ian(&[4.0], 1), &f, &t).unwrap()[0];
        let expected: f64 = t
            .intervals()
            .map(|(lo, hi, c)| {
                c * ((-lo / 4.0f64).exp()
                    - if hi.is_infinite() {
                        0.0
                    } else {
                        (-hi / 4.0f64).exp()
                    })
            })
            .sum();
        assert!(rel(r, K * expected) < 1e-13);
    }

    #[test]
    fn ian_matches_rate_integral_quadrature() {
        let t = McsTable::default_cqi();
        let f = Frame::lte(1);
        let means = [0.7, 4.0, 19.0];
        let r = ian_throughput(&ian(&means, 1), &f, &t).unwrap();
        let q = QuadratureConfig::oracle();
        for j in 0..3 {
            let density = |z: f64| {
                let mut v = (-z / means[j]).exp() / means[j];
                for g in (0..3).filter(|&g| g != j) {
                    v *= 1.0 - (-(z * means[g] / means[j]) / means[g]).exp();
                }
                v
            };
            let mut expected = 0.0;
            for (lo, hi, c) in t.intervals() {
                expected += c * integrate(density, lo, hi, &q.with_tail_scale(means[j])).unwrap();
            }
            assert!(rel(r[j], K * expected) < 1e-8, "{j}");
        }
    }

    #[test]
    fn mean_rate_identity_for_two_levels() {
        let t = McsTable::new(vec![(1.0, 1.0), (4.0, 3.0)]).unwrap();
        let zt = 2.0_f64;
        let p = gaussian_rate_params(zt, &t);
        let e1 = (-1.0 / zt).exp();
        let e2 = (-4.0 / zt).exp();
        assert!((p.mu - (e1 - e2 + 3.0 * e2)).abs() < 1e-15);
        let second = e1 - e2 + 9.0 * e2;
        assert!((p.sigma - (second - p.mu * p.mu).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_symmetric_users_are_equal() {
        let t = McsTable::default_cqi();
        let f = Frame::lte(2);
        let r = gaussian_throughput(&ian(&[3.0, 3.0, 3.0], 2), &f, &t).unwrap();
        assert!(rel(r[0], r[1]) < 1e-14 && rel(r[1], r[2]) < 1e-14);
    }

    #[test]
    fn gaussian_matches_surrogate_sampling() {
        let t = McsTable::default_cqi();
        let f = Frame::lte(1);
        let means = [1.5, 12.0];
        let r = gaussian_throughput(&ian(&means, 1), &f, &t).unwrap();
        let p: Vec<_> = means.iter().map(|&m| gaussian_rate_params(m, &t)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 1_000_000;
        let mut won = [0.0; 2];
        for _ in 0..draws {
            let z: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let rate = [p[0].mu + p[0].sigma * z[0], p[1].mu + p[1].sigma * z[1]];
            let w = if rate[0] / p[0].mu >= rate[1] / p[1].mu {
                0
            } else {
                1
            };
            // The model's integral only covers realizations at or above the mean.
            if z[w] >= 0.0 {
                won[w] += rate[w];
            }
        }
        for j in 0..2 {
            let mc = K * won[j] / draws as f64;
            assert!(rel(r[j], mc) < 0.02, "{j}: {} vs {mc}", r[j]);
        }
    }

    #[test]
    fn gaussian_handles_zero_mean_terminals() {
        let t = McsTable::default_cqi();
        let f = Frame::lte(1);
        let r = gaussian_throughput(&ian(&[1e-300, 2.0], 1), &f, &t).unwrap();
        assert_eq!(r[0], 0.0);
        let alone = gaussian_throughput(&ian(&[2.0], 1), &f, &t).unwrap();
        assert!(rel(r[1], alone[0]) < 1e-12);
    }

    #[test]
    fn iid_priority_cases() {
        let t = McsTable::default_cqi();
        let law = SinrDistribution::from_ratios(vec![1.2, 3.5], 0.08).unwrap();
        let one = CellPopulation::uniform(vec![law.clone()], Frame::lte(2)).unwrap();
        let r = iid_priority_throughput(&one, &t).unwrap()[0];
        let expected: f64 = t
            .intervals()
            .map(|(lo, hi, c)| c * (law.cdf_at(hi) - law.cdf_at(lo)))
            .sum();
        assert!(rel(r, 2.0 * K * expected) < 1e-13);

        let other = SinrDistribution::from_ratios(vec![0.5], 0.3).unwrap();
        let pop = CellPopulation::uniform(vec![law.clone(), other], Frame::lte(1)).unwrap();
        let r = iid_priority_throughput(&pop, &t).unwrap()[0];
        let q = QuadratureConfig::oracle().with_tail_scale(law.mean());
        let mut expected = 0.0;
        for (lo, hi, c) in t.intervals() {
            expected += c * integrate(|z| law.cdf_at(z) * law.pdf_at(z), lo, hi, &q).unwrap();
        }
        assert!(rel(r, K * expected) < 1e-8);
    }

    #[test]
    fn baselines_coincide_with_exact_model_on_exponentials() {
        let t = McsTable::default_cqi();
        let means = [0.4, 2.0, 9.0, 30.0];
        let frame = Frame::lte(2);
        let laws = means
            .iter()
            .map(|&m| SinrDistribution::exponential_mean(m).unwrap())
            .collect();
        let pop = CellPopulation::uniform(laws, frame).unwrap();
        let exact = relaxed_mcs_throughput(&pop, &t, &AnalyticConfig::default()).unwrap();
        let ia = ian_throughput(&ian(&means, 2), &frame, &t).unwrap();
        let iid = iid_priority_throughput(&pop, &t).unwrap();
        for j in 0..4 {
            assert!(rel(ia[j], exact[j].rate) < 1e-6);
            assert!(rel(iid[j], exact[j].rate) < 1e-6);
        }
    }

    #[test]
    fn unique_ian_cases() {
        let t = McsTable::default_cqi();
        let cfg = AnalyticConfig::default();
        let f = Frame::lte(5);
        let sym = unique_mcs_ian_throughput(&ian(&[2.0, 2.0], 5), &f, &t, &cfg).unwrap();
        let dense = ultra_dense_unique_mcs_rate(2.0, 2, &f, &t).unwrap();
        assert!(rel(sym[0], dense) < 1e-6);

        let one_rb = Frame::lte(1);
        let vals = [0.8, 3.0, 11.0];
        let u = unique_mcs_ian_throughput(&ian(&vals, 1), &one_rb, &t, &cfg).unwrap();
        let r = ian_throughput(&ian(&vals, 1), &one_rb, &t).unwrap();
        for j in 0..3 {
            assert!(rel(u[j], r[j]) < 1e-8);
        }

        let wide = Frame::lte(6);
        let u = unique_mcs_ian_throughput(&ian(&vals, 6), &wide, &t, &cfg).unwrap();
        let r = ian_throughput(&ian(&vals, 6), &wide, &t).unwrap();
        for j in 0..3 {
            assert!(u[j] <= r[j]);
        }
    }

    #[test]
    fn frame_mismatch_is_rejected() {
        let t = McsTable::default_cqi();
        assert!(simple_throughput(&ian(&[1.0], 2), &Frame::lte(3), &t).is_err());
        assert!(IanSinr::new(vec![vec![1.0], vec![]]).is_err());
        assert!(IanSinr::new(vec![vec![-1.0]]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn baseline_rates_are_bounded(
                vals in proptest::collection::vec(-20.0f64..30.0, 1..6),
                n_rb in 1usize..4,
            ) {
                let t = McsTable::default_cqi();
                let f = Frame::lte(n_rb);
                let lin: Vec<f64> = vals.iter().map(|db| 10f64.powf(db / 10.0)).collect();
                let m = ian(&lin, n_rb);
                let cap = n_rb as f64 * K * t.max_efficiency() * (1.0 + 1e-12);
                let links: Vec<_> = lin.iter().map(|&z| SinrDistribution::exponential_mean(z).unwrap()).collect();
                let pop = CellPopulation::uniform(links, f).unwrap();
                for rates in [
                    simple_throughput(&m, &f, &t).unwrap(),
                    ian_throughput(&m, &f, &t).unwrap(),
                    gaussian_throughput(&m, &f, &t).unwrap(),
                    iid_priority_throughput(&pop, &t).unwrap(),
                ] {
                    for r in rates {
                        prop_assert!((0.0..=cap).contains(&r), "{r} vs cap {cap}");
                    }
                }
            }
        }
    }
}
