use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::*;
use crate::mcs::McsTable;
use crate::numerics::{integrate, QuadratureConfig};

fn random_links(
    rng: &mut ChaCha8Rng,
    terminals: usize,
    max_interferers: usize,
) -> Vec<LinkProfile> {
    let n0 = 10f64.powf(rng.random_range(-2.0..2.0));
    (0..terminals)
        .map(|_| {
            let i = rng.random_range(1..=max_interferers);
            let p0 = 10f64.powf(rng.random_range(-2.0..2.0));
            let ps = (0..i)
                .map(|_| 10f64.powf(rng.random_range(-2.0..2.0)))
                .collect();
            LinkProfile::new(p0, ps, n0).unwrap()
        })
        .collect()
}

fn random_pop(seed: u64, terminals: usize, n_rb: usize) -> CellPopulation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let links = random_links(&mut rng, terminals, 3);
    CellPopulation::from_terminal_links(&links, Frame::lte(n_rb)).unwrap()
}

fn exponential_pop(means: &[f64], n_rb: usize) -> CellPopulation {
    let laws = means
        .iter()
        .map(|&m| SinrDistribution::exponential_mean(m).unwrap())
        .collect();
    CellPopulation::uniform(laws, Frame::lte(n_rb)).unwrap()
}

fn oracle_mass(pop: &CellPopulation, j: usize, a: f64, b: f64) -> f64 {
    let cfg = QuadratureConfig::oracle()
        .with_tolerances(1e-300, 1e-11)
        .with_tail_scale(pop.mean(j, 0).max(a));
    match integrate(|z| joint_density(pop, j, 0, z), a, b, &cfg) {
        Ok(v) => v,
        // Round-off stalls the tightest tolerance on some tiny masses.
        Err(Error::Convergence {
            estimate,
            error_bound,
        }) if error_bound <= 1e-7 * estimate.abs() => estimate,
        Err(e) => panic!("{e}"),
    }
}

fn edges(table: &McsTable) -> Vec<f64> {
    let mut e = vec![0.0];
    e.extend(table.thresholds());
    e.push(f64::INFINITY);
    e
}

/// One scheme at `z1`; the second threshold is far beyond any SINR drawn here.
fn single_scheme(z1: f64, c1: f64) -> McsTable {
    McsTable::new(vec![(z1, c1), (1e300, c1 * 2.0)]).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn closed_form_intervals_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let table = McsTable::default_cqi();
    let cfg = AnalyticConfig::default();
    let (mut kept, mut refused) = (0, 0);
    for _ in 0..50 {
        let j_count = rng.random_range(1..=4);
        let links = random_links(&mut rng, j_count, 3);
        let pop = CellPopulation::from_terminal_links(&links, Frame::lte(1)).unwrap();
        for j in 0..j_count {
            let t = build_antiderivative(j, &pop, 0, &cfg).unwrap();
            for w in edges(&table).windows(2) {
                let q = oracle_mass(&pop, j, w[0], w[1]);
                match t.definite(w[0], w[1]) {
                    Ok(cf) => {
                        kept += 1;
                        // Masses near the bottom of the double range carry no relative information.
                        if q > 1e-250 {
                            assert!(
                                rel(cf.value, q) < 1e-6,
                                "[{}, {}]: {} vs {q}",
                                w[0],
                                w[1],
                                cf.value
                            );
                        } else {
                            assert!(cf.value.abs() < 1e-240);
                        }
                    }
                    Err(Error::IllConditioned { .. }) => refused += 1,
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
    assert!(
        refused * 10 < kept,
        "closed form refused {refused} of {}",
        kept + refused
    );
}

#[test]
fn single_user_outage_formula() {
    let lambda = 0.4;
    let pop = CellPopulation::uniform(
        vec![SinrDistribution::exponential_rate(lambda)],
        Frame::lte(3),
    )
    .unwrap();
    let table = single_scheme(2.0, 1.5);
    let r = relaxed_mcs_rate(&pop, 0, &table, &AnalyticConfig::default()).unwrap();
    let expected = 168.0 / 1e-3 * 3.0 * 1.5 * (-lambda * 2.0f64).exp();
    assert!(rel(r.rate, expected) < 1e-12, "{} vs {expected}", r.rate);
}

#[test]
fn symmetric_noise_limited_users_share_equally() {
    let pop = exponential_pop(&[3.0, 3.0], 4);
    let table = McsTable::default_cqi();
    let rates = relaxed_mcs_throughput(&pop, &table, &AnalyticConfig::default()).unwrap();
    assert!(rel(rates[0].rate, rates[1].rate) < 1e-12);
    let dense = ultra_dense_relaxed_rate(3.0, 2, pop.frame(), &table).unwrap();
    assert!(rel(rates[0].rate, dense) < 1e-8);
}

#[test]
fn relaxed_rate_matches_rate_integral() {
    let table = McsTable::default_cqi();
    for seed in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let links = random_links(&mut rng, 4, 2);
        let pop = CellPopulation::from_terminal_links(&links, Frame::lte(2)).unwrap();
        let rates = relaxed_mcs_throughput(&pop, &table, &AnalyticConfig::default()).unwrap();
        for (j, r) in rates.iter().enumerate() {
            // C(z)·density integrated piecewise, independent of the interval bookkeeping.
            let mut per_rb = 0.0;
            for (lo, hi, c) in table.intervals() {
                per_rb += c * oracle_mass(&pop, j, lo, hi);
            }
            let expected = 168.0 / 1e-3 * 2.0 * per_rb;
            assert!(
                rel(r.rate, expected) < 1e-5,
                "seed {seed} j {j}: {} vs {expected}",
                r.rate
            );
        }
    }
}

#[test]
fn fallback_is_flagged() {
    let l = SinrDistribution::from_ratios(vec![2.0], 0.1).unwrap();
    let pop = CellPopulation::uniform(vec![l.clone(), l], Frame::lte(1)).unwrap();
    let r = relaxed_mcs_rate(
        &pop,
        0,
        &McsTable::default_cqi(),
        &AnalyticConfig::default(),
    )
    .unwrap();
    assert!(r.diagnostics.used_fallback());
    assert!(r
        .diagnostics
        .fallback_reason
        .as_deref()
        .unwrap()
        .contains("coincide"));
}

#[test]
fn cross_check_records_agreement() {
    let pop = random_pop(5, 3, 1);
    let cfg = AnalyticConfig::default().with_cross_check();
    let r = relaxed_mcs_rate(&pop, 1, &McsTable::default_cqi(), &cfg).unwrap();
    assert!(r.diagnostics.max_cross_check_gap.unwrap() < 1e-6);
}

#[test]
fn scheduling_probability_cases() {
    let cfg = AnalyticConfig::default();
    let one = random_pop(1, 1, 1);
    assert_eq!(scheduling_probability(0, &one, 0, &cfg).unwrap(), 1.0);

    let l = SinrDistribution::from_ratios(vec![1.5, 4.0], 0.2).unwrap();
    let sym = CellPopulation::uniform(vec![l; 3], Frame::lte(1)).unwrap();
    for j in 0..3 {
        assert!((scheduling_probability(j, &sym, 0, &cfg).unwrap() - 1.0 / 3.0).abs() < 1e-6);
    }

    let exp = exponential_pop(&[0.3, 2.0, 40.0, 7.5], 1);
    for j in 0..4 {
        assert!((scheduling_probability(j, &exp, 0, &cfg).unwrap() - 0.25).abs() < 1e-8);
    }
}

#[test]
fn scheduling_probabilities_sum_to_one() {
    let cfg = AnalyticConfig::default();
    for seed in 0..20 {
        let pop = random_pop(200 + seed, 1 + (seed as usize % 5), 1);
        let total: f64 = (0..pop.terminals())
            .map(|j| scheduling_probability(j, &pop, 0, &cfg).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "seed {seed}: {total}");
    }
}

#[test]
fn common_power_scaling_leaves_scheduling_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let links = random_links(&mut rng, 3, 3);
    let cfg = AnalyticConfig::default();
    let before = CellPopulation::from_terminal_links(&links, Frame::lte(1)).unwrap();
    let mut scaled = links.clone();
    scaled[1] = scaled[1].scaled(37.0);
    let after = CellPopulation::from_terminal_links(&scaled, Frame::lte(1)).unwrap();
    for j in 0..3 {
        let a = scheduling_probability(j, &before, 0, &cfg).unwrap();
        let b = scheduling_probability(j, &after, 0, &cfg).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
    // Scaled SINR Z/E[Z] of the rescaled terminal has the same scheduled law.
    let s0 = ScheduledSinr::new(&before, 1, 0, &cfg).unwrap();
    let s1 = ScheduledSinr::new(&after, 1, 0, &cfg).unwrap();
    for u in [0.2, 1.0, 3.0] {
        let a = s0.cdf(u * before.mean(1, 0)).unwrap();
        let b = s1.cdf(u * after.mean(1, 0)).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn scheduled_law_is_a_distribution() {
    let cfg = AnalyticConfig::default();
    let pop = random_pop(41, 3, 1);
    for j in 0..3 {
        let s = ScheduledSinr::new(&pop, j, 0, &cfg).unwrap();
        let q = QuadratureConfig::oracle().with_tail_scale(pop.mean(j, 0));
        let total = integrate(|z| s.pdf(z).unwrap(), 0.0, f64::INFINITY, &q).unwrap();
        assert!((total - 1.0).abs() < 1e-7, "{total}");
        assert_eq!(s.cdf(f64::INFINITY).unwrap(), 1.0);
        let mut prev = 0.0;
        for k in 0..60 {
            let z = pop.mean(j, 0) * 10f64.powf(-3.0 + k as f64 / 10.0);
            let c = s.cdf(z).unwrap();
            assert!(c >= prev - 1e-12);
            prev = c;
        }
        assert!(s.cdf(-1.0).is_err());
    }
}

#[test]
fn single_terminal_scheduled_law_is_unconditional() {
    let cfg = AnalyticConfig::default();
    let pop = random_pop(3, 1, 1);
    let law = pop.law(0, 0);
    for z in [0.01, 0.5, 2.0, 30.0] {
        assert!((scheduled_sinr_cdf(0, &pop, 0, z, &cfg).unwrap() - law.cdf_at(z)).abs() < 1e-12);
        assert!(
            rel(
                scheduled_sinr_pdf(0, &pop, 0, z, &cfg).unwrap(),
                law.pdf_at(z)
            ) < 1e-12
        );
    }
}

#[test]
fn exponential_scheduled_cdf_is_power_of_cdf() {
    let cfg = AnalyticConfig::default();
    let pop = exponential_pop(&[1.0, 4.0, 0.5], 1);
    for j in 0..3 {
        let law = pop.law(j, 0);
        let s = ScheduledSinr::new(&pop, j, 0, &cfg).unwrap();
        for u in [0.1, 1.0, 2.5, 6.0] {
            let z = u * pop.mean(j, 0);
            assert!((s.cdf(z).unwrap() - law.cdf_at(z).powi(3)).abs() < 1e-8);
        }
    }
}

fn draw(link: &LinkProfile, rng: &mut ChaCha8Rng) -> f64 {
    let x0: f64 = rng.sample(Exp1);
    let i: f64 = link
        .interferer_powers
        .iter()
        .map(|p| p * rng.sample::<f64, _>(Exp1))
        .sum();
    link.p0 * x0 / (i + link.n0)
}

#[test]
fn scheduled_mean_matches_argmax_sampling() {
    let link = LinkProfile::new(1.0, vec![0.3, 0.8], 0.1).unwrap();
    let pop =
        CellPopulation::from_terminal_links(&[link.clone(), link.clone()], Frame::lte(1)).unwrap();
    let cfg = AnalyticConfig::default();
    let s = ScheduledSinr::new(&pop, 0, 0, &cfg).unwrap();
    let q = QuadratureConfig::oracle().with_tail_scale(pop.mean(0, 0));
    let analytic = integrate(|z| z * s.pdf(z).unwrap(), 0.0, f64::INFINITY, &q).unwrap();
    assert!(analytic > pop.mean(0, 0));

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let draws = 1_000_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..draws {
        let a = draw(&link, &mut rng);
        let b = draw(&link, &mut rng);
        let winner = a.max(b);
        sum += winner;
        sq += winner * winner;
    }
    let mean = sum / draws as f64;
    let se = ((sq / draws as f64 - mean * mean) / draws as f64).sqrt();
    assert!(
        (analytic - mean).abs() < 4.0 * se,
        "{analytic} vs {mean} ± {se}"
    );
}

#[test]
fn unique_rate_cases() {
    let cfg = AnalyticConfig::default();
    let table = McsTable::default_cqi();
    let single = random_pop(61, 3, 1);
    for j in 0..3 {
        let r = relaxed_mcs_rate(&single, j, &table, &cfg).unwrap().rate;
        let u = unique_mcs_rate(&single, j, &table, &cfg).unwrap().rate;
        assert!(rel(u, r) < 1e-8, "one RB has no minimum penalty");
    }
    let wide = random_pop(61, 3, 8);
    for j in 0..3 {
        let r = relaxed_mcs_rate(&wide, j, &table, &cfg).unwrap().rate;
        let u = unique_mcs_rate(&wide, j, &table, &cfg).unwrap().rate;
        assert!(u <= r * (1.0 + 1e-12));
        let closed = unique_mcs_rate_closed_form(&wide, j, &table, &cfg)
            .unwrap()
            .rate;
        assert!(rel(closed, u) < 1e-6, "{closed} vs {u}");
    }
}

#[test]
fn unique_rate_needs_homogeneous_rbs() {
    let a = SinrDistribution::from_ratios(vec![2.0], 0.1).unwrap();
    let b = SinrDistribution::from_ratios(vec![5.0], 0.1).unwrap();
    let pop =
        CellPopulation::new(vec![vec![a.clone(), b.clone()], vec![b, a]], Frame::lte(2)).unwrap();
    assert!(matches!(
        unique_mcs_throughput(&pop, &McsTable::default_cqi(), &AnalyticConfig::default()),
        Err(Error::HeterogeneousRbs)
    ));
    assert_eq!(pop.rb_classes(), vec![(0, 1), (1, 1)]);
    assert!(
        relaxed_mcs_throughput(&pop, &McsTable::default_cqi(), &AnalyticConfig::default()).is_ok()
    );
}

#[test]
fn population_rejects_infinite_means() {
    let law = SinrDistribution::from_ratios(vec![2.0], 0.0).unwrap();
    assert!(matches!(
        CellPopulation::uniform(vec![law], Frame::lte(1)),
        Err(Error::InfiniteMean)
    ));
    assert!(CellPopulation::new(vec![], Frame::lte(1)).is_err());
}

#[test]
fn dense_relaxed_single_user() {
    let table = McsTable::default_cqi();
    let frame = Frame::lte(5);
    let mean = 4.0;
    let r = ultra_dense_relaxed_rate(mean, 1, &frame, &table).unwrap();
    let f = |z: f64| {
        if z.is_infinite() {
            1.0
        } else {
            1.0 - (-z / mean).exp()
        }
    };
    let expected: f64 = table
        .intervals()
        .map(|(lo, hi, c)| c * (f(hi) - f(lo)))
        .sum::<f64>()
        * 5.0
        * 168.0
        / 1e-3;
    assert!(rel(r, expected) < 1e-12);
}

#[test]
fn dense_relaxed_ignores_other_terminals() {
    let table = McsTable::default_cqi();
    let frame = Frame::lte(2);
    let a = ultra_dense_relaxed_throughput(&[3.0, 0.2, 9.0], &frame, &table).unwrap();
    let b = ultra_dense_relaxed_throughput(&[3.0, 50.0, 0.01], &frame, &table).unwrap();
    assert_eq!(a[0], b[0]);
}

#[test]
fn dense_relaxed_equals_exact_model_on_exponentials() {
    let table = McsTable::default_cqi();
    let means = [0.5, 3.0, 12.0];
    let pop = exponential_pop(&means, 3);
    let exact = relaxed_mcs_throughput(&pop, &table, &AnalyticConfig::default()).unwrap();
    let dense = ultra_dense_relaxed_throughput(&means, pop.frame(), &table).unwrap();
    for (e, d) in exact.iter().zip(&dense) {
        assert!(rel(e.rate, *d) < 1e-8, "{} vs {d}", e.rate);
    }
}

#[test]
fn dense_unique_matches_quadrature_path() {
    let table = McsTable::default_cqi();
    let cfg = AnalyticConfig::default();
    for (j_count, n_rb) in [(1, 1), (2, 3), (4, 10), (6, 7)] {
        let means: Vec<f64> = (0..j_count).map(|k| 0.5 + 2.5 * k as f64).collect();
        let pop = exponential_pop(&means, n_rb);
        for (j, &m) in means.iter().enumerate() {
            let dense = ultra_dense_unique_mcs_rate(m, j_count, pop.frame(), &table).unwrap();
            let quad = unique_mcs_rate(&pop, j, &table, &cfg).unwrap().rate;
            assert!(
                rel(dense, quad) < 1e-4,
                "J={j_count} N={n_rb} j={j}: {dense} vs {quad}"
            );
        }
    }
}

#[test]
fn dense_unique_single_user_single_rb() {
    let table = McsTable::default_cqi();
    let frame = Frame::lte(1);
    let u = ultra_dense_unique_mcs_rate(2.0, 1, &frame, &table).unwrap();
    let r = ultra_dense_relaxed_rate(2.0, 1, &frame, &table).unwrap();
    assert!(rel(u, r) < 1e-12);
}

#[test]
fn dense_unique_is_monotone_in_mean() {
    let table = McsTable::default_cqi();
    let frame = Frame::lte(6);
    let mut prev = 0.0;
    for k in 0..40 {
        let m = 10f64.powf(-1.5 + k as f64 * 0.1);
        let r = ultra_dense_unique_mcs_rate(m, 4, &frame, &table).unwrap();
        assert!(r >= prev);
        prev = r;
    }
}

#[test]
fn gain_is_the_harmonic_number() {
    let mut h = 0.0;
    for j in 1..=30 {
        h += 1.0 / j as f64;
        assert!((pfs_sinr_gain(j).unwrap() - h).abs() < 1e-12, "J={j}");
    }
    assert_eq!(pfs_sinr_gain(1).unwrap(), 1.0);
    assert!((pfs_sinr_gain(10).unwrap() - 2.928968253968254).abs() < 1e-12);
    assert!((pfs_sinr_gain(200).unwrap() - dense::harmonic(200)).abs() < 1e-12);
    assert!(pfs_sinr_gain(0).is_err());
}

#[test]
fn gain_matches_expected_maximum_of_exponentials() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let draws = 1_000_000;
    let total: f64 = (0..draws)
        .map(|_| rng.sample::<f64, _>(Exp1).max(rng.sample(Exp1)))
        .sum();
    assert!((total / draws as f64 - pfs_sinr_gain(2).unwrap()).abs() < 0.005);
}

#[test]
fn dense_scheduled_mean() {
    assert!(rel(scheduled_mean_dense(2.0, 0.5, 0.5, 1).unwrap(), 2.0) < 1e-15);
    assert!((scheduled_mean_dense(1.0, 0.25, 0.75, 4).unwrap() - 25.0 / 12.0).abs() < 1e-12);
    let m = scheduled_mean_dense(3.0, 1.7, 0.2, 7).unwrap();
    assert!(rel(m, 3.0 / 1.9 * pfs_sinr_gain(7).unwrap()) < 1e-15);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn definite_integrals_match_quadrature(seed in any::<u64>(), j_count in 1usize..=4) {
            let pop = random_pop(seed, j_count, 1);
            let table = McsTable::default_cqi();
            let cfg = AnalyticConfig::default();
            for j in 0..j_count {
                let t = build_antiderivative(j, &pop, 0, &cfg).unwrap();
                for w in edges(&table).windows(2) {
                    if let Ok(cf) = t.definite(w[0], w[1]) {
                        let q = oracle_mass(&pop, j, w[0], w[1]);
                        if q > 1e-250 {
                            prop_assert!(rel(cf.value, q) < 1e-6, "j={} [{}, {}] cf={} q={} cond={}", j, w[0], w[1], cf.value, q, cf.condition);
                        }
                    }
                }
            }
        }

        #[test]
        fn relaxed_dominates_unique(seed in any::<u64>(), j_count in 1usize..=3, n_rb in 1usize..=6) {
            let pop = random_pop(seed, j_count, n_rb);
            let table = McsTable::default_cqi();
            let cfg = AnalyticConfig::default();
            for j in 0..j_count {
                let r = relaxed_mcs_rate(&pop, j, &table, &cfg).unwrap().rate;
                let u = unique_mcs_rate(&pop, j, &table, &cfg).unwrap().rate;
                prop_assert!(u <= r * (1.0 + 1e-6) + 1e-6, "j={} u={} r={}", j, u, r);
            }
        }
    }
}
