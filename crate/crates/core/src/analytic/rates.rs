use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mcs::McsTable;
use crate::numerics::{binomial_pmf, extended_sum, integrate, DoubleDouble, ExtendedAccumulator};

use super::closed_form::{build_antiderivative, AntiderivativeTerms};
use super::{rb_bit_rate, AnalyticConfig, CellPopulation, EvalDiagnostics, TerminalRate};

/// `Π_{g≠j} F_g(z·E_g/E_j) · f_j(z)`: density of "terminal `j` wins RB `rb` with SINR `z`".
pub fn joint_density(pop: &CellPopulation, j: usize, rb: usize, z: f64) -> f64 {
    let own = pop.law(j, rb);
    let mut v = own.pdf_at(z);
    if v == 0.0 {
        return 0.0;
    }
    let e_j = own.mean();
    for g in (0..pop.terminals()).filter(|&g| g != j) {
        let law = pop.law(g, rb);
        v *= law.cdf_at(z * law.mean() / e_j);
        if v == 0.0 {
            break;
        }
    }
    v
}

fn quadrature_mass(
    pop: &CellPopulation,
    j: usize,
    rb: usize,
    a: f64,
    b: f64,
    cfg: &AnalyticConfig,
) -> Result<f64> {
    let q = cfg.quadrature.with_tail_scale(pop.mean(j, rb).max(a));
    integrate(|z| joint_density(pop, j, rb, z), a, b, &q)
}

/// Probability that terminal `j` is scheduled on RB `rb`.
pub fn scheduling_probability(
    j: usize,
    pop: &CellPopulation,
    rb: usize,
    cfg: &AnalyticConfig,
) -> Result<f64> {
    pop.check_index(j, rb)?;
    if pop.terminals() == 1 {
        return Ok(1.0);
    }
    // In units of the own mean the integrand has scale 1 for every terminal.
    let e_j = pop.mean(j, rb);
    let q = cfg.quadrature.with_tail_scale(1.0);
    let p = e_j
        * integrate(
            |u| joint_density(pop, j, rb, e_j * u),
            0.0,
            f64::INFINITY,
            &q,
        )?;
    Ok(p.clamp(0.0, 1.0))
}

/// Probability mass of the joint density on `[0, z_1), [z_1, z_2), …, [z_M, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMasses {
    pub masses: Vec<f64>,
    pub diagnostics: EvalDiagnostics,
}

impl IntervalMasses {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `Σ_m c_m · mass_m`, skipping the outage interval.
    pub fn expected_efficiency(&self, table: &McsTable) -> f64 {
        table
            .entries()
            .iter()
            .zip(&self.masses[1..])
            .map(|(e, m)| e.efficiency * m)
            .sum()
    }
}

fn breakpoints(table: &McsTable) -> Vec<f64> {
    let mut b = Vec::with_capacity(table.len() + 2);
    b.push(0.0);
    b.extend(table.thresholds());
    b.push(f64::INFINITY);
    b
}

impl IntervalMasses {
    pub fn compute(
        pop: &CellPopulation,
        j: usize,
        rb: usize,
        table: &McsTable,
        cfg: &AnalyticConfig,
    ) -> Result<Self> {
        pop.check_index(j, rb)?;
        let edges = breakpoints(table);
        let mut diag = EvalDiagnostics::default();
        let terms = if cfg.quadrature_only {
            None
        } else {
            match build_antiderivative(j, pop, rb, cfg) {
                Ok(t) => Some(t),
                Err(e) => {
                    diag.fallback_reason = Some(e.to_string());
                    None
                }
            }
        };
        let mut masses = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            masses.push(interval_mass(
                pop,
                j,
                rb,
                w[0],
                w[1],
                terms.as_ref(),
                cfg,
                &mut diag,
            )?);
        }
        Ok(Self {
            masses,
            diagnostics: diag,
        })
    }

    /// Quadrature for every interval, skipping the closed form.
    pub fn by_quadrature(
        pop: &CellPopulation,
        j: usize,
        rb: usize,
        table: &McsTable,
        cfg: &AnalyticConfig,
    ) -> Result<Self> {
        let cfg = AnalyticConfig {
            quadrature_only: true,
            ..*cfg
        };
        Self::compute(pop, j, rb, table, &cfg)
    }
}

#[allow(clippy::too_many_arguments)]
fn interval_mass(
    pop: &CellPopulation,
    j: usize,
    rb: usize,
    a: f64,
    b: f64,
    terms: Option<&AntiderivativeTerms>,
    cfg: &AnalyticConfig,
    diag: &mut EvalDiagnostics,
) -> Result<f64> {
    if let Some(t) = terms {
        match t.definite(a, b) {
            Ok(v) => {
                diag.closed_form_intervals += 1;
                if v.extended {
                    diag.extended_precision_intervals += 1;
                }
                diag.worst_condition = diag.worst_condition.max(v.condition);
                if cfg.cross_check {
                    let q = quadrature_mass(pop, j, rb, a, b, cfg)?;
                    let gap = (v.value - q).abs() / q.abs().max(f64::MIN_POSITIVE);
                    diag.max_cross_check_gap =
                        Some(diag.max_cross_check_gap.map_or(gap, |g| g.max(gap)));
                }
                return Ok(v.value.max(0.0));
            }
            Err(e) => {
                if diag.fallback_reason.is_none() {
                    diag.fallback_reason = Some(e.to_string());
                }
            }
        }
    }
    diag.quadrature_intervals += 1;
    quadrature_mass(pop, j, rb, a, b, cfg)
}

/// Relaxed-MCS rate of terminal `j`: each RB carries the efficiency of its own SINR.
pub fn relaxed_mcs_rate(
    pop: &CellPopulation,
    j: usize,
    table: &McsTable,
    cfg: &AnalyticConfig,
) -> Result<TerminalRate> {
    let mut diagnostics = EvalDiagnostics::default();
    let mut per_slot = 0.0;
    for (rb, count) in pop.rb_classes() {
        let m = IntervalMasses::compute(pop, j, rb, table, cfg)?;
        diagnostics.merge(&m.diagnostics);
        per_slot += count as f64 * m.expected_efficiency(table);
    }
    Ok(TerminalRate {
        rate: rb_bit_rate(pop.frame(), table) * per_slot,
        diagnostics,
    })
}

/// [`relaxed_mcs_rate`] for every terminal, evaluated in parallel.
pub fn relaxed_mcs_throughput(
    pop: &CellPopulation,
    table: &McsTable,
    cfg: &AnalyticConfig,
) -> Result<Vec<TerminalRate>> {
    (0..pop.terminals())
        .into_par_iter()
        .map(|j| relaxed_mcs_rate(pop, j, table, cfg))
        .collect()
}

/// `Σ_m c_m [S_m^n - S_{m+1}^n]` where `S` is the scheduled survival at the thresholds.
fn min_efficiency(table: &McsTable, survival: &[f64], n: i32) -> f64 {
    table
        .entries()
        .iter()
        .enumerate()
        .map(|(m, e)| e.efficiency * (survival[m].powi(n) - survival[m + 1].powi(n)))
        .sum()
}

/// Scheduled-SINR survival at `z_1..z_M` and `∞` from the interval masses.
fn scheduled_survival(masses: &[f64]) -> (f64, Vec<f64>) {
    let p: f64 = masses.iter().sum();
    let mut tail = 0.0;
    let mut survival = vec![0.0; masses.len()];
    for k in (1..masses.len()).rev() {
        tail += masses[k];
        survival[k - 1] = if p > 0.0 { (tail / p).min(1.0) } else { 0.0 };
    }
    (p, survival)
}

fn homogeneous_check(pop: &CellPopulation) -> Result<()> {
    if pop.has_homogeneous_rbs() {
        Ok(())
    } else {
        Err(Error::HeterogeneousRbs)
    }
}

/// Unique-MCS rate of terminal `j`: all RBs won in a slot share the MCS of
/// the smallest SINR among them.
///
/// Each RB is won independently with probability `P`, so `n` RBs are won with
/// binomial probability, and the minimum of `n` scheduled SINRs has survival
/// `S(z)^n`. The interval masses come from quadrature.
pub fn unique_mcs_rate(
    pop: &CellPopulation,
    j: usize,
    table: &McsTable,
    cfg: &AnalyticConfig,
) -> Result<TerminalRate> {
    homogeneous_check(pop)?;
    let m = IntervalMasses::by_quadrature(pop, j, 0, table, cfg)?;
    let (p, survival) = scheduled_survival(&m.masses);
    let n_rb = pop.rbs() as u64;
    let mut per_slot = 0.0;
    if p > 0.0 {
        for n in 1..=n_rb {
            let weight = binomial_pmf(n_rb, n, p);
            if weight == 0.0 {
                continue;
            }
            per_slot += n as f64 * weight * min_efficiency(table, &survival, n as i32);
        }
    }
    Ok(TerminalRate {
        rate: rb_bit_rate(pop.frame(), table) * per_slot,
        diagnostics: m.diagnostics,
    })
}

/// Exact double-double terms leave about `1e-32 × condition` of error.
const EXPANSION_CONDITION_LIMIT: f64 = 1e16;

/// `1 - (1-F)^n` as `Σ_k C(n-1,k)(-1)^k n/(k+1) F^{k+1}`, every term and the
/// sum carried in double-double.
pub(crate) fn min_cdf_expansion(f: f64, n: u64) -> Result<f64> {
    let fd = DoubleDouble::from_f64(f);
    let nd = DoubleDouble::from_f64(n as f64);
    let mut acc = ExtendedAccumulator::default();
    let mut binom = DoubleDouble::from_f64(1.0);
    let mut power = fd;
    for k in 0..n {
        let term = binom
            .mul(nd)
            .mul(power)
            .div(DoubleDouble::from_f64((k + 1) as f64));
        let term = if k % 2 == 0 { term } else { term.neg() };
        acc.push(term.hi);
        acc.push(term.lo);
        binom = binom
            .mul(DoubleDouble::from_f64((n - 1 - k) as f64))
            .div(DoubleDouble::from_f64((k + 1) as f64));
        power = power.mul(fd);
    }
    let s = acc.finish();
    if s.condition > EXPANSION_CONDITION_LIMIT {
        return Err(Error::IllConditioned {
            condition: s.condition,
        });
    }
    Ok(s.value)
}

/// Unique-MCS rate through the closed-form primitive and the binomial
/// expansion of the minimum's law.
///
/// Fails with [`Error::IllConditioned`] when the alternating expansion loses
/// too many digits, which happens for large `N` and high scheduled CDF values.
pub fn unique_mcs_rate_closed_form(
    pop: &CellPopulation,
    j: usize,
    table: &McsTable,
    cfg: &AnalyticConfig,
) -> Result<TerminalRate> {
    homogeneous_check(pop)?;
    let m = IntervalMasses::compute(pop, j, 0, table, cfg)?;
    let p = m.total();
    let mut cdf = Vec::with_capacity(table.len() + 1);
    let mut acc = m.masses[0];
    for mass in &m.masses[1..] {
        cdf.push((acc / p).min(1.0));
        acc += mass;
    }
    cdf.push(1.0);
    let n_rb = pop.rbs() as u64;
    let mut terms = Vec::new();
    if p > 0.0 {
        for n in 1..=n_rb {
            let weight = binomial_pmf(n_rb, n, p);
            if weight == 0.0 {
                continue;
            }
            let g = cdf
                .iter()
                .map(|&f| min_cdf_expansion(f, n))
                .collect::<Result<Vec<_>>>()?;
            for (i, e) in table.entries().iter().enumerate() {
                terms.push(n as f64 * weight * e.efficiency * (g[i + 1] - g[i]));
            }
        }
    }
    Ok(TerminalRate {
        rate: rb_bit_rate(pop.frame(), table) * extended_sum(terms).value,
        diagnostics: m.diagnostics,
    })
}

/// [`unique_mcs_rate`] for every terminal.
pub fn unique_mcs_throughput(
    pop: &CellPopulation,
    table: &McsTable,
    cfg: &AnalyticConfig,
) -> Result<Vec<TerminalRate>> {
    homogeneous_check(pop)?;
    (0..pop.terminals())
        .into_par_iter()
        .map(|j| unique_mcs_rate(pop, j, table, cfg))
        .collect()
}

/// Law of terminal `j`'s SINR on RB `rb` given that it is scheduled there.
#[derive(Debug, Clone)]
pub struct ScheduledSinr<'a> {
    pop: &'a CellPopulation,
    j: usize,
    rb: usize,
    probability: f64,
    terms: Option<AntiderivativeTerms>,
    at_zero: f64,
    cfg: AnalyticConfig,
}

impl<'a> ScheduledSinr<'a> {
    pub fn new(pop: &'a CellPopulation, j: usize, rb: usize, cfg: &AnalyticConfig) -> Result<Self> {
        let probability = scheduling_probability(j, pop, rb, cfg)?;
        let terms = if cfg.quadrature_only {
            None
        } else {
            build_antiderivative(j, pop, rb, cfg).ok()
        };
        let at_zero = match &terms {
            Some(t) => t.eval(0.0).map(|v| v.value).unwrap_or(f64::NAN),
            None => f64::NAN,
        };
        Ok(Self {
            pop,
            j,
            rb,
            probability,
            terms,
            at_zero,
            cfg: *cfg,
        })
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        check_sinr(z)?;
        if self.probability == 0.0 {
            return Ok(0.0);
        }
        Ok(joint_density(self.pop, self.j, self.rb, z) / self.probability)
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        check_sinr(z)?;
        if self.probability == 0.0 {
            return Ok(0.0);
        }
        if z == f64::INFINITY {
            return Ok(1.0);
        }
        let mass = match &self.terms {
            Some(t) if self.at_zero.is_finite() => match t.eval(z) {
                Ok(v) => v.value - self.at_zero,
                Err(_) => quadrature_mass(self.pop, self.j, self.rb, 0.0, z, &self.cfg)?,
            },
            _ => quadrature_mass(self.pop, self.j, self.rb, 0.0, z, &self.cfg)?,
        };
        Ok((mass / self.probability).clamp(0.0, 1.0))
    }
}

fn check_sinr(z: f64) -> Result<()> {
    if z.is_nan() || z < 0.0 {
        Err(Error::Domain {
            what: "SINR",
            value: z,
            expected: ">= 0",
        })
    } else {
        Ok(())
    }
}

pub fn scheduled_sinr_pdf(
    j: usize,
    pop: &CellPopulation,
    rb: usize,
    z: f64,
    cfg: &AnalyticConfig,
) -> Result<f64> {
    ScheduledSinr::new(pop, j, rb, cfg)?.pdf(z)
}

pub fn scheduled_sinr_cdf(
    j: usize,
    pop: &CellPopulation,
    rb: usize,
    z: f64,
    cfg: &AnalyticConfig,
) -> Result<f64> {
    ScheduledSinr::new(pop, j, rb, cfg)?.cdf(z)
}
