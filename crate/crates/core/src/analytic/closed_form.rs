//! Closed-form primitive of `Π_{g≠j} F_g(r_g z) · f_j(z)`, `r_g = E_g/E_j`.
//!
//! Writing each CDF as `1 - R_g(z)·e^{-ĉ0_g z}` and expanding the product
//! gives one term per subset `S` of the other terminals, with sign
//! `(-1)^{|S|}`. The rational parts `R_g` of a subset merge into a single
//! partial-fraction sum over the poles `ĉ = c_{i,g}/r_g`, and the exponents
//! add up to `D = c0_j + Σ_{g∈S} ĉ0_g`. Multiplying by the own density
//! `Σ_t U_t (1/(c_t+z)² + c0/(c_t+z)) e^{-c0 z}` and splitting
//! `1/((b+z)(c+z)²)` with `A = 1/(b-c)` leaves three elementary integrals:
//!
//! ```text
//! ∫ e^{-Dz}/(a+z)  dz = -e^{Da}·E1(D(a+z))
//! ∫ e^{-Dz}/(a+z)² dz = e^{-Dz}/(a+z) · (x·e^x·E1(x) - 1),   x = D(a+z)
//! ∫ e^{-Dz}        dz = -e^{-Dz}/D
//! ```
//!
//! The subset with `S = ∅` integrates to `F_j` itself.

use crate::error::{Error, Result};
use crate::numerics::{
    exp_e1_scaled, exp_e1_scaled_xm1, CompensatedSum, ExtendedAccumulator, NeumaierAccumulator,
};
use crate::sinr::{partial_fraction_weights, DistributionForm, SinrDistribution};

use super::{AnalyticConfig, CellPopulation};

/// Relative gap below which two merged poles count as coincident.
const POLE_COINCIDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
struct SubsetTerm {
    sign: f64,
    d: f64,
    poles: Vec<f64>,
    weights: Vec<f64>,
}

/// The expanded primitive for one terminal on one RB.
#[derive(Debug, Clone)]
pub struct AntiderivativeTerms {
    own: SinrDistribution,
    subsets: Vec<SubsetTerm>,
    terms: u128,
    extended_above: f64,
    fallback_above: f64,
}

/// A closed-form value with the condition estimate of the sum that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormValue {
    pub value: f64,
    pub condition: f64,
    pub extended: bool,
}

fn require_decomposed(law: &SinrDistribution, who: &str) -> Result<()> {
    match law.form() {
        DistributionForm::ProductOnly => Err(Error::DegenerateRoots(format!(
            "{who} has no partial-fraction form"
        ))),
        _ => Ok(()),
    }
}

/// Upper bound on the number of `(subset, pole, own pole)` terms.
fn term_bound(other_pole_counts: &[usize], own_poles: usize) -> u128 {
    let m = other_pole_counts.len() as u32;
    if m >= 100 {
        return u128::MAX;
    }
    let total: u128 = other_pole_counts.iter().map(|&c| c as u128).sum();
    let subsets = 1u128 << m;
    let pole_terms = (subsets / 2).saturating_mul(total).saturating_add(subsets);
    pole_terms.saturating_mul(own_poles.max(1) as u128)
}

/// Expands the primitive for terminal `j` on RB `rb`.
///
/// Fails with [`Error::DegenerateRoots`] when a law has no partial fractions
/// or two merged poles coincide, and with [`Error::Complexity`] when the
/// expansion would exceed `cfg.max_terms`.
pub fn build_antiderivative(
    j: usize,
    pop: &CellPopulation,
    rb: usize,
    cfg: &AnalyticConfig,
) -> Result<AntiderivativeTerms> {
    pop.check_index(j, rb)?;
    let own = pop.law(j, rb);
    require_decomposed(own, "the terminal's own law")?;
    let e_j = own.mean();

    let mut others: Vec<(Vec<f64>, f64)> = Vec::with_capacity(pop.terminals() - 1);
    for g in (0..pop.terminals()).filter(|&g| g != j) {
        let law = pop.law(g, rb);
        require_decomposed(law, "an opponent's law")?;
        let r = law.mean() / e_j;
        let poles = law.ratios().iter().map(|&c| c / r).collect();
        others.push((poles, law.c0() * r));
    }

    let counts: Vec<usize> = others.iter().map(|(p, _)| p.len()).collect();
    let terms = term_bound(&counts, own.ratios().len());
    if terms > cfg.max_terms {
        return Err(Error::Complexity {
            terms,
            cap: cfg.max_terms,
        });
    }

    let own_poles = own.ratios();
    let mut subsets = Vec::new();
    for mask in 1u64..(1u64 << others.len()) {
        let mut poles = Vec::new();
        let mut d = own.c0();
        for (g, (p, c0_hat)) in others.iter().enumerate() {
            if mask & (1 << g) != 0 {
                poles.extend_from_slice(p);
                d += c0_hat;
            }
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain {
                what: "subset exponent D",
                value: d,
                expected: "finite and > 0",
            });
        }
        poles.sort_by(f64::total_cmp);
        for w in poles.windows(2) {
            if w[1] - w[0] <= POLE_COINCIDENCE_TOL * w[1] {
                return Err(Error::DegenerateRoots(format!(
                    "merged opponent poles {} and {} coincide",
                    w[0], w[1]
                )));
            }
        }
        for &b in &poles {
            for &c in own_poles {
                if (b - c).abs() <= POLE_COINCIDENCE_TOL * b.max(c) {
                    return Err(Error::DegenerateRoots(format!(
                        "opponent pole {b} coincides with own pole {c}"
                    )));
                }
            }
        }
        let weights = partial_fraction_weights(&poles);
        subsets.push(SubsetTerm {
            sign: if mask.count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            },
            d,
            poles,
            weights,
        });
    }

    Ok(AntiderivativeTerms {
        own: own.clone(),
        subsets,
        terms,
        extended_above: cfg.extended_precision_above,
        fallback_above: cfg.fallback_above,
    })
}

/// Primitive evaluated at `z`, with the constant fixed so that it tends to 1.
pub fn eval_antiderivative(terms: &AntiderivativeTerms, z: f64) -> Result<ClosedFormValue> {
    terms.eval(z)
}

#[derive(Clone, Copy)]
enum Span {
    At(f64),
    Between(f64, f64),
}

impl Span {
    fn apply(self, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        match self {
            Span::At(z) => f(z),
            Span::Between(a, b) => Ok(f(b)? - f(a)?),
        }
    }
}

fn pole_primitive(a: f64, d: f64, z: f64) -> Result<f64> {
    if z == f64::INFINITY {
        return Ok(0.0);
    }
    let decay = (-d * z).exp();
    if decay == 0.0 {
        return Ok(0.0);
    }
    Ok(-decay * exp_e1_scaled(d * (a + z))?)
}

fn double_pole_primitive(a: f64, d: f64, z: f64) -> Result<f64> {
    if z == f64::INFINITY {
        return Ok(0.0);
    }
    let decay = (-d * z).exp();
    if decay == 0.0 {
        return Ok(0.0);
    }
    Ok(decay / (a + z) * exp_e1_scaled_xm1(d * (a + z))?)
}

fn exp_primitive(d: f64, z: f64) -> f64 {
    if z == f64::INFINITY {
        0.0
    } else {
        -(-d * z).exp() / d
    }
}

impl AntiderivativeTerms {
    /// Number of `(subset, pole, own pole)` combinations, as bounded before expansion.
    pub fn term_count(&self) -> u128 {
        self.terms
    }

    pub fn subset_count(&self) -> usize {
        self.subsets.len()
    }

    pub fn eval(&self, z: f64) -> Result<ClosedFormValue> {
        check_point(z)?;
        self.sum(Span::At(z))
    }

    /// `∫_{a}^{b}` of the joint density; `b` may be `+∞`.
    pub fn definite(&self, a: f64, b: f64) -> Result<ClosedFormValue> {
        check_point(a)?;
        if b.is_nan() || b < a {
            return Err(Error::Domain {
                what: "upper limit",
                value: b,
                expected: ">= lower limit",
            });
        }
        self.sum(Span::Between(a, b))
    }

    fn sum(&self, span: Span) -> Result<ClosedFormValue> {
        let mut fast = NeumaierAccumulator::default();
        self.visit(span, |t| fast.push(t))?;
        let first = fast.finish();
        let (result, extended) = if first.condition > self.extended_above {
            let mut slow = ExtendedAccumulator::default();
            self.visit(span, |t| slow.push(t))?;
            (slow.finish(), true)
        } else {
            (first, false)
        };
        let CompensatedSum { value, condition } = result;
        if condition.is_nan() || condition > self.fallback_above {
            return Err(Error::IllConditioned { condition });
        }
        Ok(ClosedFormValue {
            value,
            condition,
            extended,
        })
    }

    fn visit(&self, span: Span, mut emit: impl FnMut(f64)) -> Result<()> {
        let own = &self.own;
        emit(match span {
            Span::At(z) => own.cdf_at(z),
            Span::Between(a, b) => own.ccdf_at(a) - own.ccdf_at(b),
        });
        let c0 = own.c0();
        let own_poles = own.ratios();
        let own_w = own.weights();
        let mut own_p1 = vec![0.0; own_poles.len()];
        let mut own_p2 = vec![0.0; own_poles.len()];

        for s in &self.subsets {
            let d = s.d;
            for (t, &c) in own_poles.iter().enumerate() {
                own_p1[t] = span.apply(|z| pole_primitive(c, d, z))?;
                own_p2[t] = span.apply(|z| double_pole_primitive(c, d, z))?;
            }
            if s.poles.is_empty() {
                if own_poles.is_empty() {
                    emit(s.sign * c0 * span.apply(|z| Ok(exp_primitive(d, z)))?);
                } else {
                    for (t, &u) in own_w.iter().enumerate() {
                        emit(s.sign * u * own_p2[t]);
                        emit(s.sign * u * c0 * own_p1[t]);
                    }
                }
                continue;
            }
            for (&b, &w) in s.poles.iter().zip(&s.weights) {
                let pb = span.apply(|z| pole_primitive(b, d, z))?;
                if own_poles.is_empty() {
                    emit(s.sign * w * c0 * pb);
                    continue;
                }
                for (t, (&c, &u)) in own_poles.iter().zip(own_w).enumerate() {
                    let a = 1.0 / (b - c);
                    let k = s.sign * w * u;
                    let single = a * a - c0 * a;
                    emit(k * single * pb);
                    emit(-k * single * own_p1[t]);
                    emit(k * a * own_p2[t]);
                }
            }
        }
        Ok(())
    }
}

fn check_point(z: f64) -> Result<()> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::joint_density;
    use crate::frame::Frame;
    use crate::numerics::{integrate, QuadratureConfig};

    fn law(ratios: &[f64], c0: f64) -> SinrDistribution {
        if ratios.is_empty() {
            SinrDistribution::exponential_rate(c0)
        } else {
            SinrDistribution::from_ratios(ratios.to_vec(), c0).unwrap()
        }
    }

    fn pop(laws: Vec<SinrDistribution>) -> CellPopulation {
        CellPopulation::uniform(laws, Frame::lte(1)).unwrap()
    }

    fn quad(p: &CellPopulation, j: usize, a: f64, b: f64) -> f64 {
        let cfg = QuadratureConfig::oracle().with_tail_scale(p.mean(j, 0).max(a));
        integrate(|z| joint_density(p, j, 0, z), a, b, &cfg).unwrap()
    }

    #[test]
    fn single_terminal_primitive_is_the_cdf() {
        let p = pop(vec![law(&[2.0, 5.0], 0.1)]);
        let t = build_antiderivative(0, &p, 0, &AnalyticConfig::default()).unwrap();
        assert_eq!(t.subset_count(), 0);
        assert_eq!(t.eval(0.0).unwrap().value, 0.0);
        for z in [0.1, 1.0, 7.0] {
            assert!((t.eval(z).unwrap().value - p.law(0, 0).cdf_at(z)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_terminals_one_interferer_each() {
        let p = pop(vec![law(&[3.0], 0.2), law(&[0.7], 0.05)]);
        for j in 0..2 {
            let t = build_antiderivative(j, &p, 0, &AnalyticConfig::default()).unwrap();
            assert_eq!(t.subset_count(), 1);
            let at0 = t.eval(0.0).unwrap().value;
            for z in [0.05, 0.5, 2.0, 10.0, 80.0] {
                let closed = t.eval(z).unwrap().value - at0;
                let q = quad(&p, j, 0.0, z);
                assert!((closed - q).abs() < 1e-8, "j={j} z={z}: {closed} vs {q}");
            }
        }
    }

    #[test]
    fn exponential_opponents_and_own_law() {
        let laws = vec![law(&[], 0.5), law(&[1.5, 4.0], 0.3), law(&[], 2.0)];
        let p = pop(laws);
        for j in 0..3 {
            let t = build_antiderivative(j, &p, 0, &AnalyticConfig::default()).unwrap();
            for (a, b) in [(0.0, 0.3), (0.3, 2.0), (2.0, f64::INFINITY)] {
                let closed = t.definite(a, b).unwrap().value;
                let q = quad(&p, j, a, b);
                assert!(
                    (closed - q).abs() <= 1e-9 * q.abs().max(1e-6),
                    "j={j} [{a},{b}]"
                );
            }
        }
    }

    #[test]
    fn symmetric_terminals_are_degenerate() {
        let l = law(&[2.0], 0.1);
        let p = pop(vec![l.clone(), l]);
        assert!(matches!(
            build_antiderivative(0, &p, 0, &AnalyticConfig::default()),
            Err(Error::DegenerateRoots(_))
        ));
    }

    #[test]
    fn term_cap_is_enforced() {
        let laws: Vec<_> = (0..12)
            .map(|g| {
                law(
                    &[1.0 + g as f64 * 0.37, 2.0 + g as f64 * 0.11],
                    0.1 + 0.01 * g as f64,
                )
            })
            .collect();
        let p = pop(laws);
        let cfg = AnalyticConfig {
            max_terms: 1000,
            ..AnalyticConfig::default()
        };
        assert!(matches!(
            build_antiderivative(0, &p, 0, &cfg),
            Err(Error::Complexity { .. })
        ));
    }

    #[test]
    fn total_mass_is_the_scheduling_probability() {
        let p = pop(vec![
            law(&[1.3, 6.0], 0.2),
            law(&[0.4], 0.1),
            law(&[2.2, 9.0, 0.8], 0.05),
        ]);
        let mut total = 0.0;
        for j in 0..3 {
            let t = build_antiderivative(j, &p, 0, &AnalyticConfig::default()).unwrap();
            let mass = t.definite(0.0, f64::INFINITY).unwrap().value;
            let direct = 1.0 - t.eval(0.0).unwrap().value;
            assert!((mass - direct).abs() < 1e-12);
            total += mass;
        }
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }
}
