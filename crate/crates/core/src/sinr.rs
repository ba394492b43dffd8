//! SINR law of a Rayleigh-faded link under Rayleigh-faded interferers.
//!
//! With `X_i` unit-mean exponentials,
//! `Z = p0·X0 / (Σ p_i·X_i + N0)` has survival function
//! `P(Z > z) = Π_i 1/(1 + z/c_i) · e^{-z·c0}` with `c_i = p0/p_i` and
//! `c0 = N0/p0`. When the `c_i` are distinct the rational factor splits into
//! `Σ_i U_i/(c_i + z)`, which is what makes the throughput integrals
//! tractable in closed form.

use crate::error::{ensure_finite_positive, Error, Result};
use crate::numerics::{compensated_sum, exp_e1_scaled, integrate, QuadratureConfig};

/// Ratios closer than this (relative to the largest) are treated as coincident.
pub const ROOT_SEPARATION_TOL: f64 = 1e-9;
/// Multiplicative step used to pull coincident ratios apart.
pub const ROOT_PERTURBATION: f64 = 1e-7;
/// Largest accepted mismatch between the partial-fraction and product forms.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

/// Average received powers of one terminal on one resource block.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProfile {
    /// Serving-station power (W).
    pub p0: f64,
    /// Interfering-station powers (W).
    pub interferer_powers: Vec<f64>,
    /// Noise power (W).
    pub n0: f64,
}

impl LinkProfile {
    pub fn new(p0: f64, interferer_powers: Vec<f64>, n0: f64) -> Result<Self> {
        let link = Self {
            p0,
            interferer_powers,
            n0,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite_positive("serving power p0", self.p0)?;
        ensure_finite_positive("noise power", self.n0)?;
        for &p in &self.interferer_powers {
            ensure_finite_positive("interferer power", p)?;
        }
        Ok(())
    }

    /// Accumulated average interference `P = Σ p_i`.
    pub fn total_interference(&self) -> f64 {
        self.interferer_powers.iter().sum()
    }

    /// SINR of the average powers, `p0 / (P + N0)`.
    pub fn average_power_sinr(&self) -> f64 {
        self.p0 / (self.total_interference() + self.n0)
    }

    /// Same total interference split into `count` equal interferers.
    pub fn equal_split(&self, count: usize) -> Self {
        let total = self.total_interference();
        Self {
            p0: self.p0,
            interferer_powers: vec![total / count.max(1) as f64; count],
            n0: self.n0,
        }
    }

    /// Every power multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            p0: self.p0 * factor,
            interferer_powers: self.interferer_powers.iter().map(|p| p * factor).collect(),
            n0: self.n0 * factor,
        }
    }
}

/// How a [`SinrDistribution`] evaluates its law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionForm {
    /// Distinct ratios, partial-fraction weights available.
    Exact,
    /// Product form only; used when the ratios are too close to decompose.
    ProductOnly,
    /// Exponential law `1 - e^{-λz}` (noise-limited, or the many-interferer limit).
    ExponentialLimit { rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrDistribution {
    c: Vec<f64>,
    c0: f64,
    u: Vec<f64>,
    form: DistributionForm,
    mean: f64,
    perturbed: bool,
}

/// Decomposes `link`'s SINR law into partial fractions.
///
/// Fails with [`Error::DegenerateRoots`] when the ratios `p0/p_i` cannot be
/// separated enough for the decomposition to reproduce the product form.
pub fn build_distribution(link: &LinkProfile) -> Result<SinrDistribution> {
    link.validate()?;
    let c0 = link.n0 / link.p0;
    if link.interferer_powers.is_empty() {
        return Ok(SinrDistribution::exponential_rate(c0));
    }
    let ratios: Vec<f64> = link.interferer_powers.iter().map(|p| link.p0 / p).collect();
    SinrDistribution::from_ratios(ratios, c0)
}

/// Exponential SINR with mean `p0 / (n0 + P)`.
pub fn asymptotic_distribution(
    p0: f64,
    total_interference: f64,
    n0: f64,
) -> Result<SinrDistribution> {
    ensure_finite_positive("serving power p0", p0)?;
    ensure_finite_positive("noise power", n0)?;
    if !(total_interference.is_finite() && total_interference >= 0.0) {
        return Err(Error::Domain {
            what: "total interference",
            value: total_interference,
            expected: "finite and >= 0",
        });
    }
    Ok(SinrDistribution::exponential_rate(
        (n0 + total_interference) / p0,
    ))
}

/// Expected SINR.
pub fn mean_sinr(dist: &SinrDistribution) -> Result<f64> {
    if dist.mean.is_finite() {
        Ok(dist.mean)
    } else {
        Err(Error::InfiniteMean)
    }
}

/// Sorts the ratios and pulls apart clusters closer than [`ROOT_SEPARATION_TOL`].
fn separate_roots(mut c: Vec<f64>) -> (Vec<f64>, bool) {
    c.sort_by(f64::total_cmp);
    let scale = c.iter().copied().fold(0.0, f64::max);
    let mut perturbed = false;
    let mut start = 0;
    while start < c.len() {
        let mut end = start + 1;
        while end < c.len() && c[end] - c[end - 1] < ROOT_SEPARATION_TOL * scale {
            end += 1;
        }
        if end - start > 1 {
            perturbed = true;
            for (k, v) in c[start..end].iter_mut().enumerate() {
                // +1, -1, +2, -2, ...
                let step = (k / 2 + 1) as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                *v *= 1.0 + sign * step * ROOT_PERTURBATION;
            }
        }
        start = end;
    }
    c.sort_by(f64::total_cmp);
    (c, perturbed)
}

/// Residue weights `U_i = Π_a c_a · Π_{f≠i} (c_f - c_i)^{-1}`, so that
/// `Π_i c_i/(c_i + z) = Σ_i U_i/(c_i + z)`.
pub fn partial_fraction_weights(c: &[f64]) -> Vec<f64> {
    (0..c.len())
        .map(|i| {
            c.iter().enumerate().fold(
                c[i],
                |acc, (f, &cf)| {
                    if f == i {
                        acc
                    } else {
                        acc * cf / (cf - c[i])
                    }
                },
            )
        })
        .collect()
}

fn rational_product(c: &[f64], z: f64) -> f64 {
    c.iter().map(|&ci| ci / (ci + z)).product()
}

fn rational_partial(c: &[f64], u: &[f64], z: f64) -> f64 {
    c.iter().zip(u).map(|(&ci, &ui)| ui / (ci + z)).sum()
}

/// Checks the decomposition against the product form on a log-spaced grid.
fn decomposition_mismatch(c: &[f64], u: &[f64]) -> f64 {
    let base = c.iter().copied().fold(f64::INFINITY, f64::min);
    let mut worst: f64 = (rational_partial(c, u, 0.0) - 1.0).abs();
    for k in 0..16 {
        let z = base * 10f64.powf(-3.0 + 6.0 * k as f64 / 15.0);
        let diff = (rational_partial(c, u, z) - rational_product(c, z)).abs();
        if diff.is_nan() {
            return f64::INFINITY;
        }
        worst = worst.max(diff);
    }
    worst
}

impl SinrDistribution {
    /// Law from the ratios `c_i = p0/p_i` and `c0 = N0/p0`.
    ///
    /// `c0 = 0` is accepted (the CDF stays well defined) but the mean is then
    /// treated as infinite and [`mean_sinr`] reports it.
    pub fn from_ratios(ratios: Vec<f64>, c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::Domain {
                what: "c0",
                value: c0,
                expected: "finite and >= 0",
            });
        }
        for &ci in &ratios {
            ensure_finite_positive("ratio c_i", ci)?;
        }
        if ratios.is_empty() {
            return if c0 > 0.0 {
                Ok(Self::exponential_rate(c0))
            } else {
                Err(Error::Domain {
                    what: "c0",
                    value: c0,
                    expected: "> 0 without interferers",
                })
            };
        }
        let (c, perturbed) = separate_roots(ratios);
        let u = partial_fraction_weights(&c);
        let mismatch = decomposition_mismatch(&c, &u);
        if mismatch.is_nan() || mismatch > DECOMPOSITION_TOL {
            return Err(Error::DegenerateRoots(format!(
                "partial fractions miss the product form by {mismatch:e} (ratios {c:?})"
            )));
        }
        let mean = if c0 > 0.0 {
            let terms = c
                .iter()
                .zip(&u)
                .map(|(&ci, &ui)| exp_e1_scaled(ci * c0).map(|s| ui * s))
                .collect::<Result<Vec<_>>>()?;
            compensated_sum(terms).value
        } else {
            f64::INFINITY
        };
        Ok(Self {
            c,
            c0,
            u,
            form: DistributionForm::Exact,
            mean,
            perturbed,
        })
    }

    /// Product-form law, with no partial-fraction weights. Works for any
    /// interferer powers, including exactly equal ones.
    pub fn product_form(link: &LinkProfile) -> Result<Self> {
        link.validate()?;
        let c0 = link.n0 / link.p0;
        if link.interferer_powers.is_empty() {
            return Ok(Self::exponential_rate(c0));
        }
        let mut c: Vec<f64> = link.interferer_powers.iter().map(|p| link.p0 / p).collect();
        c.sort_by(f64::total_cmp);
        let mean = product_mean(&c, c0)?;
        Ok(Self {
            c,
            c0,
            u: Vec::new(),
            form: DistributionForm::ProductOnly,
            mean,
            perturbed: false,
        })
    }

    /// Partial-fraction law when possible, product form otherwise.
    pub fn best_effort(link: &LinkProfile) -> Result<Self> {
        match build_distribution(link) {
            Err(Error::DegenerateRoots(_)) => Self::product_form(link),
            other => other,
        }
    }

    /// Exponential law with rate `λ` (mean `1/λ`).
    pub fn exponential_rate(rate: f64) -> Self {
        Self {
            c: Vec::new(),
            c0: rate,
            u: Vec::new(),
            form: DistributionForm::ExponentialLimit { rate },
            mean: 1.0 / rate,
            perturbed: false,
        }
    }

    /// Exponential law with the given mean.
    pub fn exponential_mean(mean: f64) -> Result<Self> {
        ensure_finite_positive("mean SINR", mean)?;
        Ok(Self::exponential_rate(1.0 / mean))
    }

    pub fn form(&self) -> DistributionForm {
        self.form
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.form, DistributionForm::ExponentialLimit { .. })
    }

    /// `c_i = p0/p_i`, sorted ascending (after any root separation).
    pub fn ratios(&self) -> &[f64] {
        &self.c
    }

    /// Exponent rate of the noise factor: `N0/p0`, or `λ` for an exponential law.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Partial-fraction weights `U_i`; empty unless the form is [`DistributionForm::Exact`].
    pub fn weights(&self) -> &[f64] {
        &self.u
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Whether coincident ratios were nudged apart before decomposing.
    pub fn perturbed(&self) -> bool {
        self.perturbed
    }

    pub fn interferer_count(&self) -> usize {
        self.c.len()
    }

    /// `ln P(Z > z) = -Σ_i ln(1 + z/c_i) - c0·z`.
    #[inline]
    fn log_ccdf(&self, z: f64) -> f64 {
        -self.c.iter().map(|&ci| (z / ci).ln_1p()).sum::<f64>() - self.c0 * z
    }

    /// `P(Z > z)` without domain checks; `z = ∞` gives 0.
    ///
    /// The unchecked evaluators work from the logarithm of the product form,
    /// which keeps full relative accuracy both as `z → 0` (where `1 - ccdf`
    /// would cancel) and far in the tail (where the alternating residues of
    /// the partial-fraction sum cancel).
    #[inline]
    pub fn ccdf_at(&self, z: f64) -> f64 {
        if z == f64::INFINITY {
            return 0.0;
        }
        self.log_ccdf(z).exp()
    }

    #[inline]
    pub fn cdf_at(&self, z: f64) -> f64 {
        if z == f64::INFINITY {
            return 1.0;
        }
        -self.log_ccdf(z).exp_m1()
    }

    /// Density without domain checks.
    #[inline]
    pub fn pdf_at(&self, z: f64) -> f64 {
        if z == f64::INFINITY {
            return 0.0;
        }
        let survival = self.ccdf_at(z);
        if survival == 0.0 {
            return 0.0;
        }
        let log_slope: f64 = self.c.iter().map(|&ci| 1.0 / (ci + z)).sum::<f64>() + self.c0;
        survival * log_slope
    }

    /// CDF `1 - Σ_i U_i/(c_i+z) · e^{-z·c0}` (product form if not decomposed).
    pub fn cdf(&self, z: f64) -> Result<f64> {
        check_sinr(z)?;
        if z == f64::INFINITY {
            return Ok(1.0);
        }
        let rational = match self.form {
            DistributionForm::Exact => rational_partial(&self.c, &self.u, z),
            DistributionForm::ProductOnly => rational_product(&self.c, z),
            DistributionForm::ExponentialLimit { .. } => 1.0,
        };
        Ok(1.0 - rational * (-z * self.c0).exp())
    }

    /// CDF `1 - Π_i (1 + z/c_i)^{-1} · e^{-z·c0}`, independent of the weights.
    pub fn cdf_product(&self, z: f64) -> Result<f64> {
        check_sinr(z)?;
        if z == f64::INFINITY {
            return Ok(1.0);
        }
        Ok(1.0 - rational_product(&self.c, z) * (-z * self.c0).exp())
    }

    /// Density `Σ_i U_i (1/(c_i+z)² + c0/(c_i+z)) · e^{-z·c0}`.
    pub fn pdf(&self, z: f64) -> Result<f64> {
        check_sinr(z)?;
        if self.form != DistributionForm::Exact || z == f64::INFINITY {
            return Ok(self.pdf_at(z));
        }
        let s: f64 = self
            .c
            .iter()
            .zip(&self.u)
            .map(|(&ci, &ui)| {
                let inv = 1.0 / (ci + z);
                ui * (inv * inv + self.c0 * inv)
            })
            .sum();
        Ok(s * (-z * self.c0).exp())
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

/// `∫_0^∞ Π_i c_i/(c_i+z) · e^{-c0 z} dz` by quadrature.
fn product_mean(c: &[f64], c0: f64) -> Result<f64> {
    if c0 == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ian_mean = 1.0 / (c0 + c.iter().map(|ci| 1.0 / ci).sum::<f64>());
    let cfg = QuadratureConfig::oracle()
        .with_tolerances(1e-300, 1e-12)
        .with_tail_scale(ian_mean);
    integrate(
        |z| rational_product(c, z) * (-c0 * z).exp(),
        0.0,
        f64::INFINITY,
        &cfg,
    )
}

/// Largest `|F_a - F_b|` over a uniform grid on `[0, z_max]`.
pub fn sup_cdf_distance(
    a: &SinrDistribution,
    b: &SinrDistribution,
    z_max: f64,
    points: usize,
) -> f64 {
    (0..=points)
        .map(|k| {
            let z = z_max * k as f64 / points as f64;
            (a.cdf_at(z) - b.cdf_at(z)).abs()
        })
        .fold(0.0, f64::max)
}
