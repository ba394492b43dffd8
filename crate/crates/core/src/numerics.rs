//! Special functions, adaptive quadrature and compensated summation.
//!
//! Every closed form in the crate is checked against [`integrate`], so this
//! module carries no dependency on the analytic code.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Arguments at or below this use the power series, above it the continued fraction.
const E1_SERIES_LIMIT: f64 = 1.0;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_e1_domain(x)?;
    if x <= E1_SERIES_LIMIT {
        Ok(e1_series(x))
    } else {
        Ok(e1_continued_fraction_scaled(x) * (-x).exp())
    }
}

/// `e^x · E1(x)`, finite for all `x > 0` even where `e^x` alone overflows.
pub fn exp_e1_scaled(x: f64) -> Result<f64> {
    check_e1_domain(x)?;
    if x <= E1_SERIES_LIMIT {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_continued_fraction_scaled(x))
    }
}

/// `x·e^x·E1(x) - 1`, without the cancellation of the direct form at large `x`.
pub fn exp_e1_scaled_xm1(x: f64) -> Result<f64> {
    check_e1_domain(x)?;
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x <= E1_SERIES_LIMIT {
        return Ok(x * x.exp() * e1_series(x) - 1.0);
    }
    // e^x E1(x) = 1/(x + 1 - T) with T the continued fraction from its second
    // level on, so x e^x E1(x) - 1 = (T - 1)/(x + 1 - T) with no cancellation.
    let t = lentz_tail(x, 2);
    Ok((t - 1.0) / (x + 1.0 - t))
}

/// `1/(b_k + a_k/(b_{k+1} + a_{k+1}/(…)))` with `b_i = x + 2i - 1`, `a_i = -i²`.
fn lentz_tail(x: f64, first: u64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + (2 * first - 1) as f64;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in first..first + 100_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `Ei(-x) = -E1(x)`.
pub fn exp_integral_ei_neg(x: f64) -> Result<f64> {
    exp_integral_e1(x).map(|v| -v)
}

fn check_e1_domain(x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else if x == f64::INFINITY {
        // E1 and its scaled form both vanish at infinity; callers rely on that.
        Ok(())
    } else {
        Err(Error::Domain {
            what: "E1 argument",
            value: x,
            expected: "> 0",
        })
    }
}

/// Power series `-γ - ln x - Σ_{k≥1} (-x)^k / (k·k!)`. Accurate for `x ≲ 2`.
pub fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Modified-Lentz continued fraction for `e^x · E1(x)`. Converges for every
/// `x > 0`; slowly below 1.
pub fn e1_continued_fraction_scaled(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    lentz_tail(x, 1)
}

/// How an infinite upper limit is mapped onto a finite interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailTransform {
    /// `z = a - s·ln(u)`, `u ∈ (0, 1]`. Suits integrands with exponential decay.
    ExpSubstitution,
    /// `z = a + s·t/(1-t)`, `t ∈ [0, 1)`. Tolerates algebraic tails such as `1/z²`.
    Rational,
    /// Integrate `[a, z_max]` and drop the remainder.
    TruncateAt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub infinite_tail_transform: TailTransform,
    /// Length scale `s` of the tail transform.
    pub tail_scale: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            infinite_tail_transform: TailTransform::Rational,
            tail_scale: 1.0,
        }
    }
}

impl QuadratureConfig {
    /// Tight tolerances for use as a reference against closed forms.
    pub fn oracle() -> Self {
        Self {
            abs_tol: 1e-16,
            rel_tol: 1e-11,
            max_subdivisions: 20_000,
            ..Self::default()
        }
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_tail_scale(mut self, scale: f64) -> Self {
        self.tail_scale = scale;
        self
    }

    pub fn with_tail(mut self, transform: TailTransform) -> Self {
        self.infinite_tail_transform = transform;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Validation(
                "quadrature tolerances must be > 0".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Validation(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        if !(self.tail_scale.is_finite() && self.tail_scale > 0.0) {
            return Err(Error::Validation(
                "tail_scale must be finite and > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Result of an adaptive quadrature run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (1.0_f64).min((200.0 * err / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadEstimate> {
    let (v0, e0) = kronrod15(f, a, b);
    let mut evaluations = 15;
    if !v0.is_finite() {
        return Err(Error::Convergence {
            estimate: v0,
            error_bound: f64::INFINITY,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v0,
        error: e0,
    });
    let mut total = v0;
    let mut total_err = e0;
    // Segments too narrow to split further; their error stays in the budget.
    let mut frozen_err = 0.0;
    let mut frozen_value = 0.0;
    let mut subdivisions = 1;
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::Convergence {
                estimate: total,
                error_bound: total_err,
            });
        }
        let Some(seg) = heap.pop() else {
            return Err(Error::Convergence {
                estimate: total,
                error_bound: total_err,
            });
        };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b || (seg.b - seg.a) < 1e-14 * mid.abs().max(1e-300) {
            frozen_err += seg.error;
            frozen_value += seg.value;
            if heap.is_empty() {
                return Err(Error::Convergence {
                    estimate: total,
                    error_bound: total_err,
                });
            }
            continue;
        }
        let (v1, e1) = kronrod15(f, seg.a, mid);
        let (v2, e2) = kronrod15(f, mid, seg.b);
        evaluations += 30;
        subdivisions += 1;
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Convergence {
                estimate: total,
                error_bound: f64::INFINITY,
            });
        }
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        // Re-summing avoids drift from repeated incremental updates.
        total = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
        total_err = frozen_err + heap.iter().map(|s| s.error).sum::<f64>();
    }
    Ok(QuadEstimate {
        value: total,
        abs_error: total_err,
        evaluations,
    })
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`; `b` may be `+∞`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_detailed(f, a, b, cfg).map(|q| q.value)
}

pub fn integrate_detailed<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadEstimate> {
    cfg.validate()?;
    if !a.is_finite() {
        return Err(Error::Domain {
            what: "lower integration limit",
            value: a,
            expected: "finite",
        });
    }
    if b.is_nan() || b < a {
        return Err(Error::Domain {
            what: "upper integration limit",
            value: b,
            expected: ">= lower limit",
        });
    }
    if b == a {
        return Ok(QuadEstimate {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    if b.is_finite() {
        return adaptive(&f, a, b, cfg);
    }
    let s = cfg.tail_scale;
    match cfg.infinite_tail_transform {
        TailTransform::Rational => {
            let g = |t: f64| {
                let one_minus = 1.0 - t;
                if one_minus <= 0.0 {
                    return 0.0;
                }
                let z = a + s * t / one_minus;
                if !z.is_finite() {
                    return 0.0;
                }
                let v = f(z) * s / (one_minus * one_minus);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            adaptive(&g, 0.0, 1.0, cfg)
        }
        TailTransform::ExpSubstitution => {
            let g = |u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let z = a - s * u.ln();
                let v = f(z) * s / u;
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            adaptive(&g, 0.0, 1.0, cfg)
        }
        TailTransform::TruncateAt(z_max) => {
            if z_max <= a {
                return Ok(QuadEstimate {
                    value: 0.0,
                    abs_error: 0.0,
                    evaluations: 0,
                });
            }
            adaptive(&f, a, z_max, cfg)
        }
    }
}

/// A sum together with its condition estimate `Σ|t| / |Σt|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatedSum {
    pub value: f64,
    pub condition: f64,
}

/// Neumaier-compensated summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> CompensatedSum {
    let mut acc = NeumaierAccumulator::default();
    terms.into_iter().for_each(|t| acc.push(t));
    acc.finish()
}

/// Streaming form of [`compensated_sum`].
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierAccumulator {
    sum: f64,
    comp: f64,
    abs_sum: f64,
    any: bool,
}

impl NeumaierAccumulator {
    #[inline]
    pub fn push(&mut self, t: f64) {
        self.any = true;
        self.abs_sum += t.abs();
        let s = self.sum + t;
        if self.sum.abs() >= t.abs() {
            self.comp += (self.sum - s) + t;
        } else {
            self.comp += (t - s) + self.sum;
        }
        self.sum = s;
    }

    pub fn finish(self) -> CompensatedSum {
        let value = self.sum + self.comp;
        CompensatedSum {
            value,
            condition: condition_estimate(self.any, self.abs_sum, value),
        }
    }
}

/// Streaming form of [`extended_sum`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtendedAccumulator {
    acc: DoubleDouble,
    abs_sum: f64,
    any: bool,
}

impl ExtendedAccumulator {
    #[inline]
    pub fn push(&mut self, t: f64) {
        self.any = true;
        self.abs_sum += t.abs();
        self.acc = self.acc.add_f64(t);
    }

    pub fn finish(self) -> CompensatedSum {
        let value = self.acc.to_f64();
        CompensatedSum {
            value,
            condition: condition_estimate(self.any, self.abs_sum, value),
        }
    }
}

fn condition_estimate(any: bool, abs_sum: f64, value: f64) -> f64 {
    if !any || abs_sum == 0.0 {
        1.0
    } else if value == 0.0 {
        f64::INFINITY
    } else {
        abs_sum / value.abs()
    }
}

/// Unevaluated sum `hi + lo` carrying roughly 106 bits of significand.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[allow(clippy::should_implement_trait)]
impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Self { hi, lo }
    }

    pub fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }

    pub fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self.add(b.mul(Self::from_f64(q1)).neg());
        let q2 = r.hi / b.hi;
        let r = r.add(b.mul(Self::from_f64(q2)).neg());
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }.add_f64(q3)
    }
}

/// Summation in double-double precision, with the same condition estimate as
/// [`compensated_sum`].
pub fn extended_sum<I: IntoIterator<Item = f64>>(terms: I) -> CompensatedSum {
    let mut acc = ExtendedAccumulator::default();
    terms.into_iter().for_each(|t| acc.push(t));
    acc.finish()
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// `C(n, k)` as a float; exact while the result fits in 53 bits.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > (1u128 << 100) {
            return ln_binomial(n, k).exp();
        }
    }
    acc as f64
}

/// Binomial probability `C(n,k) p^k (1-p)^{n-k}`, exact at `p ∈ {0, 1}`.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
}

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
