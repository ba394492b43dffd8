//! The many-interferer limit, where every SINR is exponential.
//!
//! With exponential laws the normalized SINRs of all terminals are identically
//! distributed, so each terminal wins an RB with probability `1/J` and its
//! scheduled SINR has CDF `F^J`. The rates then depend only on the own mean.

use crate::error::{ensure_finite_positive, Error, Result};
use crate::frame::Frame;
use crate::mcs::McsTable;
use crate::numerics::{binomial_pmf, DoubleDouble, ExtendedAccumulator};

use super::rates::min_cdf_expansion;
use super::rb_bit_rate;

/// `F(z)^J` for `F(z) = 1 - e^{-z/mean}`, without forming `F` near 1.
fn cdf_power(z: f64, mean: f64, power: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    (power * (-(-z / mean).exp()).ln_1p()).exp()
}

fn check_terminals(terminals: usize) -> Result<()> {
    if terminals == 0 {
        Err(Error::Validation("need at least one terminal".into()))
    } else {
        Ok(())
    }
}

/// Relaxed-MCS rate of a terminal with mean SINR `mean` among `terminals` exponential users.
pub fn ultra_dense_relaxed_rate(
    mean: f64,
    terminals: usize,
    frame: &Frame,
    table: &McsTable,
) -> Result<f64> {
    ensure_finite_positive("mean SINR", mean)?;
    check_terminals(terminals)?;
    frame.validate()?;
    let jf = terminals as f64;
    let per_rb: f64 = table
        .intervals()
        .map(|(lo, hi, c)| c * (cdf_power(hi, mean, jf) - cdf_power(lo, mean, jf)))
        .sum();
    Ok(rb_bit_rate(frame, table) * frame.n_rb as f64 * per_rb / jf)
}

/// [`ultra_dense_relaxed_rate`] for each entry of `means`, with `J = means.len()`.
pub fn ultra_dense_relaxed_throughput(
    means: &[f64],
    frame: &Frame,
    table: &McsTable,
) -> Result<Vec<f64>> {
    means
        .iter()
        .map(|&m| ultra_dense_relaxed_rate(m, means.len(), frame, table))
        .collect()
}

/// Unique-MCS rate in the exponential limit.
///
/// The scheduled CDF `F^J` is fed to the binomial expansion of the minimum's
/// law. Where that alternating sum is too ill-conditioned even in
/// double-double, the identical form `1 - (1 - F^J)^n` is used instead.
pub fn ultra_dense_unique_mcs_rate(
    mean: f64,
    terminals: usize,
    frame: &Frame,
    table: &McsTable,
) -> Result<f64> {
    ensure_finite_positive("mean SINR", mean)?;
    check_terminals(terminals)?;
    frame.validate()?;
    let jf = terminals as f64;
    let p = 1.0 / jf;
    let n_rb = frame.n_rb as u64;
    let edges: Vec<f64> = table
        .thresholds()
        .map(|z| cdf_power(z, mean, jf))
        .chain(std::iter::once(1.0))
        .collect();
    let mut acc = ExtendedAccumulator::default();
    for n in 1..=n_rb {
        let weight = binomial_pmf(n_rb, n, p);
        if weight == 0.0 {
            continue;
        }
        let g: Vec<f64> = edges
            .iter()
            .map(|&f| min_cdf_expansion(f, n).unwrap_or_else(|_| 1.0 - (1.0 - f).powi(n as i32)))
            .collect();
        for (i, e) in table.entries().iter().enumerate() {
            acc.push(n as f64 * weight * e.efficiency * (g[i + 1] - g[i]));
        }
    }
    Ok(rb_bit_rate(frame, table) * acc.finish().value)
}

/// [`ultra_dense_unique_mcs_rate`] for each entry of `means`, with `J = means.len()`.
pub fn ultra_dense_unique_mcs_throughput(
    means: &[f64],
    frame: &Frame,
    table: &McsTable,
) -> Result<Vec<f64>> {
    means
        .iter()
        .map(|&m| ultra_dense_unique_mcs_rate(m, means.len(), frame, table))
        .collect()
}

/// Ratio of the mean scheduled SINR to the mean SINR for `terminals`
/// exponential users: `Σ_k C(J-1,k)(-1)^k J/(k+1)²`.
///
/// The alternating sum is carried in double-double. It equals the harmonic
/// number `H_J`, which is returned directly once the sum would lose more than
/// about 14 digits (`J` beyond roughly 90).
pub fn pfs_sinr_gain(terminals: usize) -> Result<f64> {
    check_terminals(terminals)?;
    let j = terminals as u64;
    let mut binom = DoubleDouble::from_f64(1.0);
    let mut acc = DoubleDouble::ZERO;
    let mut abs_sum = 0.0;
    for k in 0..j {
        let denom = ((k + 1) * (k + 1)) as f64;
        let term = binom
            .mul(DoubleDouble::from_f64(j as f64))
            .div(DoubleDouble::from_f64(denom));
        abs_sum += term.to_f64().abs();
        acc = if k % 2 == 0 {
            acc.add(term)
        } else {
            acc.add(term.neg())
        };
        binom = binom
            .mul(DoubleDouble::from_f64((j - 1 - k) as f64))
            .div(DoubleDouble::from_f64((k + 1) as f64));
    }
    let value = acc.to_f64();
    if abs_sum / value.abs() > 1e17 {
        return Ok(harmonic(terminals));
    }
    Ok(value)
}

pub(crate) fn harmonic(n: usize) -> f64 {
    let mut acc = ExtendedAccumulator::default();
    for k in (1..=n).rev() {
        acc.push(1.0 / k as f64);
    }
    acc.finish().value
}

/// Mean scheduled SINR in the exponential limit, `p0/(n0+η) · G(J)`, with `η`
/// the total mean interference power.
pub fn scheduled_mean_dense(p0: f64, eta: f64, n0: f64, terminals: usize) -> Result<f64> {
    ensure_finite_positive("p0", p0)?;
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::Domain {
            what: "interference power",
            value: eta,
            expected: "finite and >= 0",
        });
    }
    if !(n0.is_finite() && n0 >= 0.0 && n0 + eta > 0.0) {
        return Err(Error::Domain {
            what: "noise power",
            value: n0,
            expected: ">= 0 with n0 + eta > 0",
        });
    }
    Ok(p0 / (n0 + eta) * pfs_sinr_gain(terminals)?)
}
