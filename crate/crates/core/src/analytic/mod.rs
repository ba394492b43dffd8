//! Expected PFS throughput from the SINR laws of a cell.
//!
//! Terminal `j` wins RB `n` when its SINR normalized by its mean beats every
//! other terminal's, so the joint density of "scheduled with SINR `z`" is
//! `Π_{g≠j} F_g(z·E_g/E_j) · f_j(z)`. Everything here integrates that density
//! over MCS intervals, either through the closed-form primitive in
//! [`closed_form`] or by adaptive quadrature.

pub mod closed_form;
mod dense;
mod rates;

pub use closed_form::{
    build_antiderivative, eval_antiderivative, AntiderivativeTerms, ClosedFormValue,
};
pub use dense::{
    pfs_sinr_gain, scheduled_mean_dense, ultra_dense_relaxed_rate, ultra_dense_relaxed_throughput,
    ultra_dense_unique_mcs_rate, ultra_dense_unique_mcs_throughput,
};
pub use rates::{
    joint_density, relaxed_mcs_rate, relaxed_mcs_throughput, scheduled_sinr_cdf,
    scheduled_sinr_pdf, scheduling_probability, unique_mcs_rate, unique_mcs_rate_closed_form,
    unique_mcs_throughput, IntervalMasses, ScheduledSinr,
};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::numerics::QuadratureConfig;
use crate::sinr::{LinkProfile, SinrDistribution};

/// SINR laws of every terminal on every RB of one cell.
#[derive(Debug, Clone)]
pub struct CellPopulation {
    laws: Vec<Vec<SinrDistribution>>,
    frame: Frame,
}

impl CellPopulation {
    /// `laws[j][n]` is terminal `j` on RB `n`; every row must have `frame.n_rb` entries.
    pub fn new(laws: Vec<Vec<SinrDistribution>>, frame: Frame) -> Result<Self> {
        frame.validate()?;
        if laws.is_empty() {
            return Err(Error::Validation(
                "a cell needs at least one terminal".into(),
            ));
        }
        for (j, row) in laws.iter().enumerate() {
            if row.len() != frame.n_rb {
                return Err(Error::Validation(format!(
                    "terminal {j} has {} RB laws, frame has {} RBs",
                    row.len(),
                    frame.n_rb
                )));
            }
            for law in row {
                if !law.mean().is_finite() {
                    return Err(Error::InfiniteMean);
                }
            }
        }
        Ok(Self { laws, frame })
    }

    /// Same law on every RB for each terminal.
    pub fn uniform(per_terminal: Vec<SinrDistribution>, frame: Frame) -> Result<Self> {
        let laws = per_terminal
            .into_iter()
            .map(|law| vec![law; frame.n_rb])
            .collect();
        Self::new(laws, frame)
    }

    /// Builds laws from per-RB link profiles, keeping the product form where
    /// the interferer powers are too close to decompose.
    pub fn from_links(links: &[Vec<LinkProfile>], frame: Frame) -> Result<Self> {
        let laws = links
            .iter()
            .map(|row| {
                row.iter()
                    .map(SinrDistribution::best_effort)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(laws, frame)
    }

    /// One link profile per terminal, repeated on every RB.
    pub fn from_terminal_links(links: &[LinkProfile], frame: Frame) -> Result<Self> {
        let laws = links
            .iter()
            .map(SinrDistribution::best_effort)
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(laws, frame)
    }

    pub fn terminals(&self) -> usize {
        self.laws.len()
    }

    pub fn rbs(&self) -> usize {
        self.frame.n_rb
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn law(&self, j: usize, rb: usize) -> &SinrDistribution {
        &self.laws[j][rb]
    }

    pub fn mean(&self, j: usize, rb: usize) -> f64 {
        self.laws[j][rb].mean()
    }

    /// True when each terminal has one law shared by all of its RBs.
    pub fn has_homogeneous_rbs(&self) -> bool {
        self.laws
            .iter()
            .all(|row| row.iter().all(|law| law == &row[0]))
    }

    /// Groups RBs whose laws agree for every terminal: `(representative, count)`.
    pub fn rb_classes(&self) -> Vec<(usize, usize)> {
        let mut classes: Vec<(usize, usize)> = Vec::new();
        for n in 0..self.rbs() {
            match classes
                .iter_mut()
                .find(|(rep, _)| self.laws.iter().all(|row| row[*rep] == row[n]))
            {
                Some(class) => class.1 += 1,
                None => classes.push((n, 1)),
            }
        }
        classes
    }

    pub(crate) fn check_index(&self, j: usize, rb: usize) -> Result<()> {
        if j >= self.terminals() {
            return Err(Error::Validation(format!(
                "terminal index {j} out of range ({} terminals)",
                self.terminals()
            )));
        }
        if rb >= self.rbs() {
            return Err(Error::Validation(format!(
                "RB index {rb} out of range ({} RBs)",
                self.rbs()
            )));
        }
        Ok(())
    }
}

/// Knobs for the closed-form path and its quadrature fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticConfig {
    pub quadrature: QuadratureConfig,
    /// Condition estimate above which sums are redone in double-double.
    pub extended_precision_above: f64,
    /// Condition estimate above which the closed form is abandoned for quadrature.
    ///
    /// The summands themselves carry a few ulps of error, so the relative
    /// error of a kept value is up to about `1e-13 × condition` whatever the
    /// accumulator; the default keeps it near `1e-7`.
    pub fallback_above: f64,
    pub max_terms: u128,
    /// Evaluate every closed-form interval by quadrature as well and record the gap.
    pub cross_check: bool,
    /// Skip the closed form entirely.
    pub quadrature_only: bool,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        Self {
            quadrature: QuadratureConfig::default().with_tolerances(1e-14, 1e-10),
            extended_precision_above: 1e5,
            fallback_above: 1e6,
            max_terms: 10_000_000,
            cross_check: false,
            quadrature_only: false,
        }
    }
}

impl AnalyticConfig {
    pub fn quadrature_only() -> Self {
        Self {
            quadrature_only: true,
            ..Self::default()
        }
    }

    pub fn with_cross_check(mut self) -> Self {
        self.cross_check = true;
        self
    }
}

/// How the interval integrals of one terminal were obtained.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalDiagnostics {
    pub closed_form_intervals: usize,
    pub extended_precision_intervals: usize,
    pub quadrature_intervals: usize,
    /// Largest condition estimate among closed-form intervals that were kept.
    pub worst_condition: f64,
    /// Why the closed form was not used, when it was skipped for some interval.
    pub fallback_reason: Option<String>,
    /// Largest relative closed-form vs quadrature gap, with cross-checking on.
    pub max_cross_check_gap: Option<f64>,
}

impl EvalDiagnostics {
    pub fn used_fallback(&self) -> bool {
        self.quadrature_intervals > 0
    }

    pub(crate) fn merge(&mut self, other: &EvalDiagnostics) {
        self.closed_form_intervals += other.closed_form_intervals;
        self.extended_precision_intervals += other.extended_precision_intervals;
        self.quadrature_intervals += other.quadrature_intervals;
        self.worst_condition = self.worst_condition.max(other.worst_condition);
        if self.fallback_reason.is_none() {
            self.fallback_reason.clone_from(&other.fallback_reason);
        }
        self.max_cross_check_gap = match (self.max_cross_check_gap, other.max_cross_check_gap) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }
}

/// Rate of one terminal in bit/s with its evaluation record.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalRate {
    pub rate: f64,
    pub diagnostics: EvalDiagnostics,
}

/// Bits per second carried by one RB at unit spectral efficiency.
pub(crate) fn rb_bit_rate(frame: &Frame, table: &crate::mcs::McsTable) -> f64 {
    table.symbols_per_rb() / frame.t_tti
}

#[cfg(test)]
mod tests;
