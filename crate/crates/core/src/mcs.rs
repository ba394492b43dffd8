//! SINR-to-spectral-efficiency step mapping.
//!
//! Scheme `m` is used on `[z_m, z_{m+1})`; the last scheme covers `[z_M, ∞)`
//! and anything below `z_1` is an outage with zero efficiency.

use std::path::Path;

use crate::error::{Error, Result};

/// Efficiencies of the 15 CQI levels, in bits per symbol.
pub const CQI_EFFICIENCIES: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023,
    4.5234, 5.1152, 5.5547,
];

pub const DEFAULT_N_S: u32 = 14;
pub const DEFAULT_N_C: u32 = 12;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    /// Minimum linear SINR for this scheme.
    pub threshold: f64,
    /// Bits per symbol.
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
    n_s: u32,
    n_c: u32,
}

impl McsTable {
    /// Builds a table from `(linear threshold, efficiency)` pairs.
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        Self::validated(
            entries
                .into_iter()
                .map(|(threshold, efficiency)| McsEntry {
                    threshold,
                    efficiency,
                })
                .collect(),
            |i| format!("entry {i}"),
        )
    }

    fn validated(entries: Vec<McsEntry>, name: impl Fn(usize) -> String) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Validation(format!(
                "an MCS table needs at least 2 schemes, got {}",
                entries.len()
            )));
        }
        for (i, e) in entries.iter().enumerate() {
            if !(e.threshold.is_finite() && e.threshold > 0.0) {
                return Err(Error::Validation(format!(
                    "{}: threshold must be finite and positive",
                    name(i)
                )));
            }
            if !(e.efficiency.is_finite() && e.efficiency > 0.0) {
                return Err(Error::Validation(format!(
                    "{}: efficiency must be finite and positive",
                    name(i)
                )));
            }
            if i > 0 {
                let prev = entries[i - 1];
                if e.threshold == prev.threshold {
                    return Err(Error::Validation(format!(
                        "{}: duplicate threshold",
                        name(i)
                    )));
                }
                if e.threshold < prev.threshold {
                    return Err(Error::Validation(format!(
                        "{}: thresholds must be strictly increasing",
                        name(i)
                    )));
                }
                if e.efficiency <= prev.efficiency {
                    return Err(Error::Validation(format!(
                        "{}: efficiencies must be strictly increasing",
                        name(i)
                    )));
                }
            }
        }
        Ok(Self {
            entries,
            n_s: DEFAULT_N_S,
            n_c: DEFAULT_N_C,
        })
    }

    /// The 15-level CQI efficiencies on thresholds `start_db, start_db + step_db, …`.
    pub fn cqi(start_db: f64, step_db: f64) -> Self {
        let entries = CQI_EFFICIENCIES
            .iter()
            .enumerate()
            .map(|(i, &efficiency)| McsEntry {
                threshold: db_to_linear(start_db + step_db * i as f64),
                efficiency,
            })
            .collect();
        Self::validated(entries, |i| format!("entry {i}")).expect("CQI table is valid")
    }

    /// The 15-level CQI table with 2 dB spacing starting at −6 dB.
    pub fn default_cqi() -> Self {
        Self::cqi(-6.0, 2.0)
    }

    /// Sets the resource block shape: `n_s · n_c` symbols per RB.
    pub fn with_rb_shape(mut self, n_s: u32, n_c: u32) -> Self {
        self.n_s = n_s.max(1);
        self.n_c = n_c.max(1);
        self
    }

    pub fn n_s(&self) -> u32 {
        self.n_s
    }

    pub fn n_c(&self) -> u32 {
        self.n_c
    }

    /// Symbols per resource block, the payload scale `N_S · N_C`.
    pub fn symbols_per_rb(&self) -> f64 {
        f64::from(self.n_s) * f64::from(self.n_c)
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.threshold)
    }

    pub fn min_threshold(&self) -> f64 {
        self.entries[0].threshold
    }

    pub fn max_efficiency(&self) -> f64 {
        self.entries[self.entries.len() - 1].efficiency
    }

    pub fn min_efficiency(&self) -> f64 {
        self.entries[0].efficiency
    }

    /// Index of the scheme used at SINR `z`, `None` in outage.
    pub fn scheme_index(&self, z: f64) -> Option<usize> {
        // Left-closed intervals: the first threshold strictly greater than z
        // marks the end of the active interval.
        let above = self.entries.partition_point(|e| e.threshold <= z);
        above.checked_sub(1)
    }

    /// Efficiency `c_m` at linear SINR `z`; zero below the first threshold.
    pub fn spectral_efficiency(&self, z: f64) -> Result<f64> {
        if z.is_nan() || z < 0.0 {
            return Err(Error::Domain {
                what: "SINR",
                value: z,
                expected: ">= 0",
            });
        }
        Ok(self.efficiency_at(z))
    }

    /// Unchecked variant of [`spectral_efficiency`](Self::spectral_efficiency) for hot loops.
    #[inline]
    pub fn efficiency_at(&self, z: f64) -> f64 {
        self.scheme_index(z)
            .map_or(0.0, |m| self.entries[m].efficiency)
    }

    /// Payload bits carried by one RB at SINR `z`.
    pub fn payload_bits(&self, z: f64) -> f64 {
        self.symbols_per_rb() * self.efficiency_at(z)
    }

    /// `(z_m, z_{m+1}, c_m)` for every scheme, the last upper edge being `+∞`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.entries.iter().enumerate().map(move |(m, e)| {
            let hi = self
                .entries
                .get(m + 1)
                .map_or(f64::INFINITY, |next| next.threshold);
            (e.threshold, hi, e.efficiency)
        })
    }

    /// `Σ_m c_m · mass(z_m, z_{m+1})` for a caller-supplied interval mass.
    pub fn expected_efficiency<F>(&self, mut mass: F) -> Result<f64>
    where
        F: FnMut(f64, f64) -> Result<f64>,
    {
        let mut total = 0.0;
        for (lo, hi, c) in self.intervals() {
            total += c * mass(lo, hi)?;
        }
        Ok(total)
    }
}

/// Parses the two-column `threshold_db efficiency` format; `#` starts a comment.
pub fn load_mcs_table(source: &str) -> Result<McsTable> {
    let mut entries = Vec::new();
    let mut lines = Vec::new();
    for (lineno, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split_whitespace();
        let parse = |tok: Option<&str>, what: &str| -> Result<f64> {
            let tok = tok.ok_or_else(|| Error::Parse {
                context: format!("MCS table line {}", lineno + 1),
                message: format!("missing {what} column"),
            })?;
            tok.parse::<f64>().map_err(|e| Error::Parse {
                context: format!("MCS table line {}", lineno + 1),
                message: format!("bad {what} '{tok}': {e}"),
            })
        };
        let db = parse(cols.next(), "threshold_db")?;
        let eff = parse(cols.next(), "efficiency")?;
        if cols.next().is_some() {
            return Err(Error::Parse {
                context: format!("MCS table line {}", lineno + 1),
                message: "expected exactly two columns".into(),
            });
        }
        entries.push(McsEntry {
            threshold: db_to_linear(db),
            efficiency: eff,
        });
        lines.push(lineno + 1);
    }
    McsTable::validated(entries, |i| {
        lines
            .get(i)
            .map_or_else(|| format!("row {i}"), |l| format!("line {l}"))
    })
}

pub fn load_mcs_table_file(path: &Path) -> Result<McsTable> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading MCS table {}", path.display()),
        source,
    })?;
    load_mcs_table(&text)
}
