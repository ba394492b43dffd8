//! Cell deployments: where the stations and terminals are, and the average
//! powers that follow from it.
//!
//! Scenarios are stored as JSON:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "noise_power": 5.7e-15,
//!   "frame": { "n_rb": 6, "n_s": 14, "n_c": 12, "t_tti": 0.001, "window": 1000 },
//!   "pathloss": { "model": "log_distance", "ref_loss_db": 15.3, "exponent": 3.76 },
//!   "base_stations": [
//!     { "id": "bs0", "position": [0.0, 0.0], "tx_power_per_rb": 0.8, "role": "serving" },
//!     { "id": "bs1", "position": [500.0, 0.0], "tx_power_per_rb": 0.8, "role": "interferer" }
//!   ],
//!   "terminals": [ { "id": "ms0", "position": [40.0, 10.0], "serving_bs": "bs0" } ]
//! }
//! ```
//!
//! With `"pathloss": { "model": "explicit", "powers": [[...], ...] }` each row
//! holds one terminal's received powers: the serving station first, then
//! every other station in file order.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::mcs::{db_to_linear, McsTable};
use crate::sinr::LinkProfile;

pub const FORMAT_VERSION: u32 = 1;

/// Distances below this are clamped before applying the pathloss law (m).
pub const MIN_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationRole {
    Serving,
    Interferer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStation {
    pub id: String,
    pub position: [f64; 2],
    /// Transmit power per resource block (W).
    pub tx_power_per_rb: f64,
    pub role: StationRole,
    /// Constant shadowing added to every link from this station (dB).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shadowing_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terminal {
    pub id: String,
    pub position: [f64; 2],
    pub serving_bs: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pathloss {
    /// `L(d) = ref_loss_db + 10·exponent·log10(d)` dB, `d` in meters.
    LogDistance { ref_loss_db: f64, exponent: f64 },
    /// Received powers per terminal (W), serving station first.
    Explicit { powers: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFrame {
    pub n_rb: usize,
    #[serde(default = "default_n_s")]
    pub n_s: u32,
    #[serde(default = "default_n_c")]
    pub n_c: u32,
    #[serde(default = "default_t_tti")]
    pub t_tti: f64,
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_n_s() -> u32 {
    14
}

fn default_n_c() -> u32 {
    12
}

fn default_t_tti() -> f64 {
    1e-3
}

fn default_window() -> usize {
    1000
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl ScenarioFrame {
    pub fn frame(&self) -> Frame {
        Frame {
            n_rb: self.n_rb,
            t_tti: self.t_tti,
            window: self.window,
        }
    }

    /// `table` with this frame's RB shape.
    pub fn shape_table(&self, table: McsTable) -> McsTable {
        table.with_rb_shape(self.n_s, self.n_c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellScenario {
    pub format_version: u32,
    /// Noise power per RB (W).
    pub noise_power: f64,
    pub frame: ScenarioFrame,
    pub pathloss: Pathloss,
    pub base_stations: Vec<BaseStation>,
    pub terminals: Vec<Terminal>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{field} must be finite and > 0, got {v}")))
    }
}

fn finite_position(field: &str, p: [f64; 2]) -> Result<()> {
    if p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{field} must be finite")))
    }
}

impl CellScenario {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(invalid(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        positive("noise_power", self.noise_power)?;
        if self.frame.n_rb == 0 {
            return Err(invalid("frame.n_rb must be at least 1"));
        }
        if self.frame.n_s == 0 || self.frame.n_c == 0 {
            return Err(invalid("frame.n_s and frame.n_c must be at least 1"));
        }
        self.frame.frame().validate()?;
        if self.base_stations.is_empty() {
            return Err(invalid("base_stations must not be empty"));
        }
        if self.terminals.is_empty() {
            return Err(invalid("terminals must not be empty"));
        }
        for (i, bs) in self.base_stations.iter().enumerate() {
            positive(
                &format!("base_stations[{i}].tx_power_per_rb"),
                bs.tx_power_per_rb,
            )?;
            finite_position(&format!("base_stations[{i}].position"), bs.position)?;
            if !bs.shadowing_db.is_finite() {
                return Err(invalid(format!(
                    "base_stations[{i}].shadowing_db must be finite"
                )));
            }
            if self.base_stations[..i].iter().any(|b| b.id == bs.id) {
                return Err(invalid(format!(
                    "base_stations[{i}].id '{}' is duplicated",
                    bs.id
                )));
            }
        }
        for (j, t) in self.terminals.iter().enumerate() {
            finite_position(&format!("terminals[{j}].position"), t.position)?;
            match self.base_stations.iter().find(|b| b.id == t.serving_bs) {
                None => {
                    return Err(invalid(format!(
                        "terminals[{j}].serving_bs '{}' is not a known base station",
                        t.serving_bs
                    )))
                }
                Some(bs) if bs.role != StationRole::Serving => {
                    return Err(invalid(format!(
                        "terminals[{j}].serving_bs '{}' has role interferer",
                        t.serving_bs
                    )))
                }
                Some(_) => {}
            }
        }
        match &self.pathloss {
            Pathloss::LogDistance {
                ref_loss_db,
                exponent,
            } => {
                if !ref_loss_db.is_finite() {
                    return Err(invalid("pathloss.ref_loss_db must be finite"));
                }
                positive("pathloss.exponent", *exponent)?;
            }
            Pathloss::Explicit { powers } => {
                if powers.len() != self.terminals.len() {
                    return Err(invalid(format!(
                        "pathloss.powers has {} rows for {} terminals",
                        powers.len(),
                        self.terminals.len()
                    )));
                }
                for (j, row) in powers.iter().enumerate() {
                    if row.len() != self.base_stations.len() {
                        return Err(invalid(format!(
                            "pathloss.powers[{j}] has {} entries, expected {}",
                            row.len(),
                            self.base_stations.len()
                        )));
                    }
                    for (i, &p) in row.iter().enumerate() {
                        positive(&format!("pathloss.powers[{j}][{i}]"), p)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn frame(&self) -> Frame {
        self.frame.frame()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

pub fn load_scenario(source: &str) -> Result<CellScenario> {
    let scn: CellScenario = serde_json::from_str(source).map_err(|e| Error::Parse {
        context: "scenario".into(),
        message: e.to_string(),
    })?;
    scn.validate()?;
    Ok(scn)
}

pub fn load_scenario_file(path: &Path) -> Result<CellScenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading {}", path.display()),
        source,
    })?;
    load_scenario(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            context: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Received power from `bs` at `position` under a log-distance law (W).
pub fn log_distance_power(
    bs: &BaseStation,
    position: [f64; 2],
    ref_loss_db: f64,
    exponent: f64,
) -> f64 {
    let d = (bs.position[0] - position[0])
        .hypot(bs.position[1] - position[1])
        .max(MIN_DISTANCE);
    bs.tx_power_per_rb * db_to_linear(-ref_loss_db - 10.0 * exponent * d.log10() + bs.shadowing_db)
}

/// One link profile per terminal: serving power, then the other stations in file order.
pub fn terminal_links(scn: &CellScenario) -> Result<Vec<LinkProfile>> {
    scn.validate()?;
    scn.terminals
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let serving = scn
                .base_stations
                .iter()
                .position(|b| b.id == t.serving_bs)
                .expect("validated");
            let powers: Vec<f64> = match &scn.pathloss {
                Pathloss::LogDistance {
                    ref_loss_db,
                    exponent,
                } => {
                    let mut row = vec![log_distance_power(
                        &scn.base_stations[serving],
                        t.position,
                        *ref_loss_db,
                        *exponent,
                    )];
                    row.extend(
                        scn.base_stations
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != serving)
                            .map(|(_, b)| {
                                log_distance_power(b, t.position, *ref_loss_db, *exponent)
                            }),
                    );
                    row
                }
                Pathloss::Explicit { powers } => powers[j].clone(),
            };
            if powers.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
                return Err(invalid(format!(
                    "terminal '{}' has a received power that underflows or is not finite",
                    t.id
                )));
            }
            LinkProfile::new(powers[0], powers[1..].to_vec(), scn.noise_power)
        })
        .collect()
}

/// Link profiles of every terminal on every RB (`|J| × N`, equal across RBs).
pub fn compute_link_profiles(scn: &CellScenario) -> Result<Vec<Vec<LinkProfile>>> {
    let n = scn.frame.n_rb;
    Ok(terminal_links(scn)?
        .into_iter()
        .map(|l| vec![l; n])
        .collect())
}

/// The same scenario with explicit powers precomputed from its geometry.
pub fn to_explicit(scn: &CellScenario) -> Result<CellScenario> {
    let links = terminal_links(scn)?;
    let mut out = scn.clone();
    out.pathloss = Pathloss::Explicit {
        powers: links
            .iter()
            .map(|l| {
                std::iter::once(l.p0)
                    .chain(l.interferer_powers.iter().copied())
                    .collect()
            })
            .collect(),
    };
    Ok(out)
}

/// Parameters of a random single-cell drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropParams {
    pub cell_radius: f64,
    pub terminals: usize,
    pub interferers: usize,
    pub interferer_ring_radius: f64,
    pub seed: u64,
    pub tx_power_per_rb: f64,
    pub noise_power: f64,
    pub ref_loss_db: f64,
    pub exponent: f64,
    pub frame: ScenarioFrame,
}

impl Default for DropParams {
    /// 250 m cell, ten terminals, six interferers on a 500 m ring,
    /// 20 W over 25 RBs per station and a 3.76 pathloss exponent.
    fn default() -> Self {
        Self {
            cell_radius: 250.0,
            terminals: 10,
            interferers: 6,
            interferer_ring_radius: 500.0,
            seed: 1,
            tx_power_per_rb: 20.0 / 25.0,
            noise_power: db_to_linear(-174.0 + 10.0 * 180e3f64.log10() + 9.0 - 30.0),
            ref_loss_db: 15.3,
            exponent: 3.76,
            frame: ScenarioFrame {
                n_rb: 6,
                n_s: default_n_s(),
                n_c: default_n_c(),
                t_tti: default_t_tti(),
                window: default_window(),
            },
        }
    }
}

/// Terminals uniform in the disk around a serving station at the origin,
/// interferers evenly spaced on a ring.
pub fn generate_drop(params: &DropParams) -> CellScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut base_stations = vec![BaseStation {
        id: "bs0".into(),
        position: [0.0, 0.0],
        tx_power_per_rb: params.tx_power_per_rb,
        role: StationRole::Serving,
        shadowing_db: 0.0,
    }];
    for k in 0..params.interferers {
        let angle = TAU * k as f64 / params.interferers as f64;
        base_stations.push(BaseStation {
            id: format!("bs{}", k + 1),
            position: [
                params.interferer_ring_radius * angle.cos(),
                params.interferer_ring_radius * angle.sin(),
            ],
            tx_power_per_rb: params.tx_power_per_rb,
            role: StationRole::Interferer,
            shadowing_db: 0.0,
        });
    }
    let terminals = (0..params.terminals)
        .map(|j| {
            let r = params.cell_radius * rng.random::<f64>().sqrt();
            let angle = TAU * rng.random::<f64>();
            Terminal {
                id: format!("ms{j}"),
                position: [r * angle.cos(), r * angle.sin()],
                serving_bs: "bs0".into(),
            }
        })
        .collect();
    CellScenario {
        format_version: FORMAT_VERSION,
        noise_power: params.noise_power,
        frame: params.frame,
        pathloss: Pathloss::LogDistance {
            ref_loss_db: params.ref_loss_db,
            exponent: params.exponent,
        },
        base_stations,
        terminals,
    }
}
