//! Per-terminal result tables for a scenario and their CSV / text rendering.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analytic::{
    pfs_sinr_gain, relaxed_mcs_throughput, ultra_dense_relaxed_throughput, AnalyticConfig,
    CellPopulation,
};
use crate::baselines::{
    gaussian_throughput, ian_throughput, iid_priority_throughput, simple_throughput,
    unique_mcs_ian_throughput, IanSinr,
};
use crate::error::{Error, Result};
use crate::mcs::{linear_to_db, McsTable};
use crate::scenario::{compute_link_profiles, terminal_links, CellScenario};
use crate::simulator::{empirical_sinr_gain, relative_error, run_pfs, SimConfig, SimResult};
use crate::sinr::{asymptotic_distribution, sup_cdf_distance, LinkProfile, SinrDistribution};

/// Marker written in place of a value a model failed to produce.
pub const ERROR_MARKER: &str = "ERR";
/// Marker for quantities that are undefined, such as the error against a zero simulated rate.
pub const UNDEFINED_MARKER: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    ExactRelaxed,
    ExactUnique,
    UltraDense,
    Simple,
    Ian,
    Gaussian,
    IidPriority,
    UniqueIan,
}

impl Model {
    pub const ALL: [Model; 8] = [
        Model::ExactRelaxed,
        Model::ExactUnique,
        Model::UltraDense,
        Model::Simple,
        Model::Ian,
        Model::Gaussian,
        Model::IidPriority,
        Model::UniqueIan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::ExactRelaxed => "exact_relaxed",
            Model::ExactUnique => "exact_unique",
            Model::UltraDense => "ultra_dense",
            Model::Simple => "simple",
            Model::Ian => "ian",
            Model::Gaussian => "gaussian",
            Model::IidPriority => "iid_priority",
            Model::UniqueIan => "unique_ian",
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown model '{s}'")))
    }
}

/// Parses a comma-separated model list; `all` selects every model.
pub fn parse_models(list: &str) -> Result<Vec<Model>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "all" {
            return Ok(Model::ALL.to_vec());
        }
        let m: Model = name.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Rates of one model for every terminal; a failure fills every cell with its message.
fn run_model(
    model: Model,
    links: &[Vec<LinkProfile>],
    scn: &CellScenario,
    table: &McsTable,
    cfg: &AnalyticConfig,
) -> Vec<std::result::Result<f64, String>> {
    let frame = scn.frame();
    let terminals = links.len();
    let population = || CellPopulation::from_links(links, frame);
    let result: Result<Vec<std::result::Result<f64, String>>> = (|| match model {
        Model::ExactRelaxed => {
            let pop = population()?;
            Ok((0..terminals)
                .into_par_iter()
                .map(|j| {
                    crate::analytic::relaxed_mcs_rate(&pop, j, table, cfg)
                        .map(|r| r.rate)
                        .map_err(|e| e.to_string())
                })
                .collect())
        }
        Model::ExactUnique => {
            let pop = population()?;
            Ok((0..terminals)
                .into_par_iter()
                .map(|j| {
                    crate::analytic::unique_mcs_rate(&pop, j, table, cfg)
                        .map(|r| r.rate)
                        .map_err(|e| e.to_string())
                })
                .collect())
        }
        Model::UltraDense => {
            let means: Vec<f64> = links
                .iter()
                .map(|row| row[0].average_power_sinr())
                .collect();
            Ok(ultra_dense_relaxed_throughput(&means, &frame, table)?
                .into_iter()
                .map(Ok)
                .collect())
        }
        Model::Simple => ok_all(simple_throughput(
            &IanSinr::from_links(links)?,
            &frame,
            table,
        )),
        Model::Ian => ok_all(ian_throughput(&IanSinr::from_links(links)?, &frame, table)),
        Model::Gaussian => ok_all(gaussian_throughput(
            &IanSinr::from_links(links)?,
            &frame,
            table,
        )),
        Model::IidPriority => ok_all(iid_priority_throughput(&population()?, table)),
        Model::UniqueIan => ok_all(unique_mcs_ian_throughput(
            &IanSinr::from_links(links)?,
            &frame,
            table,
            cfg,
        )),
    })();
    result.unwrap_or_else(|e| vec![Err(e.to_string()); terminals])
}

fn ok_all(rates: Result<Vec<f64>>) -> Result<Vec<std::result::Result<f64, String>>> {
    Ok(rates?.into_iter().map(Ok).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub x: f64,
    pub y: f64,
    /// Mean SINR of the terminal's law in dB, `None` when it cannot be built.
    pub mean_sinr_db: Option<f64>,
    /// One entry per model of the report, in order.
    pub rates: Vec<std::result::Result<f64, String>>,
    pub simulated: Option<f64>,
    pub sinr_gain: Option<f64>,
}

impl ReportRow {
    /// Relative error of model `k` against the simulated rate, in percent.
    pub fn relative_error(&self, k: usize) -> Option<f64> {
        match (&self.rates[k], self.simulated) {
            (Ok(r), Some(s)) => relative_error(*r, s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub models: Vec<Model>,
    pub rows: Vec<ReportRow>,
    pub has_simulation: bool,
}

impl ThroughputReport {
    /// True when some model failed on some terminal.
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.rates.iter().any(|x| x.is_err()))
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["id", "x", "y", "mean_sinr_db"].map(String::from).to_vec();
        h.extend(self.models.iter().map(|m| format!("{}_bps", m.name())));
        if self.has_simulation {
            h.push("sim_bps".into());
            h.push("sim_sinr_gain".into());
            h.extend(self.models.iter().map(|m| format!("eps_{}_pct", m.name())));
        }
        h
    }

    pub fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                let mut c = vec![
                    row.id.clone(),
                    num(row.x),
                    num(row.y),
                    opt(row.mean_sinr_db),
                ];
                c.extend(row.rates.iter().map(|r| match r {
                    Ok(v) => num(*v),
                    Err(_) => ERROR_MARKER.into(),
                }));
                if self.has_simulation {
                    c.push(opt(row.simulated));
                    c.push(opt(row.sinr_gain));
                    c.extend((0..self.models.len()).map(|k| match &row.rates[k] {
                        Err(_) => ERROR_MARKER.into(),
                        Ok(_) => opt(row.relative_error(k)),
                    }));
                }
                c
            })
            .collect()
    }
}

/// Floats use 17 significant digits so the CSV re-parses to the same value.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED_MARKER.into(), num)
}

/// Evaluates `models` (and a simulation when `sim` is given) on every terminal of `scn`.
pub fn evaluate(
    scn: &CellScenario,
    table: &McsTable,
    models: &[Model],
    sim: Option<&SimConfig>,
    cfg: &AnalyticConfig,
) -> Result<ThroughputReport> {
    if models.is_empty() && sim.is_none() {
        return Err(Error::Validation(
            "request at least one model or a simulation".into(),
        ));
    }
    let table = scn.frame.shape_table(table.clone());
    let links = compute_link_profiles(scn)?;
    let per_model: Vec<Vec<_>> = models
        .par_iter()
        .map(|&m| run_model(m, &links, scn, &table, cfg))
        .collect();
    let simulated = sim
        .map(|c| run_pfs(&links, &table, &scn.frame(), c))
        .transpose()?;
    let gains = simulated.as_ref().map(empirical_sinr_gain);
    let rows = scn
        .terminals
        .iter()
        .enumerate()
        .map(|(j, t)| ReportRow {
            id: t.id.clone(),
            x: t.position[0],
            y: t.position[1],
            mean_sinr_db: SinrDistribution::best_effort(&links[j][0])
                .ok()
                .map(|d| d.mean())
                .filter(|m| m.is_finite())
                .map(linear_to_db),
            rates: per_model.iter().map(|col| col[j].clone()).collect(),
            simulated: simulated.as_ref().map(|s| s.throughput[j]),
            sinr_gain: gains.as_ref().and_then(|g| g[j]),
        })
        .collect();
    Ok(ThroughputReport {
        models: models.to_vec(),
        rows,
        has_simulation: simulated.is_some(),
    })
}

/// Per-terminal simulation table: throughput, SINR gain and scheduling share.
pub fn simulation_table(scn: &CellScenario, result: &SimResult) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["id", "x", "y", "sim_bps", "sinr_gain", "scheduling_share"]
        .map(String::from)
        .to_vec();
    let gains = empirical_sinr_gain(result);
    let rows = scn
        .terminals
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let share = result.frequency[j].iter().sum::<f64>() / result.frequency[j].len() as f64;
            vec![
                t.id.clone(),
                num(t.position[0]),
                num(t.position[1]),
                num(result.throughput[j]),
                opt(gains[j]),
                num(share),
            ]
        })
        .collect();
    (header, rows)
}

/// Rows `(J, analytic gain, H_J)` for `J = 1..=max_j`.
pub fn gain_table(max_j: usize) -> Result<Vec<(usize, f64, f64)>> {
    if max_j < 1 {
        return Err(Error::Validation("max J must be at least 1".into()));
    }
    let mut h = 0.0;
    (1..=max_j)
        .map(|j| {
            h += 1.0 / j as f64;
            Ok((j, pfs_sinr_gain(j)?, h))
        })
        .collect()
}

/// One row of the interferer-splitting sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub interferers: usize,
    /// Largest CDF distance to the exponential limit over all terminals.
    pub cdf_distance: f64,
    /// Largest relative gap between the exact relaxed rate and the ultra-dense rate.
    pub rate_gap: f64,
}

/// Splits each terminal's total interference across `I = 1, 2, 4, …, 2^doublings`
/// equal interferers and measures how close the cell gets to the exponential limit.
pub fn convergence_sweep(
    scn: &CellScenario,
    table: &McsTable,
    doublings: u32,
    cfg: &AnalyticConfig,
) -> Result<Vec<ConvergenceRow>> {
    let table = scn.frame.shape_table(table.clone());
    let frame = scn.frame();
    let links = terminal_links(scn)?;
    let means: Vec<f64> = links.iter().map(LinkProfile::average_power_sinr).collect();
    let dense = ultra_dense_relaxed_throughput(&means, &frame, &table)?;
    (0..=doublings)
        .map(|k| {
            let count = 1usize << k;
            let split: Vec<LinkProfile> = links.iter().map(|l| l.equal_split(count)).collect();
            let mut distance: f64 = 0.0;
            for (l, &mean) in split.iter().zip(&means) {
                let law = SinrDistribution::best_effort(l)?;
                let limit = asymptotic_distribution(l.p0, l.total_interference(), l.n0)?;
                distance = distance.max(sup_cdf_distance(&law, &limit, mean * 1e6f64.ln(), 2000));
            }
            let pop = CellPopulation::from_terminal_links(&split, frame)?;
            let exact = relaxed_mcs_throughput(&pop, &table, cfg)?;
            let gap = exact
                .iter()
                .zip(&dense)
                .map(|(e, d)| {
                    if *d > 0.0 {
                        (e.rate - d).abs() / d
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max);
            Ok(ConvergenceRow {
                interferers: count,
                cdf_distance: distance,
                rate_gap: gap,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Pretty,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "pretty" => Ok(Format::Pretty),
            other => Err(Error::Validation(format!("unknown format '{other}'"))),
        }
    }
}

pub fn render(header: &[String], rows: &[Vec<String>], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&header.join(","));
            out.push('\n');
            for row in rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        Format::Pretty => {
            let pretty_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| r.iter().map(|c| shorten(c)).collect())
                .collect();
            let widths: Vec<usize> = (0..header.len())
                .map(|k| {
                    pretty_rows
                        .iter()
                        .map(|r| r[k].len())
                        .chain(std::iter::once(header[k].len()))
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |cells: &[String], out: &mut String| {
                let parts: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect();
                let _ = writeln!(out, "{}", parts.join("  ").trim_end());
            };
            line(header, &mut out);
            for r in &pretty_rows {
                line(r, &mut out);
            }
        }
    }
    out
}

/// Numbers in a compact form for terminal display; other cells unchanged.
fn shorten(cell: &str) -> String {
    if cell.parse::<i64>().is_ok() {
        return cell.to_string();
    }
    match cell.parse::<f64>() {
        Ok(v) if v != 0.0 && (v.abs() >= 1e6 || v.abs() < 1e-3) => format!("{v:.4e}"),
        Ok(v) => format!("{v:.4}"),
        Err(_) => cell.to_string(),
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |context: &str| {
        let context = format!("{context} {}", path.display());
        move |source| Error::Io { context, source }
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).map_err(io("creating a temporary file for"))?;
    tmp.write_all(contents.as_bytes()).map_err(io("writing"))?;
    tmp.as_file().sync_all().map_err(io("syncing"))?;
    tmp.persist(path).map_err(|e| Error::Io {
        context: format!("renaming into {}", path.display()),
        source: e.error,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_drop, load_scenario, DropParams, ScenarioFrame};

    fn small_scenario(terminals: usize) -> CellScenario {
        generate_drop(&DropParams {
            terminals,
            interferers: 2,
            frame: ScenarioFrame {
                n_rb: 2,
                ..DropParams::default().frame
            },
            ..DropParams::default()
        })
    }

    #[test]
    fn model_names_round_trip() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert_eq!(parse_models("all").unwrap().len(), 8);
        assert_eq!(
            parse_models("ian, simple,ian").unwrap(),
            vec![Model::Ian, Model::Simple]
        );
        assert!(parse_models("bogus").is_err());
    }

    #[test]
    fn empty_request_is_rejected() {
        let scn = small_scenario(1);
        let e = evaluate(
            &scn,
            &McsTable::default_cqi(),
            &[],
            None,
            &AnalyticConfig::default(),
        );
        assert!(matches!(e, Err(Error::Validation(_))));
    }

    #[test]
    fn single_terminal_matches_library_call() {
        let scn = small_scenario(1);
        let table = McsTable::default_cqi();
        let cfg = AnalyticConfig::default();
        let report = evaluate(&scn, &table, &[Model::ExactRelaxed], None, &cfg).unwrap();
        let pop = CellPopulation::from_terminal_links(&terminal_links(&scn).unwrap(), scn.frame())
            .unwrap();
        let direct = relaxed_mcs_throughput(&pop, &scn.frame.shape_table(table), &cfg).unwrap();
        assert_eq!(report.rows[0].rates[0].as_ref().unwrap(), &direct[0].rate);
        let csv = render(&report.header(), &report.cells(), Format::Csv);
        assert_eq!(csv.lines().count(), 2);
        let value: f64 = csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(4)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(value, direct[0].rate);
    }

    #[test]
    fn full_run_has_finite_errors() {
        let scn = small_scenario(4);
        let sim = SimConfig::new(3000, 200, 1);
        let report = evaluate(
            &scn,
            &McsTable::default_cqi(),
            &Model::ALL,
            Some(&sim),
            &AnalyticConfig::default(),
        )
        .unwrap();
        assert!(!report.has_failures());
        assert_eq!(report.header().len(), 4 + 8 + 2 + 8);
        for row in &report.rows {
            for k in 0..8 {
                if row.simulated.unwrap() > 0.0 {
                    assert!(row.relative_error(k).unwrap().is_finite());
                }
            }
        }
        let pretty = render(&report.header(), &report.cells(), Format::Pretty);
        assert_eq!(pretty.lines().count(), 5);
    }

    #[test]
    fn failures_become_markers() {
        // Unreachable quadrature tolerances make the exact model fail on every terminal.
        let text = r#"{
            "format_version": 1, "noise_power": 1e-3, "frame": { "n_rb": 1 },
            "pathloss": { "model": "explicit", "powers": [[1.0, 0.1], [0.5, 0.2]] },
            "base_stations": [
                { "id": "s", "position": [0, 0], "tx_power_per_rb": 1.0, "role": "serving" },
                { "id": "i", "position": [9, 9], "tx_power_per_rb": 1.0, "role": "interferer" }
            ],
            "terminals": [
                { "id": "a", "position": [1, 0], "serving_bs": "s" },
                { "id": "b", "position": [2, 0], "serving_bs": "s" }
            ]
        }"#;
        let scn = load_scenario(text).unwrap();
        let cfg = AnalyticConfig {
            quadrature: crate::numerics::QuadratureConfig::default()
                .with_tolerances(1e-300, 1e-300),
            quadrature_only: true,
            ..AnalyticConfig::default()
        };
        let report = evaluate(
            &scn,
            &McsTable::default_cqi(),
            &[Model::ExactRelaxed, Model::Simple],
            None,
            &cfg,
        )
        .unwrap();
        assert!(report.has_failures());
        let cells = report.cells();
        assert_eq!(cells[0][4], ERROR_MARKER);
        assert_ne!(cells[0][5], ERROR_MARKER);
    }

    #[test]
    fn gain_table_rows() {
        let rows = gain_table(12).unwrap();
        assert_eq!(rows[0], (1, 1.0, 1.0));
        assert!((rows[1].1 - 1.5).abs() < 1e-15);
        for w in rows.windows(2) {
            let step = w[1].1 - w[0].1;
            assert!((step - 1.0 / w[1].0 as f64).abs() < 1e-12);
        }
        assert!(gain_table(0).is_err());
    }

    #[test]
    fn convergence_columns_shrink() {
        let scn = small_scenario(3);
        let rows = convergence_sweep(
            &scn,
            &McsTable::default_cqi(),
            6,
            &AnalyticConfig::default(),
        )
        .unwrap();
        assert_eq!(rows.last().unwrap().interferers, 64);
        for w in rows.windows(2) {
            assert!(w[1].cdf_distance <= w[0].cdf_distance);
            assert!(w[1].rate_gap <= w[0].rate_gap);
        }
        assert!(rows[6].cdf_distance < rows[0].cdf_distance);
        assert!(rows[6].rate_gap < 0.01);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn floats_round_trip_through_text() {
        for v in [0.1, 1.0 / 3.0, 123456.789e-7, f64::MIN_POSITIVE, 5e-324] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
