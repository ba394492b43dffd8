use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pfs_core::analytic::AnalyticConfig;
use pfs_core::mcs::{load_mcs_table_file, McsTable};
use pfs_core::report::{
    convergence_sweep, evaluate, gain_table, num, parse_models, render, simulation_table,
    write_atomic, Format,
};
use pfs_core::scenario::{
    compute_link_profiles, generate_drop, load_scenario_file, CellScenario, DropParams,
};
use pfs_core::simulator::{run_pfs, Fading, McsRule, PfsMetric, SimConfig};

#[derive(Parser)]
#[command(
    name = "pfs",
    version,
    about = "Expected PFS throughput in OFDMA downlinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate throughput models on a scenario, optionally against a simulation.
    Evaluate {
        #[command(flatten)]
        input: Input,
        /// Comma-separated models, or `all`.
        #[arg(long)]
        models: Option<String>,
        /// Also simulate, with this many slots.
        #[arg(long)]
        slots: Option<usize>,
        #[command(flatten)]
        sim: SimFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Simulate PFS on a scenario.
    Simulate {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 200_000)]
        slots: usize,
        #[command(flatten)]
        sim: SimFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Analytic SINR gain against the harmonic numbers.
    GainTable {
        #[arg(long, default_value_t = 30)]
        max_j: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Split each terminal's interference over 1, 2, 4, ... equal interferers.
    Converge {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 6)]
        doublings: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Write a random single-cell scenario as JSON.
    GenerateDrop {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        terminals: usize,
        #[arg(long, default_value_t = 6)]
        interferers: usize,
        /// Cell radius in meters.
        #[arg(long, default_value_t = 250.0)]
        radius: f64,
        /// Radius of the interferer ring in meters.
        #[arg(long, default_value_t = 500.0)]
        ring_radius: f64,
        #[arg(long, default_value_t = 6)]
        n_rb: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    scenario: PathBuf,
    /// MCS table file (`threshold_db efficiency` rows); the built-in CQI table otherwise.
    #[arg(long)]
    mcs: Option<PathBuf>,
}

#[derive(Args)]
struct SimFlags {
    /// PFS window in slots; the scenario's frame window otherwise.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// `iid` or `gm:RHO` with RHO the slot-to-slot correlation in (0, 1].
    #[arg(long, default_value = "iid", value_parser = parse_fading)]
    fading: Fading,
    #[arg(long, value_enum, default_value_t = Metric::Sinr)]
    pfs: Metric,
    #[arg(long, value_enum, default_value_t = Rule::Relaxed)]
    mcs_rule: Rule,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Sinr,
    Rate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Relaxed,
    Unique,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Pretty,
}

fn parse_fading(s: &str) -> Result<Fading, String> {
    if s == "iid" {
        return Ok(Fading::Iid);
    }
    let rho = s
        .strip_prefix("gm:")
        .ok_or_else(|| format!("expected `iid` or `gm:RHO`, got `{s}`"))?
        .parse::<f64>()
        .map_err(|e| e.to_string())?;
    Fading::gauss_markov_rho(rho).map_err(|e| e.to_string())
}

impl SimFlags {
    fn config(&self, slots: usize, scn: &CellScenario) -> SimConfig {
        SimConfig::new(slots, self.window.unwrap_or(scn.frame.window), self.seed)
            .with_fading(self.fading)
            .with_metric(match self.pfs {
                Metric::Sinr => PfsMetric::SinrBased,
                Metric::Rate => PfsMetric::RateBased,
            })
            .with_mcs_rule(match self.mcs_rule {
                Rule::Relaxed => McsRule::Relaxed,
                Rule::Unique => McsRule::Unique,
            })
    }
}

impl Output {
    fn emit(&self, header: &[String], rows: &[Vec<String>]) -> pfs_core::Result<()> {
        let format = match self.format {
            OutFormat::Csv => Format::Csv,
            OutFormat::Pretty => Format::Pretty,
        };
        write_text(self.out.as_deref(), &render(header, rows, format))
    }
}

fn write_text(path: Option<&Path>, text: &str) -> pfs_core::Result<()> {
    match path {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(input: &Input) -> pfs_core::Result<(CellScenario, McsTable)> {
    let scn = load_scenario_file(&input.scenario)?;
    let table = match &input.mcs {
        Some(p) => load_mcs_table_file(p)?,
        None => McsTable::default_cqi(),
    };
    Ok((scn, table))
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Returns whether every per-terminal value was produced.
fn run(cli: Cli) -> pfs_core::Result<bool> {
    match cli.command {
        Command::Evaluate {
            input,
            models,
            slots,
            sim,
            output,
        } => {
            let (scn, table) = load(&input)?;
            let models = parse_models(models.as_deref().unwrap_or(""))?;
            let sim_cfg = slots.map(|s| sim.config(s, &scn));
            let report = evaluate(
                &scn,
                &table,
                &models,
                sim_cfg.as_ref(),
                &AnalyticConfig::default(),
            )?;
            output.emit(&report.header(), &report.cells())?;
            if report.has_failures() {
                for row in &report.rows {
                    for (m, r) in report.models.iter().zip(&row.rates) {
                        if let Err(e) = r {
                            eprintln!("{} / {}: {e}", row.id, m.name());
                        }
                    }
                }
            }
            Ok(!report.has_failures())
        }
        Command::Simulate {
            input,
            slots,
            sim,
            output,
        } => {
            let (scn, table) = load(&input)?;
            let table = scn.frame.shape_table(table);
            let links = compute_link_profiles(&scn)?;
            let result = run_pfs(&links, &table, &scn.frame(), &sim.config(slots, &scn))?;
            let (h, rows) = simulation_table(&scn, &result);
            output.emit(&h, &rows)?;
            Ok(true)
        }
        Command::GainTable { max_j, output } => {
            let rows: Vec<Vec<String>> = gain_table(max_j)?
                .into_iter()
                .map(|(j, g, h)| vec![j.to_string(), num(g), num(h)])
                .collect();
            output.emit(&header(&["terminals", "analytic_gain", "harmonic"]), &rows)?;
            Ok(true)
        }
        Command::Converge {
            input,
            doublings,
            output,
        } => {
            let (scn, table) = load(&input)?;
            let rows: Vec<Vec<String>> =
                convergence_sweep(&scn, &table, doublings, &AnalyticConfig::default())?
                    .into_iter()
                    .map(|r| {
                        vec![
                            r.interferers.to_string(),
                            num(r.cdf_distance),
                            num(r.rate_gap),
                        ]
                    })
                    .collect();
            output.emit(&header(&["interferers", "cdf_distance", "rate_gap"]), &rows)?;
            Ok(true)
        }
        Command::GenerateDrop {
            seed,
            terminals,
            interferers,
            radius,
            ring_radius,
            n_rb,
            out,
        } => {
            let defaults = DropParams::default();
            let scn = generate_drop(&DropParams {
                cell_radius: radius,
                terminals,
                interferers,
                interferer_ring_radius: ring_radius,
                seed,
                frame: pfs_core::scenario::ScenarioFrame {
                    n_rb,
                    ..defaults.frame
                },
                ..defaults
            });
            scn.validate()?;
            write_text(out.as_deref(), &(scn.to_json() + "\n"))?;
            Ok(true)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("PFS_ORACLE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ pfs_core::Error::Validation(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
