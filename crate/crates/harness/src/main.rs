//! `irslink` command line: run seeded trials or parameter sweeps of the
//! IRS-assisted THz link simulator and emit CSV or JSON tables.
//!
//! Exit code 0 on success; on failure a machine-readable error record
//! `{"error": ...}` goes to stderr and the exit code is nonzero.

use anyhow::{anyhow, Result};
use clap::Parser;
use std::io::Write;
use std::path::PathBuf;

use irslink_harness::emit::{emit_to_path, json_string, sweep_csv_string};
use irslink_harness::{run_trials, sweep, ExperimentConfig, SweepAxis};

#[derive(Debug, Parser)]
#[command(
    name = "irslink",
    about = "Link-level simulator for IRS-assisted THz industrial IoT networks",
    long_about = "Runs seeded Monte Carlo trials of the uplink/downlink pipeline (phase \
                  configuration, MMSE processing, water-filling, IRS association) and emits \
                  trial reports or sweep tables. Without --sweep, emits per-trial JSON reports; \
                  with --sweep, emits a mean/stderr table over the axis values."
)]
struct Cli {
    /// Flat `key = value` config file (defaults match the reference setup).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,

    /// Number of Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,

    /// Comma-separated association algorithms: gs,es,greedy,random.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,

    /// Sweep axis: power_dbm, antennas, elements, area, cee, time_slot,
    /// or frequency_ghz.
    #[arg(long)]
    sweep: Option<String>,

    /// Comma-separated axis values (required with --sweep).
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,

    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format: csv (sweeps only) or json.
    #[arg(long)]
    format: Option<String>,

    /// Report rates with the association overhead discount applied.
    #[arg(long)]
    overhead: bool,

    /// Additional config overrides, `key=value`, repeatable.
    #[arg(short = 'p', long = "param")]
    params: Vec<String>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    for kv in &cli.params {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--param expects key=value, got `{kv}`"))?;
        cfg.apply_key(key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(algos) = &cli.algos {
        cfg.apply_key("algos", &algos.join(","))?;
    }
    if cli.overhead {
        cfg.overhead = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn render(cli: &Cli, cfg: &ExperimentConfig) -> Result<String> {
    match &cli.sweep {
        Some(axis_name) => {
            let axis: SweepAxis = axis_name.parse()?;
            let values = cli
                .values
                .as_deref()
                .ok_or_else(|| anyhow!("--sweep requires --values"))?;
            let table = sweep(cfg, axis, values, cfg.trials)?;
            match cli.format.as_deref().unwrap_or("csv") {
                "csv" => sweep_csv_string(&table),
                "json" => json_string(&table),
                other => Err(anyhow!("unknown format `{other}` (expected csv or json)")),
            }
        }
        None => {
            let reports = run_trials(cfg)?;
            match cli.format.as_deref().unwrap_or("json") {
                "json" => {
                    if reports.len() == 1 {
                        json_string(&reports[0])
                    } else {
                        json_string(&reports)
                    }
                }
                "csv" => Err(anyhow!(
                    "csv output is only available for sweeps; use --sweep or --format json"
                )),
                other => Err(anyhow!("unknown format `{other}` (expected csv or json)")),
            }
        }
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let cfg = build_config(&cli)?;
    let output = render(&cli, &cfg)?;
    match &cli.out {
        Some(path) => emit_to_path(path, &output)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(output.as_bytes())?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run() {
        let record = serde_json::json!({ "error": format!("{err:#}") });
        eprintln!("{record}");
        std::process::exit(1);
    }
}
