//! `manet-sim`: runs a scenario file, optionally swept over one axis and
//! several seeds, and writes the result rows as CSV.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use manet_core::scenario::{run_sweep, to_csv};
use manet_core::{ConfigError, ProtocolKind, ScenarioConfig, SweepSpec};

#[derive(Parser, Debug)]
#[command(name = "manet-sim", version, about = "Proactive MANET routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and emit one CSV row per run plus a mean row per value.
    Run(RunArgs),
}

#[derive(Parser, Debug)]
struct RunArgs {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Sweep spec `axis=v1,v2,...` with axis one of pause, n, flow_rate.
    #[arg(long)]
    sweep: Option<String>,
    /// Seeds per sweep value, counting up from the config's seed.
    #[arg(long, default_value_t = 1)]
    seeds: u32,
    /// Directory for the CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's protocol (dsdv, fsr, olsr, olsr_m).
    #[arg(long)]
    protocol: Option<String>,
}

enum Failure {
    Config(ConfigError),
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn csv_name(config: &Path, protocol: ProtocolKind) -> String {
    let stem = config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    format!("{stem}_{protocol}.csv")
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(p) = &args.protocol {
        cfg.protocol = ProtocolKind::parse(p).ok_or_else(|| ConfigError::Invalid {
            key: "protocol".to_string(),
            reason: format!("unknown protocol `{p}`"),
        })?;
    }
    let sweep = match &args.sweep {
        Some(s) => SweepSpec::parse(s, args.seeds)?,
        None => SweepSpec::single(args.seeds),
    };
    let rows = run_sweep(&cfg, &sweep)?;
    let csv = to_csv(&rows);
    match &args.out {
        Some(dir) => {
            let path = dir.join(csv_name(&args.config, cfg.protocol));
            fs::create_dir_all(dir)
                .and_then(|_| fs::write(&path, &csv))
                .map_err(|e| Failure::Run(format!("writing {}: {e}", path.display())))?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{csv}"),
    }
    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().err().map(|e| format!("seed {:?}: {e}", r.seed)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Run(failed.join("\n")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("run failed: {msg}");
            ExitCode::from(1)
        }
    }
}
