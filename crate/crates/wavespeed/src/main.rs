use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavespeed::{execute, load_config, CliError, Command, Options, RunConfig};

#[derive(Parser)]
#[command(name = "wavespeed", version, about = "Competition front speeds: runs, sweeps, anchors, scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// JSON run config. Its `command` field must match the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "WAVESPEED_WORKERS", default_value_t = default_workers())]
    workers: usize,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate from segregated data and dump snapshots and the front trace.
    Simulate,
    /// Measure one front speed.
    Speed,
    /// Sweep the (d, k) plane and write heatmaps, contours and tables.
    Sweep {
        /// Use the 0.1-step plan over the same ranges.
        #[arg(long)]
        full_resolution: bool,
    },
    /// Run or resume a sweep and write contour polylines only.
    Contour {
        #[arg(long)]
        full_resolution: bool,
    },
    /// Check the solver against the anchor table.
    Validate {
        /// Run a single anchor.
        #[arg(long)]
        only: Option<String>,
        /// Replace every anchor tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Run a named scenario.
    Scenario {
        /// One of the known scenario names; overrides `scenario_name`.
        name: Option<String>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn build(cli: &Cli) -> Result<(RunConfig, Options), CliError> {
    let (cmd, full) = match &cli.command {
        Sub::Simulate => (Command::Simulate, false),
        Sub::Speed => (Command::Speed, false),
        Sub::Sweep { full_resolution } => (Command::Sweep, *full_resolution),
        Sub::Contour { full_resolution } => (Command::Contour, *full_resolution),
        Sub::Validate { .. } => (Command::Validate, false),
        Sub::Scenario { .. } => (Command::Scenario, false),
    };
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::for_command(cmd),
    };
    if cfg.command != cmd {
        return Err(CliError::Usage(format!(
            "config is for `{}` but the subcommand is `{}`",
            cfg.command.name(),
            cmd.name()
        )));
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    if full {
        let plan = cfg.plan.take().unwrap_or_default();
        cfg.plan = Some(plan.full_resolution());
    }
    let mut opts = Options {
        workers: cli.workers.max(1),
        ..Options::default()
    };
    match &cli.command {
        Sub::Validate { only, tolerance } => {
            opts.only = only.clone();
            opts.tolerance = *tolerance;
            if tolerance.is_some_and(|t| !(t > 0.0)) {
                return Err(CliError::Usage("--tolerance must be positive".into()));
            }
        }
        Sub::Scenario { name: Some(name) } => cfg.scenario_name = Some(name.clone()),
        _ => {}
    }
    if cmd == Command::Scenario && cfg.scenario_name.is_none() {
        return Err(CliError::Usage(format!(
            "scenario needs a name: {}",
            wavespeed::commands::SCENARIO_NAMES.join(", ")
        )));
    }
    Ok((cfg, opts))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match build(&cli).and_then(|(cfg, opts)| execute(&cfg, &opts)) {
        Ok(report) => {
            print!("{}", report.text);
            if !report.text.ends_with('\n') {
                println!();
            }
            report.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
