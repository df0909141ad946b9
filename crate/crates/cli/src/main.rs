use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fluxlambda::runner::{self, ScenarioConfig, ScenarioType};
use fluxlambda::{Error, Result};

/// Λ-qubit rotation, cavity STIRAP and rf-SQUID spectrum scenarios.
#[derive(Parser)]
#[command(name = "fluxlambda", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario, a JSON config, or a sweep of configs.
    Run(RunArgs),
    /// List the built-in scenarios.
    List,
    /// Solve the flux-potential spectrum of a device config.
    DeviceSpectrum {
        /// Device config; the reference device when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["scenario", "config", "sweep"])))]
struct RunArgs {
    /// Built-in scenario name (see `list`).
    #[arg(long)]
    scenario: Option<String>,
    /// Path to a JSON scenario config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run several configs concurrently, each into its own subdirectory of --out.
    #[arg(long, num_args = 1..)]
    sweep: Vec<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integrator step bound in ns (overrides the config).
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
}

fn with_dt(mut config: ScenarioConfig, dt: Option<f64>) -> Result<ScenarioConfig> {
    if let Some(dt) = dt {
        config.integrator.dt = dt;
    }
    config.validate()?;
    Ok(config)
}

fn report(r: &runner::RunReport) {
    for path in &r.written {
        println!("{}", path.display());
    }
}

fn run(args: RunArgs) -> Result<()> {
    if !args.sweep.is_empty() {
        let configs = args
            .sweep
            .iter()
            .map(|p| with_dt(ScenarioConfig::load(p)?, args.dt))
            .collect::<Result<Vec<_>>>()?;
        let root = args.out.unwrap_or_else(|| PathBuf::from("out/sweep"));
        let mut first_err = None;
        for r in runner::run_sweep(&configs, &root) {
            match r {
                Ok(r) => report(&r),
                Err(e) => {
                    eprintln!("error: {e}");
                    first_err.get_or_insert(e);
                }
            }
        }
        return first_err.map_or(Ok(()), Err);
    }
    let config = match (&args.scenario, &args.config) {
        (Some(name), _) => runner::builtin(name)?,
        (None, Some(path)) => ScenarioConfig::load(path)?,
        (None, None) => unreachable!("clap requires a source"),
    };
    let config = with_dt(config, args.dt)?;
    report(&runner::run_scenario(&config, args.out.as_deref())?);
    Ok(())
}

fn device_spectrum(config: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let config = match config {
        Some(p) => ScenarioConfig::load(p)?,
        None => runner::builtin("device")?,
    };
    if config.scenario.scenario_type() != ScenarioType::DeviceSpectrum {
        return Err(Error::Config(format!(
            "device-spectrum needs scenario_type device_spectrum, got {}",
            config.scenario.scenario_type().as_str()
        )));
    }
    report(&runner::run_scenario(&config, out)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::List => {
            for s in runner::list_scenarios() {
                println!("{:<12} {}", s.name, s.description);
            }
            Ok(())
        }
        Command::DeviceSpectrum { config, out } => {
            device_spectrum(config.as_deref(), out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
