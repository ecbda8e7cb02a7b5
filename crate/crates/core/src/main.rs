use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tinygan::harness::reports::{oracle_check, sgd_compare};
use tinygan::harness::svg::emit_sweep_plot;
use tinygan::harness::{run_config, run_experiment, scenario_config, sweep_time_constant, RunOptions, RunOutcome};
use tinygan::{AnnealingSchedule, HarnessError};

#[derive(Parser)]
#[command(name = "tinygan", version, about = "Simulate the training dynamics of a one-point GAN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Output directory, replacing the config's `output_dir`.
    #[arg(long, env = "TINYGAN_OUT_DIR")]
    out: Option<PathBuf>,
    /// Integration end time.
    #[arg(long)]
    horizon: Option<f64>,
    /// Integration step.
    #[arg(long)]
    step: Option<f64>,
}

impl Overrides {
    fn options(&self) -> RunOptions {
        RunOptions {
            out_dir: self.out.clone(),
            horizon: self.horizon,
            step: self.step,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a built-in scenario (fig1a, fig1b, fig1c, fig1d).
    Scenario {
        name: String,
        /// Print the scenario's TOML config and exit.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Measured versus predicted oscillation amplitude across time constants.
    Sweep {
        /// Time constants to run.
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 3.0, 5.0, 10.0, 20.0, 30.0, 50.0, 100.0])]
        time_constants: Vec<f64>,
        /// Base config; defaults to the fig1c scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "TINYGAN_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Compare RK4 and Euler with the closed-form decoupled solution.
    OracleCheck {
        #[arg(long, default_value_t = 1.0)]
        alpha0: f64,
        #[arg(long, default_value_t = 3.0)]
        alpha_r: f64,
        #[arg(long = "time-constant", short = 'T', default_value_t = 3.0)]
        time_constant: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
    },
    /// Deviation of discrete SGD from the flow as the learning rate shrinks.
    SgdCompare {
        #[arg(long, value_delimiter = ',', default_values_t = [0.04, 0.02, 0.01, 0.005])]
        learning_rates: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
    },
}

fn report(outcome: &RunOutcome) -> Result<bool, HarnessError> {
    let m = &outcome.manifest;
    println!("{}", m.to_json()?);
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    Ok(m.divergence_flagged())
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Simulate { config, overrides } => report(&run_config(config, &overrides.options())?),
        Command::Scenario {
            name,
            print_config,
            overrides,
        } => {
            let config = scenario_config(&name)?;
            if print_config {
                print!("{}", config.to_toml_string());
                return Ok(false);
            }
            report(&run_experiment(&config, &overrides.options())?)
        }
        Command::Sweep {
            time_constants,
            config,
            out,
        } => {
            let mut base = match config {
                Some(path) => tinygan::harness::ExperimentConfig::load(path)?,
                None => scenario_config("fig1c")?,
            };
            if let Some(dir) = out {
                base.output_dir = dir;
            }
            let table = sweep_time_constant(&base, &time_constants)?;
            let dir = &base.output_dir;
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
            table.export_csv(dir.join("sweep.csv"))?;
            emit_sweep_plot(&table, "oscillation amplitude vs T", dir.join("sweep.svg"))?;
            println!("{}", serde_json::to_string_pretty(&table)?);
            Ok(table.rows.iter().any(|r| r.flag.is_some()))
        }
        Command::OracleCheck {
            alpha0,
            alpha_r,
            time_constant,
            step,
            horizon,
        } => {
            let schedule = AnnealingSchedule::new(alpha0, alpha_r, time_constant)?;
            let check = oracle_check(schedule, step, horizon)?;
            println!("{}", serde_json::to_string_pretty(&check)?);
            Ok(false)
        }
        Command::SgdCompare {
            learning_rates,
            horizon,
        } => {
            let cmp = sgd_compare(&learning_rates, horizon)?;
            println!("{}", serde_json::to_string_pretty(&cmp)?);
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
