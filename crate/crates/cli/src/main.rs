//! `dmrac`: run scenarios and presets, identify and tune the vertical-velocity plant.

mod commands;
mod model_file;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

/// Exit code for bad command-line usage or file-system errors.
pub const EXIT_USAGE: u8 = 2;
/// Exit code for scenario, model or parameter validation failures.
pub const EXIT_VALIDATION: u8 = 3;
/// Exit code for a run aborted by adaptive divergence.
pub const EXIT_DIVERGENCE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "dmrac", version, about = "Distributed MRAC quadrotor vertical-velocity simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scenario file or a built-in experiment preset.
    #[command(group(ArgGroup::new("source").required(true).args(["scenario", "preset"])))]
    Run {
        /// Scenario file (TOML).
        scenario: Option<PathBuf>,
        /// Built-in experiment preset, 1 to 5.
        #[arg(long)]
        preset: Option<u32>,
        #[arg(long, env = "DMRAC_OUT_DIR", default_value = "dmrac-out")]
        out: PathBuf,
    },
    /// PRBS-identify a plant from simulated data and score the fit.
    #[command(group(ArgGroup::new("model_source").required(true).args(["model", "builtin_gvz"])))]
    Identify {
        /// Continuous model file (TOML with numerator, denominator, dead_time).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Use the identified vertical-velocity model.
        #[arg(long)]
        builtin_gvz: bool,
        /// Output signal-to-noise ratio, dB.
        #[arg(long, default_value_t = 20.0)]
        snr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, env = "DMRAC_OUT_DIR", default_value = "dmrac-out")]
        out: PathBuf,
    },
    /// Loop-shape a PID for a continuous plant.
    #[command(group(ArgGroup::new("model_source").required(true).args(["model", "builtin_gvz"])))]
    Tune {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        builtin_gvz: bool,
        /// Desired crossover, rad/s.
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        omega_c: f64,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, default_value_t = 0.022, allow_negative_numbers = true)]
        tau_f: f64,
        #[arg(long, env = "DMRAC_OUT_DIR", default_value = "dmrac-out")]
        out: PathBuf,
    },
    /// List the built-in experiment presets.
    Presets,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, preset, out } => commands::run(scenario.as_deref(), preset, &out),
        Command::Identify {
            model,
            builtin_gvz: _,
            snr,
            seed,
            order,
            out,
        } => commands::identify(model.as_deref(), snr, seed, order, &out),
        Command::Tune {
            model,
            builtin_gvz: _,
            omega_c,
            a,
            b,
            tau_f,
            out,
        } => commands::tune(model.as_deref(), omega_c, a, b, tau_f, &out),
        Command::Presets => commands::presets(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
