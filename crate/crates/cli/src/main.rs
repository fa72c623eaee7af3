//! `cavity-trio`: spectra, time evolution, stability maps, coupling searches
//! and noise estimates for coupled resonator scenarios.

mod commands;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use cavity_trio::config::{parse_bracket, parse_grid, parse_range, GridSpec, TuneTarget};
use cavity_trio::model::Frame;
use cavity_trio::presets::{preset_names, preset_source};
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Context;
use error::CliError;

const THREADS_ENV: &str = "CAVITY_TRIO_THREADS";

#[derive(Parser)]
#[command(name = "cavity-trio", version, about = "Coupled active/passive resonator chain calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario document (TOML).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled scenario; see `cavity-trio presets`.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
    /// Frame for reported eigenvalues.
    #[arg(long, value_enum)]
    frame: Option<FrameArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Rotating,
    Lab,
}

#[derive(Clone, Copy, ValueEnum)]
enum TuneArg {
    J2,
    J1Marginal,
}

fn range_arg(s: &str) -> Result<(f64, f64), String> {
    parse_range(s).map_err(|e| e.to_string())
}

fn bracket_arg(s: &str) -> Result<(f64, f64), String> {
    parse_bracket(s).map_err(|e| e.to_string())
}

fn grid_arg(s: &str) -> Result<GridSpec, String> {
    parse_grid(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Transmission and susceptibility spectrum with group delay.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Detuning range from resonator 1 [MHz], LO:HI.
        #[arg(long, value_name = "LO:HI", value_parser = range_arg, allow_hyphen_values = true)]
        x_range: Option<(f64, f64)>,
        #[arg(long, value_name = "N")]
        points: Option<usize>,
    },
    /// Time evolution from empty resonators, with gain saturation.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Integration horizon [us].
        #[arg(long, value_name = "US")]
        t_end: Option<f64>,
    },
    /// Dynamical regime over a (J1, J2) grid.
    StabilityMap {
        #[command(flatten)]
        common: Common,
        /// LO:HI:N in MHz; the first occurrence is the J1 axis, the second J2.
        #[arg(long, value_name = "LO:HI:N", value_parser = grid_arg, num_args = 1, action = clap::ArgAction::Append)]
        grid: Vec<GridSpec>,
    },
    /// Search for a coupling: transparency J2, or the marginally stable J1.
    Tune {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum)]
        parameter: Option<TuneArg>,
        #[arg(long, value_name = "LO:HI", value_parser = bracket_arg)]
        bracket: Option<(f64, f64)>,
        /// Largest accepted |A1|/(sqrt(2 kappa_ex) eps_p) at the result.
        #[arg(long, value_name = "X")]
        tol: Option<f64>,
    },
    /// Extra photons in resonator 1 from amplification noise.
    Noise {
        #[command(flatten)]
        common: Common,
    },
    /// List bundled scenarios, or print one.
    Presets { name: Option<String> },
}

fn context(common: &Common) -> Result<Context, CliError> {
    let scenario = commands::load_scenario(common.config.as_deref(), common.preset.as_deref())?;
    let frame = match common.frame {
        Some(FrameArg::Rotating) => Frame::Rotating,
        Some(FrameArg::Lab) => Frame::Lab,
        None => scenario.doc.run.frame.unwrap_or_default(),
    };
    Ok(Context {
        scenario,
        out: common.out.clone(),
        svg: common.svg,
        frame,
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Spectrum {
            common,
            x_range,
            points,
        } => commands::spectrum(&context(&common)?, x_range, points),
        Command::Evolve { common, t_end } => commands::evolve_cmd(&context(&common)?, t_end),
        Command::StabilityMap { common, grid } => {
            if grid.len() > 2 {
                return Err(CliError::config("--grid takes at most two axes (J1 then J2)"));
            }
            commands::stability_map_cmd(&context(&common)?, &grid)
        }
        Command::Tune {
            common,
            parameter,
            bracket,
            tol,
        } => {
            if let Some(t) = tol {
                if !(t.is_finite() && t > 0.0) {
                    return Err(CliError::config("--tol must be positive"));
                }
            }
            let target = parameter.map(|p| match p {
                TuneArg::J2 => TuneTarget::J2,
                TuneArg::J1Marginal => TuneTarget::J1Marginal,
            });
            commands::tune_cmd(&context(&common)?, target, bracket, tol)
        }
        Command::Noise { common } => commands::noise_cmd(&context(&common)?),
        Command::Presets { name: None } => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let text = preset_source(&name).ok_or_else(|| CliError::config(format!("unknown preset `{name}`")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
