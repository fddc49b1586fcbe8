mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kltjnd::{JndError, WeibullParams};

/// Exit status for filesystem and decoding failures.
const EXIT_IO: u8 = 1;
/// Exit status for failures inside the JND pipeline.
const EXIT_DOMAIN: u8 = 2;
const EXIT_CODEC: u8 = 3;

#[derive(Parser)]
#[command(name = "kltjnd", version, about = "Top-down JND maps from a patch KLT")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// Patch side length
    #[arg(long = "block", global = true, default_value_t = kltjnd::DEFAULT_BLOCK)]
    pub block: usize,

    /// Weibull shape of the critical-point prior
    #[arg(long, global = true)]
    pub beta: Option<f64>,

    /// Weibull scale of the critical-point prior
    #[arg(long, global = true)]
    pub eta: Option<f64>,

    /// JSON file with `beta` and `eta` keys; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for directory inputs
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

impl CommonArgs {
    pub fn weibull(&self) -> Result<WeibullParams, JndError> {
        let base = match &self.config {
            Some(path) => WeibullParams::from_json_file(path)?,
            None => WeibullParams::default(),
        };
        WeibullParams::new(self.beta.unwrap_or(base.beta), self.eta.unwrap_or(base.eta))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the JND map of an image (or every image in a directory)
    Jnd(commands::JndArgs),
    /// Write the critical perceptual lossless reconstruction
    Cpl(commands::CplArgs),
    /// Inject JND-shaped bipolar noise at a fixed theta or target PSNR
    Inject(commands::InjectArgs),
    /// Shrink pixels toward their block mean within the JND
    Smooth(commands::SmoothArgs),
    /// Compare direct and JND-smoothed compression
    Compress(commands::CompressArgs),
    /// Per-pixel distortion detection probability
    Vdp(commands::VdpArgs),
    /// RMSE between two max-normalized maps
    Eval(commands::EvalArgs),
    /// Aggregate subjective votes and refit the Weibull prior
    Calibrate(commands::CalibrateArgs),
    /// Print per-component energies as CSV
    Info(commands::InfoArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.common;
    let result = match cli.command {
        Command::Jnd(args) => commands::jnd(&common, args),
        Command::Cpl(args) => commands::cpl(&common, args),
        Command::Inject(args) => commands::inject(&common, args),
        Command::Smooth(args) => commands::smooth(&common, args),
        Command::Compress(args) => commands::compress(&common, args),
        Command::Vdp(args) => commands::vdp(&common, args),
        Command::Eval(args) => commands::eval(args),
        Command::Calibrate(args) => commands::calibrate(&common, args),
        Command::Info(args) => commands::info(&common, args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("kltjnd: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &JndError) -> u8 {
    if e.is_io() {
        EXIT_IO
    } else if e.is_codec() {
        EXIT_CODEC
    } else {
        EXIT_DOMAIN
    }
}
