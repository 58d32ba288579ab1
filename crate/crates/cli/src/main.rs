//! `bondfield`: solve, export, sweep and check two-disk imperfect-bonding
//! configurations.
//!
//! Exit codes: 0 ok, 1 a check failed, 2 invalid input, 3 conditioning or
//! truncation limit, 4 I/O.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bondfield", version, about = "Field solver for two disks with imperfectly bonded interfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and print a JSON report.
    Solve(SolveArgs),
    /// Sample the field on a grid and write CSV.
    Field(FieldArgs),
    /// Sweep the gap width and tabulate the field maximum against its bound.
    Sweep(SweepArgs),
    /// Run every coefficient bound and residual check.
    Check(CheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Low-conductivity interface, field `u` with `h = x1`.
    Lc,
    /// High-conductivity interface, field `v` with `h = x2`.
    Hc,
}

#[derive(Args, Clone)]
pub struct ConfigArgs {
    /// Disk radius.
    #[arg(long)]
    pub r: f64,
    /// Gap between the disks.
    #[arg(long)]
    pub eps: f64,
    /// LC bonding parameter (required with `--mode lc`).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// HC bonding parameter (required with `--mode hc`).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "lc")]
    pub mode: Mode,
    /// Series truncation tolerance relative to the map scale.
    #[arg(long, default_value_t = bondfield::operator::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// `x0,y0,x1,y1,nx,ny`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Comma-separated gap widths, at least three.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps_list: Vec<f64>,
    /// Also run the perfect-bonding (`gamma = 0`) rows.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long, default_value_t = bondfield::operator::DEFAULT_TOL)]
    pub tol: f64,
    /// CSV output; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Slope-fit summary JSON; stderr if omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args)]
pub struct CheckArgs {
    #[arg(long, requires_all = ["eps", "gamma"], conflicts_with = "sweep_file")]
    pub r: Option<f64>,
    #[arg(long, requires = "r")]
    pub eps: Option<f64>,
    #[arg(long, requires = "r")]
    pub gamma: Option<f64>,
    /// CSV of configurations with header `r,eps,gamma`.
    #[arg(long)]
    pub sweep_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lc")]
    pub mode: Mode,
    #[arg(long, default_value_t = bondfield::operator::DEFAULT_TOL)]
    pub tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Negative control: perturb a coefficient before checking.
    #[arg(long, hide = true, value_parser = ["c1"])]
    pub corrupt: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Field(a) => commands::field(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Check(a) => commands::check(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bondfield: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
