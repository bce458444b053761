//! `smrt`: forward simulation, range tests, backward solves and lemma checks
//! for the spherical mean transform with centers on the unit sphere.

mod commands;
mod config;
mod error;
mod files;

use clap::{Parser, Subcommand};
use config::CommonArgs;
use error::CliResult;
use smrt::Verdict;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "smrt", version, about = "Spherical mean Radon transform toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate boundary data g = R_S f for a phantom (the demo phantom by default).
    Forward {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        phantom: Option<PathBuf>,
        /// Add AMP times the angle-independent control bump to the data.
        #[arg(long = "inject-bump", value_name = "AMP", allow_hyphen_values = true)]
        inject_bump: Option<f64>,
    },
    /// Fourier-Bessel orthogonality residuals at the Dirichlet zeros.
    RangeTest {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Moment conditions (plane data only).
    MomentTest {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Backward Darboux solve per harmonic mode.
    DarbouxSolve {
        #[command(flatten)]
        common: CommonArgs,
        /// Write `t,h_1,...,h_J` per mode into this directory.
        #[arg(long = "dump-modes", value_name = "DIR")]
        dump_modes: Option<PathBuf>,
    },
    /// Rebuild f*, re-trace its transform and check the cones.
    ExtendCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Reference phantom for the reconstruction error.
        #[arg(long)]
        phantom: Option<PathBuf>,
    },
    /// forward -> range-test -> darboux-solve -> extend-check -> vanishing.
    Pipeline {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        phantom: Option<PathBuf>,
        #[arg(long = "inject-bump", value_name = "AMP", allow_hyphen_values = true)]
        inject_bump: Option<f64>,
    },
    /// Exact nondegeneracy and certificate checks of the boundary system.
    LemmaVerify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
    },
    /// First positive zeros of J_nu as CSV.
    BesselZeros {
        #[command(flatten)]
        common: CommonArgs,
        /// Order, e.g. `0`, `1/2`, `2.5`.
        #[arg(long, allow_hyphen_values = true)]
        nu: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
}

fn dispatch(cmd: &Command) -> CliResult<Verdict> {
    match cmd {
        Command::Forward { common, phantom, inject_bump } => commands::forward(common, phantom, *inject_bump),
        Command::RangeTest { common } => commands::range_test(common),
        Command::MomentTest { common, kmax } => commands::moment_test_cmd(common, *kmax),
        Command::DarbouxSolve { common, dump_modes } => commands::darboux_solve(common, dump_modes),
        Command::ExtendCheck { common, phantom } => commands::extend_check(common, phantom),
        Command::Pipeline { common, phantom, inject_bump } => commands::pipeline(common, phantom, *inject_bump),
        Command::LemmaVerify { common, nmax } => commands::lemma_verify(common, *nmax),
        Command::BesselZeros { common, nu, count } => commands::bessel_zeros_cmd(common, nu, *count),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
