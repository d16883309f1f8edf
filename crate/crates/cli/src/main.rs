//! Command-line interface for contextual-value calibration of generalized
//! measurements.

mod commands;
mod context_file;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ctxvals",
    version,
    about = "Calibrate detector outcomes against an observable, sweep conditioned averages \
             in the coupling strength, and audit the weak-limit sufficiency conditions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    /// Minimum-norm pseudoinverse prescription.
    Pinv,
    /// Pinned components supplied with --pin.
    Fixed,
    /// Exact inverse of a square calibration matrix.
    Exact,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a context file: POVM completeness and the validity of every
    /// matrix input, sampled across the coupling range.
    Validate { file: PathBuf },

    /// Solve for the contextual values at one coupling value.
    Solve {
        file: PathBuf,
        /// Coupling strength.
        #[arg(long, default_value_t = 0.1)]
        g: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Pinv)]
        method: MethodArg,
        /// Pin an outcome's value: IDX=EXPR with 1-based IDX and an
        /// expression in g (repeatable; implies --method fixed).
        #[arg(long = "pin", value_name = "IDX=EXPR")]
        pins: Vec<String>,
        /// Replace the observable by a diagonal matrix.
        #[arg(long, value_delimiter = ',', value_name = "a,b,...")]
        obs: Option<Vec<f64>>,
    },

    /// Sweep the conditioned average over a geometric coupling grid and
    /// write CSV records with a summary line.
    Sweep {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        gmin: f64,
        #[arg(long, default_value_t = 1e-2)]
        gmax: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Pinv)]
        method: MethodArg,
        #[arg(long = "pin", value_name = "IDX=EXPR")]
        pins: Vec<String>,
        #[arg(long, value_delimiter = ',', value_name = "a,b,...")]
        obs: Option<Vec<f64>>,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Audit the five sufficiency conditions for a unique weak limit.
    Audit {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', value_name = "a,b,...")]
        obs: Option<Vec<f64>>,
    },

    /// Write a built-in scenario as a context file (ce1, ce2, projective).
    Scenario {
        name: String,
        /// Diagonal observable override (ce1: defaults 1,-1).
        #[arg(long, value_delimiter = ',', value_name = "a,b,...")]
        obs: Option<Vec<f64>>,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Validate { file } => commands::validate(&file),
        Cmd::Solve {
            file,
            g,
            method,
            pins,
            obs,
        } => commands::solve(&file, g, method, &pins, obs.as_deref()),
        Cmd::Sweep {
            file,
            gmin,
            gmax,
            points,
            method,
            pins,
            obs,
            out,
        } => commands::sweep(
            &file,
            gmin,
            gmax,
            points,
            method,
            &pins,
            obs.as_deref(),
            out.as_deref(),
        ),
        Cmd::Audit { file, obs } => commands::audit(&file, obs.as_deref()),
        Cmd::Scenario { name, obs, out } => {
            commands::scenario(&name, obs.as_deref(), out.as_deref())
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
