//! `afrs`: experiment runner for replica shadow estimation.
//!
//! ```text
//! afrs estimate       --seed 1 --n 2,4 --p 0.3 --observable Z1*Z2 --protocol AFRS --protocol OS
//! afrs vd             --seed 1 --n 5 --p 0.3 --observable Z1*Z2 --shots 50000
//! afrs moment         --seed 1 --n 3 --p 0,0.3,1
//! afrs compile-verify --seed 1 --d 5
//! afrs plan           --seed 1 --n 5 --observable Z1*Z2 --observable X1 --variance 4
//! ```
//!
//! Exit status: 0 success, 1 usage or input error, 2 verification failure,
//! 3 resource cap exceeded.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

use replica_shadow::Error;

use crate::config::{Defaults, ExperimentConfig, Flags};
use crate::output::write_rows;

#[derive(Debug, Parser)]
#[command(name = "afrs", version, about = "Replica shadow estimation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate tr(O rho^t) over a sweep of n and p.
    Estimate(Flags),
    /// Distilled expectation tr(O rho^t)/tr(rho^t) with a convergence trace.
    Vd(Flags),
    /// Estimate the moment tr(rho^t).
    Moment(Flags),
    /// Compile R for t = 2 and check it against the dense matrix.
    CompileVerify(Flags),
    /// Partition observables and print the median-of-means budget.
    Plan(Flags),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Size { .. } => EXIT_RESOURCE,
        _ => EXIT_USAGE,
    }
}

fn defaults(command: &Command) -> Defaults {
    match command {
        Command::Estimate(_) => Defaults {
            experiment: "estimate",
            n: vec![2],
            observables: &["Z1*Z2"],
            protocols: &["AFRS", "OS"],
            shots: 50,
        },
        Command::Vd(_) => Defaults {
            experiment: "vd",
            n: vec![5],
            observables: &["Z1*Z2"],
            protocols: &["LOCAL_AFRS", "OS"],
            shots: 1000,
        },
        Command::Moment(_) => Defaults {
            experiment: "moment",
            n: vec![2],
            observables: &["I"],
            protocols: &["LOCAL_AFRS", "OS"],
            shots: 50,
        },
        Command::CompileVerify(_) => Defaults {
            experiment: "compile-verify",
            n: vec![1],
            observables: &[],
            protocols: &[],
            shots: 1,
        },
        Command::Plan(_) => Defaults {
            experiment: "plan",
            n: vec![5],
            observables: &[],
            protocols: &[],
            shots: 1,
        },
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Argument(format!("output failed: {e}"))
}

fn execute(command: &Command) -> Result<i32, Error> {
    let flags = match command {
        Command::Estimate(f) | Command::Vd(f) | Command::Moment(f) | Command::CompileVerify(f) | Command::Plan(f) => f,
    };
    let cfg = ExperimentConfig::resolve(flags, &defaults(command))?;
    let pool = match cfg.workers {
        Some(w) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Argument(format!("cannot start {w} workers: {e}")))?,
        ),
        None => None,
    };
    let run = || -> Result<i32, Error> {
        let out = cfg.out.as_deref();
        match command {
            Command::Estimate(_) => write_rows(&commands::cmd_estimate(&cfg)?, cfg.format, out).map_err(io_err)?,
            Command::Vd(_) => write_rows(&commands::cmd_vd(&cfg)?, cfg.format, out).map_err(io_err)?,
            Command::Moment(_) => write_rows(&commands::cmd_moment(&cfg)?, cfg.format, out).map_err(io_err)?,
            Command::Plan(_) => write_rows(&commands::cmd_plan(&cfg)?, cfg.format, out).map_err(io_err)?,
            Command::CompileVerify(f) => {
                let (row, text) = commands::cmd_compile_verify(&cfg, f.n.is_some())?;
                match &cfg.circuit {
                    Some(path) => std::fs::write(path, &text).map_err(io_err)?,
                    None if out.is_some() => print!("{text}"),
                    None => eprint!("{text}"),
                }
                let passed = row.passed;
                write_rows(&[row], cfg.format, out).map_err(io_err)?;
                if !passed {
                    return Ok(EXIT_VERIFY);
                }
            }
        }
        Ok(EXIT_OK)
    };
    match pool {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "afrs: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
