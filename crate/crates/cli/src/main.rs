use std::process::ExitCode;

use clap::{Parser, Subcommand};
use privaudit::commands::{
    cmd_audit, cmd_bounds, cmd_fuzz, AuditArgs, BoundsArgs, FuzzArgs, Status,
};

#[derive(Debug, Parser)]
#[command(
    name = "privaudit",
    version,
    about = "Exact leakage auditor for finite randomized mechanisms"
)]
struct Cli {
    /// Worker threads for fuzzing (defaults to all cores).
    #[arg(long, global = true, env = "PRIVAUDIT_THREADS")]
    threads: Option<usize>,
    /// Increase log verbosity (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Audit one scenario and write a JSON report.
    Audit(AuditArgs),
    /// Audit random instances and summarize theorem checks.
    Fuzz(FuzzArgs),
    /// Tabulate the two-point semantic bound against eps/6.
    Bounds(BoundsArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                Status::Invalid as u8
            } else {
                0
            });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            log::warn!("cannot configure {t} threads: {e}");
        }
    }
    let result = match &cli.command {
        Command::Audit(a) => cmd_audit(a),
        Command::Fuzz(a) => cmd_fuzz(a),
        Command::Bounds(a) => cmd_bounds(a),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::Invalid as u8)
        }
    }
}
