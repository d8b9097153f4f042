//! Command-line entry point for the simulation laboratory.

use cdrp_lab::config::{parse_file, Overrides};
use cdrp_lab::error::{LabError, Result};
use cdrp_lab::report::emit_report;
use cdrp_lab::runner::{execute, load_records};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "cdrp-lab",
    version,
    about = "Simulation laboratory for a nearest-neighbour directed polymer in \
             Gaussian disorder: runs configured experiments, persists replica \
             data and aggregate statistics, and renders reports."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (TOML, or JSON with a .json extension).
    config: PathBuf,
    /// Master seed override (the CDRP_LAB_SEED env var beats this flag).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replica evaluation (results do not depend on this).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and persist CSV + JSON results.
    Run(RunArgs),
    /// Run the experiment and exit with status 3 if any built-in check fails.
    Check(RunArgs),
    /// Render `report.md` from the result records stored in a directory.
    Report {
        /// Directory holding result JSON records from earlier runs.
        dir: PathBuf,
    },
}

fn run_command(args: &RunArgs, check_mode: bool) -> Result<i32> {
    let overrides = Overrides {
        seed: args.seed,
        workers: args.workers,
        out: args
            .out
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned()),
    };
    let cfg = parse_file(&args.config)?.resolve(&overrides)?;
    let record = execute(&cfg)?;

    println!(
        "{} run {} (seed {}, {} worker{})",
        record.experiment,
        record.config_hash,
        record.metadata.master_seed,
        record.metadata.worker_count,
        if record.metadata.worker_count == 1 { "" } else { "s" },
    );
    for check in &record.checks {
        println!(
            "  [{}] {} — {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.observed
        );
    }
    for w in &record.metadata.warnings {
        println!("  warning: {w}");
    }
    println!(
        "  wrote {}.json and {} data file{} to {}",
        format_args!("{}-{}", record.experiment, record.config_hash),
        record.outputs.len(),
        if record.outputs.len() == 1 { "" } else { "s" },
        cfg.output_dir,
    );

    if check_mode && !record.all_checks_passed() {
        let failed = record.checks.iter().filter(|c| !c.passed).count();
        eprintln!("{failed} built-in check(s) failed");
        return Ok(3);
    }
    Ok(0)
}

fn report_command(dir: &Path) -> Result<i32> {
    let records = load_records(dir)?;
    let text = emit_report(&records);
    let path = dir.join("report.md");
    std::fs::write(&path, &text)
        .map_err(|e| LabError::Config(format!("cannot write {}: {e}", path.display())))?;
    print!("{text}");
    Ok(0)
}

fn main() {
    // Behave like a standard Unix filter when downstream closes the pipe
    // (e.g. `cdrp-lab run cfg | head`): terminate quietly instead of
    // panicking on the broken-pipe write error.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run_command(args, false),
        Command::Check(args) => run_command(args, true),
        Command::Report { dir } => report_command(dir),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
