use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moc_harness::aggregate::cmd_aggregate;
use moc_harness::config::ExperimentConfig;
use moc_harness::run::cmd_run;
use moc_harness::sweep::cmd_sweep;
use moc_harness::verify::{run_verify, Scale, VerifyOptions};
use moc_harness::HarnessError;

#[derive(Parser)]
#[command(name = "moc", version, about = "Run, sweep, aggregate and verify option-critic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of an experiment config.
    Run {
        config: PathBuf,
        /// Replace the results of an earlier run in the output directory.
        #[arg(long)]
        force: bool,
    },
    /// Run every point of the config's grid and rank them.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Pool run directories into one curve with 80% intervals.
    Aggregate {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Timesteps per bin (timestep budgets only); defaults to the config's.
        #[arg(long)]
        bin_width: Option<usize>,
    },
    /// Run the numerical verification suite and print a JSON report.
    Verify {
        #[arg(long, value_enum, default_value = "small")]
        scale: Scale,
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
}

fn exit_code(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Config(_) | HarnessError::OutputExists(_) | HarnessError::Aggregate(_) => 2,
        HarnessError::Core(_) | HarnessError::Io(_) => 1,
    }
}

fn read_raw(path: &PathBuf) -> Result<serde_json::Value, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Result<u8, HarnessError> {
    match command {
        Command::Run { config, force } => {
            let config = ExperimentConfig::from_path(&config)?;
            let runs = cmd_run(&config, force)?;
            println!("{} seeds written to {}", runs.len(), config.harness.output_dir.display());
        }
        Command::Sweep { config, force } => {
            let ranked = cmd_sweep(&read_raw(&config)?, force)?;
            for r in &ranked {
                println!("{:>3}  {}  {:.6}", r.rank, r.dir.display(), r.metric);
            }
        }
        Command::Aggregate { dirs, out, bin_width } => {
            let curve = cmd_aggregate(&dirs, &out, bin_width)?;
            println!("{} seeds, {} points written to {}", curve.seeds.len(), curve.x.len(), out.display());
        }
        Command::Verify { scale, corrupt_gradient } => {
            let report = run_verify(scale, VerifyOptions { corrupt_gradient });
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if !report.passed {
                eprintln!("failed checks: {}", report.failed().join(", "));
                return Ok(3);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
