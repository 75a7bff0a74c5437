use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use splitmax::config::ExperimentConfig;
use splitmax::harness::{run_command, Command, EXIT_ERROR};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Convergence,
    Energy,
    Divergence,
    Audit,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Convergence => Command::Convergence,
            Cmd::Energy => Command::Energy,
            Cmd::Divergence => Command::Divergence,
            Cmd::Audit => Command::Audit,
        }
    }
}

/// Splitting solver experiments for stochastic Maxwell equations on a PEC cuboid.
#[derive(Debug, Parser)]
#[command(name = "splitmax", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,

    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Sample workers.
    #[arg(long, env = "SPLITMAX_WORKERS", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let command = Command::from(args.command);
    let cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("splitmax {}: {e}", command.name());
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let out = args.out.unwrap_or_else(|| cfg.run.output_dir.clone());
    match run_command(command, &cfg, &out, args.workers as usize) {
        Ok(outcome) => {
            let verdict = if outcome.passed { "PASS" } else { "FAIL" };
            println!("{} {verdict}: {}", command.name(), outcome.summary);
            for p in &outcome.outputs {
                println!("  wrote {}", p.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("splitmax {}: {e}", command.name());
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
