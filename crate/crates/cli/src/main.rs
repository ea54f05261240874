use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ncd_opt_cli::commands;
use ncd_opt_cli::{CliError, Experiment, RawConfig};

#[derive(Parser)]
#[command(name = "ncd-opt", version, about = "Coordinate methods for f + phi - h: benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm for every replication.
    Run(Common),
    /// Check the config and print derived constants without running.
    Validate(Common),
    /// Write the synthetic dataset and its planted solution.
    GenData(Common),
    /// Optimality report for a saved iterate.
    Measure {
        #[command(flatten)]
        common: Common,
        /// Iterate file, one value per line.
        #[arg(long)]
        iterate: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "K=V")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "ncd-opt-out")]
    out: PathBuf,
    /// Base seed; replication r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long, env = "NCD_OPT_THREADS")]
    threads: Option<usize>,
}

impl Common {
    fn experiment(&self) -> Result<(RawConfig, Experiment), CliError> {
        let mut raw = match &self.config {
            Some(p) => RawConfig::from_file(p)?,
            None => RawConfig::default(),
        };
        for kv in &self.set {
            raw.set(kv)?;
        }
        if let Some(seed) = self.seed {
            raw.insert("seed", seed);
        }
        if self.threads == Some(0) {
            return Err(CliError::config("--threads must be at least 1"));
        }
        let exp = Experiment::from_raw(&raw)?;
        Ok((raw, exp))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let (raw, exp) = c.experiment()?;
            let summary = commands::run(&exp, &raw, &c.out, c.threads)?;
            let failed = summary.failed();
            println!(
                "{} runs, {failed} failed; results in {}",
                summary.runs.len(),
                summary.out_dir.display()
            );
            if failed > 0 {
                for r in summary.runs.iter().filter(|r| r.outcome.is_err()) {
                    eprintln!("{}: {}", r.run_id, r.outcome.as_ref().err().unwrap());
                }
                return Err(CliError::runtime(format!("{failed} runs failed")));
            }
        }
        Command::Validate(c) => {
            let (_, exp) = c.experiment()?;
            print!("{}", commands::validate(&exp)?);
            println!("config ok");
        }
        Command::GenData(c) => {
            let (_, exp) = c.experiment()?;
            for p in commands::gen_data(&exp, &c.out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Measure { common, iterate } => {
            let (_, exp) = common.experiment()?;
            print!("{}", commands::measure(&exp, &iterate)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
