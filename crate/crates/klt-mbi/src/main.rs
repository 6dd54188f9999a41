use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use klt_mbi::{run, validate_file, RunConfig, RunError};

#[derive(Parser)]
#[command(name = "klt-mbi", version, about = "Distributed signal compression with multi-compressor KLT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trace, network and images.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the stopping tolerance; accepts `inf`.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            epsilon,
            max_iters,
            quiet,
        } => {
            let mut cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            if let Some(e) = epsilon {
                cfg.mbi.epsilon = e;
            }
            if let Some(n) = max_iters {
                cfg.mbi.max_iterations = n;
            }
            match run(&cfg) {
                Ok(summary) => {
                    if !quiet {
                        println!("{}", summary.report());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Validate { config } => match validate_file(&config) {
            Ok(report) => {
                println!("config ok");
                for line in report.summary {
                    println!("  {line}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
