//! `sample` — seeded, reproducible sampling experiments.
//!
//! ```text
//! sample run <config>         run an experiment from a key = value config
//! sample train-flow <config>  shorthand for the flex2-train experiment
//! sample theory <json>        print a full MALA constant report as JSON
//! ```
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure.

use clap::{Args, Parser, Subcommand};
use ex2mcmc_cli::config::{parse_config, ExperimentKind};
use ex2mcmc_cli::experiments::run_and_emit;
use ex2mcmc_cli::HarnessError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sample", about = "Explore-Exploit MCMC benchmark harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rayon worker threads (0 = automatic). Results never depend on this.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Train a flow proposal while sampling (the flex2-train experiment).
    TrainFlow {
        config: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate the MALA ergodicity constants for a JSON input
    /// {"strong_convexity":..,"hessian_bound":..,"third_derivative_bound":..,
    ///  "convexity_radius":..,"dim":..} and print the full report as JSON.
    Theory {
        input: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn install_threads(threads: usize) {
    if threads > 0 {
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Run { config, common } | Command::TrainFlow { config, common } => {
            install_threads(common.threads);
            let mut cfg = parse_config(&config)?;
            if matches!(
                std::env::args().nth(1).as_deref(),
                Some("train-flow")
            ) && cfg.experiment != ExperimentKind::Flex2Train
            {
                return Err(HarnessError::Config(
                    "train-flow expects a config with experiment = flex2-train".into(),
                ));
            }
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            if let Some(out) = common.out {
                cfg.output_dir = out;
            }
            let written = run_and_emit(&cfg)?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Theory { input, common } => {
            install_threads(common.threads);
            #[derive(serde::Deserialize)]
            struct TheoryInput {
                strong_convexity: f64,
                hessian_bound: f64,
                third_derivative_bound: f64,
                convexity_radius: f64,
                dim: usize,
            }
            let text = std::fs::read_to_string(&input)
                .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", input.display())))?;
            let parsed: TheoryInput = serde_json::from_str(&text)
                .map_err(|e| HarnessError::Config(format!("bad theory input: {e}")))?;
            let reg = ex2mcmc::theory::MalaRegularity::new(
                parsed.strong_convexity,
                parsed.hessian_bound,
                parsed.third_derivative_bound,
                parsed.convexity_radius,
            )
            .map_err(|e| HarnessError::Config(e.to_string()))?;
            let report = ex2mcmc::theory::mala_constants(&reg, parsed.dim)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| HarnessError::Run(format!("json: {e}")))?;
            println!("{json}");
            if let Some(out) = common.out {
                std::fs::create_dir_all(&out)?;
                std::fs::write(out.join("mala_constants.json"), json)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ HarnessError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}
