//! Experiment harness behind the `sample` binary.
//!
//! Experiments are declared in flat `key = value` config files (see
//! [`config`]), run deterministically from a mandatory seed, and emit CSV
//! result tables plus self-contained SVG plots. Replicates are parallelized
//! with one counter-derived RNG stream per `(sampler, replicate)` pair, so
//! the output bytes never depend on the worker count.

pub mod config;
pub mod experiments;
pub mod output;
pub mod svg;

/// Harness-level failure, split by exit code.
#[derive(Debug)]
pub enum HarnessError {
    /// Bad config file or invalid option combination (exit code 2).
    Config(String),
    /// Numerical or runtime failure while executing (exit code 3).
    Run(String),
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Config(msg) => write!(f, "config error: {msg}"),
            HarnessError::Run(msg) => write!(f, "run error: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ex2mcmc::Error> for HarnessError {
    fn from(e: ex2mcmc::Error) -> Self {
        HarnessError::Run(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Run(format!("i/o: {e}"))
    }
}

pub type HarnessResult<T> = Result<T, HarnessError>;
