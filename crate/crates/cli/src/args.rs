use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "salab",
    version,
    about = "Stationary behavior of constant-stepsize stochastic approximation"
)]
pub struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for chain ensembles (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Validate inputs and report the plan without writing files.
    #[arg(long, global = true)]
    pub dry_run: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run chain ensembles for every configured stepsize.
    Simulate,
    /// Solve the Lyapunov equation for the predicted limiting covariance.
    Predict,
    /// Search for the power-law scaling exponent of the drift.
    FindScaling,
    /// Simulate and test the samples against the predicted limit.
    Test,
    /// Compare the SA chain with Euler–Maruyama at matching stepsize.
    EmCompare,
    /// Regenerate the data behind a built-in figure.
    Figure {
        /// One of fig1, fig2, fig3, fig4, fig5, fig10, fig11, fig12.
        name: String,
    },
    /// find-scaling, simulate, predict and test in sequence.
    Pipeline,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Predict => "predict",
            Command::FindScaling => "find-scaling",
            Command::Test => "test",
            Command::EmCompare => "em-compare",
            Command::Figure { .. } => "figure",
            Command::Pipeline => "pipeline",
        }
    }
}
