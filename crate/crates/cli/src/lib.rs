//! Command-line driver: configuration loading, subcommand dispatch and
//! CSV/JSON persistence on top of `salab-core`.

pub mod args;
pub mod commands;
pub mod error;
pub mod figures;
pub mod output;

use std::fs;
use std::path::PathBuf;

use salab_core::config::{validate_config, ExperimentConfig, ValidatedConfig};

pub use args::{Cli, Command};
pub use error::{CliError, Result};
pub use output::{Output, RunManifest};

/// Reads, overrides and validates a configuration file.
pub fn load_config(cli: &Cli) -> Result<Option<ValidatedConfig>> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut raw = ExperimentConfig::parse(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = cli.seed {
        raw.seed = seed;
    }
    if let Some(out) = &cli.out {
        raw.output_dir = out.clone();
    }
    Ok(Some(validate_config(&raw)?))
}

/// Executes one invocation and returns its manifest.
pub fn run(cli: &Cli) -> Result<RunManifest> {
    match cli.threads {
        Some(0) => Err(CliError::Config("--threads must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<RunManifest> {
    let cfg = load_config(cli)?;
    if let Command::Figure { name } = &cli.command {
        let dir = cli
            .out
            .clone()
            .or_else(|| cfg.as_ref().map(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"));
        let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
        let mut out = Output::new(&dir, &format!("figure {name}"), seed, None, cli.dry_run);
        let mut session = figures::FigureSession::new(seed);
        figures::run_figure(name, &mut session, &mut out)?;
        return out.finish();
    }
    let cfg =
        cfg.ok_or_else(|| CliError::Config(format!("`{}` requires --config", cli.command.name())))?;
    let mut out = Output::new(
        &cfg.output_dir,
        cli.command.name(),
        cfg.seed,
        Some(cfg.source.to_text()),
        cli.dry_run,
    );
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg, &mut out)?,
        Command::Predict => commands::cmd_predict(&cfg, &mut out)?,
        Command::FindScaling => commands::cmd_find_scaling(&cfg, &mut out)?,
        Command::Test => commands::cmd_test(&cfg, &mut out)?,
        Command::EmCompare => commands::cmd_em_compare(&cfg, &mut out)?,
        Command::Pipeline => commands::cmd_pipeline(&cfg, &mut out)?,
        Command::Figure { .. } => unreachable!("handled above"),
    }
    out.finish()
}
