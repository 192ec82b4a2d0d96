use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use volrisk::config::{parse_levels, ConfigError, RunConfig};
use volrisk::pipeline::{self, AppError, Outcome};

/// EGARCH / DCC volatility fits and downside-risk reports over price CSVs.
#[derive(Debug, Parser)]
#[command(name = "volrisk", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated confidence levels, e.g. 0.90,0.95,0.99.
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Amount at risk W.
    #[arg(long = "portfolio-amount", global = true)]
    portfolio_amount: Option<f64>,
    /// Parse and check the configuration, then stop.
    #[arg(long, global = true)]
    validate: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Descriptive statistics, correlations, Jarque-Bera, ADF and KPSS.
    Describe,
    /// Jarque-Bera, ADF and KPSS only.
    Test,
    /// Per-asset volatility fits and the joint DCC fit.
    Fit,
    /// Gaussian, Cornish-Fisher and empirical VaR plus drawdowns.
    Risk,
    /// describe + fit + risk.
    Report,
    /// Seeded DCC-EGARCH panel as price CSVs.
    Simulate,
}

fn configure(cli: &Cli) -> Result<RunConfig, AppError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None if cli.command == Command::Simulate => RunConfig::default(),
        None => return Err(ConfigError::Invalid("--config is required for this command".into()).into()),
    };
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(l) = &cli.levels {
        cfg.levels = parse_levels(l)?;
    }
    if let Some(w) = cli.portfolio_amount {
        cfg.portfolio_amount = w;
    }
    cfg.validate(cli.command != Command::Simulate)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome, AppError> {
    let cfg = configure(cli)?;
    if cli.validate {
        println!("config ok: {} assets, {} periods, levels {:?}", cfg.assets.len(), cfg.periods.len(), cfg.levels);
        return Ok(Outcome { artifacts: Vec::new(), all_converged: true });
    }
    let outcome = if cli.command == Command::Simulate {
        pipeline::cmd_simulate(&cfg)?
    } else {
        let inputs = pipeline::load_inputs(&cfg)?;
        match cli.command {
            Command::Describe => pipeline::cmd_describe(&cfg, &inputs)?,
            Command::Test => pipeline::cmd_test(&cfg, &inputs)?,
            Command::Fit => pipeline::cmd_fit(&cfg, &inputs)?,
            Command::Risk => pipeline::cmd_risk(&cfg, &inputs)?,
            Command::Report => pipeline::cmd_report(&cfg, &inputs)?,
            Command::Simulate => unreachable!(),
        }
    };
    pipeline::write_artifacts(&cfg.output_dir, &outcome.artifacts)?;
    for a in &outcome.artifacts {
        println!("{}", cfg.output_dir.join(&a.name).display());
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VOLRISK_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) if o.all_converged => ExitCode::SUCCESS,
        Ok(_) => {
            log::error!("some models did not converge; outputs were written");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
