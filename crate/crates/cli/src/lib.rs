//! The `fiscal-tiebout` command line: configuration loading, command
//! dispatch and deterministic output.

pub mod config;
pub mod equilibrium;
pub mod error;
pub mod output;
pub mod policy;
pub mod rdd;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "fiscal-tiebout", version, about = "Tiebout competition, school-spending policy and RDD runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Housing-market and spending-game equilibria.
    Equilibrium {
        #[command(subcommand)]
        sub: EquilibriumCommand,
    },
    /// Caps, fees and floors on school spending.
    Policy {
        #[command(subcommand)]
        sub: PolicyCommand,
    },
    /// Synthetic referendum panels and discontinuity estimates.
    Rdd {
        #[command(subcommand)]
        sub: RddCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum EquilibriumCommand {
    /// Solve the spending game and write the market equilibrium.
    Solve(RunArgs),
    /// Check market clearing, incentive compatibility and comparative statics.
    Audit(RunArgs),
}

#[derive(Debug, Subcommand)]
pub enum PolicyCommand {
    /// Gap-preserving Pareto caps.
    Caps(RunArgs),
    /// Fees on spending above thresholds, redistributed as transfers.
    Fees(RunArgs),
    /// Common spending floors.
    Floor(RunArgs),
}

#[derive(Debug, Subcommand)]
pub enum RddCommand {
    /// Write a synthetic panel and its contiguity graph.
    Simulate(RunArgs),
    /// Estimate discontinuities on a panel.
    Estimate(RunArgs),
    /// Coverage of the estimators over simulated panels.
    Montecarlo(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// State shared by every command.
pub struct RunContext {
    pub config: ScenarioConfig,
    pub config_dir: PathBuf,
    pub seed: u64,
    pub out: OutputDir,
}

type Handler = fn(&mut RunContext) -> Result<()>;

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs, Handler) {
        use EquilibriumCommand as E;
        use PolicyCommand as P;
        use RddCommand as R;
        match self {
            Command::Equilibrium { sub: E::Solve(a) } => ("equilibrium solve", a, equilibrium::solve),
            Command::Equilibrium { sub: E::Audit(a) } => ("equilibrium audit", a, equilibrium::audit),
            Command::Policy { sub: P::Caps(a) } => ("policy caps", a, policy::caps),
            Command::Policy { sub: P::Fees(a) } => ("policy fees", a, policy::fees),
            Command::Policy { sub: P::Floor(a) } => ("policy floor", a, policy::floor),
            Command::Rdd { sub: R::Simulate(a) } => ("rdd simulate", a, rdd::simulate),
            Command::Rdd { sub: R::Estimate(a) } => ("rdd estimate", a, rdd::estimate),
            Command::Rdd { sub: R::Montecarlo(a) } => ("rdd montecarlo", a, rdd::montecarlo),
        }
    }
}

/// Runs a parsed command; the worker pool must already be configured.
pub fn run(cli: &Cli) -> Result<()> {
    let (name, args, action) = cli.command.parts();
    let (config, bytes) = ScenarioConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(config.seed);
    let config_dir = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let out = OutputDir::create(&args.out)?;
    log::info!("{name}: config {}, seed {seed}", args.config.display());
    let mut ctx = RunContext { config, config_dir, seed, out };
    let result = action(&mut ctx);
    let normalized = ctx.config.normalized()?;
    ctx.out.write("config.normalized.toml", normalized.as_bytes())?;
    let manifest = ctx.out.finish(name, &bytes, seed)?;
    log::info!("{name}: wrote {} files", manifest.outputs.len());
    result
}

/// Threads requested on the command line.
pub fn threads(cli: &Cli) -> Option<usize> {
    cli.command.parts().1.threads
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}
