//! File formats and subcommands of the `automn` command-line tool.

use std::path::PathBuf;

use automn_core::Error as CoreError;
use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod io;
pub mod model;
pub mod render;

/// A problem with the user's input: bad config, malformed file, inconsistent
/// dimensions. Exits with status 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// Input-validation errors from the core become [`Invalid`]; numerical
/// failures stay runtime errors.
pub fn classify(e: CoreError) -> anyhow::Error {
    match e {
        CoreError::SiteOutOfRange { .. }
        | CoreError::LabelOutOfRange { .. }
        | CoreError::DimensionMismatch(_)
        | CoreError::InvalidArgument(_)
        | CoreError::EnumerationTooLarge { .. }
        | CoreError::EmptyCells(_)
        | CoreError::UnmappedClass { .. } => Invalid(e.to_string()).into(),
        other => other.into(),
    }
}

pub fn exit_code(e: &anyhow::Error) -> i32 {
    if e.chain().any(|c| c.is::<Invalid>()) {
        2
    } else {
        1
    }
}

#[derive(Debug, Parser)]
#[command(name = "automn", version, about = "Automultinomial lattice models: simulation, fitting and diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic arrangement and covariates.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Aggregate point observations onto a grid.
    Aggregate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Maximum pseudolikelihood fit.
    FitMple {
        #[arg(long)]
        config: PathBuf,
    },
    /// Double Metropolis-Hastings chains.
    FitDmh {
        #[arg(long)]
        config: PathBuf,
        /// Chains per inner-sweep count (overrides the config).
        #[arg(long)]
        chains: Option<usize>,
        /// Comma-separated inner-sweep counts (overrides the config).
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<usize>>,
    },
    /// Approximate curvature diagnostic of a chain.
    Diagnose {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gibbs prediction at the posterior-mean parameters.
    Predict {
        #[arg(long)]
        posterior: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sweeps: Option<usize>,
    },
    /// Posterior means and 95% intervals of a chain.
    Summarize {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an arrangement CSV as a binary PPM.
    Render {
        #[arg(long)]
        arrangement: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        cell_px: usize,
        /// Grid size for `site,label` files.
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
    },
    /// Exact log normalizer and moments by enumeration (tiny lattices).
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated parameters in flattening order; zeros if absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { config } => commands::simulate::run(&config),
        Command::Aggregate { config } => commands::aggregate::run(&config),
        Command::FitMple { config } => commands::fit_mple::run(&config),
        Command::FitDmh { config, chains, m_list } => commands::fit_dmh::run(&config, chains, m_list),
        Command::Diagnose { chain, config, out } => commands::diagnose::run(&chain, &config, out),
        Command::Predict { posterior, config, sweeps } => commands::predict::run(&posterior, &config, sweeps),
        Command::Summarize { chain, out } => commands::summarize::run(&chain, out),
        Command::Render { arrangement, out, cell_px, rows, cols } => {
            commands::render::run(&arrangement, &out, cell_px, rows, cols)
        }
        Command::Oracle { config, theta, out } => commands::oracle::run(&config, theta, out),
    }
}
