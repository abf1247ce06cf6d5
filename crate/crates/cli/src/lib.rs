//! Batch commands behind the `xscale` binary.
//!
//! Exit codes: 0 on success, 1 on I/O failure, 2 on invalid input or
//! usage. Diagnostics go to stderr; stdout stays empty.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;

pub use commands::{compare, rasterize, synth};

#[derive(Debug, Parser)]
#[command(
    name = "xscale",
    version,
    about = "Cross-scale agreement assessment of gridded surfaces"
)]
pub struct Cli {
    /// Worker threads; defaults to one per available core.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count points per cell of a lattice.
    Rasterize(RasterizeArgs),
    /// Compare a test grid against a reference grid across scales.
    Compare(CompareArgs),
    /// Generate a synthetic scene with known switch levels.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct RasterizeArgs {
    /// CSV with columns x, y and optionally weight.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub ncols: usize,
    #[arg(long)]
    pub nrows: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub xll: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub yll: f64,
    #[arg(long)]
    pub cellsize: f64,
    #[arg(long, default_value_t = -9999.0, allow_hyphen_values = true)]
    pub nodata: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Number of 2x aggregation steps.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Counts at or above this value are presence.
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
    /// linear, rank, or table:<json or path to json>.
    #[arg(long = "prob-map", default_value = "linear")]
    pub prob_map: MapArg,
    /// Probability at or above which a disagreement counts as offset-induced.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Probability mapping as given on the command line; a table source is
/// resolved when the command runs so that file errors exit as I/O.
#[derive(Clone, Debug, PartialEq)]
pub enum MapArg {
    Linear,
    Rank,
    Table(String),
}

impl std::str::FromStr for MapArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(MapArg::Linear),
            "rank" => Ok(MapArg::Rank),
            _ => match s.strip_prefix("table:") {
                Some(src) if !src.is_empty() => Ok(MapArg::Table(src.to_string())),
                _ => Err(format!("expected linear, rank or table:<json>, got `{s}`")),
            },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: xscale::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Core { source, .. } if is_io(source) => 1,
            _ => 2,
        }
    }
}

fn is_io(e: &xscale::Error) -> bool {
    match e {
        xscale::Error::Io(_) => true,
        xscale::Error::Csv(c) => c.is_io_error(),
        _ => false,
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    let dispatch = move || match cli.command {
        Command::Rasterize(a) => rasterize(&a),
        Command::Compare(a) => compare(&a),
        Command::Synth(a) => synth(&a),
    };
    match cli.threads {
        None => dispatch(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.into())
            .build()
            .map_err(|e| CliError::Invalid(format!("--threads: {e}")))?
            .install(dispatch),
    }
}
