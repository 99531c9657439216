//! `rfscene` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
//! 3 data-format error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rfscene_core::Error;
use thiserror::Error;

mod evaluate;
mod generate;
mod oracle;
mod render;

pub use evaluate::{cmd_eval, EvalArgs};
pub use generate::{cmd_generate, GenArgs};
pub use oracle::{cmd_oracle_pred, ConfModel, OraclePredArgs};
pub use render::{cmd_render, RenderArgs};

#[derive(Debug, Parser)]
#[command(
    name = "rfscene",
    version,
    about = "Synthetic RF spectrogram datasets and detection scoring"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled spectrogram dataset.
    Gen(Box<GenArgs>),
    /// Write synthetic predictions derived from ground-truth labels.
    OraclePred(OraclePredArgs),
    /// Score prediction files against label files.
    Eval(EvalArgs),
    /// Re-synthesize one scene from its sidecar and write its image.
    Render(RenderArgs),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                Error::Config { .. } | Error::Argument(_) | Error::UnsupportedClass(_) => 1,
                Error::Io { .. } | Error::OutputExists(_) | Error::Image(_) => 2,
                Error::Parse { .. } | Error::Json { .. } | Error::Composition { .. } | Error::Data(_) => 3,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Runs one parsed command, writing its report lines to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => cmd_generate(&a, out),
        Command::OraclePred(a) => cmd_oracle_pred(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Render(a) => cmd_render(&a, out),
    }
}

pub(crate) fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    })?;
    Ok(())
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `W` or `WxH`.
pub(crate) fn parse_image_size(s: &str) -> Result<(u32, u32), String> {
    let parse = |v: &str| {
        v.trim()
            .parse::<u32>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("invalid image size {s:?}"))
    };
    match s.split_once(['x', 'X']) {
        Some((w, h)) => Ok((parse(w)?, parse(h)?)),
        None => parse(s).map(|n| (n, n)),
    }
}
