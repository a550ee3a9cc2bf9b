//! File formats, reports and the `bmfuse` command line on top of `bmfuse-core`.

use std::path::PathBuf;

use bmfuse_core::evaluation::EvalError;
use bmfuse_core::fusion::FusionError;
use bmfuse_core::normalization::NormError;
use bmfuse_core::score::ScoreError;
use bmfuse_core::synth::SynthError;
use thiserror::Error;

pub mod cli;
pub mod formats;
pub mod pipeline;
pub mod report;

pub use formats::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Config {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// 1 for usage errors, 2 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            // weights come straight from the command line
            Error::Fusion(FusionError::BadWeights { .. })
            | Error::Fusion(FusionError::WeightArityMismatch { .. })
            | Error::Fusion(FusionError::BadConfig(_))
            | Error::Eval(EvalError::BadTarget(_)) => 1,
            _ => 2,
        }
    }
}
