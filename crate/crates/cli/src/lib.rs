//! Pipeline driver and review server for the `igkit` command.

pub mod config;
pub mod inputs;
pub mod pipeline;
pub mod serve;

use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::PipelineConfig;
pub use pipeline::{run_pipeline, Manifest, StageRecord};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Classify,
    Tag,
    Split,
    Graph,
    Metrics,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Classify,
        Stage::Tag,
        Stage::Split,
        Stage::Graph,
        Stage::Metrics,
        Stage::Eval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Classify => "classify",
            Stage::Tag => "tag",
            Stage::Split => "split",
            Stage::Graph => "graph",
            Stage::Metrics => "metrics",
            Stage::Eval => "eval",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad config, missing or unreadable input file.
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("stage {stage} failed{}: {message}", at(.statement))]
    Stage {
        stage: Stage,
        statement: Option<String>,
        message: String,
    },
}

fn at(statement: &Option<String>) -> String {
    statement
        .as_ref()
        .map(|s| format!(" at {s}"))
        .unwrap_or_default()
}

impl PipelineError {
    pub fn input(path: impl AsRef<Path>, err: impl fmt::Display) -> Self {
        PipelineError::Input {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn stage(stage: Stage, statement: Option<&str>, err: impl fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            statement: statement.map(str::to_string),
            message: err.to_string(),
        }
    }

    /// Process exit status: 1 for input errors, 2 for stage failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Input { .. } => 1,
            PipelineError::Stage { .. } => 2,
        }
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
