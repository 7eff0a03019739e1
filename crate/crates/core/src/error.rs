use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::network::Violation;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("topology has {} violation(s): {}", .0.len(), join_violations(.0))]
    Topology(Vec<Violation>),
    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AllocError {
    #[error("commodity {0} listed twice on one link")]
    DuplicateCommodity(u32),
    #[error("previous allocation {prev} exceeds budget {budget}")]
    PrevOverBudget { prev: u64, budget: u64 },
    #[error("k cap must be a finite number >= 1, got {0}")]
    BadKCap(String),
    #[error("link has zero budget but carries commodities")]
    ZeroBudget,
    #[error("oracle guard: {commodities} commodities / budget {budget} too large to enumerate")]
    OracleGuard { commodities: usize, budget: u64 },
    #[error("split oracle guard: {hops} next hops / total {total} too large to enumerate")]
    SplitGuard { hops: usize, total: u64 },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error("{0}")]
    Unsupported(String),
    #[error("empty metrics window [{0}, {1})")]
    EmptyWindow(u64, u64),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
