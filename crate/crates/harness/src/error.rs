use std::fmt::Display;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn config(field: &str, detail: impl Display) -> Self {
        Self::Config(format!("{field}: {detail}"))
    }

    pub fn numerical(detail: impl Display) -> Self {
        Self::Numerical(detail.to_string())
    }

    /// Process exit status: 1 invariant violation, 2 config error, 3
    /// numerical failure (I/O failures count as numerical).
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invariant(_) => 1,
            Self::Config(_) => 2,
            Self::Numerical(_) | Self::Io(_) => 3,
        }
    }
}
