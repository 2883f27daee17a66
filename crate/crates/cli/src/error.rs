use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] jetham_core::Error),
    #[error("unknown object `{name}`; expected one of: {}", .known.join(", "))]
    UnknownObject { name: String, known: Vec<&'static str> },
}

pub type Result<T> = std::result::Result<T, CliError>;

/// 0 on pass, 2 on a residual failure, 3 on anything that prevented a verdict.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 2;
    pub const CONFIG: i32 = 3;
}
