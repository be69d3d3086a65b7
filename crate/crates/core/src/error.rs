use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("not a repository: {0}")]
    NotARepository(PathBuf),

    #[error("failed to clone {url}: {message}")]
    Clone { url: String, message: String },

    #[error("repository has no resolvable default branch: {0}")]
    NoDefaultBranch(String),

    #[error("invalid commit id {0:?}: expected 40 hexadecimal characters")]
    InvalidCommitId(String),

    #[error("commit not found: {0}")]
    UnresolvedCommit(String),

    #[error("file {path} does not exist at {commit}")]
    MissingFile { commit: String, path: String },

    #[error("line {line} is out of range for {path} ({len} lines)")]
    LineOutOfRange { path: String, line: usize, len: usize },

    #[error("history window starts at {oldest_time}, after the start commit time {start_time}")]
    InvalidWindow { oldest_time: i64, start_time: i64 },

    #[error("factor must satisfy 0 < factor <= 1, got {0}")]
    InvalidFactor(String),

    #[error("issue-date offset must lie in [0, 1], got {0}")]
    InvalidOffset(f64),

    #[error("bug-inducing commit time {bic_time} is after fix commit time {fc_time}")]
    BicAfterFix { bic_time: i64, fc_time: i64 },

    #[error("the fix commit modifies no tracked methods")]
    EmptyFixChangeSet,

    #[error("row {index} out of range for a matrix with {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },

    #[error("an issue date is required when the issue or one-commit filter is enabled")]
    MissingIssueDate,

    #[error("prediction/oracle mismatch: {0}")]
    IdMismatch(String),

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Git(#[from] git2::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
