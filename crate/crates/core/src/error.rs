use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the formula it feeds.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bisection bracket did not contain a sign change.
    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo:e}, f(hi) = {f_hi:e}): {context}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        context: String,
    },

    #[error("solver configuration: {0}")]
    Config(String),

    /// A range query covers more than one segment of the partition.
    #[error("range [{lo}, {hi}) straddles {first} and {second}")]
    Ambiguity {
        lo: f64,
        hi: f64,
        first: String,
        second: String,
    },

    #[error("lambda = {lambda} is below the table coverage starting at {coverage_lo}")]
    Range { lambda: f64, coverage_lo: f64 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("malformed plan table: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Ambiguity { .. } => 2,
            Error::Range { .. } => 3,
            Error::Config(_) | Error::Bracket { .. } => 4,
            Error::Verification(_) => 5,
            _ => 1,
        }
    }
}
