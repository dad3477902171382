//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown corpus format {0:?} (expected \"canonical\" or \"tldr-openai\")")]
    UnknownFormat(String),

    #[error("empty corpus: {path} contains no valid records")]
    EmptyCorpus { path: PathBuf },

    #[error(
        "{malformed} of {total} lines in {path} are malformed (> {limit:.0}% tolerated); first: {first}"
    )]
    MalformedExcess {
        path: PathBuf,
        malformed: usize,
        total: usize,
        limit: f64,
        first: String,
    },

    #[error("comparison has zero votes")]
    ZeroVotes,

    #[error("pairwise agreement undefined for fewer than 2 votes (got {0})")]
    TooFewVotes(u32),

    #[error("modal aggregation requires an odd vote count, got {0}")]
    EvenModalCount(u32),

    #[error("statistics over an empty record set")]
    EmptyRecords,

    #[error("test split of {test_n} does not leave a training pool (corpus size {corpus})")]
    SplitTooLarge { test_n: usize, corpus: usize },

    #[error("sampling {n} from a pool of {pool}")]
    InsufficientPool { n: usize, pool: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("correlation undefined: all values tied in {dimensions}")]
    AllTied { dimensions: String },

    #[error("correlation requires at least 2 observations, got {0}")]
    TooFewObservations(usize),

    #[error("empty reference token sequence")]
    EmptyReference,

    #[error("non-finite {quantity} at step {step}")]
    NonFinite { quantity: String, step: usize },

    #[error("no decidable test items: every comparison is vote-tied")]
    NoDecidableItems,

    #[error("unknown post id {0:?}")]
    UnknownPost(String),

    #[error("missing reference summary for post {0:?}")]
    MissingReference(String),

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("{0}")]
    Msg(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
