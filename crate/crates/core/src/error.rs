use std::path::PathBuf;

/// Errors produced while loading corpora, scoring, fusing or evaluating.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{}: malformed line {line}: {reason}", source_name.display())]
    MalformedLine {
        source_name: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("query {0:?} is empty after preprocessing")]
    EmptyAfterPreprocessing(String),

    #[error("no query word is in the model vocabulary")]
    EmptyQueryEncoding,

    #[error("every query word is out of the embedding vocabulary")]
    AllWordsOutOfVocabulary,

    #[error("no predicted label of image {0:?} resolves in the embedding table")]
    NoResolvableLabel(String),

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("score tables do not cover the same (query, image) pairs: {0}")]
    PairSetMismatch(String),

    #[error("judgment set is empty")]
    EmptyJudgments,

    #[error("invalid relevance grade {0}; expected one of 0, 2, 3")]
    InvalidGrade(i64),

    #[error("per-query score sets differ: {0}")]
    QuerySetMismatch(String),

    #[error("query has no tokens")]
    EmptyQuery,

    #[error("no score for query {query:?}, image {image:?}")]
    MissingScore { query: String, image: String },

    #[error("query {0:?} has no judgments")]
    UnjudgedQuery(String),

    #[error("statistic undefined: {0}")]
    Degenerate(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn malformed(
        source_name: &std::path::Path,
        line: usize,
        reason: impl Into<String>,
    ) -> Self {
        Error::MalformedLine {
            source_name: source_name.to_path_buf(),
            line,
            reason: reason.into(),
        }
    }
}
