//! Input artifacts: click logs, dense feature and embedding tables,
//! relevance judgments, classifier label predictions, and query text
//! normalization.

mod clicklog;
mod dense;
mod judgments;
mod labels;
mod normalize;

pub use clicklog::{ClickLog, ClickLogReport, LoggedQuery, Triad};
pub use dense::{DenseReport, DenseTable, EmbeddingTable, FeatureStore};
pub use judgments::{Grade, JudgmentReport, JudgmentSet};
pub use labels::{LabelPrediction, LabelPredictions};
pub use normalize::{
    lemmatize, BagOfWords, Normalizer, QueryKey, DOMAIN_STOPWORDS, ENGLISH_STOPWORDS,
};

/// Parser strictness. Lenient parsing skips malformed lines and counts them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    pub strict: bool,
}

impl ParseOptions {
    pub fn strict() -> Self {
        Self { strict: true }
    }
}

/// Reads a word list file: one entry per line, `#` starts a comment.
pub fn read_word_list(path: &std::path::Path) -> crate::Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
