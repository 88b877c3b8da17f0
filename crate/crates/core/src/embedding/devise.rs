use super::matrix::{dot, Matrix};
use crate::corpus::{BagOfWords, EmbeddingTable};
use crate::error::{Error, Result};

/// Mean of the word vectors of the in-table query tokens, counting repeats.
pub fn devise_embed_query(q: &BagOfWords, table: &EmbeddingTable) -> Result<Vec<f64>> {
    mean_pool(q.tokens().iter().map(String::as_str), table).ok_or(Error::AllWordsOutOfVocabulary)
}

/// Mean of the vectors of the words found in `table`, or `None` if none is.
pub(crate) fn mean_pool<'a>(
    words: impl IntoIterator<Item = &'a str>,
    table: &EmbeddingTable,
) -> Option<Vec<f64>> {
    let mut acc = vec![0.0; table.dim()];
    let mut n = 0usize;
    for w in words {
        if let Some(v) = table.get(w) {
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    let inv = 1.0 / n as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Some(acc)
}

/// A trained image projection into a fixed word-embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviseModel {
    /// `d_c x d_i` with `d_c` equal to the table dimension.
    pub image_proj: Matrix,
    pub table: EmbeddingTable,
}

impl DeviseModel {
    pub fn new(image_proj: Matrix, table: EmbeddingTable) -> Result<Self> {
        if image_proj.rows() != table.dim() {
            return Err(Error::DimensionMismatch {
                expected: table.dim(),
                found: image_proj.rows(),
            });
        }
        Ok(Self { image_proj, table })
    }

    pub fn embed_image(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.image_proj.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.image_proj.cols(),
                found: x.len(),
            });
        }
        Ok(self.image_proj.mul_vec(x))
    }

    pub fn embed_query(&self, q: &BagOfWords) -> Result<Vec<f64>> {
        devise_embed_query(q, &self.table)
    }

    /// `(W_i x)^T phi(q)`.
    pub fn score(&self, x: &[f64], q: &BagOfWords) -> Result<f64> {
        let t = self.embed_query(q)?;
        Ok(dot(&self.embed_image(x)?, &t))
    }
}
