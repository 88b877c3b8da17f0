use super::matrix::{dot, Matrix};
use super::vocab::Vocabulary;
use crate::corpus::BagOfWords;
use crate::error::{Error, Result};

/// Paired linear projections of images and bag-of-words queries into a
/// common space, scored by inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiModel {
    /// `d_c x d_i`.
    pub image_proj: Matrix,
    /// `d_c x d_t`, one column per vocabulary word.
    pub text_proj: Matrix,
    pub vocab: Vocabulary,
}

impl PsiModel {
    pub fn new(image_proj: Matrix, text_proj: Matrix, vocab: Vocabulary) -> Result<Self> {
        if image_proj.rows() != text_proj.rows() {
            return Err(Error::DimensionMismatch {
                expected: image_proj.rows(),
                found: text_proj.rows(),
            });
        }
        if text_proj.cols() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                found: text_proj.cols(),
            });
        }
        Ok(Self {
            image_proj,
            text_proj,
            vocab,
        })
    }

    pub fn common_dim(&self) -> usize {
        self.image_proj.rows()
    }

    pub fn image_dim(&self) -> usize {
        self.image_proj.cols()
    }

    /// Vocabulary axes of the binary query vector.
    pub fn encode_query(&self, q: &BagOfWords) -> Result<Vec<usize>> {
        let idx = self.vocab.encode(q);
        if idx.is_empty() {
            return Err(Error::EmptyQueryEncoding);
        }
        Ok(idx)
    }

    /// `W_i x`.
    pub fn embed_image(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.image_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.image_dim(),
                found: x.len(),
            });
        }
        Ok(self.image_proj.mul_vec(x))
    }

    /// `W_t q` for an encoded query.
    pub fn embed_encoded(&self, encoded: &[usize]) -> Vec<f64> {
        self.text_proj.sum_columns(encoded)
    }

    pub fn embed_query(&self, q: &BagOfWords) -> Result<Vec<f64>> {
        Ok(self.embed_encoded(&self.encode_query(q)?))
    }

    /// `(W_i x)^T (W_t q)`; out-of-vocabulary query words are dropped.
    pub fn score(&self, x: &[f64], q: &BagOfWords) -> Result<f64> {
        let t = self.embed_query(q)?;
        Ok(dot(&self.embed_image(x)?, &t))
    }
}
