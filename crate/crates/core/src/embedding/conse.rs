use super::devise::mean_pool;
use super::matrix::dot;
use crate::corpus::{EmbeddingTable, LabelPrediction};
use crate::error::{Error, Result};

/// Probability-weighted convex combination of the predicted labels' word
/// vectors. Multi-word labels are mean-pooled over their in-table words;
/// labels with no in-table word are skipped and excluded from the
/// normalizer.
pub fn conse_embed_image(
    pred: &LabelPrediction,
    table: &EmbeddingTable,
    image_id: &str,
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; table.dim()];
    let mut z = 0.0;
    for (label, p) in &pred.labels {
        let lowered = label.to_lowercase();
        let Some(v) = mean_pool(lowered.split_whitespace(), table) else {
            continue;
        };
        acc.iter_mut().zip(&v).for_each(|(a, b)| *a += p * b);
        z += p;
    }
    if z == 0.0 {
        return Err(Error::NoResolvableLabel(image_id.to_string()));
    }
    acc.iter_mut().for_each(|a| *a /= z);
    Ok(acc)
}

/// Cosine similarity.
pub fn conse_score(image_emb: &[f64], query_emb: &[f64]) -> Result<f64> {
    if image_emb.len() != query_emb.len() {
        return Err(Error::DimensionMismatch {
            expected: image_emb.len(),
            found: query_emb.len(),
        });
    }
    let na = dot(image_emb, image_emb).sqrt();
    let nb = dot(query_emb, query_emb).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(image_emb, query_emb) / (na * nb)).clamp(-1.0, 1.0))
}
