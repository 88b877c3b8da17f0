//! Matching-based scorers built directly on the click log.
//!
//! `image2text` propagates the logged queries of an image's visual
//! neighbors into text space; `text2image` represents a query by the
//! click-weighted images of its textual neighbors and matches visually.

use std::collections::HashMap;

use crate::corpus::{BagOfWords, ClickLog, FeatureStore};
use crate::error::{Error, Result};
use crate::similarity::{jaccard, knn_images, knn_queries, top_k, NeighborList, VisualSimilarity};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborModelConfig {
    /// Visual neighbors per image for image2text.
    pub k_i2t: usize,
    /// Textual neighbors per query for text2image.
    pub k_t2i: usize,
    /// Cap on the candidate images representing a query.
    pub k_prime: usize,
    pub similarity: VisualSimilarity,
}

impl Default for NeighborModelConfig {
    fn default() -> Self {
        Self {
            k_i2t: 50,
            k_t2i: 30,
            k_prime: 100,
            similarity: VisualSimilarity::InverseEuclidean,
        }
    }
}

impl NeighborModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_i2t == 0 || self.k_t2i == 0 || self.k_prime == 0 {
            return Err(Error::Config(
                "k_i2t, k_t2i and k_prime must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Log-scaled click weight.
pub fn click_weight(click: u64) -> f64 {
    (click as f64).ln_1p()
}

/// Mean over the image's logged queries of `jaccard(q, q_j) * log(1 + click_j)`;
/// zero for an image with no log entries.
pub fn sim_i2t(image_id: &str, q: &BagOfWords, log: &ClickLog) -> f64 {
    let triads = log.image_triads(image_id);
    if triads.is_empty() {
        return 0.0;
    }
    let total: f64 = triads
        .iter()
        .map(|&t| {
            let t = log.triad(t);
            jaccard(q, &t.query) * click_weight(t.click)
        })
        .sum();
    total / triads.len() as f64
}

/// image2text score from precomputed visual neighbors of the test image.
pub fn image2text_from_neighbors(
    neighbors: &NeighborList<String>,
    q: &BagOfWords,
    log: &ClickLog,
) -> f64 {
    if neighbors.is_empty() {
        return 0.0;
    }
    let total: f64 = neighbors
        .iter()
        .map(|(id, sim)| sim * sim_i2t(id, q, log))
        .sum();
    total / neighbors.len() as f64
}

/// `(1/k) * sum_i sim(x, x_i) * sim_i2t(x_i, q)` over the k nearest
/// neighbors of `x` in `store`.
pub fn score_image2text(
    x: &[f64],
    q: &BagOfWords,
    log: &ClickLog,
    store: &FeatureStore,
    cfg: &NeighborModelConfig,
) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let neighbors = knn_images(x, store, cfg.k_i2t, cfg.similarity)?;
    Ok(image2text_from_neighbors(&neighbors, q, log))
}

/// A query represented by click-weighted candidate images.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryImageProfile {
    pub query: BagOfWords,
    /// `(image_id, sim_t2i)`, score descending then id ascending.
    pub candidates: Vec<(String, f64)>,
    /// Number of textual neighbors requested: 1 when the query is in the log.
    pub k_used: usize,
}

/// Builds the text2image representation of `q`.
///
/// When `q`'s token multiset is logged, only that query is used. Otherwise
/// the `k_t2i` most Jaccard-similar logged queries are. Each clicked image
/// of neighbor `q_j` gains `log(1 + click) * jaccard(q, q_j)`, accumulated
/// over neighbors.
pub fn build_profile(
    q: &BagOfWords,
    log: &ClickLog,
    cfg: &NeighborModelConfig,
) -> QueryImageProfile {
    let key = q.key();
    let (neighbors, k_used) = match log.query(&key) {
        Some(_) => {
            let idx = log
                .queries()
                .binary_search_by(|lq| lq.key.cmp(&key))
                .expect("query present in index");
            (vec![(idx, jaccard(q, &log.queries()[idx].bag))], 1)
        }
        None => (knn_queries(q, log, cfg.k_t2i).entries, cfg.k_t2i),
    };

    let mut acc: HashMap<&str, f64> = HashMap::new();
    for (qi, qsim) in neighbors {
        for &t in &log.queries()[qi].triads {
            let t = log.triad(t);
            *acc.entry(t.image_id.as_str()).or_insert(0.0) += click_weight(t.click) * qsim;
        }
    }
    let candidates = top_k(acc.into_iter().collect(), cfg.k_prime)
        .into_iter()
        .map(|(id, s)| (id.to_string(), s))
        .collect();
    QueryImageProfile {
        query: q.clone(),
        candidates,
        k_used,
    }
}

/// `(1/k') * sum_i sim(x, x_i) * sim_t2i(x_i, q)` over the profile's
/// candidates; candidates without features are skipped and not counted.
pub fn score_text2image(
    x: &[f64],
    profile: &QueryImageProfile,
    store: &FeatureStore,
    similarity: VisualSimilarity,
) -> Result<f64> {
    if x.len() != store.dim() {
        return Err(Error::DimensionMismatch {
            expected: store.dim(),
            found: x.len(),
        });
    }
    let mut used = 0usize;
    let mut total = 0.0;
    for (id, s) in &profile.candidates {
        if let Some(v) = store.get(id) {
            total += similarity.eval(x, v)? * s;
            used += 1;
        }
    }
    Ok(if used == 0 { 0.0 } else { total / used as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Normalizer, Triad};
    use approx::assert_relative_eq;

    fn bag(words: &[&str]) -> BagOfWords {
        BagOfWords::from_tokens(words.iter().copied())
    }

    fn log(rows: &[(&str, &str, u64)]) -> ClickLog {
        let n = Normalizer::default();
        ClickLog::from_triads(rows.iter().map(|(q, i, c)| Triad {
            query: n.preprocess(q).unwrap(),
            raw_query: q.to_string(),
            image_id: i.to_string(),
            click: *c,
        }))
    }

    fn store(rows: &[(&str, &[f64])]) -> FeatureStore {
        let mut s = FeatureStore::new(rows[0].1.len()).unwrap();
        for (id, v) in rows {
            s.insert(*id, v).unwrap();
        }
        s
    }

    #[test]
    fn image2text_single_exact_neighbor() {
        let log = log(&[("flower", "img1", 1)]);
        let s = store(&[("img1", &[0.0, 0.0])]);
        let cfg = NeighborModelConfig {
            k_i2t: 1,
            ..Default::default()
        };
        let f = score_image2text(&[0.0, 0.0], &bag(&["flower"]), &log, &s, &cfg).unwrap();
        // sim = 1, m = 1, jaccard = 1, log(1 + 1).
        assert_relative_eq!(f, 2f64.ln());
    }

    #[test]
    fn image2text_disjoint_query_scores_zero() {
        let log = log(&[("flower", "img1", 5), ("red car", "img2", 3)]);
        let s = store(&[("img1", &[0.0]), ("img2", &[1.0])]);
        let f = score_image2text(
            &[0.2],
            &bag(&["dog"]),
            &log,
            &s,
            &NeighborModelConfig::default(),
        )
        .unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn image2text_averages_over_neighbor_queries() {
        // img1 has two queries: "red car" (jaccard 1 with q) and "blue car" (1/3).
        let log = log(&[("red car", "img1", 3), ("blue car", "img1", 7)]);
        let s = store(&[("img1", &[0.0])]);
        let cfg = NeighborModelConfig {
            k_i2t: 1,
            ..Default::default()
        };
        let f = score_image2text(&[0.0], &bag(&["red", "car"]), &log, &s, &cfg).unwrap();
        let expected = (1.0 * 4f64.ln() + (1.0 / 3.0) * 8f64.ln()) / 2.0;
        assert_relative_eq!(f, expected, epsilon = 1e-12);
    }

    #[test]
    fn image2text_neighbors_without_log_entries_count_in_k() {
        let log = log(&[("flower", "img1", 1)]);
        let s = store(&[("img1", &[0.0]), ("img9", &[0.0])]);
        let cfg = NeighborModelConfig {
            k_i2t: 2,
            ..Default::default()
        };
        let f = score_image2text(&[0.0], &bag(&["flower"]), &log, &s, &cfg).unwrap();
        assert_relative_eq!(f, 2f64.ln() / 2.0);
    }

    #[test]
    fn doubling_clicks_increases_image2text() {
        let rows = [
            ("red car", "img1", 3),
            ("car", "img2", 2),
            ("blue car", "img2", 5),
        ];
        let doubled: Vec<_> = rows.iter().map(|(q, i, c)| (*q, *i, c * 2)).collect();
        let s = store(&[("img1", &[0.0, 1.0]), ("img2", &[1.0, 0.0])]);
        let q = bag(&["red", "car"]);
        let cfg = NeighborModelConfig::default();
        let a = score_image2text(&[0.3, 0.3], &q, &log(&rows), &s, &cfg).unwrap();
        let b = score_image2text(&[0.3, 0.3], &q, &log(&doubled), &s, &cfg).unwrap();
        assert!(a > 0.0 && b > a);
    }

    #[test]
    fn profile_exact_match_uses_one_neighbor() {
        let log = log(&[("flower", "img1", 1), ("red flower", "img2", 9)]);
        let p = build_profile(&bag(&["flower"]), &log, &NeighborModelConfig::default());
        assert_eq!(p.k_used, 1);
        assert_eq!(p.candidates.len(), 1);
        assert_eq!(p.candidates[0].0, "img1");
        assert_relative_eq!(p.candidates[0].1, 2f64.ln());
    }

    #[test]
    fn profile_disjoint_query_is_empty() {
        let log = log(&[("flower", "img1", 1)]);
        let p = build_profile(&bag(&["car"]), &log, &NeighborModelConfig::default());
        assert!(p.candidates.is_empty());
        assert_eq!(p.k_used, 30);
    }

    #[test]
    fn profile_accumulates_over_neighbor_queries() {
        // q = "red car dog" is not logged; neighbors "red car" (2/3) and "car dog" (2/3).
        let log = log(&[
            ("red car", "img1", 1),
            ("car dog", "img1", 3),
            ("car dog", "img2", 1),
        ]);
        let p = build_profile(
            &bag(&["red", "car", "dog"]),
            &log,
            &NeighborModelConfig::default(),
        );
        assert_eq!(p.k_used, 30);
        let img1 = (2.0 / 3.0) * 2f64.ln() + (2.0 / 3.0) * 4f64.ln();
        let img2 = (2.0 / 3.0) * 2f64.ln();
        assert_eq!(p.candidates.len(), 2);
        assert_eq!(p.candidates[0].0, "img1");
        assert_relative_eq!(p.candidates[0].1, img1, epsilon = 1e-12);
        assert_relative_eq!(p.candidates[1].1, img2, epsilon = 1e-12);
    }

    #[test]
    fn profile_is_capped_at_k_prime() {
        let rows: Vec<(String, String, u64)> = (0..10)
            .map(|i| ("dog".to_string(), format!("img{i}"), i + 1))
            .collect();
        let rows: Vec<(&str, &str, u64)> = rows
            .iter()
            .map(|(q, i, c)| (q.as_str(), i.as_str(), *c))
            .collect();
        let cfg = NeighborModelConfig {
            k_prime: 3,
            ..Default::default()
        };
        let p = build_profile(&bag(&["dog"]), &log(&rows), &cfg);
        let ids: Vec<_> = p.candidates.iter().map(|c| c.0.as_str()).collect();
        assert_eq!(ids, ["img9", "img8", "img7"]);
    }

    #[test]
    fn text2image_single_candidate() {
        let p = QueryImageProfile {
            query: bag(&["flower"]),
            candidates: vec![("img1".into(), 1.0)],
            k_used: 1,
        };
        let s = store(&[("img1", &[0.5, 0.5])]);
        assert_eq!(
            score_text2image(&[0.5, 0.5], &p, &s, VisualSimilarity::default()).unwrap(),
            1.0
        );
        let empty = QueryImageProfile {
            candidates: vec![],
            ..p
        };
        assert_eq!(
            score_text2image(&[0.5, 0.5], &empty, &s, VisualSimilarity::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn text2image_skips_candidates_without_features() {
        let p = QueryImageProfile {
            query: bag(&["flower"]),
            candidates: vec![("img1".into(), 2.0), ("missing".into(), 5.0)],
            k_used: 1,
        };
        let s = store(&[("img1", &[0.0])]);
        assert_eq!(
            score_text2image(&[0.0], &p, &s, VisualSimilarity::default()).unwrap(),
            2.0
        );
    }

    #[test]
    fn text2image_scales_linearly() {
        let s = store(&[("a", &[0.0]), ("b", &[1.0]), ("c", &[3.0])]);
        let p = QueryImageProfile {
            query: bag(&["x"]),
            candidates: vec![("a".into(), 0.7), ("b".into(), 0.4), ("c".into(), 0.1)],
            k_used: 30,
        };
        let scaled = QueryImageProfile {
            candidates: p
                .candidates
                .iter()
                .map(|(i, v)| (i.clone(), v * 3.5))
                .collect(),
            ..p.clone()
        };
        let tests = [[0.2], [1.4], [2.9], [-1.0]];
        let base: Vec<f64> = tests
            .iter()
            .map(|x| score_text2image(x, &p, &s, VisualSimilarity::default()).unwrap())
            .collect();
        let up: Vec<f64> = tests
            .iter()
            .map(|x| score_text2image(x, &scaled, &s, VisualSimilarity::default()).unwrap())
            .collect();
        for (a, b) in base.iter().zip(&up) {
            assert_relative_eq!(b / a, 3.5, epsilon = 1e-12);
        }
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[j].total_cmp(&v[i]));
            idx
        };
        assert_eq!(order(&base), order(&up));
    }

    #[test]
    fn duality_on_a_symmetric_toy_corpus() {
        let log = log(&[("flower", "img1", 6)]);
        let s = store(&[("img1", &[1.0, 2.0])]);
        let q = bag(&["flower"]);
        let cfg = NeighborModelConfig::default();
        let i2t = score_image2text(&[1.0, 2.0], &q, &log, &s, &cfg).unwrap();
        let p = build_profile(&q, &log, &cfg);
        let t2i = score_text2image(&[1.0, 2.0], &p, &s, cfg.similarity).unwrap();
        assert_relative_eq!(i2t, 7f64.ln());
        assert_relative_eq!(t2i, 7f64.ln());
    }
}
