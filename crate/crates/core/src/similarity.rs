//! Text and visual similarity primitives and exact k-nearest-neighbor search.

use std::cmp::Ordering;

use crate::corpus::{BagOfWords, ClickLog, FeatureStore};
use crate::error::{Error, Result};
use crate::par;

/// Ranked `(id, score)` pairs: score descending, id ascending on ties.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList<T> {
    pub entries: Vec<(T, f64)>,
    pub k: usize,
}

impl<T> NeighborList<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(T, f64)> {
        self.entries.iter()
    }
}

/// Descending by score, ascending by id.
pub(crate) fn rank_order<T: Ord>(a: &(T, f64), b: &(T, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// Keeps the `k` best entries under [`rank_order`], sorted.
pub(crate) fn top_k<T: Ord>(mut entries: Vec<(T, f64)>, k: usize) -> Vec<(T, f64)> {
    if k == 0 {
        return Vec::new();
    }
    if entries.len() > k {
        entries.select_nth_unstable_by(k - 1, rank_order);
        entries.truncate(k);
    }
    entries.sort_by(rank_order);
    entries
}

/// Jaccard coefficient of the two word sets; 0 when both are empty.
pub fn jaccard(a: &BagOfWords, b: &BagOfWords) -> f64 {
    let a = a.word_set();
    let b = b.word_set();
    let common = a.intersection(&b).count();
    let union = a.len() + b.len() - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// Image-to-image similarity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum VisualSimilarity {
    /// `1 / (1 + ||x - y||)`, in (0, 1].
    #[default]
    InverseEuclidean,
    /// Cosine of the two vectors, in [-1, 1]; 0 if either is the zero vector.
    Cosine,
}

impl VisualSimilarity {
    pub fn eval(self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims(x, y)?;
        Ok(match self {
            VisualSimilarity::InverseEuclidean => 1.0 / (1.0 + euclidean_unchecked(x, y)),
            VisualSimilarity::Cosine => {
                let (mut dot, mut nx, mut ny) = (0.0, 0.0, 0.0);
                for (a, b) in x.iter().zip(y) {
                    dot += a * b;
                    nx += a * a;
                    ny += b * b;
                }
                if nx == 0.0 || ny == 0.0 {
                    0.0
                } else {
                    dot / (nx.sqrt() * ny.sqrt())
                }
            }
        })
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(())
}

fn euclidean_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    Ok(euclidean_unchecked(x, y))
}

/// `1 / (1 + euclidean(x, y))`.
pub fn visual_sim(x: &[f64], y: &[f64]) -> Result<f64> {
    VisualSimilarity::InverseEuclidean.eval(x, y)
}

/// Exact brute-force k nearest images of `x`, scored by `sim`.
pub fn knn_images(
    x: &[f64],
    store: &FeatureStore,
    k: usize,
    sim: VisualSimilarity,
) -> Result<NeighborList<String>> {
    if x.len() != store.dim() {
        return Err(Error::DimensionMismatch {
            expected: store.dim(),
            found: x.len(),
        });
    }
    let table = store.table();
    let scored = par::map_range(table.len(), |row| {
        let score = sim.eval(x, table.row(row)).expect("dimensions checked");
        (row, score)
    });
    // Rank on (score, id) so the result does not depend on row order.
    let ids = table.ids();
    let entries: Vec<(&str, f64)> = scored
        .into_iter()
        .map(|(row, s)| (ids[row].as_str(), s))
        .collect();
    let entries = top_k(entries, k)
        .into_iter()
        .map(|(id, s)| (id.to_string(), s))
        .collect();
    Ok(NeighborList { entries, k })
}

/// Top-k distinct logged queries by Jaccard similarity to `q`.
///
/// Entries are indices into [`ClickLog::queries`]; zero-similarity queries
/// are excluded and ties break on the query key.
pub fn knn_queries(q: &BagOfWords, log: &ClickLog, k: usize) -> NeighborList<usize> {
    let queries = log.queries();
    let scored: Vec<(usize, f64)> = queries
        .iter()
        .enumerate()
        .map(|(i, lq)| (i, jaccard(q, &lq.bag)))
        .filter(|(_, s)| *s > 0.0)
        .collect();
    // Log queries are stored sorted by key, so index order is key order.
    let entries = top_k(scored, k);
    NeighborList { entries, k }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Normalizer, Triad};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bag(words: &[&str]) -> BagOfWords {
        BagOfWords::from_tokens(words.iter().copied())
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&bag(&["tattoo", "design"]), &bag(&["tattoo"])), 0.5);
        assert_eq!(jaccard(&bag(&["red", "car"]), &bag(&["car", "red"])), 1.0);
        assert_eq!(jaccard(&bag(&["dog"]), &bag(&["cat"])), 0.0);
        assert_eq!(jaccard(&bag(&[]), &bag(&[])), 0.0);
        assert_eq!(jaccard(&bag(&["dog", "dog"]), &bag(&["dog"])), 1.0);
    }

    #[test]
    fn visual_sim_examples() {
        assert_eq!(visual_sim(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_relative_eq!(visual_sim(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 1.0 / 6.0);
        assert_eq!(visual_sim(&[1.0], &[2.0]).unwrap(), 0.5);
        assert!(matches!(
            visual_sim(&[1.0], &[2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cosine_switch() {
        let c = VisualSimilarity::Cosine;
        assert_relative_eq!(c.eval(&[1.0, 0.0], &[2.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(c.eval(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert_eq!(c.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
    }

    fn line_store() -> FeatureStore {
        let mut s = FeatureStore::new(1).unwrap();
        s.insert("c", &[4.0]).unwrap();
        s.insert("a", &[0.0]).unwrap();
        s.insert("b", &[1.0]).unwrap();
        s
    }

    #[test]
    fn knn_self_first() {
        let nn = knn_images(&[0.0], &line_store(), 1, VisualSimilarity::default()).unwrap();
        assert_eq!(nn.entries, vec![("a".to_string(), 1.0)]);
    }

    #[test]
    fn knn_on_a_line_orders_by_distance() {
        // Distances from 0: a=0, b=1, c=4.
        let nn = knn_images(&[0.0], &line_store(), 10, VisualSimilarity::default()).unwrap();
        let got: Vec<_> = nn.entries.iter().map(|(id, s)| (id.as_str(), *s)).collect();
        assert_eq!(got, vec![("a", 1.0), ("b", 0.5), ("c", 0.2)]);
    }

    #[test]
    fn knn_ties_break_on_id() {
        let mut s = FeatureStore::new(1).unwrap();
        s.insert("z", &[1.0]).unwrap();
        s.insert("y", &[-1.0]).unwrap();
        let nn = knn_images(&[0.0], &s, 2, VisualSimilarity::default()).unwrap();
        assert_eq!(nn.entries[0].0, "y");
        assert_eq!(nn.entries[1].0, "z");
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

    #[test]
    fn knn_queries_exact_match_first() {
        let log = log(&[
            ("flower", "i1", 3),
            ("red flower", "i2", 1),
            ("car", "i3", 1),
        ]);
        let nn = knn_queries(&bag(&["flower"]), &log, 5);
        let keys: Vec<_> = nn
            .entries
            .iter()
            .map(|(i, s)| (log.queries()[*i].key.to_string(), *s))
            .collect();
        assert_eq!(
            keys,
            vec![("flower".to_string(), 1.0), ("flower red".to_string(), 0.5)]
        );
    }

    #[test]
    fn knn_queries_disjoint_is_empty() {
        let log = log(&[("flower", "i1", 3)]);
        assert!(knn_queries(&bag(&["car"]), &log, 5).is_empty());
    }

    #[test]
    fn knn_queries_word_order_variants_merge() {
        // "woman bicycle" and "bicycle woman" share one log key.
        let log = log(&[
            ("woman bicycle", "i1", 3),
            ("bicycle woman", "i2", 1),
            ("bike woman", "i3", 1),
        ]);
        let nn = knn_queries(&bag(&["woman", "bicycle"]), &log, 5);
        assert_eq!(nn.len(), 2);
        let first = &log.queries()[nn.entries[0].0];
        assert_eq!(nn.entries[0].1, 1.0);
        assert_eq!(first.triads.len(), 2);
        assert_eq!(log.queries()[nn.entries[1].0].key.to_string(), "bike woman");
        assert_relative_eq!(nn.entries[1].1, 1.0 / 3.0);
    }

    proptest! {
        #[test]
        fn jaccard_symmetric_and_bounded(
            a in prop::collection::vec("[a-d]", 0..5),
            b in prop::collection::vec("[a-d]", 0..5),
        ) {
            let (a, b) = (BagOfWords::from_tokens(a), BagOfWords::from_tokens(b));
            let ab = jaccard(&a, &b);
            prop_assert_eq!(ab, jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            let equal_sets = !a.is_empty() && a.word_set() == b.word_set();
            prop_assert_eq!(ab == 1.0, equal_sets);
        }

        #[test]
        fn visual_sim_orders_like_distance(
            x in prop::collection::vec(-10f64..10.0, 3),
            ys in prop::collection::vec(prop::collection::vec(-10f64..10.0, 3), 2..8),
        ) {
            let mut by_dist: Vec<usize> = (0..ys.len()).collect();
            by_dist.sort_by(|&i, &j| euclidean(&x, &ys[i]).unwrap().total_cmp(&euclidean(&x, &ys[j]).unwrap()).then(i.cmp(&j)));
            let mut by_sim: Vec<usize> = (0..ys.len()).collect();
            by_sim.sort_by(|&i, &j| visual_sim(&x, &ys[j]).unwrap().total_cmp(&visual_sim(&x, &ys[i]).unwrap()).then(i.cmp(&j)));
            prop_assert_eq!(by_dist, by_sim);
        }

        #[test]
        fn knn_independent_of_insertion_order(
            rows in prop::collection::btree_map("[a-z]{2}", prop::collection::vec(-3i8..3, 2), 1..15),
            k in 1usize..20,
        ) {
            let mut fwd = FeatureStore::new(2).unwrap();
            let mut rev = FeatureStore::new(2).unwrap();
            for (id, v) in &rows {
                fwd.insert(id.clone(), &[v[0] as f64, v[1] as f64]).unwrap();
            }
            for (id, v) in rows.iter().rev() {
                rev.insert(id.clone(), &[v[0] as f64, v[1] as f64]).unwrap();
            }
            let a = knn_images(&[0.0, 0.0], &fwd, k, VisualSimilarity::default()).unwrap();
            let b = knn_images(&[0.0, 0.0], &rev, k, VisualSimilarity::default()).unwrap();
            prop_assert_eq!(a.entries.len(), k.min(rows.len()));
            prop_assert_eq!(a, b);
        }
    }
}
