use std::collections::{BTreeMap, HashMap};

use crate::corpus::{BagOfWords, ClickLog};

/// Default cap on the bag-of-words query vocabulary.
pub const DEFAULT_VOCAB_CAP: usize = 50_000;

/// Ordered word list defining the axes of bag-of-words query vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Words in axis order; duplicates after the first are ignored.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Self {
            words: Vec::new(),
            index: HashMap::new(),
        };
        for w in words {
            let w = w.into();
            if !out.index.contains_key(&w) {
                out.index.insert(w.clone(), out.words.len());
                out.words.push(w);
            }
        }
        out
    }

    /// The `cap` most frequent words of the log's distinct queries, by
    /// descending frequency then ascending word.
    pub fn from_log(log: &ClickLog, cap: usize) -> Self {
        let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
        for q in log.queries() {
            for w in q.bag.tokens() {
                *freq.entry(w.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(cap);
        Self::new(ranked.into_iter().map(|(w, _)| w.to_string()))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Sorted, deduplicated axis indices of the in-vocabulary query words.
    pub fn encode(&self, q: &BagOfWords) -> Vec<usize> {
        let mut idx: Vec<usize> = q.tokens().iter().filter_map(|w| self.get(w)).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}
