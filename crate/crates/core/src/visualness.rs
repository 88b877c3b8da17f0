//! Query visualness: the fraction of a query's words covered by full
//! matches against a visual-concept vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::corpus::{read_word_list, BagOfWords, ClickLog, Normalizer};
use crate::error::{Error, Result};
use crate::par;

/// Normalized concept phrases.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptVocabulary {
    phrases: BTreeSet<Vec<String>>,
    max_len: usize,
}

impl ConceptVocabulary {
    /// Normalizes each phrase like a query; phrases that normalize to
    /// nothing are dropped.
    pub fn from_phrases<I, S>(phrases: I, normalizer: &Normalizer) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Self::default();
        vocab.extend(phrases, normalizer);
        vocab
    }

    /// Reads one phrase per line; `#` starts a comment line.
    pub fn from_path(path: &Path, normalizer: &Normalizer) -> Result<Self> {
        Ok(Self::from_phrases(read_word_list(path)?, normalizer))
    }

    /// Adds phrases, e.g. a celebrity list.
    pub fn extend<I, S>(&mut self, phrases: I, normalizer: &Normalizer)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for phrase in phrases {
            let tokens = normalizer.tokens(phrase.as_ref());
            if !tokens.is_empty() {
                self.max_len = self.max_len.max(tokens.len());
                self.phrases.insert(tokens);
            }
        }
    }

    pub fn contains(&self, tokens: &[String]) -> bool {
        tokens.len() <= self.max_len && self.phrases.contains(tokens)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn phrases(&self) -> impl Iterator<Item = &[String]> {
        self.phrases.iter().map(Vec::as_slice)
    }
}

/// How matched spans are chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MatchStrategy {
    /// Non-overlapping spans covering as many tokens as possible; ties go to
    /// the longest phrase at the leftmost position.
    #[default]
    MaxCoverage,
    /// Left-to-right scan taking the longest phrase at each position.
    GreedyLongest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedSpan {
    pub start: usize,
    pub len: usize,
    pub phrase: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisualClass {
    Visual,
    Nonvisual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisualnessReport {
    pub covered: usize,
    pub total: usize,
    pub spans: Vec<MatchedSpan>,
}

impl VisualnessReport {
    pub fn score(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }

    /// Visual iff the score exceeds the threshold.
    pub fn classify(&self, threshold: f64) -> VisualClass {
        if self.score() > threshold {
            VisualClass::Visual
        } else {
            VisualClass::Nonvisual
        }
    }
}

fn span(tokens: &[String], start: usize, len: usize) -> MatchedSpan {
    MatchedSpan {
        start,
        len,
        phrase: tokens[start..start + len].join(" "),
    }
}

fn greedy_cover(tokens: &[String], vocab: &ConceptVocabulary) -> Vec<MatchedSpan> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = (1..=vocab.max_len.min(tokens.len() - i))
            .rev()
            .find(|&len| vocab.contains(&tokens[i..i + len]));
        match longest {
            Some(len) => {
                spans.push(span(tokens, i, len));
                i += len;
            }
            None => i += 1,
        }
    }
    spans
}

fn max_cover(tokens: &[String], vocab: &ConceptVocabulary) -> Vec<MatchedSpan> {
    let n = tokens.len();
    // best[i]: most tokens coverable in tokens[i..]; choice[i]: phrase
    // length taken at i, 0 for skipping the token.
    let mut best = vec![0usize; n + 1];
    let mut choice = vec![0usize; n];
    for i in (0..n).rev() {
        let matches: Vec<usize> = (1..=vocab.max_len.min(n - i))
            .rev()
            .filter(|&len| vocab.contains(&tokens[i..i + len]))
            .collect();
        let top = matches
            .iter()
            .map(|&len| len + best[i + len])
            .max()
            .unwrap_or(0)
            .max(best[i + 1]);
        best[i] = top;
        choice[i] = matches
            .into_iter()
            .find(|&len| len + best[i + len] == top)
            .unwrap_or(0);
    }
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        if choice[i] > 0 {
            spans.push(span(tokens, i, choice[i]));
            i += choice[i];
        } else {
            i += 1;
        }
    }
    spans
}

/// Matches a preprocessed query against the vocabulary.
pub fn visualness_with(
    q: &BagOfWords,
    vocab: &ConceptVocabulary,
    strategy: MatchStrategy,
) -> Result<VisualnessReport> {
    if q.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let spans = match strategy {
        MatchStrategy::MaxCoverage => max_cover(q.tokens(), vocab),
        MatchStrategy::GreedyLongest => greedy_cover(q.tokens(), vocab),
    };
    Ok(VisualnessReport {
        covered: spans.iter().map(|s| s.len).sum(),
        total: q.len(),
        spans,
    })
}

pub fn visualness(q: &BagOfWords, vocab: &ConceptVocabulary) -> Result<VisualnessReport> {
    visualness_with(q, vocab, MatchStrategy::default())
}

pub fn classify(q: &BagOfWords, vocab: &ConceptVocabulary, threshold: f64) -> Result<VisualClass> {
    Ok(visualness(q, vocab)?.classify(threshold))
}

/// Share of distinct logged queries (or of their clicks, when `weighted`)
/// whose visualness exceeds each threshold.
pub fn visual_percentage_curve(
    log: &ClickLog,
    vocab: &ConceptVocabulary,
    thresholds: &[f64],
    weighted: bool,
) -> Result<Vec<(f64, f64)>> {
    if log.is_empty() {
        return Err(Error::Degenerate("click log is empty".into()));
    }
    let scored: Vec<(f64, f64)> = par::map(log.queries(), |q| {
        let score = visualness(&q.bag, vocab).map(|r| r.score()).unwrap_or(0.0);
        let weight = if weighted { q.total_clicks as f64 } else { 1.0 };
        (score, weight)
    });
    let total = scored.iter().fold(0.0, |acc, s| acc + s.1);
    Ok(thresholds
        .iter()
        .map(|&t| {
            let above = scored
                .iter()
                .filter(|s| s.0 > t)
                .fold(0.0, |acc, s| acc + s.1);
            (t, above / total)
        })
        .collect())
}

/// A half-open visualness range `[lo, hi)`; the last bin also holds `hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualnessBin {
    pub lo: f64,
    pub hi: f64,
    pub query_ids: Vec<String>,
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::Config("need at least two bin edges".into()));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("bin edges must be strictly ascending".into()));
    }
    if edges[0] > 0.0 || edges[edges.len() - 1] < 1.0 {
        return Err(Error::Config("bin edges must cover [0, 1]".into()));
    }
    Ok(())
}

/// Index of the bin containing `score`.
pub fn bin_index(score: f64, edges: &[f64]) -> usize {
    let last = edges.len() - 2;
    (0..=last).find(|&b| score < edges[b + 1]).unwrap_or(last)
}

/// Groups queries by visualness score into the bins defined by `edges`.
pub fn group_by_visualness<'a, I>(
    queries: I,
    vocab: &ConceptVocabulary,
    edges: &[f64],
) -> Result<Vec<VisualnessBin>>
where
    I: IntoIterator<Item = (&'a str, &'a BagOfWords)>,
{
    check_edges(edges)?;
    let mut bins: Vec<VisualnessBin> = edges
        .windows(2)
        .map(|w| VisualnessBin {
            lo: w[0],
            hi: w[1],
            query_ids: Vec::new(),
        })
        .collect();
    let mut ordered: BTreeMap<&str, f64> = BTreeMap::new();
    for (id, q) in queries {
        ordered.insert(id, visualness(q, vocab)?.score());
    }
    for (id, score) in ordered {
        bins[bin_index(score, edges)].query_ids.push(id.to_string());
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Triad;
    use proptest::prelude::*;

    fn vocab(phrases: &[&str]) -> ConceptVocabulary {
        ConceptVocabulary::from_phrases(phrases, &Normalizer::default())
    }

    fn score(query: &str, v: &ConceptVocabulary) -> (usize, usize) {
        let r = visualness(&Normalizer::default().preprocess(query).unwrap(), v).unwrap();
        (r.covered, r.total)
    }

    #[test]
    fn reference_queries() {
        let v = vocab(&[
            "flower",
            "soccer ball",
            "dog",
            "cat",
            "tattoo",
            "family",
            "girl",
            "battery",
            "woman",
            "bicycle",
            "ling",
        ]);
        let expected = [
            ("flower", (1, 1)),
            ("soccer ball", (2, 2)),
            ("dog and cat", (2, 2)),
            ("tattoo design", (1, 2)),
            ("barack obama family", (1, 3)),
            ("hot weather girl", (1, 3)),
            ("funny", (0, 1)),
            ("saying and quote", (0, 2)),
            ("6v battery small", (1, 3)),
            ("ling simpson", (1, 2)),
            ("family photo", (1, 1)),
            ("woman bicycle", (2, 2)),
        ];
        for (q, want) in expected {
            assert_eq!(score(q, &v), want, "{q}");
        }
    }

    #[test]
    fn expansion_covers_celebrities() {
        let mut v = vocab(&["family"]);
        assert_eq!(score("barack obama family", &v), (1, 3));
        v.extend(["Barack Obama"], &Normalizer::default());
        assert_eq!(score("barack obama family", &v), (3, 3));
    }

    #[test]
    fn phrase_must_match_fully() {
        let v = vocab(&["soccer ball"]);
        assert_eq!(score("soccer", &v), (0, 1));
        assert_eq!(score("ball soccer", &v), (0, 2));
    }

    #[test]
    fn longest_phrase_wins_ties() {
        let v = vocab(&["hot dog", "hot", "dog"]);
        let r = visualness(&BagOfWords::from_tokens(["hot", "dog"]), &v).unwrap();
        assert_eq!(
            r.spans,
            vec![MatchedSpan {
                start: 0,
                len: 2,
                phrase: "hot dog".into()
            }]
        );
    }

    #[test]
    fn coverage_beats_greedy_when_greedy_is_trapped() {
        let v = vocab(&["aa bb", "aa", "bb cc dd"]);
        let q = BagOfWords::from_tokens(["aa", "bb", "cc", "dd"]);
        assert_eq!(
            visualness_with(&q, &v, MatchStrategy::GreedyLongest)
                .unwrap()
                .covered,
            2
        );
        assert_eq!(visualness(&q, &v).unwrap().covered, 4);
    }

    #[test]
    fn classification_is_strict() {
        let v = vocab(&["aa", "bb", "cc"]);
        let q = BagOfWords::from_tokens(["aa", "bb", "cc", "xx", "yy"]);
        assert_eq!(classify(&q, &v, 0.6).unwrap(), VisualClass::Nonvisual);
        assert_eq!(classify(&q, &v, 0.59).unwrap(), VisualClass::Visual);
        let full = BagOfWords::from_tokens(["aa"]);
        assert_eq!(classify(&full, &v, 0.6).unwrap(), VisualClass::Visual);
        let none = BagOfWords::from_tokens(["zz"]);
        assert_eq!(classify(&none, &v, 0.0).unwrap(), VisualClass::Nonvisual);
        assert!(matches!(
            visualness(&BagOfWords::default(), &v),
            Err(Error::EmptyQuery)
        ));
    }

    fn two_query_log() -> ClickLog {
        let n = Normalizer::default();
        ClickLog::from_triads([
            Triad::new(n.preprocess("dog").unwrap(), "dog", "a", 9),
            Triad::new(n.preprocess("funny").unwrap(), "funny", "b", 1),
        ])
    }

    #[test]
    fn curve_weights_by_clicks() {
        let v = vocab(&["dog"]);
        let log = two_query_log();
        assert_eq!(
            visual_percentage_curve(&log, &v, &[0.5], false).unwrap(),
            vec![(0.5, 0.5)]
        );
        assert_eq!(
            visual_percentage_curve(&log, &v, &[0.5], true).unwrap(),
            vec![(0.5, 0.9)]
        );
        assert_eq!(
            visual_percentage_curve(&log, &v, &[1.0], true).unwrap(),
            vec![(1.0, 0.0)]
        );
    }

    #[test]
    fn grouping_uses_half_open_bins() {
        let edges = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        assert_eq!(bin_index(0.0, &edges), 0);
        assert_eq!(bin_index(0.2, &edges), 1);
        assert_eq!(bin_index(0.5, &edges), 2);
        assert_eq!(bin_index(1.0, &edges), 4);
        let v = vocab(&["dog"]);
        let qs = [
            ("q1", BagOfWords::from_tokens(["dog"])),
            ("q2", BagOfWords::from_tokens(["dog", "xx"])),
            ("q3", BagOfWords::from_tokens(["yy"])),
        ];
        let bins = group_by_visualness(qs.iter().map(|(id, q)| (*id, q)), &v, &edges).unwrap();
        let ids: Vec<Vec<String>> = bins.into_iter().map(|b| b.query_ids).collect();
        assert_eq!(
            ids,
            vec![
                vec!["q3".to_string()],
                vec![],
                vec!["q2".to_string()],
                vec![],
                vec!["q1".to_string()]
            ]
        );
        assert!(group_by_visualness(qs.iter().map(|(id, q)| (*id, q)), &v, &[0.0, 0.5]).is_err());
    }

    // Exhaustive maximum coverage over all span sets, for short queries.
    fn oracle(tokens: &[String], v: &ConceptVocabulary) -> usize {
        fn go(tokens: &[String], i: usize, v: &ConceptVocabulary) -> usize {
            if i >= tokens.len() {
                return 0;
            }
            let mut best = go(tokens, i + 1, v);
            for len in 1..=tokens.len() - i {
                if v.contains(&tokens[i..i + len]) {
                    best = best.max(len + go(tokens, i + len, v));
                }
            }
            best
        }
        go(tokens, 0, v)
    }

    fn arb_phrase() -> impl Strategy<Value = String> {
        prop::collection::vec(prop::sample::select(vec!["aa", "bb", "cc", "dd"]), 1..4)
            .prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn max_cover_is_optimal_and_bounded(
            phrases in prop::collection::vec(arb_phrase(), 0..8),
            words in prop::collection::vec(prop::sample::select(vec!["aa", "bb", "cc", "dd", "ee"]), 1..8),
        ) {
            let v = ConceptVocabulary::from_phrases(&phrases, &Normalizer::default());
            let q = BagOfWords::from_tokens(words);
            let r = visualness(&q, &v).unwrap();
            prop_assert_eq!(r.covered, oracle(q.tokens(), &v));
            prop_assert!((0.0..=1.0).contains(&r.score()));
            let greedy = visualness_with(&q, &v, MatchStrategy::GreedyLongest).unwrap();
            prop_assert!(greedy.covered <= r.covered);
            // Spans are in order, disjoint and sum to the coverage.
            let mut end = 0;
            for s in &r.spans {
                prop_assert!(s.start >= end);
                prop_assert!(v.contains(&q.tokens()[s.start..s.start + s.len]));
                end = s.start + s.len;
            }
        }

        #[test]
        fn expansion_never_lowers_visualness(
            phrases in prop::collection::vec(arb_phrase(), 0..6),
            extra in prop::collection::vec(arb_phrase(), 1..4),
            words in prop::collection::vec(prop::sample::select(vec!["aa", "bb", "cc", "dd"]), 1..8),
        ) {
            let n = Normalizer::default();
            let mut v = ConceptVocabulary::from_phrases(&phrases, &n);
            let q = BagOfWords::from_tokens(words);
            let before = visualness(&q, &v).unwrap().covered;
            v.extend(&extra, &n);
            prop_assert!(visualness(&q, &v).unwrap().covered >= before);
        }

        #[test]
        fn curves_are_non_increasing(clicks in prop::collection::vec(1u64..50, 1..12)) {
            let n = Normalizer::default();
            let words = ["dog", "cat funny", "saying", "dog cat", "funny quote tattoo"];
            let triads: Vec<Triad> = clicks.iter().enumerate().map(|(i, c)| {
                let text = format!("{} q{i}", words[i % words.len()]);
                Triad::new(n.preprocess(&text).unwrap(), text, format!("img{i}"), *c)
            }).collect();
            let log = ClickLog::from_triads(triads);
            let v = vocab(&["dog", "cat", "tattoo"]);
            let ts: Vec<f64> = (0..=10).map(|t| t as f64 / 10.0).collect();
            for weighted in [false, true] {
                let curve = visual_percentage_curve(&log, &v, &ts, weighted).unwrap();
                prop_assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1));
                prop_assert!(curve.iter().all(|p| (0.0..=1.0).contains(&p.1)));
            }
        }
    }
}
