//! Query text preprocessing: lowercasing, punctuation removal, stopword
//! filtering and a small deterministic suffix-rule lemmatizer.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Standard English stopwords (the NLTK list).
pub const ENGLISH_STOPWORDS: &[&str] = &[
    "i",
    "me",
    "my",
    "myself",
    "we",
    "our",
    "ours",
    "ourselves",
    "you",
    "you're",
    "you've",
    "you'll",
    "you'd",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "she's",
    "her",
    "hers",
    "herself",
    "it",
    "it's",
    "its",
    "itself",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "what",
    "which",
    "who",
    "whom",
    "this",
    "that",
    "that'll",
    "these",
    "those",
    "am",
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "have",
    "has",
    "had",
    "having",
    "do",
    "does",
    "did",
    "doing",
    "a",
    "an",
    "the",
    "and",
    "but",
    "if",
    "or",
    "because",
    "as",
    "until",
    "while",
    "of",
    "at",
    "by",
    "for",
    "with",
    "about",
    "against",
    "between",
    "into",
    "through",
    "during",
    "before",
    "after",
    "above",
    "below",
    "to",
    "from",
    "up",
    "down",
    "in",
    "out",
    "on",
    "off",
    "over",
    "under",
    "again",
    "further",
    "then",
    "once",
    "here",
    "there",
    "when",
    "where",
    "why",
    "how",
    "all",
    "any",
    "both",
    "each",
    "few",
    "more",
    "most",
    "other",
    "some",
    "such",
    "no",
    "nor",
    "not",
    "only",
    "own",
    "same",
    "so",
    "than",
    "too",
    "very",
    "s",
    "t",
    "can",
    "will",
    "just",
    "don",
    "don't",
    "should",
    "should've",
    "now",
    "d",
    "ll",
    "m",
    "o",
    "re",
    "ve",
    "y",
    "ain",
    "aren",
    "aren't",
    "couldn",
    "couldn't",
    "didn",
    "didn't",
    "doesn",
    "doesn't",
    "hadn",
    "hadn't",
    "hasn",
    "hasn't",
    "haven",
    "haven't",
    "isn",
    "isn't",
    "ma",
    "mightn",
    "mightn't",
    "mustn",
    "mustn't",
    "needn",
    "needn't",
    "shan",
    "shan't",
    "shouldn",
    "shouldn't",
    "wasn",
    "wasn't",
    "weren",
    "weren't",
    "won",
    "won't",
    "wouldn",
    "wouldn't",
];

/// Words that carry no meaning in an image search query.
pub const DOMAIN_STOPWORDS: &[&str] = &["image", "picture", "photo", "pic", "wallpaper"];

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("people", "person"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("oxen", "ox"),
    ("wolves", "wolf"),
    ("knives", "knife"),
    ("leaves", "leaf"),
    ("wives", "wife"),
    ("lives", "life"),
];

// Words ending in "s" that are not plurals, or whose plural form is identical.
const KEEP_AS_IS: &[&str] = &[
    "news",
    "series",
    "species",
    "lens",
    "jeans",
    "glasses",
    "pants",
    "shorts",
    "scissors",
    "physics",
    "mathematics",
    "athletics",
    "gymnastics",
    "aerobics",
    "christmas",
    "texas",
    "paris",
    "always",
    "perhaps",
    "thanks",
    "yes",
];

/// A normalized query: the ordered tokens that survived preprocessing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BagOfWords {
    tokens: Vec<String>,
}

impl BagOfWords {
    /// Wraps tokens that are already normalized.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Deduplicated word set.
    pub fn word_set(&self) -> BTreeSet<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }

    /// Order-insensitive identity: the sorted token multiset.
    pub fn key(&self) -> QueryKey {
        let mut tokens = self.tokens.clone();
        tokens.sort();
        QueryKey(tokens)
    }
}

impl fmt::Display for BagOfWords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// Sorted multiset of normalized tokens; equal for queries that differ only
/// in word order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryKey(Vec<String>);

impl QueryKey {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for QueryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Debug, Clone)]
pub struct Normalizer {
    stopwords: HashSet<String>,
    domain_stopwords: HashSet<String>,
    lemmatize: bool,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self {
            stopwords: ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            domain_stopwords: DOMAIN_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            lemmatize: true,
        }
    }
}

impl Normalizer {
    pub fn new<I, J>(stopwords: I, domain_stopwords: J, lemmatize: bool) -> Self
    where
        I: IntoIterator<Item = String>,
        J: IntoIterator<Item = String>,
    {
        Self {
            stopwords: stopwords.into_iter().map(|w| w.to_lowercase()).collect(),
            domain_stopwords: domain_stopwords
                .into_iter()
                .map(|w| w.to_lowercase())
                .collect(),
            lemmatize,
        }
    }

    pub fn with_stopwords<I: IntoIterator<Item = String>>(mut self, words: I) -> Self {
        self.stopwords = words.into_iter().map(|w| w.to_lowercase()).collect();
        self
    }

    pub fn with_domain_stopwords<I: IntoIterator<Item = String>>(mut self, words: I) -> Self {
        self.domain_stopwords = words.into_iter().map(|w| w.to_lowercase()).collect();
        self
    }

    pub fn with_lemmatization(mut self, on: bool) -> Self {
        self.lemmatize = on;
        self
    }

    fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word) || self.domain_stopwords.contains(word)
    }

    /// Tokens of `text` without failing on an empty result.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        let lowered = text.to_lowercase();
        // Stopword lists contain contractions, so they are checked before
        // apostrophes are dropped.
        let mut out = Vec::new();
        for raw in lowered.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '\u{2019}')) {
            let raw = raw.trim_matches(|c| c == '\'' || c == '\u{2019}');
            if raw.is_empty() || self.is_stopword(raw) {
                continue;
            }
            let word: String = raw.chars().filter(|c| c.is_alphanumeric()).collect();
            if word.is_empty() || self.is_stopword(&word) {
                continue;
            }
            let word = if self.lemmatize {
                lemmatize(&word)
            } else {
                word
            };
            if !self.is_stopword(&word) {
                out.push(word);
            }
        }
        out
    }

    /// Normalizes a raw query.
    pub fn preprocess(&self, raw: &str) -> Result<BagOfWords> {
        let tokens = self.tokens(raw);
        if tokens.is_empty() {
            return Err(Error::EmptyAfterPreprocessing(raw.to_string()));
        }
        Ok(BagOfWords { tokens })
    }
}

/// Reduces a plural noun to its singular form with suffix rules.
///
/// Only alphabetic words longer than three characters are touched. The
/// output is a fixed point: `lemmatize(lemmatize(w)) == lemmatize(w)`.
pub fn lemmatize(word: &str) -> String {
    let stem = strip_plural(word);
    match IRREGULAR_PLURALS.iter().find(|(plural, _)| *plural == stem) {
        Some((_, lemma)) => (*lemma).to_string(),
        None => stem,
    }
}

fn strip_plural(word: &str) -> String {
    if IRREGULAR_PLURALS.iter().any(|(plural, _)| *plural == word) {
        return word.to_string();
    }
    if word.chars().count() <= 3
        || !word.chars().all(char::is_alphabetic)
        || KEEP_AS_IS.contains(&word)
    {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.chars().count() >= 2 {
            return format!("{stem}y");
        }
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    for suffix in ["xes", "zes", "ches", "shes"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            return format!("{stem}{}", &suffix[..suffix.len() - 2]);
        }
    }
    if word.ends_with('s')
        && !word.ends_with("ss")
        && !word.ends_with("us")
        && !word.ends_with("is")
    {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}
