//! Per-(query, image) model scores, the interchange unit between scorers,
//! fusion and evaluation.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::corpus::ParseOptions;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    model_id: String,
    scores: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ScoreTable {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            scores: BTreeMap::new(),
        }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn set_model_id(&mut self, model_id: impl Into<String>) {
        self.model_id = model_id.into();
    }

    /// Sets a score; returns `true` if the pair was already present.
    pub fn insert(&mut self, query_id: &str, image_id: &str, score: f64) -> Result<bool> {
        if !score.is_finite() {
            return Err(Error::Config(format!(
                "non-finite score {score} for query {query_id:?}, image {image_id:?}"
            )));
        }
        Ok(self
            .scores
            .entry(query_id.to_string())
            .or_default()
            .insert(image_id.to_string(), score)
            .is_some())
    }

    pub fn get(&self, query_id: &str, image_id: &str) -> Option<f64> {
        self.scores.get(query_id)?.get(image_id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Query ids, sorted.
    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.scores.keys().map(String::as_str)
    }

    /// Scored images of one query, sorted by image id.
    pub fn query_scores(&self, query_id: &str) -> impl Iterator<Item = (&str, f64)> {
        self.scores
            .get(query_id)
            .into_iter()
            .flat_map(|m| m.iter().map(|(i, s)| (i.as_str(), *s)))
    }

    /// All `(query, image, score)` triples in sorted pair order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.scores
            .iter()
            .flat_map(|(q, m)| m.iter().map(move |(i, s)| (q.as_str(), i.as_str(), *s)))
    }

    /// Per-query image lists (the pools this table covers).
    pub fn pools(&self) -> BTreeMap<String, Vec<String>> {
        self.scores
            .iter()
            .map(|(q, m)| (q.clone(), m.keys().cloned().collect()))
            .collect()
    }

    /// Whether both tables score exactly the same pairs.
    pub fn same_pairs(&self, other: &ScoreTable) -> bool {
        self.scores.len() == other.scores.len()
            && self
                .scores
                .iter()
                .zip(&other.scores)
                .all(|((qa, a), (qb, b))| qa == qb && a.len() == b.len() && a.keys().eq(b.keys()))
    }

    /// Returns a copy with every score mapped through `f`.
    pub fn map_scores(&self, model_id: impl Into<String>, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            model_id: model_id.into(),
            scores: self
                .scores
                .iter()
                .map(|(q, m)| {
                    (
                        q.clone(),
                        m.iter().map(|(i, s)| (i.clone(), f(*s))).collect(),
                    )
                })
                .collect(),
        }
    }

    /// Parses `query_id<TAB>image_id<TAB>score` lines; `#` lines are comments.
    /// A repeated pair is malformed in strict mode and replaces the earlier
    /// score otherwise.
    pub fn parse<R: BufRead>(
        reader: R,
        source_name: &Path,
        model_id: &str,
        opts: ParseOptions,
    ) -> Result<Self> {
        let mut table = Self::new(model_id);
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let parsed = match fields.as_slice() {
                [q, i, s] if !q.is_empty() && !i.is_empty() => match s.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok((*q, *i, v)),
                    _ => Err(format!("score {s:?} is not a finite number")),
                },
                _ => Err("expected query_id<TAB>image_id<TAB>score".to_string()),
            };
            match parsed {
                Ok((q, i, v)) => {
                    if table.insert(q, i, v)? && opts.strict {
                        return Err(Error::malformed(
                            source_name,
                            idx + 1,
                            format!("duplicate pair ({q}, {i})"),
                        ));
                    }
                }
                Err(reason) if opts.strict => {
                    return Err(Error::malformed(source_name, idx + 1, reason))
                }
                Err(_) => {}
            }
        }
        Ok(table)
    }

    /// Reads a run file; the model id defaults to the file stem.
    pub fn from_path(path: &Path, opts: ParseOptions) -> Result<Self> {
        let model_id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::parse(reader, path, model_id, opts)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (q, i, s) in self.iter() {
            writeln!(out, "{q}\t{i}\t{s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut t = ScoreTable::new("m");
        t.insert("q1", "b", 0.1 + 0.2).unwrap();
        t.insert("q1", "a", -3.5e-12).unwrap();
        t.insert("q0", "a", 7.0).unwrap();
        let mut buf = Vec::new();
        t.write_tsv(&mut buf).unwrap();
        let back =
            ScoreTable::parse(buf.as_slice(), Path::new("r"), "m", ParseOptions::strict()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_non_finite_and_duplicates_when_strict() {
        assert!(ScoreTable::new("m").insert("q", "i", f64::NAN).is_err());
        let strict = ParseOptions::strict();
        for text in ["q\ti\tnan\n", "q\ti\n", "q\ti\t1\nq\ti\t2\n"] {
            assert!(
                ScoreTable::parse(text.as_bytes(), Path::new("r"), "m", strict).is_err(),
                "{text:?}"
            );
        }
        let lenient = ScoreTable::parse(
            "q\ti\t1\nq\ti\t2\nbad\n".as_bytes(),
            Path::new("r"),
            "m",
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(lenient.get("q", "i"), Some(2.0));
        assert_eq!(lenient.len(), 1);
    }

    #[test]
    fn same_pairs_ignores_scores() {
        let mut a = ScoreTable::new("a");
        let mut b = ScoreTable::new("b");
        a.insert("q", "x", 1.0).unwrap();
        b.insert("q", "x", 9.0).unwrap();
        assert!(a.same_pairs(&b));
        b.insert("q", "y", 9.0).unwrap();
        assert!(!a.same_pairs(&b));
    }
}
