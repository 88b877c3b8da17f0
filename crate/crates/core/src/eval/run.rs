use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use super::metrics::{average_precision, ndcg};
use crate::corpus::{Grade, JudgmentSet};
use crate::error::{Error, Result};
use crate::scores::ScoreTable;

/// Per-query ranked image lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankedRun {
    lists: BTreeMap<String, Vec<String>>,
}

impl RankedRun {
    pub fn get(&self, query_id: &str) -> Option<&[String]> {
        self.lists.get(query_id).map(Vec::as_slice)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.lists.iter().map(|(q, l)| (q.as_str(), l.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }
}

/// Ranks each query's pool by score descending, image id ascending.
pub fn rank_images(
    scores: &ScoreTable,
    pools: &BTreeMap<String, Vec<String>>,
) -> Result<RankedRun> {
    let mut lists = BTreeMap::new();
    for (q, pool) in pools {
        let unique: BTreeSet<&String> = pool.iter().collect();
        let mut scored = Vec::with_capacity(unique.len());
        for image in unique {
            let s = scores.get(q, image).ok_or_else(|| Error::MissingScore {
                query: q.clone(),
                image: image.clone(),
            })?;
            scored.push((image.clone(), s));
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        lists.insert(q.clone(), scored.into_iter().map(|(i, _)| i).collect());
    }
    Ok(RankedRun { lists })
}

/// Ranks every pair the table covers.
pub fn rank_table(scores: &ScoreTable) -> RankedRun {
    rank_images(scores, &scores.pools()).expect("pools come from the table itself")
}

/// Metric value per query id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerQueryScores {
    values: BTreeMap<String, f64>,
}

impl PerQueryScores {
    pub fn insert(&mut self, query_id: impl Into<String>, value: f64) {
        self.values.insert(query_id.into(), value);
    }

    pub fn get(&self, query_id: &str) -> Option<f64> {
        self.values.get(query_id).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(q, v)| (q.as_str(), *v))
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.values().sum::<f64>() / self.values.len() as f64
        }
    }

    /// Writes `query_id<TAB>value` lines and a final `ALL<TAB>mean` row.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (q, v) in &self.values {
            writeln!(out, "{q}\t{v}")?;
        }
        writeln!(out, "ALL\t{}", self.mean())?;
        Ok(())
    }

    /// Reads what [`write_tsv`](Self::write_tsv) writes; the `ALL` row is skipped.
    pub fn parse<R: BufRead>(reader: R, source_name: &Path) -> Result<Self> {
        let mut out = Self::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (q, v) = line.split_once('\t').ok_or_else(|| {
                Error::malformed(source_name, idx + 1, "expected query_id<TAB>value")
            })?;
            let v: f64 = v
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    Error::malformed(
                        source_name,
                        idx + 1,
                        format!("{v:?} is not a finite number"),
                    )
                })?;
            if q != "ALL" {
                out.insert(q, v);
            }
        }
        Ok(out)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(std::io::BufReader::new(std::fs::File::open(path)?), path)
    }
}

impl FromIterator<(String, f64)> for PerQueryScores {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

fn per_query(
    run: &RankedRun,
    judgments: &JudgmentSet,
    metric: impl Fn(&[Grade]) -> f64,
) -> Result<(f64, PerQueryScores)> {
    if judgments.is_empty() {
        return Err(Error::EmptyJudgments);
    }
    if run.is_empty() {
        return Err(Error::Degenerate("run has no queries".into()));
    }
    let mut out = PerQueryScores::default();
    for (q, list) in run.iter() {
        if !judgments.contains_query(q) {
            return Err(Error::UnjudgedQuery(q.to_string()));
        }
        let grades: Vec<Grade> = list.iter().map(|i| judgments.grade_or_bad(q, i)).collect();
        out.insert(q, metric(&grades));
    }
    Ok((out.mean(), out))
}

/// Mean NDCG at `cutoff`; unjudged images count as Bad.
pub fn mean_ndcg(
    run: &RankedRun,
    judgments: &JudgmentSet,
    cutoff: usize,
) -> Result<(f64, PerQueryScores)> {
    per_query(run, judgments, |g| ndcg(g, cutoff))
}

/// MAP with Good and Excellent as positives.
pub fn mean_average_precision(
    run: &RankedRun,
    judgments: &JudgmentSet,
) -> Result<(f64, PerQueryScores)> {
    per_query(run, judgments, |g| {
        let rel: Vec<bool> = g.iter().map(|g| g.is_positive()).collect();
        average_precision(&rel)
    })
}
