use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::ParseOptions;
use crate::error::{Error, Result};

/// Graded relevance label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grade {
    Bad = 0,
    Good = 2,
    Excellent = 3,
}

impl Grade {
    pub fn level(self) -> u32 {
        self as u32
    }

    /// Binary relevance used by MAP.
    pub fn is_positive(self) -> bool {
        self != Grade::Bad
    }
}

impl TryFrom<i64> for Grade {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            0 => Ok(Grade::Bad),
            2 => Ok(Grade::Good),
            3 => Ok(Grade::Excellent),
            other => Err(Error::InvalidGrade(other)),
        }
    }
}

/// Graded labels per (query id, image id) plus each query's text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JudgmentSet {
    entries: BTreeMap<String, BTreeMap<String, Grade>>,
    query_text: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JudgmentReport {
    pub records: usize,
    pub duplicates: usize,
    pub skipped_malformed: usize,
}

impl JudgmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a label; returns `true` if it replaced an earlier one.
    pub fn insert(
        &mut self,
        query_id: &str,
        query_text: &str,
        image_id: &str,
        grade: Grade,
    ) -> bool {
        self.query_text
            .entry(query_id.to_string())
            .or_insert_with(|| query_text.to_string());
        self.entries
            .entry(query_id.to_string())
            .or_default()
            .insert(image_id.to_string(), grade)
            .is_some()
    }

    pub fn grade(&self, query_id: &str, image_id: &str) -> Option<Grade> {
        self.entries.get(query_id)?.get(image_id).copied()
    }

    /// Grade of a pair, treating unjudged images as `Bad`.
    pub fn grade_or_bad(&self, query_id: &str, image_id: &str) -> Grade {
        self.grade(query_id, image_id).unwrap_or(Grade::Bad)
    }

    pub fn query_text(&self, query_id: &str) -> Option<&str> {
        self.query_text.get(query_id).map(String::as_str)
    }

    /// Query ids, sorted.
    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.entries.contains_key(query_id)
    }

    /// Judged images of one query, sorted by image id.
    pub fn images(&self, query_id: &str) -> impl Iterator<Item = (&str, Grade)> {
        self.entries
            .get(query_id)
            .into_iter()
            .flat_map(|m| m.iter().map(|(i, g)| (i.as_str(), *g)))
    }

    /// Per-query image pools in judgment order.
    pub fn pools(&self) -> BTreeMap<String, Vec<String>> {
        self.entries
            .iter()
            .map(|(q, m)| (q.clone(), m.keys().cloned().collect()))
            .collect()
    }

    pub fn num_queries(&self) -> usize {
        self.entries.len()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse<R: BufRead>(
        reader: R,
        source_name: &Path,
        opts: ParseOptions,
    ) -> Result<(Self, JudgmentReport)> {
        let mut set = Self::new();
        let mut report = JudgmentReport::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let parsed = match fields.as_slice() {
                [q, text, image, grade] if !q.is_empty() && !image.is_empty() => grade
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| format!("grade {grade:?} is not an integer"))
                    .and_then(|g| Grade::try_from(g).map_err(|e| e.to_string()))
                    .map(|g| (*q, *text, *image, g)),
                _ => Err("expected query_id<TAB>query_text<TAB>image_id<TAB>grade".to_string()),
            };
            match parsed {
                Ok((q, text, image, grade)) => {
                    report.records += 1;
                    if set.insert(q, text, image, grade) {
                        report.duplicates += 1;
                    }
                }
                Err(reason) if opts.strict => {
                    return Err(Error::malformed(source_name, idx + 1, reason));
                }
                Err(_) => report.skipped_malformed += 1,
            }
        }
        Ok((set, report))
    }

    pub fn from_path(path: &Path, opts: ParseOptions) -> Result<(Self, JudgmentReport)> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::parse(reader, path, opts)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (q, images) in &self.entries {
            let text = self.query_text.get(q).map(String::as_str).unwrap_or("");
            for (image, grade) in images {
                writeln!(out, "{q}\t{text}\t{image}\t{}", grade.level())?;
            }
        }
        Ok(())
    }
}
