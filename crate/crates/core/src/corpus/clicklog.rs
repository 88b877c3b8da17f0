use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::normalize::{BagOfWords, Normalizer, QueryKey};
use super::ParseOptions;
use crate::error::{Error, Result};

/// One accumulated (query, image, click) record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triad {
    pub query: BagOfWords,
    /// Query text as first logged.
    pub raw_query: String,
    pub image_id: String,
    pub click: u64,
}

impl Triad {
    pub fn new(
        query: BagOfWords,
        raw_query: impl Into<String>,
        image_id: impl Into<String>,
        click: u64,
    ) -> Self {
        Self {
            query,
            raw_query: raw_query.into(),
            image_id: image_id.into(),
            click,
        }
    }
}

/// A distinct logged query with its image triads.
#[derive(Debug, Clone)]
pub struct LoggedQuery {
    pub key: QueryKey,
    pub bag: BagOfWords,
    pub raw: String,
    /// Indices into [`ClickLog::triads`], sorted by image id.
    pub triads: Vec<usize>,
    pub total_clicks: u64,
}

/// Counters collected while parsing a click log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClickLogReport {
    pub lines: usize,
    pub dropped_empty_queries: usize,
    pub skipped_malformed: usize,
    pub merged_duplicates: usize,
}

/// The triad store with query-side and image-side indexes.
///
/// Triads with the same query key and image are merged by summing clicks.
#[derive(Debug, Clone, Default)]
pub struct ClickLog {
    triads: Vec<Triad>,
    queries: Vec<LoggedQuery>,
    by_query: BTreeMap<QueryKey, usize>,
    by_image: BTreeMap<String, Vec<usize>>,
}

impl ClickLog {
    /// Builds a log from already-normalized triads.
    pub fn from_triads<I>(triads: I) -> Self
    where
        I: IntoIterator<Item = Triad>,
    {
        Self::build(triads).0
    }

    fn build<I>(input: I) -> (Self, usize)
    where
        I: IntoIterator<Item = Triad>,
    {
        let mut merged: BTreeMap<(QueryKey, String), Triad> = BTreeMap::new();
        let mut duplicates = 0;
        for triad in input {
            let slot = (triad.query.key(), triad.image_id.clone());
            match merged.get_mut(&slot) {
                Some(existing) => {
                    existing.click += triad.click;
                    duplicates += 1;
                }
                None => {
                    merged.insert(slot, triad);
                }
            }
        }

        let mut log = ClickLog::default();
        for ((key, _), triad) in merged {
            let t = log.triads.len();
            let q = match log.by_query.get(&key) {
                Some(&q) => q,
                None => {
                    log.queries.push(LoggedQuery {
                        key: key.clone(),
                        bag: triad.query.clone(),
                        raw: triad.raw_query.clone(),
                        triads: Vec::new(),
                        total_clicks: 0,
                    });
                    log.by_query.insert(key, log.queries.len() - 1);
                    log.queries.len() - 1
                }
            };
            log.queries[q].triads.push(t);
            log.queries[q].total_clicks += triad.click;
            log.by_image
                .entry(triad.image_id.clone())
                .or_default()
                .push(t);
            log.triads.push(triad);
        }
        (log, duplicates)
    }

    pub fn parse<R: BufRead>(
        reader: R,
        source_name: &Path,
        normalizer: &Normalizer,
        opts: ParseOptions,
    ) -> Result<(Self, ClickLogReport)> {
        let mut report = ClickLogReport::default();
        let mut triads = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            report.lines += 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed =
                parse_line(&line).map_err(|reason| Error::malformed(source_name, line_no, reason));
            let (raw, image_id, click) = match parsed {
                Ok(v) => v,
                Err(e) if opts.strict => return Err(e),
                Err(_) => {
                    report.skipped_malformed += 1;
                    continue;
                }
            };
            match normalizer.preprocess(raw) {
                Ok(query) => triads.push(Triad {
                    query,
                    raw_query: raw.to_string(),
                    image_id: image_id.to_string(),
                    click,
                }),
                Err(_) => report.dropped_empty_queries += 1,
            }
        }
        let (log, duplicates) = Self::build(triads);
        report.merged_duplicates = duplicates;
        Ok((log, report))
    }

    pub fn from_path(
        path: &Path,
        normalizer: &Normalizer,
        opts: ParseOptions,
    ) -> Result<(Self, ClickLogReport)> {
        let file = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(file), path, normalizer, opts)
    }

    /// Writes the log back as `query<TAB>image_id<TAB>click` lines.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.triads {
            writeln!(out, "{}\t{}\t{}", t.raw_query, t.image_id, t.click)?;
        }
        Ok(())
    }

    pub fn triads(&self) -> &[Triad] {
        &self.triads
    }

    pub fn triad(&self, idx: usize) -> &Triad {
        &self.triads[idx]
    }

    /// Distinct queries, sorted by key.
    pub fn queries(&self) -> &[LoggedQuery] {
        &self.queries
    }

    pub fn query(&self, key: &QueryKey) -> Option<&LoggedQuery> {
        self.by_query.get(key).map(|&q| &self.queries[q])
    }

    pub fn contains_query(&self, key: &QueryKey) -> bool {
        self.by_query.contains_key(key)
    }

    /// Triad indices for `image_id`, one per distinct query.
    pub fn image_triads(&self, image_id: &str) -> &[usize] {
        self.by_image
            .get(image_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Distinct image ids, sorted.
    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.by_image.keys().map(String::as_str)
    }

    pub fn num_images(&self) -> usize {
        self.by_image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triads.is_empty()
    }
}

fn parse_line(line: &str) -> std::result::Result<(&str, &str, u64), String> {
    let mut fields = line.split('\t');
    let (Some(query), Some(image), Some(click), None) =
        (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err("expected query<TAB>image_id<TAB>click".into());
    };
    let image = image.trim();
    if image.is_empty() {
        return Err("empty image id".into());
    }
    let click: i64 = click
        .trim()
        .parse()
        .map_err(|_| format!("click count {click:?} is not an integer"))?;
    if click < 1 {
        return Err(format!("click count {click} is not positive"));
    }
    Ok((query, image, click as u64))
}
