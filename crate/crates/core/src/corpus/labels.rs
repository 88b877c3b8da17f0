use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::ParseOptions;
use crate::error::{Error, Result};

/// Top-m classifier labels of one image with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPrediction {
    pub labels: Vec<(String, f64)>,
}

impl LabelPrediction {
    pub fn new(labels: Vec<(String, f64)>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Config(
                "a label prediction needs at least one label".into(),
            ));
        }
        if let Some((label, p)) = labels.iter().find(|(_, p)| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::Config(format!(
                "probability {p} of label {label:?} is outside (0, 1]"
            )));
        }
        Ok(Self { labels })
    }
}

/// Label predictions keyed by image id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelPredictions {
    by_image: BTreeMap<String, LabelPrediction>,
}

impl LabelPredictions {
    pub fn insert(&mut self, image_id: impl Into<String>, pred: LabelPrediction) {
        self.by_image.insert(image_id.into(), pred);
    }

    pub fn get(&self, image_id: &str) -> Option<&LabelPrediction> {
        self.by_image.get(image_id)
    }

    pub fn len(&self) -> usize {
        self.by_image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_image.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &LabelPrediction)> {
        self.by_image.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Parses `image_id<TAB>label:prob,label:prob,...` lines.
    pub fn parse<R: BufRead>(reader: R, source_name: &Path, opts: ParseOptions) -> Result<Self> {
        let mut out = Self::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match parse_line(&line) {
                Ok((image, pred)) => out.insert(image, pred),
                Err(reason) if opts.strict => {
                    return Err(Error::malformed(source_name, idx + 1, reason))
                }
                Err(_) => {}
            }
        }
        Ok(out)
    }

    pub fn from_path(path: &Path, opts: ParseOptions) -> Result<Self> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::parse(reader, path, opts)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (image, pred) in &self.by_image {
            let labels: Vec<String> = pred
                .labels
                .iter()
                .map(|(l, p)| format!("{l}:{p}"))
                .collect();
            writeln!(out, "{image}\t{}", labels.join(","))?;
        }
        Ok(())
    }
}

fn parse_line(line: &str) -> std::result::Result<(String, LabelPrediction), String> {
    let (image, rest) = line
        .split_once('\t')
        .ok_or_else(|| "expected image_id<TAB>label:prob,...".to_string())?;
    let mut labels = Vec::new();
    for entry in rest.split(',') {
        let (label, p) = entry
            .rsplit_once(':')
            .ok_or_else(|| format!("entry {entry:?} is not label:prob"))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| format!("probability {p:?} is not a number"))?;
        labels.push((label.trim().to_string(), p));
    }
    let pred = LabelPrediction::new(labels).map_err(|e| e.to_string())?;
    Ok((image.trim().to_string(), pred))
}
