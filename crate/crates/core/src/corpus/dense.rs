//! Dense vector tables keyed by string id: visual features and word
//! embeddings share the same `<count> <dim>` text layout.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Counters collected while parsing a dense table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DenseReport {
    pub records: usize,
    pub duplicate_ids: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTable {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl DenseTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config(
                "vector dimensionality must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    /// Inserts or replaces a vector. Returns `true` when `id` was already present.
    pub fn insert(&mut self, id: impl Into<String>, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("vector components must be finite".into()));
        }
        let id = id.into();
        if let Some(&row) = self.index.get(&id) {
            self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(vector);
            return Ok(true);
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(false)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&row| self.row(row))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Ids in insertion order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(row, id)| (id.as_str(), self.row(row)))
    }

    /// Keeps only the ids accepted by `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        let mut out = Self::new(self.dim).expect("dim already validated");
        for (id, v) in self.iter() {
            if keep(id) {
                out.insert(id, v).expect("row already validated");
            }
        }
        out
    }

    /// Parses the text layout: a `<count> <dim>` header, then one
    /// `id v1 .. v_dim` record per line.
    pub fn parse_text<R: BufRead>(reader: R, source_name: &Path) -> Result<(Self, DenseReport)> {
        let mut lines = reader.lines().enumerate();
        let (count, dim) = loop {
            match lines.next() {
                Some((idx, line)) => {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break parse_header(&line)
                        .map_err(|r| Error::malformed(source_name, idx + 1, r))?;
                }
                None => {
                    return Err(Error::malformed(
                        source_name,
                        1,
                        "missing `<count> <dim>` header",
                    ))
                }
            }
        };
        let mut table = Self::new(dim)
            .map_err(|_| Error::malformed(source_name, 1, "dimension must be positive"))?;
        let mut report = DenseReport::default();
        let mut last_line = 1;
        let mut values = Vec::with_capacity(dim);
        for (idx, line) in lines {
            let line = line?;
            let line_no = idx + 1;
            last_line = line_no;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let id = fields.next().expect("non-empty line has a field");
            values.clear();
            for field in fields {
                let v: f64 = field.parse().map_err(|_| {
                    Error::malformed(source_name, line_no, format!("{field:?} is not a number"))
                })?;
                if !v.is_finite() {
                    return Err(Error::malformed(
                        source_name,
                        line_no,
                        "non-finite component",
                    ));
                }
                values.push(v);
            }
            if values.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: values.len(),
                });
            }
            report.records += 1;
            if table.insert(id, &values)? {
                report.duplicate_ids += 1;
            }
        }
        if report.records != count {
            return Err(Error::malformed(
                source_name,
                last_line + 1,
                format!("header declares {count} records, found {}", report.records),
            ));
        }
        Ok((table, report))
    }

    /// Parses the binary layout: the same text header line, then per record a
    /// little-endian `u32` id byte length, the UTF-8 id, and `dim`
    /// little-endian `f32` components.
    pub fn parse_binary<R: BufRead>(
        mut reader: R,
        source_name: &Path,
    ) -> Result<(Self, DenseReport)> {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let (count, dim) =
            parse_header(&header).map_err(|r| Error::malformed(source_name, 1, r))?;
        let mut table = Self::new(dim)
            .map_err(|_| Error::malformed(source_name, 1, "dimension must be positive"))?;
        let mut report = DenseReport::default();
        let mut values = vec![0f64; dim];
        let mut word = [0u8; 4];
        for record in 0..count {
            let truncated = |_| Error::malformed(source_name, record + 2, "truncated record");
            reader.read_exact(&mut word).map_err(truncated)?;
            let len = u32::from_le_bytes(word) as usize;
            let mut id = vec![0u8; len];
            reader.read_exact(&mut id).map_err(truncated)?;
            let id = String::from_utf8(id)
                .map_err(|_| Error::malformed(source_name, record + 2, "id is not UTF-8"))?;
            for v in values.iter_mut() {
                reader.read_exact(&mut word).map_err(truncated)?;
                *v = f32::from_le_bytes(word) as f64;
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::malformed(
                    source_name,
                    record + 2,
                    "non-finite component",
                ));
            }
            report.records += 1;
            if table.insert(id, &values)? {
                report.duplicate_ids += 1;
            }
        }
        let mut rest = [0u8; 1];
        if reader.read(&mut rest)? != 0 {
            return Err(Error::malformed(
                source_name,
                count + 2,
                "trailing bytes after the declared records",
            ));
        }
        Ok((table, report))
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (id, v) in self.iter() {
            write!(out, "{id}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (id, v) in self.iter() {
            out.write_all(&(id.len() as u32).to_le_bytes())?;
            out.write_all(id.as_bytes())?;
            for &x in v {
                out.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }
}

fn parse_header(line: &str) -> std::result::Result<(usize, usize), String> {
    let mut fields = line.split_whitespace();
    match (fields.next(), fields.next(), fields.next()) {
        (Some(count), Some(dim), None) => {
            let count = count
                .parse()
                .map_err(|_| format!("bad record count {count:?}"))?;
            let dim = dim.parse().map_err(|_| format!("bad dimension {dim:?}"))?;
            Ok((count, dim))
        }
        _ => Err("expected `<count> <dim>` header".into()),
    }
}

macro_rules! dense_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(DenseTable);

        impl $name {
            pub fn new(dim: usize) -> Result<Self> {
                DenseTable::new(dim).map(Self)
            }

            pub fn from_table(table: DenseTable) -> Self {
                Self(table)
            }

            pub fn table(&self) -> &DenseTable {
                &self.0
            }

            pub fn insert(&mut self, id: impl Into<String>, vector: &[f64]) -> Result<bool> {
                self.0.insert(id, vector)
            }

            pub fn dim(&self) -> usize {
                self.0.dim()
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn get(&self, id: &str) -> Option<&[f64]> {
                self.0.get(id)
            }

            pub fn contains(&self, id: &str) -> bool {
                self.0.contains(id)
            }

            pub fn ids(&self) -> &[String] {
                self.0.ids()
            }

            pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
                self.0.iter()
            }

            pub fn filter(&self, keep: impl FnMut(&str) -> bool) -> Self {
                Self(self.0.filter(keep))
            }

            pub fn parse_text<R: BufRead>(reader: R, source_name: &Path) -> Result<(Self, DenseReport)> {
                DenseTable::parse_text(reader, source_name).map(|(t, r)| (Self(t), r))
            }

            pub fn parse_binary<R: BufRead>(reader: R, source_name: &Path) -> Result<(Self, DenseReport)> {
                DenseTable::parse_binary(reader, source_name).map(|(t, r)| (Self(t), r))
            }

            /// Loads a text file, or the binary layout when the extension is `.bin`.
            pub fn from_path(path: &Path) -> Result<(Self, DenseReport)> {
                let reader = std::io::BufReader::new(std::fs::File::open(path)?);
                if path.extension().is_some_and(|e| e == "bin") {
                    Self::parse_binary(reader, path)
                } else {
                    Self::parse_text(reader, path)
                }
            }

            pub fn write_text<W: Write>(&self, out: W) -> Result<()> {
                self.0.write_text(out)
            }

            pub fn write_binary<W: Write>(&self, out: W) -> Result<()> {
                self.0.write_binary(out)
            }
        }
    };
}

dense_newtype!(
    /// Visual feature vectors keyed by image id.
    FeatureStore
);
dense_newtype!(
    /// Word vectors keyed by word (word2vec text layout).
    EmbeddingTable
);
