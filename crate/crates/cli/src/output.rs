//! Atomic output files and run manifests.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Writes `path` through a temporary file in the same directory, then
/// renames it into place.
pub fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut dyn Write) -> crossmedia::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temp file in {}", dir.display()))?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        fill(&mut out).with_context(|| format!("writing {}", path.display()))?;
        out.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |out| Ok(out.write_all(text.as_bytes())?))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub seed: u64,
    pub config: &'a C,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_secs: f64,
}

impl<'a, C: Serialize> RunManifest<'a, C> {
    pub fn new(seed: u64, config: &'a C) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_time_secs: 0.0,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn inputs<'p>(&mut self, paths: impl IntoIterator<Item = &'p PathBuf>) -> Result<()> {
        for p in paths {
            self.input(p)?;
        }
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes the manifest to `<primary output>.manifest.json`.
    pub fn finish(mut self, primary: &Path, elapsed: Duration) -> Result<()> {
        self.wall_time_secs = elapsed.as_secs_f64();
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let json = serde_json::to_string_pretty(&self)?;
        write_string(Path::new(&name), &(json + "\n"))
    }
}
