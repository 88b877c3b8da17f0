//! Versioned text checkpoints for trained projections.
//!
//! ```text
//! CROSSMEDIA-CHECKPOINT v1
//! model psi|devise
//! dims <d_c> <d_i> <d_t>
//! vocab            (psi only; d_t words, one per line)
//! image_projection (d_c rows of d_i values)
//! text_projection  (psi only; d_c rows of d_t values)
//! end
//! ```
//!
//! Values are written in shortest round-trip decimal form, so a checkpoint
//! reloads bit-identically.

use std::io::{BufRead, Write};

use super::devise::DeviseModel;
use super::matrix::Matrix;
use super::psi::PsiModel;
use super::vocab::Vocabulary;
use crate::corpus::EmbeddingTable;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "CROSSMEDIA-CHECKPOINT v1";

/// Which model a checkpoint holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointKind {
    Psi,
    Devise,
}

/// Decoded checkpoint contents.
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Psi(PsiModel),
    /// The image projection; the word table is supplied at load time.
    Devise(Matrix),
}

fn write_matrix<W: Write>(out: &mut W, m: &Matrix) -> Result<()> {
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn write_psi<W: Write>(mut out: W, model: &PsiModel) -> Result<()> {
    writeln!(out, "{CHECKPOINT_MAGIC}")?;
    writeln!(out, "model psi")?;
    writeln!(
        out,
        "dims {} {} {}",
        model.common_dim(),
        model.image_dim(),
        model.vocab.len()
    )?;
    writeln!(out, "vocab")?;
    for w in model.vocab.words() {
        writeln!(out, "{w}")?;
    }
    writeln!(out, "image_projection")?;
    write_matrix(&mut out, &model.image_proj)?;
    writeln!(out, "text_projection")?;
    write_matrix(&mut out, &model.text_proj)?;
    writeln!(out, "end")?;
    Ok(())
}

pub fn write_devise<W: Write>(mut out: W, model: &DeviseModel) -> Result<()> {
    writeln!(out, "{CHECKPOINT_MAGIC}")?;
    writeln!(out, "model devise")?;
    writeln!(
        out,
        "dims {} {} 0",
        model.image_proj.rows(),
        model.image_proj.cols()
    )?;
    writeln!(out, "image_projection")?;
    write_matrix(&mut out, &model.image_proj)?;
    writeln!(out, "end")?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Checkpoint(format!("line {}: {msg}", self.line_no))
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let line = self.next_line()?;
        if line.trim() != want {
            return Err(self.err(&format!("expected {want:?}, found {line:?}")));
        }
        Ok(())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = self.next_line()?;
            let before = data.len();
            for field in line.split_whitespace() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| self.err(&format!("{field:?} is not a number")))?;
                if !v.is_finite() {
                    return Err(self.err("non-finite entry"));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(self.err(&format!(
                    "expected {cols} values, found {}",
                    data.len() - before
                )));
            }
        }
        Ok(Matrix::from_rows(rows, cols, data))
    }
}

pub fn read<R: BufRead>(reader: R) -> Result<Checkpoint> {
    let mut lines = Lines {
        inner: reader.lines(),
        line_no: 0,
    };
    lines.expect(CHECKPOINT_MAGIC)?;
    let kind = match lines.next_line()?.trim() {
        "model psi" => CheckpointKind::Psi,
        "model devise" => CheckpointKind::Devise,
        other => return Err(lines.err(&format!("unknown model line {other:?}"))),
    };
    let dims_line = lines.next_line()?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| lines.err("expected dims line"))?
        .split_whitespace()
        .map(|d| d.parse().map_err(|_| lines.err("bad dimension")))
        .collect::<Result<_>>()?;
    let [d_c, d_i, d_t] = dims[..] else {
        return Err(lines.err("expected three dimensions"));
    };
    let checkpoint = match kind {
        CheckpointKind::Psi => {
            lines.expect("vocab")?;
            let words = (0..d_t)
                .map(|_| lines.next_line())
                .collect::<Result<Vec<_>>>()?;
            let vocab = Vocabulary::new(words);
            if vocab.len() != d_t {
                return Err(lines.err("vocabulary has duplicate words"));
            }
            lines.expect("image_projection")?;
            let image_proj = lines.matrix(d_c, d_i)?;
            lines.expect("text_projection")?;
            let text_proj = lines.matrix(d_c, d_t)?;
            Checkpoint::Psi(PsiModel::new(image_proj, text_proj, vocab)?)
        }
        CheckpointKind::Devise => {
            lines.expect("image_projection")?;
            Checkpoint::Devise(lines.matrix(d_c, d_i)?)
        }
    };
    lines.expect("end")?;
    Ok(checkpoint)
}

pub fn read_psi<R: BufRead>(reader: R) -> Result<PsiModel> {
    match read(reader)? {
        Checkpoint::Psi(m) => Ok(m),
        Checkpoint::Devise(_) => Err(Error::Checkpoint(
            "expected a psi checkpoint, found devise".into(),
        )),
    }
}

pub fn read_devise<R: BufRead>(reader: R, table: EmbeddingTable) -> Result<DeviseModel> {
    match read(reader)? {
        Checkpoint::Devise(m) => DeviseModel::new(m, table),
        Checkpoint::Psi(_) => Err(Error::Checkpoint(
            "expected a devise checkpoint, found psi".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn psi() -> PsiModel {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        PsiModel::new(
            Matrix::uniform_init(3, 4, &mut rng),
            Matrix::uniform_init(3, 2, &mut rng),
            Vocabulary::new(["dog", "soccer"]),
        )
        .unwrap()
    }

    #[test]
    fn psi_round_trip_is_exact() {
        let m = psi();
        let mut buf = Vec::new();
        write_psi(&mut buf, &m).unwrap();
        assert!(buf.starts_with(CHECKPOINT_MAGIC.as_bytes()));
        assert_eq!(read_psi(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn devise_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut table = EmbeddingTable::new(3).unwrap();
        table.insert("dog", &[1.0, 2.0, 3.0]).unwrap();
        let m = DeviseModel::new(Matrix::uniform_init(3, 5, &mut rng), table.clone()).unwrap();
        let mut buf = Vec::new();
        write_devise(&mut buf, &m).unwrap();
        assert_eq!(read_devise(buf.as_slice(), table).unwrap(), m);
    }

    #[test]
    fn rejects_wrong_magic_and_truncation() {
        assert!(read("NOT A CHECKPOINT\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        write_psi(&mut buf, &psi()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(read(truncated.as_bytes()).is_err());
        assert!(read_devise(text.as_bytes(), EmbeddingTable::new(3).unwrap()).is_err());
    }
}
