//! Append-only on-disk store of pair counts.
//!
//! One file per parameter set, named after a digest of the canonical
//! parameter string. After a two-line header every line is a record
//! `stage shift count` with decimal integers.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use crate::construction::StaircaseParams;
use crate::{Error, Result};

/// `(stage, shift, count)`.
pub type Record = (usize, BigUint, BigUint);

const MAGIC: &str = "# staircase pair-count cache v1";

#[derive(Debug)]
pub struct PairCache {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl PairCache {
    pub fn file_name(params: &StaircaseParams) -> String {
        let digest = Sha256::digest(params.canonical().as_bytes());
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        format!("pairs-{hex}.txt")
    }

    /// Opens (creating if needed) the cache for `params` and returns the
    /// records already stored.
    pub fn open(dir: &Path, params: &StaircaseParams) -> Result<(Self, Vec<Record>)> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(Self::file_name(params));
        let params_line = format!("# params {}", params.canonical());
        let mut records = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            let bad = |msg: String| Error::Cache {
                path: path.clone(),
                msg,
            };
            let mut lines = reader.lines();
            let magic = lines.next().transpose()?.unwrap_or_default();
            let header = lines.next().transpose()?.unwrap_or_default();
            if magic != MAGIC || header != params_line {
                return Err(bad("header does not match these parameters".into()));
            }
            for (k, line) in lines.enumerate() {
                let line = line?;
                let fields: Vec<&str> = line.split_whitespace().collect();
                let parsed = match fields.as_slice() {
                    [s, m, c] => s
                        .parse::<usize>()
                        .ok()
                        .zip(m.parse::<BigUint>().ok())
                        .zip(c.parse::<BigUint>().ok())
                        .map(|((s, m), c)| (s, m, c)),
                    _ => None,
                };
                match parsed {
                    Some(rec) => records.push(rec),
                    // A torn final record from an interrupted run is dropped.
                    None if line.is_empty() => {}
                    None => return Err(bad(format!("malformed record on line {}", k + 3))),
                }
            }
        } else {
            let mut f = File::create(&path)?;
            writeln!(f, "{MAGIC}")?;
            writeln!(f, "{params_line}")?;
        }
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok((
            PairCache {
                path,
                writer: BufWriter::new(file),
            },
            records,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, stage: usize, values: &[(BigUint, BigUint)]) -> Result<()> {
        for (shift, count) in values {
            writeln!(self.writer, "{stage} {shift} {count}")?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

impl Drop for PairCache {
    fn drop(&mut self) {
        let _ = self.writer.flush();
    }
}
