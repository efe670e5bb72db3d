//! Pretrained character embedding loader (word2vec text format).
//!
//! The file starts with a `count dim` header, followed by one entry per line:
//! the token, then `dim` space-separated values. Tokens that are single
//! characters or placeholder names present in the vocabulary fill their row
//! of the embedding matrix; everything else is skipped. Rows with no
//! pretrained vector keep a fresh random initialization.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::RngCore;

use crate::error::{Result, SlmError};
use crate::nn::{glorot_init, Matrix};
use crate::real::Real;
use super::preprocess::{Sym, ENG_TOKEN, NUM_TOKEN, UNK_TOKEN};
use super::vocab::{Vocabulary, ENG_ID, NUM_ID, UNK_ID};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    /// Model rows that received a pretrained vector.
    pub covered: usize,
    /// Total rows in the embedding matrix.
    pub total: usize,
    /// Entries in the file that matched nothing in the vocabulary.
    pub unmatched: usize,
}

impl CoverageReport {
    pub fn fraction(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }
}

/// Build the character embedding matrix (one row per model symbol) from a
/// pretrained file, falling back to random init for uncovered rows.
pub fn load_pretrained<F: Real>(
    path: &Path,
    vocab: &Vocabulary,
    embed_dim: usize,
    rng: &mut dyn RngCore,
) -> Result<(Matrix<F>, CoverageReport)> {
    let file =
        std::fs::File::open(path).map_err(|e| SlmError::io(path.display().to_string(), e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, header) = match lines.next() {
        Some((n, r)) => (n, r.map_err(|e| SlmError::Parse { line: n + 1, msg: e.to_string() })?),
        None => return Err(SlmError::Parse { line: 1, msg: "empty embedding file".into() }),
    };
    let head: Vec<&str> = header.split_whitespace().collect();
    let (count, dim): (usize, usize) = match (head.first(), head.get(1)) {
        (Some(c), Some(d)) if head.len() == 2 => (
            c.parse().map_err(|_| SlmError::Parse { line: 1, msg: "bad entry count".into() })?,
            d.parse().map_err(|_| SlmError::Parse { line: 1, msg: "bad dimension".into() })?,
        ),
        _ => {
            return Err(SlmError::Parse {
                line: 1,
                msg: format!("expected 'count dim' header, found {header:?}"),
            })
        }
    };
    if dim != embed_dim {
        return Err(SlmError::InvalidArgument(format!(
            "embedding file has dimension {dim}, model expects {embed_dim}"
        )));
    }

    let total = vocab.model_alphabet_size();
    let mut matrix = glorot_init::<F, _>(total, embed_dim, rng)?;
    let mut covered: HashMap<usize, ()> = HashMap::new();
    let mut unmatched = 0usize;
    let mut seen = 0usize;

    for (n, line) in lines {
        let line = line.map_err(|e| SlmError::Parse { line: n + 1, msg: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        seen += 1;
        let mut parts = line.split_whitespace();
        let token = parts
            .next()
            .ok_or(SlmError::Parse { line: n + 1, msg: "missing token".into() })?;
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(SlmError::Parse {
                line: n + 1,
                msg: format!("entry {token:?} has {} values, header says {dim}", values.len()),
            });
        }
        let row_id = match token {
            ENG_TOKEN => Some(ENG_ID),
            NUM_TOKEN => Some(NUM_ID),
            UNK_TOKEN => Some(UNK_ID),
            _ => {
                let mut it = token.chars();
                match (it.next(), it.next()) {
                    (Some(c), None) => {
                        let id = vocab.encode_sym(&Sym::Char(c));
                        // unknown characters fall back to UNK_ID; only accept
                        // an exact hit so UNK itself is not overwritten
                        if id == UNK_ID { None } else { Some(id) }
                    }
                    _ => None,
                }
            }
        };
        match row_id.map(|id| vocab.to_model_id(id)) {
            Some(Ok(m)) => {
                let row = matrix.row_mut(m as usize);
                for (slot, v) in row.iter_mut().zip(values) {
                    *slot = F::from_f64(v.parse::<f64>().map_err(|_| SlmError::Parse {
                        line: n + 1,
                        msg: format!("bad value {v:?}"),
                    })?);
                }
                covered.insert(m as usize, ());
            }
            _ => unmatched += 1,
        }
    }
    if seen != count {
        return Err(SlmError::Parse {
            line: 1,
            msg: format!("header promises {count} entries, file has {seen}"),
        });
    }
    Ok((matrix, CoverageReport { covered: covered.len(), total, unmatched }))
}
