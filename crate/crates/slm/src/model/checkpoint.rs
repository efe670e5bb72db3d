//! Checkpoint file format.
//!
//! A checkpoint is a flat, versioned, textual name→tensor map:
//!
//! ```text
//! slm-checkpoint v1
//! tensors <count>
//! tensor <name> <rows> <cols>
//! <cols values per line, one line per row, shortest-roundtrip decimal>
//! ...
//! ```
//!
//! The sidecar config record is a flat `key value` file carrying the model
//! hyperparameters, the element precision and a hash of the vocabulary the
//! model was trained with. Loading refuses to proceed when the supplied
//! vocabulary hashes differently.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Result, SlmError};
use crate::nn::Parameters;
use crate::real::Real;
use crate::model::{SlmConfig, SlmParameters};

/// FNV-1a 64-bit hash; stable across versions, used to fingerprint the
/// vocabulary a checkpoint belongs to.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn save_tensors<F: Real, P: Parameters<F>>(params: &P, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| SlmError::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let tensors = params.tensors();
    let write = |w: &mut BufWriter<File>, s: String| -> Result<()> {
        w.write_all(s.as_bytes())
            .map_err(|e| SlmError::io(path.display().to_string(), e))
    };
    write(&mut w, "slm-checkpoint v1\n".to_string())?;
    write(&mut w, format!("tensors {}\n", tensors.len()))?;
    for (name, t) in tensors {
        write(&mut w, format!("tensor {} {} {}\n", name, t.rows(), t.cols()))?;
        for r in 0..t.rows() {
            let line: Vec<String> =
                t.row(r).iter().map(|v| format!("{:e}", Real::to_f64(*v))).collect();
            write(&mut w, line.join(" "))?;
            write(&mut w, "\n".to_string())?;
        }
    }
    w.flush().map_err(|e| SlmError::io(path.display().to_string(), e))
}

/// Load tensors into an existing same-shaped parameter set.
pub fn load_tensors<F: Real, P: Parameters<F>>(params: &mut P, path: &Path) -> Result<()> {
    let file = File::open(path).map_err(|e| SlmError::io(path.display().to_string(), e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut next = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n + 1, l)),
            Some((n, Err(e))) => Err(SlmError::Parse { line: n + 1, msg: e.to_string() }),
            None => Err(SlmError::Checkpoint(format!("unexpected end of file, wanted {expect}"))),
        }
    };

    let (_, header) = next("header")?;
    if header != "slm-checkpoint v1" {
        return Err(SlmError::Checkpoint(format!("unsupported header {header:?}")));
    }
    let (line_no, count_line) = next("tensor count")?;
    let count: usize = count_line
        .strip_prefix("tensors ")
        .and_then(|c| c.parse().ok())
        .ok_or(SlmError::Parse { line: line_no, msg: format!("bad tensor count {count_line:?}") })?;
    let mut tensors = params.tensors_mut();
    if count != tensors.len() {
        return Err(SlmError::Checkpoint(format!(
            "checkpoint has {} tensors, model expects {}",
            count,
            tensors.len()
        )));
    }
    for (name, t) in tensors.iter_mut() {
        let (line_no, head) = next("tensor header")?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "tensor" {
            return Err(SlmError::Parse { line: line_no, msg: format!("bad tensor header {head:?}") });
        }
        if parts[1] != name {
            return Err(SlmError::Checkpoint(format!(
                "tensor order mismatch: checkpoint has {:?}, model expects {:?}",
                parts[1], name
            )));
        }
        let rows: usize = parts[2]
            .parse()
            .map_err(|_| SlmError::Parse { line: line_no, msg: "bad row count".into() })?;
        let cols: usize = parts[3]
            .parse()
            .map_err(|_| SlmError::Parse { line: line_no, msg: "bad col count".into() })?;
        if rows != t.rows() || cols != t.cols() {
            return Err(SlmError::Checkpoint(format!(
                "tensor {name}: checkpoint is {rows}x{cols}, model expects {}x{}",
                t.rows(),
                t.cols()
            )));
        }
        for r in 0..rows {
            let (line_no, row_line) = next("tensor row")?;
            let mut vals = row_line.split_whitespace();
            for c in 0..cols {
                let v: f64 = vals
                    .next()
                    .ok_or(SlmError::Parse { line: line_no, msg: "short row".into() })?
                    .parse()
                    .map_err(|_| SlmError::Parse { line: line_no, msg: "bad value".into() })?;
                t.set(r, c, F::from_f64(v));
            }
        }
    }
    Ok(())
}

/// Sidecar config record written next to a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub config: SlmConfig,
    pub precision: String,
    pub vocab_hash: u64,
}

pub fn write_sidecar(sidecar: &Sidecar, path: &Path) -> Result<()> {
    let cfg = &sidecar.config;
    let body = format!(
        "slm-config v1\n\
         vocab_size {}\n\
         max_segment_len {}\n\
         embed_dim {}\n\
         encoder_hidden_dim {}\n\
         decoder_hidden_dim {}\n\
         encoder_layers {}\n\
         decoder_layers {}\n\
         dropout_rate {}\n\
         include_sentence_end {}\n\
         precision {}\n\
         vocab_hash {:016x}\n",
        cfg.vocab_size,
        cfg.max_segment_len,
        cfg.embed_dim,
        cfg.encoder_hidden_dim,
        cfg.decoder_hidden_dim,
        cfg.encoder_layers,
        cfg.decoder_layers,
        cfg.dropout_rate,
        cfg.include_sentence_end,
        sidecar.precision,
        sidecar.vocab_hash,
    );
    std::fs::write(path, body).map_err(|e| SlmError::io(path.display().to_string(), e))
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let body =
        std::fs::read_to_string(path).map_err(|e| SlmError::io(path.display().to_string(), e))?;
    let mut lines = body.lines();
    if lines.next() != Some("slm-config v1") {
        return Err(SlmError::Checkpoint("unsupported sidecar header".into()));
    }
    let mut kv = std::collections::HashMap::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once(' ')
            .ok_or(SlmError::Parse { line: n + 2, msg: format!("bad sidecar line {line:?}") })?;
        kv.insert(k.to_string(), v.trim().to_string());
    }
    let get = |k: &str| -> Result<String> {
        kv.get(k).cloned().ok_or_else(|| SlmError::Checkpoint(format!("sidecar missing key {k}")))
    };
    let parse_usize = |k: &str| -> Result<usize> {
        get(k)?.parse().map_err(|_| SlmError::Checkpoint(format!("bad value for {k}")))
    };
    let config = SlmConfig {
        vocab_size: parse_usize("vocab_size")?,
        max_segment_len: parse_usize("max_segment_len")?,
        embed_dim: parse_usize("embed_dim")?,
        encoder_hidden_dim: parse_usize("encoder_hidden_dim")?,
        decoder_hidden_dim: parse_usize("decoder_hidden_dim")?,
        encoder_layers: parse_usize("encoder_layers")?,
        decoder_layers: parse_usize("decoder_layers")?,
        dropout_rate: get("dropout_rate")?
            .parse()
            .map_err(|_| SlmError::Checkpoint("bad dropout_rate".into()))?,
        include_sentence_end: get("include_sentence_end")? == "true",
    };
    let precision = get("precision")?;
    let vocab_hash = u64::from_str_radix(&get("vocab_hash")?, 16)
        .map_err(|_| SlmError::Checkpoint("bad vocab_hash".into()))?;
    Ok(Sidecar { config, precision, vocab_hash })
}

/// Load a model from a checkpoint plus its sidecar, verifying the vocabulary
/// fingerprint when one is supplied.
pub fn load_model<F: Real>(
    ckpt_path: &Path,
    sidecar_path: &Path,
    expected_vocab_hash: Option<u64>,
) -> Result<(SlmParameters<F>, Sidecar)> {
    let sidecar = read_sidecar(sidecar_path)?;
    if let Some(h) = expected_vocab_hash {
        if h != sidecar.vocab_hash {
            return Err(SlmError::Checkpoint(format!(
                "vocabulary hash mismatch: checkpoint was trained with {:016x}, supplied vocabulary hashes to {:016x}",
                sidecar.vocab_hash, h
            )));
        }
    }
    let mut params = SlmParameters::zeros(&sidecar.config)?;
    load_tensors(&mut params, ckpt_path)?;
    Ok((params, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Parameters;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let cfg = SlmConfig::tiny(4, 2);
        let params =
            SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_tensors(&params, &path).unwrap();
        let mut loaded = params.zeros_like();
        load_tensors(&mut loaded, &path).unwrap();
        for ((_, a), (_, b)) in params.tensors().into_iter().zip(loaded.tensors()) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn sidecar_round_trips() {
        let sc = Sidecar {
            config: SlmConfig::tiny(9, 3),
            precision: "f64".into(),
            vocab_hash: 0xdead_beef_0102_0304,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cfg");
        write_sidecar(&sc, &path).unwrap();
        assert_eq!(read_sidecar(&path).unwrap(), sc);
    }

    #[test]
    fn load_model_rejects_vocab_hash_mismatch() {
        let cfg = SlmConfig::tiny(4, 2);
        let params =
            SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let ckpt = dir.path().join("model.ckpt");
        let side = dir.path().join("model.cfg");
        save_tensors(&params, &ckpt).unwrap();
        write_sidecar(
            &Sidecar { config: cfg, precision: "f64".into(), vocab_hash: 1 },
            &side,
        )
        .unwrap();
        assert!(load_model::<f64>(&ckpt, &side, Some(2)).is_err());
        assert!(load_model::<f64>(&ckpt, &side, Some(1)).is_ok());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let cfg = SlmConfig::tiny(4, 2);
        let params =
            SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_tensors(&params, &path).unwrap();
        let other = SlmConfig::tiny(5, 2);
        let mut wrong = SlmParameters::<f64>::zeros(&other).unwrap();
        assert!(load_tensors(&mut wrong, &path).is_err());
    }
}
