//! Flat `key value` run configuration with command-line overrides.
//!
//! The file format is one setting per line, `#` comments allowed. Every key
//! can also be supplied on the command line as `--set key=value`, which wins
//! over the file.

use std::path::PathBuf;

use slm::model::SlmConfig;
use slm::train::TrainSchedule;
use slm::{Result, SlmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlongPolicy {
    Skip,
    Split,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    // paths
    pub train_file: Option<PathBuf>,
    /// Optional second raw text (e.g. the test side) concatenated into the
    /// training stream.
    pub extra_train_file: Option<PathBuf>,
    pub guideline_file: Option<PathBuf>,
    pub pretrained_file: Option<PathBuf>,
    pub rules_file: Option<PathBuf>,
    pub charclass_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    // model
    pub max_segment_len: usize,
    pub embed_dim: usize,
    pub encoder_hidden_dim: usize,
    pub decoder_hidden_dim: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub dropout_rate: f64,
    pub include_sentence_end: bool,
    // schedule
    pub batch_size: usize,
    pub sgd_lr: f64,
    pub sgd_steps: usize,
    pub adam_lr: f64,
    pub total_steps: usize,
    pub clip: f64,
    pub seed: u64,
    pub guideline_count: usize,
    pub bucket_by_length: bool,
    pub threads: usize,
    pub log_every: usize,
    pub overlong_policy: OverlongPolicy,
    pub precision: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train_file: None,
            extra_train_file: None,
            guideline_file: None,
            pretrained_file: None,
            rules_file: None,
            charclass_file: None,
            out_dir: PathBuf::from("run"),
            max_segment_len: 4,
            embed_dim: 256,
            encoder_hidden_dim: 256,
            decoder_hidden_dim: 256,
            encoder_layers: 1,
            decoder_layers: 2,
            dropout_rate: 0.1,
            include_sentence_end: true,
            batch_size: 256,
            sgd_lr: 16.0,
            sgd_steps: 400,
            adam_lr: 0.005,
            total_steps: 6000,
            clip: 0.1,
            seed: 0,
            guideline_count: 1024,
            bucket_by_length: true,
            threads: 1,
            log_every: 1,
            overlong_policy: OverlongPolicy::Skip,
            precision: "f64".into(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &PathBuf) -> Result<RunConfig> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| SlmError::io(path.display().to_string(), e))?;
        let mut cfg = RunConfig::default();
        for (n, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(char::is_whitespace).ok_or(SlmError::Parse {
                line: n + 1,
                msg: format!("expected 'key value', found {line:?}"),
            })?;
            cfg.set(key, value.trim()).map_err(|e| SlmError::Parse {
                line: n + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                SlmError::InvalidArgument(format!("override {item:?} is not key=value"))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                SlmError::InvalidArgument(format!("bad value {value:?} for {key}"))
            })
        }
        match key {
            "train_file" => self.train_file = Some(PathBuf::from(value)),
            "extra_train_file" => self.extra_train_file = Some(PathBuf::from(value)),
            "guideline_file" => self.guideline_file = Some(PathBuf::from(value)),
            "pretrained_file" => self.pretrained_file = Some(PathBuf::from(value)),
            "rules_file" => self.rules_file = Some(PathBuf::from(value)),
            "charclass_file" => self.charclass_file = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "max_segment_len" => self.max_segment_len = parse(key, value)?,
            "embed_dim" => self.embed_dim = parse(key, value)?,
            "encoder_hidden_dim" => self.encoder_hidden_dim = parse(key, value)?,
            "decoder_hidden_dim" => self.decoder_hidden_dim = parse(key, value)?,
            "encoder_layers" => self.encoder_layers = parse(key, value)?,
            "decoder_layers" => self.decoder_layers = parse(key, value)?,
            "dropout_rate" => self.dropout_rate = parse(key, value)?,
            "include_sentence_end" => self.include_sentence_end = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "sgd_lr" => self.sgd_lr = parse(key, value)?,
            "sgd_steps" => self.sgd_steps = parse(key, value)?,
            "adam_lr" => self.adam_lr = parse(key, value)?,
            "total_steps" => self.total_steps = parse(key, value)?,
            "clip" => self.clip = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "guideline_count" => self.guideline_count = parse(key, value)?,
            "bucket_by_length" => self.bucket_by_length = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "log_every" => self.log_every = parse(key, value)?,
            "overlong_policy" => {
                self.overlong_policy = match value {
                    "skip" => OverlongPolicy::Skip,
                    "split" => OverlongPolicy::Split,
                    _ => {
                        return Err(SlmError::InvalidArgument(format!(
                            "overlong_policy must be 'skip' or 'split', found {value:?}"
                        )))
                    }
                }
            }
            "precision" => {
                if value != "f32" && value != "f64" {
                    return Err(SlmError::InvalidArgument(format!(
                        "precision must be 'f32' or 'f64', found {value:?}"
                    )));
                }
                self.precision = value.to_string();
            }
            other => {
                return Err(SlmError::InvalidArgument(format!("unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sgd_lr <= 0.0 || self.adam_lr <= 0.0 || self.clip <= 0.0 {
            return Err(SlmError::InvalidArgument(
                "learning rates and clip threshold must be positive".into(),
            ));
        }
        if self.batch_size == 0 || self.threads == 0 || self.log_every == 0 {
            return Err(SlmError::InvalidArgument(
                "batch_size, threads and log_every must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn model_config(&self, vocab_size: usize) -> SlmConfig {
        SlmConfig {
            vocab_size,
            max_segment_len: self.max_segment_len,
            embed_dim: self.embed_dim,
            encoder_hidden_dim: self.encoder_hidden_dim,
            decoder_hidden_dim: self.decoder_hidden_dim,
            encoder_layers: self.encoder_layers,
            decoder_layers: self.decoder_layers,
            dropout_rate: self.dropout_rate,
            include_sentence_end: self.include_sentence_end,
        }
    }

    pub fn schedule(&self) -> TrainSchedule {
        TrainSchedule {
            batch_size: self.batch_size,
            sgd_lr: self.sgd_lr,
            sgd_steps: self.sgd_steps,
            adam_lr: self.adam_lr,
            total_steps: self.total_steps,
            clip: self.clip,
            seed: self.seed,
            bucket_by_length: self.bucket_by_length,
            threads: self.threads,
            log_every: self.log_every,
        }
    }
}
