//! Model hyperparameters.

use crate::error::{Result, SlmError};

/// Architecture and regularization settings for the segmental language model.
///
/// The model works over a dense symbol alphabet `0..vocab_size`; two control
/// symbols (end-of-segment, end-of-sentence) are appended after the alphabet
/// in the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SlmConfig {
    /// Number of segmentable symbols (characters and in-fragment
    /// placeholders).
    pub vocab_size: usize,
    /// Maximum segment length K.
    pub max_segment_len: usize,
    pub embed_dim: usize,
    pub encoder_hidden_dim: usize,
    pub decoder_hidden_dim: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub dropout_rate: f64,
    /// When set, the marginal and Viterbi scores include an end-of-sentence
    /// factor and segment-initial predictions renormalize it in.
    pub include_sentence_end: bool,
}

impl SlmConfig {
    /// Full-size profile.
    pub fn new(vocab_size: usize, max_segment_len: usize) -> Self {
        SlmConfig {
            vocab_size,
            max_segment_len,
            embed_dim: 256,
            encoder_hidden_dim: 256,
            decoder_hidden_dim: 256,
            encoder_layers: 1,
            decoder_layers: 2,
            dropout_rate: 0.1,
            include_sentence_end: true,
        }
    }

    /// Small profile used by tests and the synthetic benchmark.
    pub fn tiny(vocab_size: usize, max_segment_len: usize) -> Self {
        SlmConfig {
            embed_dim: 16,
            encoder_hidden_dim: 32,
            decoder_hidden_dim: 32,
            ..SlmConfig::new(vocab_size, max_segment_len)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(SlmError::Config("vocab_size must be positive".into()));
        }
        if self.max_segment_len == 0 {
            return Err(SlmError::Config("max_segment_len must be at least 1".into()));
        }
        if self.embed_dim == 0 || self.encoder_hidden_dim == 0 || self.decoder_hidden_dim == 0 {
            return Err(SlmError::Config("dims must be positive".into()));
        }
        if self.encoder_layers == 0 || self.decoder_layers == 0 {
            return Err(SlmError::Config("layer counts must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(SlmError::Config(format!(
                "dropout_rate must be in [0,1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// Model id of the end-of-segment symbol.
    pub fn eos_id(&self) -> usize {
        self.vocab_size
    }

    /// Model id of the end-of-sentence symbol.
    pub fn sent_end_id(&self) -> usize {
        self.vocab_size + 1
    }

    /// Output layer size: alphabet plus the two control symbols.
    pub fn vocab_out(&self) -> usize {
        self.vocab_size + 2
    }
}
