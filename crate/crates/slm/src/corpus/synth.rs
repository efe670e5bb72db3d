//! Synthetic segmentation corpora with known gold answers.
//!
//! A fixed lexicon, a word-frequency distribution and a fragment-length
//! distribution fully determine the generator; a seed makes it reproducible.
//! The default alphabet uses Greek letters, which the preprocessor treats as
//! ordinary characters (ASCII letters would collapse to the Latin-run
//! placeholder and destroy the word structure).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SlmError};
use crate::model::Segmentation;

pub const GREEK_ALPHABET: [char; 24] = [
    'α', 'β', 'γ', 'δ', 'ε', 'ζ', 'η', 'θ', 'ι', 'κ', 'λ', 'μ', 'ν', 'ξ', 'ο', 'π', 'ρ', 'σ',
    'τ', 'υ', 'φ', 'χ', 'ψ', 'ω',
];

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub lexicon: Vec<String>,
    /// One probability per lexicon word; must sum to 1.
    pub word_probs: Vec<f64>,
    /// Words per fragment, drawn uniformly from this inclusive range.
    pub words_per_fragment: (usize, usize),
    pub num_fragments: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// Fragment text, one unsegmented string per fragment.
    pub fragments: Vec<String>,
    pub golds: Vec<Segmentation>,
}

/// Zipf weights `1/r^s` for ranks `1..=n`, normalized.
pub fn zipf_probs(n: usize, s: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (1..=n).map(|r| 1.0 / (r as f64).powf(s)).collect();
    let z: f64 = w.iter().sum();
    for v in &mut w {
        *v /= z;
    }
    w
}

/// Draw a lexicon of `n` distinct words over `alphabet` with lengths uniform
/// in `[min_len, max_len]`.
pub fn random_lexicon(
    alphabet: &[char],
    n: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> Result<Vec<String>> {
    if alphabet.is_empty() || min_len == 0 || max_len < min_len {
        return Err(SlmError::InvalidArgument(
            "alphabet must be non-empty and 1 <= min_len <= max_len".into(),
        ));
    }
    let distinct: f64 =
        (min_len..=max_len).map(|l| (alphabet.len() as f64).powi(l as i32)).sum();
    if (n as f64) > distinct {
        return Err(SlmError::InvalidArgument(format!(
            "cannot draw {n} distinct words of length <= {max_len} over {} symbols",
            alphabet.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words: Vec<String> = Vec::with_capacity(n);
    while words.len() < n {
        let len = rng.gen_range(min_len..=max_len);
        let w: String = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    Ok(words)
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lexicon.is_empty() {
            return Err(SlmError::InvalidArgument("lexicon is empty".into()));
        }
        if self.lexicon.len() != self.word_probs.len() {
            return Err(SlmError::InvalidArgument(format!(
                "{} words but {} probabilities",
                self.lexicon.len(),
                self.word_probs.len()
            )));
        }
        if self.lexicon.iter().any(|w| w.is_empty()) {
            return Err(SlmError::InvalidArgument("lexicon contains an empty word".into()));
        }
        for (i, a) in self.lexicon.iter().enumerate() {
            if self.lexicon[i + 1..].contains(a) {
                return Err(SlmError::InvalidArgument(format!("duplicate lexicon word {a:?}")));
            }
        }
        let sum: f64 = self.word_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.word_probs.iter().any(|p| *p < 0.0) {
            return Err(SlmError::InvalidArgument(format!(
                "word probabilities must be non-negative and sum to 1 (sum = {sum})"
            )));
        }
        let (lo, hi) = self.words_per_fragment;
        if lo == 0 || hi < lo {
            return Err(SlmError::InvalidArgument(format!(
                "bad words_per_fragment range ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<SynthCorpus> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let cdf: Vec<f64> = self
            .word_probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let (lo, hi) = self.words_per_fragment;
        let mut fragments = Vec::with_capacity(self.num_fragments);
        let mut golds = Vec::with_capacity(self.num_fragments);
        for _ in 0..self.num_fragments {
            let n_words = rng.gen_range(lo..=hi);
            let mut text = String::new();
            let mut lengths = Vec::with_capacity(n_words);
            for _ in 0..n_words {
                let u: f64 = rng.gen();
                let idx = cdf.partition_point(|c| *c <= u).min(self.lexicon.len() - 1);
                let w = &self.lexicon[idx];
                lengths.push(w.chars().count());
                text.push_str(w);
            }
            fragments.push(text);
            golds.push(Segmentation::new(lengths));
        }
        Ok(SynthCorpus { fragments, golds })
    }
}

impl SynthCorpus {
    /// Gold segmentations as space-separated lines, for the scorer.
    pub fn gold_lines(&self) -> Vec<String> {
        self.fragments
            .iter()
            .zip(&self.golds)
            .map(|(text, gold)| {
                let chars: Vec<char> = text.chars().collect();
                let mut words = Vec::with_capacity(gold.lengths.len());
                let mut pos = 0;
                for l in &gold.lengths {
                    words.push(chars[pos..pos + l].iter().collect::<String>());
                    pos += l;
                }
                words.join(" ")
            })
            .collect()
    }
}
