//! Segmentation scoring.
//!
//! Both inputs are segmented lines: whitespace-separated words. The two
//! sides must contain the same characters in the same order once spaces are
//! removed; a mismatch is reported with its line number rather than silently
//! producing a bogus score.
//!
//! Word precision/recall/F1 are micro-averaged over exact word spans.
//! Error statistics count boundary edits: an insertion is a predicted
//! boundary absent from the gold, a deletion a gold boundary the prediction
//! missed.

use std::collections::HashSet;

use crate::error::{Result, SlmError};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub gold_words: usize,
    pub pred_words: usize,
    pub correct_words: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorReport {
    /// Predicted boundaries that are not gold boundaries.
    pub insertions: usize,
    /// Gold boundaries the prediction missed.
    pub deletions: usize,
    pub gold_boundaries: usize,
    pub pred_boundaries: usize,
}

/// `(start, end)` char spans of the words in a segmented line.
fn word_spans(line: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut pos = 0usize;
    for w in line.split_whitespace() {
        let len = w.chars().count();
        spans.push((pos, pos + len));
        pos += len;
    }
    spans
}

/// Interior boundary positions of a segmented line.
fn boundary_set(line: &str) -> HashSet<usize> {
    let spans = word_spans(line);
    spans.iter().map(|s| s.1).take(spans.len().saturating_sub(1)).collect()
}

fn check_chars(gold: &str, pred: &str, line_no: usize) -> Result<()> {
    let g: String = gold.split_whitespace().collect();
    let p: String = pred.split_whitespace().collect();
    if g != p {
        return Err(SlmError::InvalidArgument(format!(
            "line {line_no}: character streams differ (gold {:?}, predicted {:?})",
            g, p
        )));
    }
    Ok(())
}

fn check_line_counts(gold: &[String], pred: &[String]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(SlmError::InvalidArgument(format!(
            "gold has {} lines, prediction has {}",
            gold.len(),
            pred.len()
        )));
    }
    Ok(())
}

pub fn score(gold: &[String], pred: &[String]) -> Result<ScoreReport> {
    check_line_counts(gold, pred)?;
    let (mut gw, mut pw, mut cw) = (0usize, 0usize, 0usize);
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        check_chars(g, p, i + 1)?;
        let gs = word_spans(g);
        let ps = word_spans(p);
        let gset: HashSet<(usize, usize)> = gs.iter().copied().collect();
        gw += gs.len();
        pw += ps.len();
        cw += ps.iter().filter(|s| gset.contains(s)).count();
    }
    let precision = if pw == 0 { 0.0 } else { cw as f64 / pw as f64 };
    let recall = if gw == 0 { 0.0 } else { cw as f64 / gw as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ScoreReport { gold_words: gw, pred_words: pw, correct_words: cw, precision, recall, f1 })
}

pub fn error_stats(gold: &[String], pred: &[String]) -> Result<ErrorReport> {
    check_line_counts(gold, pred)?;
    let mut rep =
        ErrorReport { insertions: 0, deletions: 0, gold_boundaries: 0, pred_boundaries: 0 };
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        check_chars(g, p, i + 1)?;
        let gb = boundary_set(g);
        let pb = boundary_set(p);
        rep.insertions += pb.difference(&gb).count();
        rep.deletions += gb.difference(&pb).count();
        rep.gold_boundaries += gb.len();
        rep.pred_boundaries += pb.len();
    }
    Ok(rep)
}

impl ScoreReport {
    /// Flat machine-readable rendering, one `key value` pair per line.
    pub fn to_kv(&self) -> String {
        format!(
            "gold_words {}\npred_words {}\ncorrect_words {}\nprecision {:.6}\nrecall {:.6}\nf1 {:.6}\n",
            self.gold_words, self.pred_words, self.correct_words, self.precision, self.recall,
            self.f1
        )
    }
}

impl ErrorReport {
    pub fn to_kv(&self) -> String {
        format!(
            "gold_boundaries {}\npred_boundaries {}\nboundary_insertions {}\nboundary_deletions {}\n",
            self.gold_boundaries, self.pred_boundaries, self.insertions, self.deletions
        )
    }
}
