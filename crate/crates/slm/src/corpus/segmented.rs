//! Gold-segmented text: the guideline-sentence reader and the segmented
//! output renderer.
//!
//! Input lines hold whitespace-separated words. Words pass through the same
//! preprocessing as raw text, so Latin/digit runs collapse and punctuation —
//! standalone or embedded — splits a line into independent examples.

use std::path::Path;

use crate::error::{Result, SlmError};
use crate::model::Segmentation;
use super::charclass::CharClassTable;
use super::preprocess::{preprocess_line, LineItem, PreprocessedLine, Sym, PUNC_TOKEN};

/// One punctuation-free fragment with its gold segmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuidelineExample {
    pub syms: Vec<Sym>,
    pub gold: Segmentation,
    /// 1-based source line.
    pub line: usize,
}

/// What to do with gold words longer than the model's maximum segment length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlongPolicy {
    /// Drop the whole example.
    Skip,
    /// Split the word left to right into maximal admissible pieces.
    SplitGreedy,
}

pub fn read_segmented_str(body: &str, table: &CharClassTable) -> Vec<GuidelineExample> {
    let mut out = Vec::new();
    for (n, line) in body.lines().enumerate() {
        parse_segmented_line(line, table, n + 1, &mut out);
    }
    out
}

pub fn read_segmented(path: &Path, table: &CharClassTable) -> Result<Vec<GuidelineExample>> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| SlmError::io(path.display().to_string(), e))?;
    Ok(read_segmented_str(&body, table))
}

fn parse_segmented_line(
    line: &str,
    table: &CharClassTable,
    line_no: usize,
    out: &mut Vec<GuidelineExample>,
) {
    let mut syms: Vec<Sym> = Vec::new();
    let mut lengths: Vec<usize> = Vec::new();
    let mut close = |syms: &mut Vec<Sym>, lengths: &mut Vec<usize>| {
        if !syms.is_empty() {
            out.push(GuidelineExample {
                syms: std::mem::take(syms),
                gold: Segmentation::new(std::mem::take(lengths)),
                line: line_no,
            });
        } else {
            lengths.clear();
        }
    };
    for word in line.split_whitespace() {
        // a word may itself contain punctuation; each punctuation-free piece
        // is one gold word, and the punctuation closes the current example
        let pre = preprocess_line(word, table);
        for item in pre.items {
            match item {
                LineItem::Punc(_) => close(&mut syms, &mut lengths),
                LineItem::Frag(f) => {
                    lengths.push(f.syms.len());
                    syms.extend(f.syms);
                }
            }
        }
    }
    close(&mut syms, &mut lengths);
}

/// Apply the overlong-word policy; returns the kept examples and how many
/// lines were affected.
pub fn enforce_max_word_len(
    examples: Vec<GuidelineExample>,
    max_segment_len: usize,
    policy: OverlongPolicy,
) -> (Vec<GuidelineExample>, usize) {
    let mut affected = 0usize;
    let mut kept = Vec::with_capacity(examples.len());
    for mut ex in examples {
        if ex.gold.lengths.iter().all(|l| *l <= max_segment_len) {
            kept.push(ex);
            continue;
        }
        affected += 1;
        match policy {
            OverlongPolicy::Skip => {}
            OverlongPolicy::SplitGreedy => {
                let mut lengths = Vec::with_capacity(ex.gold.lengths.len());
                for l in &ex.gold.lengths {
                    let mut rest = *l;
                    while rest > max_segment_len {
                        lengths.push(max_segment_len);
                        rest -= max_segment_len;
                    }
                    if rest > 0 {
                        lengths.push(rest);
                    }
                }
                ex.gold = Segmentation::new(lengths);
                kept.push(ex);
            }
        }
    }
    (kept, affected)
}

/// Render a preprocessed line plus one segmentation per fragment back to a
/// space-separated line. Words are rebuilt from the original text via the
/// recorded symbol spans, so collapsed runs reappear verbatim; punctuation is
/// reinserted in place.
pub fn render_segmented_line(
    original: &str,
    line: &PreprocessedLine,
    segs: &[Segmentation],
) -> Result<String> {
    let chars: Vec<char> = original.chars().collect();
    let n_frags = line.fragments().count();
    if segs.len() != n_frags {
        return Err(SlmError::InvalidArgument(format!(
            "line has {n_frags} fragments but {} segmentations were supplied",
            segs.len()
        )));
    }
    let mut words: Vec<String> = Vec::new();
    let mut next_seg = segs.iter();
    for item in &line.items {
        match item {
            LineItem::Punc(p) => match p {
                super::preprocess::Punc::Char(c) => words.push(c.to_string()),
                super::preprocess::Punc::Token => words.push(PUNC_TOKEN.to_string()),
            },
            LineItem::Frag(f) => {
                let seg = next_seg.next().expect("count checked above");
                seg.validate(f.syms.len(), usize::MAX)?;
                let mut pos = 0usize;
                for l in &seg.lengths {
                    let start = f.sym_spans[pos].0;
                    let end = f.sym_spans[pos + l - 1].1;
                    words.push(chars[start..end].iter().collect());
                    pos += l;
                }
            }
        }
    }
    Ok(words.join(" "))
}

/// Like [`render_segmented_line`], but at the placeholder level: collapsed
/// runs stay `⟨eng⟩`/`⟨num⟩` and punctuation becomes `⟨punc⟩`, so the output
/// concatenated without spaces equals the placeholder form of the input.
pub fn render_segmented_placeholders(
    line: &PreprocessedLine,
    segs: &[Segmentation],
) -> Result<String> {
    let n_frags = line.fragments().count();
    if segs.len() != n_frags {
        return Err(SlmError::InvalidArgument(format!(
            "line has {n_frags} fragments but {} segmentations were supplied",
            segs.len()
        )));
    }
    let mut words: Vec<String> = Vec::new();
    let mut next_seg = segs.iter();
    for item in &line.items {
        match item {
            LineItem::Punc(_) => words.push(PUNC_TOKEN.to_string()),
            LineItem::Frag(f) => {
                let seg = next_seg.next().expect("count checked above");
                seg.validate(f.syms.len(), usize::MAX)?;
                let mut pos = 0usize;
                for l in &seg.lengths {
                    words.push(f.syms[pos..pos + l].iter().map(|s| s.render()).collect());
                    pos += l;
                }
            }
        }
    }
    Ok(words.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> CharClassTable {
        CharClassTable::default_table()
    }

    #[test]
    fn reads_words_and_splits_on_punctuation() {
        let body = "我们 喜欢 吃饭，你 呢\n好\n";
        let ex = read_segmented_str(body, &table());
        assert_eq!(ex.len(), 3);
        assert_eq!(ex[0].gold.lengths, vec![2, 2, 2]);
        assert_eq!(ex[0].syms.len(), 6);
        assert_eq!(ex[0].line, 1);
        assert_eq!(ex[1].gold.lengths, vec![1, 1]);
        assert_eq!(ex[2].gold.lengths, vec![1]);
        assert_eq!(ex[2].line, 2);
    }

    #[test]
    fn collapses_class_runs_inside_words() {
        let ex = read_segmented_str("打 NBA 比赛2024", &table());
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].gold.lengths, vec![1, 1, 3]);
        assert_eq!(ex[0].syms[1], Sym::Eng);
        assert_eq!(ex[0].syms[4], Sym::Num);
    }

    #[test]
    fn overlong_policy_skip_and_split() {
        let ex = read_segmented_str("一二三四五 六\n七 八\n", &table());
        let (kept, affected) = enforce_max_word_len(ex.clone(), 4, OverlongPolicy::Skip);
        assert_eq!((kept.len(), affected), (1, 1));
        let (kept, affected) = enforce_max_word_len(ex, 4, OverlongPolicy::SplitGreedy);
        assert_eq!((kept.len(), affected), (2, 1));
        assert_eq!(kept[0].gold.lengths, vec![4, 1, 1]);
    }

    #[test]
    fn render_round_trips_gold_lines() {
        let original = "我们喜欢NBA，你呢";
        let line = preprocess_line(original, &table());
        let segs = vec![Segmentation::new(vec![2, 2, 1]), Segmentation::new(vec![1, 1])];
        let rendered = render_segmented_line(original, &line, &segs).unwrap();
        assert_eq!(rendered, "我们 喜欢 NBA ， 你 呢");
        // reading the rendered line back reproduces the segmentations
        let ex = read_segmented_str(&rendered, &table());
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].gold.lengths, segs[0].lengths);
        assert_eq!(ex[1].gold.lengths, segs[1].lengths);
    }

    #[test]
    fn placeholder_rendering_preserves_placeholder_stream() {
        let original = "我们喜欢NBA，你呢";
        let line = preprocess_line(original, &table());
        let segs = vec![Segmentation::new(vec![2, 2, 1]), Segmentation::new(vec![1, 1])];
        let rendered = render_segmented_placeholders(&line, &segs).unwrap();
        assert_eq!(rendered, "我们 喜欢 ⟨eng⟩ ⟨punc⟩ 你 呢");
        let unspaced: String = rendered.split(' ').collect();
        assert_eq!(unspaced, line.placeholders());
    }

    #[test]
    fn render_rejects_wrong_segmentation_count() {
        let original = "你好，世界";
        let line = preprocess_line(original, &table());
        assert!(render_segmented_line(original, &line, &[Segmentation::new(vec![2])]).is_err());
    }
}
