//! Rule-based post-processing of decoded segmentations.
//!
//! The common systematic error of a likelihood-trained segmenter is gluing a
//! grammatical particle onto the preceding content word. A small rule set
//! detaches known single-character suffix particles: any word of at least
//! `min_word_len` symbols ending in a particle is split before its last
//! character, repeatedly until no rule fires. Rules only move boundaries —
//! the character stream is never altered.

use std::path::Path;

use crate::corpus::Sym;
use crate::error::{Result, SlmError};
use crate::model::Segmentation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub particles: Vec<char>,
    /// Words shorter than this are left alone.
    pub min_word_len: usize,
}

impl RuleSet {
    /// The common Mandarin suffix particles.
    pub fn default_rules() -> RuleSet {
        RuleSet { particles: vec!['的', '了', '着', '过', '地', '得'], min_word_len: 2 }
    }

    pub fn empty() -> RuleSet {
        RuleSet { particles: Vec::new(), min_word_len: 2 }
    }

    /// Parse a rule file: `min_word_len N` plus `particle C` lines.
    pub fn parse(body: &str) -> Result<RuleSet> {
        let mut rules = RuleSet { particles: Vec::new(), min_word_len: 2 };
        for (n, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, val) = line
                .split_once(' ')
                .ok_or(SlmError::Parse { line: n + 1, msg: format!("bad rule line {line:?}") })?;
            match key {
                "min_word_len" => {
                    rules.min_word_len = val.trim().parse().map_err(|_| SlmError::Parse {
                        line: n + 1,
                        msg: format!("bad min_word_len {val:?}"),
                    })?;
                    if rules.min_word_len < 2 {
                        return Err(SlmError::Parse {
                            line: n + 1,
                            msg: "min_word_len must be at least 2".into(),
                        });
                    }
                }
                "particle" => {
                    let mut it = val.trim().chars();
                    match (it.next(), it.next()) {
                        (Some(c), None) => rules.particles.push(c),
                        _ => {
                            return Err(SlmError::Parse {
                                line: n + 1,
                                msg: format!("particle must be a single character, found {val:?}"),
                            })
                        }
                    }
                }
                other => {
                    return Err(SlmError::Parse {
                        line: n + 1,
                        msg: format!("unknown rule key {other:?}"),
                    })
                }
            }
        }
        Ok(rules)
    }

    pub fn from_file(path: &Path) -> Result<RuleSet> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| SlmError::io(path.display().to_string(), e))?;
        RuleSet::parse(&body)
    }

    fn is_particle(&self, sym: &Sym) -> bool {
        matches!(sym, Sym::Char(c) if self.particles.contains(c))
    }

    /// Apply the rules to one fragment's segmentation until a fixpoint.
    pub fn apply(&self, syms: &[Sym], seg: &Segmentation) -> Result<Segmentation> {
        seg.validate(syms.len(), usize::MAX)?;
        let mut lengths = seg.lengths.clone();
        loop {
            let mut changed = false;
            let mut out = Vec::with_capacity(lengths.len());
            let mut pos = 0usize;
            for l in &lengths {
                let end = pos + l;
                if *l >= self.min_word_len && self.is_particle(&syms[end - 1]) {
                    out.push(l - 1);
                    out.push(1);
                    changed = true;
                } else {
                    out.push(*l);
                }
                pos = end;
            }
            lengths = out;
            if !changed {
                return Ok(Segmentation::new(lengths));
            }
        }
    }
}
