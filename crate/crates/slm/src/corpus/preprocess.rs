//! Raw-text preprocessing.
//!
//! Each input line becomes an alternating stream of punctuation tokens and
//! character fragments. Inside a fragment, runs of Latin letters collapse to a
//! single `⟨eng⟩` symbol and runs of digits to a single `⟨num⟩`; punctuation
//! never enters a fragment — it splits the line into independent fragments
//! instead. The original span of every fragment is recorded so segmenter
//! output can be stitched back between the punctuation it was split on.
//!
//! Preprocessing is idempotent at the placeholder level: the literal tokens
//! `⟨punc⟩`, `⟨eng⟩` and `⟨num⟩` in the input are recognized and kept as the
//! corresponding symbols rather than re-classified character by character.

use super::charclass::{CharClass, CharClassTable};

pub const PUNC_TOKEN: &str = "⟨punc⟩";
pub const ENG_TOKEN: &str = "⟨eng⟩";
pub const NUM_TOKEN: &str = "⟨num⟩";
pub const UNK_TOKEN: &str = "⟨unk⟩";
pub const EOS_TOKEN: &str = "⟨eos⟩";
pub const SENT_END_TOKEN: &str = "⟨EOS⟩";

/// One symbol of a fragment: a concrete character or a collapsed class run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sym {
    Char(char),
    Eng,
    Num,
}

impl Sym {
    pub fn render(&self) -> String {
        match self {
            Sym::Char(c) => c.to_string(),
            Sym::Eng => ENG_TOKEN.to_string(),
            Sym::Num => NUM_TOKEN.to_string(),
        }
    }
}

/// A maximal punctuation-free stretch of a line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentText {
    pub syms: Vec<Sym>,
    /// Char-offset span `[start, end)` in the original line.
    pub span: (usize, usize),
    /// Char-offset span of each symbol; a collapsed class run covers the
    /// whole run, so segmented output can be rendered over the original text.
    pub sym_spans: Vec<(usize, usize)>,
}

/// The punctuation separating fragments. A concrete character, or the
/// placeholder token when the input already was one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Punc {
    Char(char),
    Token,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineItem {
    Frag(FragmentText),
    Punc(Punc),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessedLine {
    pub items: Vec<LineItem>,
}

impl PreprocessedLine {
    pub fn fragments(&self) -> impl Iterator<Item = &FragmentText> {
        self.items.iter().filter_map(|i| match i {
            LineItem::Frag(f) => Some(f),
            LineItem::Punc(_) => None,
        })
    }

    /// The line with punctuation replaced by `⟨punc⟩` and class runs by their
    /// placeholder, fragments left unsegmented.
    pub fn placeholders(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            match item {
                LineItem::Punc(_) => out.push_str(PUNC_TOKEN),
                LineItem::Frag(f) => {
                    for s in &f.syms {
                        out.push_str(&s.render());
                    }
                }
            }
        }
        out
    }
}

/// Try to match one of the placeholder tokens at the head of `chars[i..]`.
fn match_token(chars: &[char], i: usize) -> Option<(usize, Option<Sym>)> {
    for (tok, sym) in [
        (PUNC_TOKEN, None),
        (ENG_TOKEN, Some(Sym::Eng)),
        (NUM_TOKEN, Some(Sym::Num)),
    ] {
        let tok: Vec<char> = tok.chars().collect();
        if chars[i..].starts_with(&tok) {
            return Some((tok.len(), sym));
        }
    }
    None
}

pub fn preprocess_line(text: &str, table: &CharClassTable) -> PreprocessedLine {
    let chars: Vec<char> = text.chars().collect();
    let mut items: Vec<LineItem> = Vec::new();
    let mut cur: Vec<Sym> = Vec::new();
    let mut cur_spans: Vec<(usize, usize)> = Vec::new();
    let mut cur_start = 0usize;

    let close = |items: &mut Vec<LineItem>,
                     cur: &mut Vec<Sym>,
                     cur_spans: &mut Vec<(usize, usize)>,
                     end: usize,
                     start: &mut usize| {
        if !cur.is_empty() {
            items.push(LineItem::Frag(FragmentText {
                syms: std::mem::take(cur),
                span: (*start, end),
                sym_spans: std::mem::take(cur_spans),
            }));
        }
        *start = end;
    };

    let mut i = 0;
    while i < chars.len() {
        if let Some((len, sym)) = match_token(&chars, i) {
            match sym {
                None => {
                    close(&mut items, &mut cur, &mut cur_spans, i, &mut cur_start);
                    items.push(LineItem::Punc(Punc::Token));
                    cur_start = i + len;
                }
                Some(s) => {
                    if cur.is_empty() {
                        cur_start = i;
                    }
                    cur.push(s);
                    cur_spans.push((i, i + len));
                }
            }
            i += len;
            continue;
        }
        let c = chars[i];
        match table.classify(c) {
            CharClass::Punc => {
                close(&mut items, &mut cur, &mut cur_spans, i, &mut cur_start);
                items.push(LineItem::Punc(Punc::Char(c)));
                cur_start = i + 1;
                i += 1;
            }
            CharClass::Latin => {
                if cur.is_empty() {
                    cur_start = i;
                }
                let run_start = i;
                while i < chars.len() && table.classify(chars[i]) == CharClass::Latin {
                    i += 1;
                }
                cur.push(Sym::Eng);
                cur_spans.push((run_start, i));
            }
            CharClass::Digit => {
                if cur.is_empty() {
                    cur_start = i;
                }
                let run_start = i;
                while i < chars.len() && table.classify(chars[i]) == CharClass::Digit {
                    i += 1;
                }
                cur.push(Sym::Num);
                cur_spans.push((run_start, i));
            }
            CharClass::Other => {
                if cur.is_empty() {
                    cur_start = i;
                }
                cur.push(Sym::Char(c));
                cur_spans.push((i, i + 1));
                i += 1;
            }
        }
    }
    close(&mut items, &mut cur, &mut cur_spans, chars.len(), &mut cur_start);
    PreprocessedLine { items }
}
