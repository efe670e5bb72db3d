//! Symbol vocabulary.
//!
//! The first six ids are reserved control/placeholder tokens; concrete
//! characters follow in order of first occurrence in the corpus, which makes
//! vocabulary construction deterministic for a fixed corpus.
//!
//! The model itself never sees punctuation and uses its own dense id space:
//! `⟨eng⟩ ⟨num⟩ ⟨unk⟩` map to model ids 0–2, characters follow, and the two
//! control symbols (`⟨eos⟩`, `⟨EOS⟩`) sit at the top. [`Vocabulary`] owns the
//! translation in both directions.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Result, SlmError};
use crate::model::fnv1a64;
use super::preprocess::{Sym, ENG_TOKEN, EOS_TOKEN, NUM_TOKEN, PUNC_TOKEN, SENT_END_TOKEN, UNK_TOKEN};

pub const PUNC_ID: u16 = 0;
pub const ENG_ID: u16 = 1;
pub const NUM_ID: u16 = 2;
pub const UNK_ID: u16 = 3;
pub const EOS_ID: u16 = 4;
pub const SENT_END_ID: u16 = 5;
pub const NUM_RESERVED: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    chars: Vec<char>,
    char_to_id: HashMap<char, u16>,
}

impl Vocabulary {
    /// Collect every distinct character across the fragments, in order of
    /// first occurrence.
    pub fn build<'a, I>(fragments: I) -> Vocabulary
    where
        I: IntoIterator<Item = &'a [Sym]>,
    {
        let mut v = Vocabulary { chars: Vec::new(), char_to_id: HashMap::new() };
        for frag in fragments {
            for sym in frag {
                if let Sym::Char(c) = sym {
                    v.intern(*c);
                }
            }
        }
        v
    }

    fn intern(&mut self, c: char) -> u16 {
        *self.char_to_id.entry(c).or_insert_with(|| {
            self.chars.push(c);
            (NUM_RESERVED + self.chars.len() - 1) as u16
        })
    }

    /// Total number of entries including the six reserved ids.
    pub fn len(&self) -> usize {
        NUM_RESERVED + self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Alphabet size of the model symbol space (placeholders plus characters,
    /// excluding punctuation and the two control symbols).
    pub fn model_alphabet_size(&self) -> usize {
        self.len() - 3
    }

    pub fn encode_sym(&self, sym: &Sym) -> u16 {
        match sym {
            Sym::Eng => ENG_ID,
            Sym::Num => NUM_ID,
            Sym::Char(c) => self.char_to_id.get(c).copied().unwrap_or(UNK_ID),
        }
    }

    /// Printable form of any vocabulary id.
    pub fn render(&self, id: u16) -> String {
        match id {
            PUNC_ID => PUNC_TOKEN.to_string(),
            ENG_ID => ENG_TOKEN.to_string(),
            NUM_ID => NUM_TOKEN.to_string(),
            UNK_ID => UNK_TOKEN.to_string(),
            EOS_ID => EOS_TOKEN.to_string(),
            SENT_END_ID => SENT_END_TOKEN.to_string(),
            _ => match self.chars.get(id as usize - NUM_RESERVED) {
                Some(c) => c.to_string(),
                None => format!("⟨bad:{id}⟩"),
            },
        }
    }

    /// Translate vocabulary ids to the model's dense symbol space. Errors on
    /// punctuation or control ids, which never appear inside a fragment.
    pub fn to_model_id(&self, id: u16) -> Result<u16> {
        match id {
            PUNC_ID | EOS_ID | SENT_END_ID => Err(SlmError::Vocab(format!(
                "id {id} ({}) cannot appear inside a fragment",
                self.render(id)
            ))),
            ENG_ID | NUM_ID | UNK_ID => Ok(id - 1),
            _ if (id as usize) < self.len() => Ok(id - 3),
            _ => Err(SlmError::Vocab(format!("id {id} out of range (vocab has {})", self.len()))),
        }
    }

    pub fn from_model_id(&self, m: u16) -> Result<u16> {
        let id = if m < 3 { m + 1 } else { m + 3 };
        if (id as usize) < self.len() {
            Ok(id)
        } else {
            Err(SlmError::Vocab(format!(
                "model id {m} out of range (alphabet size {})",
                self.model_alphabet_size()
            )))
        }
    }

    /// Encode a fragment straight into model ids, mapping unseen characters
    /// to the unknown placeholder.
    pub fn encode_fragment(&self, syms: &[Sym]) -> Vec<u16> {
        syms.iter()
            .map(|s| self.to_model_id(self.encode_sym(s)).expect("fragment syms are mappable"))
            .collect()
    }

    /// Render a model id for display.
    pub fn render_model_id(&self, m: u16) -> String {
        let alpha = self.model_alphabet_size() as u16;
        if m == alpha {
            EOS_TOKEN.to_string()
        } else if m == alpha + 1 {
            SENT_END_TOKEN.to_string()
        } else {
            match self.from_model_id(m) {
                Ok(id) => self.render(id),
                Err(_) => format!("⟨bad:{m}⟩"),
            }
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from("slm-vocab v1\n");
        for id in 0..self.len() as u16 {
            out.push_str(&format!("{}\t{}\n", self.render(id), id));
        }
        out
    }

    pub fn parse(body: &str) -> Result<Vocabulary> {
        let mut lines = body.lines().enumerate();
        match lines.next() {
            Some((_, "slm-vocab v1")) => {}
            _ => {
                return Err(SlmError::Parse { line: 1, msg: "expected 'slm-vocab v1' header".into() })
            }
        }
        let mut v = Vocabulary { chars: Vec::new(), char_to_id: HashMap::new() };
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let (tok, id_str) = line
                .split_once('\t')
                .ok_or(SlmError::Parse { line: n + 1, msg: format!("bad vocab line {line:?}") })?;
            let id: u16 = id_str
                .parse()
                .map_err(|_| SlmError::Parse { line: n + 1, msg: format!("bad id {id_str:?}") })?;
            if (id as usize) < NUM_RESERVED {
                let expect = [PUNC_TOKEN, ENG_TOKEN, NUM_TOKEN, UNK_TOKEN, EOS_TOKEN, SENT_END_TOKEN]
                    [id as usize];
                if tok != expect {
                    return Err(SlmError::Parse {
                        line: n + 1,
                        msg: format!("reserved id {id} should be {expect}, found {tok:?}"),
                    });
                }
            } else {
                let mut it = tok.chars();
                let c = it.next().ok_or(SlmError::Parse {
                    line: n + 1,
                    msg: "empty character entry".into(),
                })?;
                if it.next().is_some() {
                    return Err(SlmError::Parse {
                        line: n + 1,
                        msg: format!("character entry {tok:?} is not a single character"),
                    });
                }
                if id as usize != NUM_RESERVED + v.chars.len() {
                    return Err(SlmError::Parse {
                        line: n + 1,
                        msg: format!("non-contiguous id {id}"),
                    });
                }
                v.intern(c);
            }
        }
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize())
            .map_err(|e| SlmError::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| SlmError::io(path.display().to_string(), e))?;
        Vocabulary::parse(&body)
    }

    /// Stable fingerprint tying checkpoints to the vocabulary they were
    /// trained with.
    pub fn hash(&self) -> u64 {
        fnv1a64(self.serialize().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vocabulary {
        let a: Vec<Sym> = "你好".chars().map(Sym::Char).collect();
        let b: Vec<Sym> = "好世".chars().map(Sym::Char).collect();
        Vocabulary::build([a.as_slice(), b.as_slice()])
    }

    #[test]
    fn ids_follow_first_occurrence() {
        let v = sample();
        assert_eq!(v.len(), 9);
        assert_eq!(v.encode_sym(&Sym::Char('你')), 6);
        assert_eq!(v.encode_sym(&Sym::Char('好')), 7);
        assert_eq!(v.encode_sym(&Sym::Char('世')), 8);
        assert_eq!(v.encode_sym(&Sym::Char('界')), UNK_ID);
        assert_eq!(v.encode_sym(&Sym::Eng), ENG_ID);
    }

    #[test]
    fn model_mapping_round_trips() {
        let v = sample();
        assert_eq!(v.model_alphabet_size(), 6);
        for id in [ENG_ID, NUM_ID, UNK_ID, 6, 7, 8] {
            let m = v.to_model_id(id).unwrap();
            assert_eq!(v.from_model_id(m).unwrap(), id);
        }
        assert!(v.to_model_id(PUNC_ID).is_err());
        assert!(v.to_model_id(EOS_ID).is_err());
        assert_eq!(v.to_model_id(6).unwrap(), 3);
        assert_eq!(v.render_model_id(6), EOS_TOKEN);
        assert_eq!(v.render_model_id(7), SENT_END_TOKEN);
    }

    #[test]
    fn serialization_round_trips_and_hash_is_stable() {
        let v = sample();
        let text = v.serialize();
        let parsed = Vocabulary::parse(&text).unwrap();
        assert_eq!(parsed, v);
        assert_eq!(parsed.hash(), v.hash());
        let other = Vocabulary::build([
            "界好".chars().map(Sym::Char).collect::<Vec<_>>().as_slice()
        ]);
        assert_ne!(other.hash(), v.hash());
    }

    #[test]
    fn parse_rejects_corrupt_tables() {
        assert!(Vocabulary::parse("nope\n").is_err());
        let v = sample();
        let mut text = v.serialize();
        text.push_str("好好\t9\n");
        assert!(Vocabulary::parse(&text).is_err());
    }

    #[test]
    fn encode_fragment_maps_to_model_space() {
        let v = sample();
        let frag = vec![Sym::Char('你'), Sym::Eng, Sym::Char('界')];
        assert_eq!(v.encode_fragment(&frag), vec![3, 0, 2]);
    }
}
