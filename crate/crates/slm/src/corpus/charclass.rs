//! Character classification table.
//!
//! The class sets are data, not code: a versioned range table ships with the
//! crate and an alternative file can be supplied at run time.

use std::path::Path;

use crate::error::{Result, SlmError};

pub const DEFAULT_TABLE: &str = include_str!("../data/charclass.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharClass {
    Punc,
    Latin,
    Digit,
    Other,
}

#[derive(Debug, Clone)]
pub struct CharClassTable {
    ranges: Vec<(u32, u32, CharClass)>,
}

impl CharClassTable {
    pub fn parse(body: &str) -> Result<Self> {
        let mut lines = body.lines().enumerate();
        match lines.next() {
            Some((_, "charclass v1")) => {}
            _ => {
                return Err(SlmError::Parse {
                    line: 1,
                    msg: "expected 'charclass v1' header".into(),
                })
            }
        }
        let mut ranges = Vec::new();
        for (n, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(SlmError::Parse { line: n + 1, msg: format!("bad range line {line:?}") });
            }
            let class = match parts[0] {
                "punc" => CharClass::Punc,
                "latin" => CharClass::Latin,
                "digit" => CharClass::Digit,
                other => {
                    return Err(SlmError::Parse {
                        line: n + 1,
                        msg: format!("unknown class {other:?}"),
                    })
                }
            };
            let parse_hex = |s: &str| -> Result<u32> {
                u32::from_str_radix(s.trim_start_matches("0x"), 16)
                    .map_err(|_| SlmError::Parse { line: n + 1, msg: format!("bad codepoint {s:?}") })
            };
            ranges.push((parse_hex(parts[1])?, parse_hex(parts[2])?, class));
        }
        Ok(CharClassTable { ranges })
    }

    pub fn default_table() -> Self {
        CharClassTable::parse(DEFAULT_TABLE).expect("bundled table is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| SlmError::io(path.display().to_string(), e))?;
        CharClassTable::parse(&body)
    }

    pub fn classify(&self, c: char) -> CharClass {
        let cp = c as u32;
        for (lo, hi, class) in &self.ranges {
            if cp >= *lo && cp <= *hi {
                return *class;
            }
        }
        CharClass::Other
    }
}
