use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::AmError;

pub const DEFAULT_SILENCE_PHONE: &str = "SIL";

/// Word pronunciations over a phone inventory. The silence phone is always
/// part of the inventory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Vec<String>>>,
    phones: BTreeSet<String>,
    silence: String,
}

impl Lexicon {
    pub fn new(silence: impl Into<String>) -> Self {
        let silence = silence.into();
        Self { entries: BTreeMap::new(), phones: BTreeSet::from([silence.clone()]), silence }
    }

    /// Adds a pronunciation. Returns `false` if the identical entry was
    /// already present.
    pub fn add(&mut self, word: impl Into<String>, phones: Vec<String>) -> Result<bool, AmError> {
        let word = word.into();
        if phones.is_empty() {
            return Err(AmError::EmptyPronunciation { line: 0, word });
        }
        let prons = self.entries.entry(word).or_default();
        if prons.contains(&phones) {
            return Ok(false);
        }
        self.phones.extend(phones.iter().cloned());
        prons.push(phones);
        Ok(true)
    }

    pub fn silence(&self) -> &str {
        &self.silence
    }

    /// Sorted phone inventory, silence included.
    pub fn phones(&self) -> Vec<String> {
        self.phones.iter().cloned().collect()
    }

    /// Sorted word list.
    pub fn words(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn pronunciations(&self, word: &str) -> Option<&[Vec<String>]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One `WORD ph1 ph2 …` line per pronunciation, sorted by word.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (w, prons) in &self.entries {
            for p in prons {
                let _ = writeln!(out, "{w} {}", p.join(" "));
            }
        }
        out
    }
}

/// Parses `WORD ph1 ph2 …` lines. Blank lines and lines starting with `#`
/// are ignored. Repeated identical entries are dropped with a warning.
pub fn parse_lexicon(text: &str) -> Result<Lexicon, AmError> {
    parse_lexicon_with_silence(text, DEFAULT_SILENCE_PHONE)
}

pub fn parse_lexicon_with_silence(text: &str, silence: &str) -> Result<Lexicon, AmError> {
    let mut lex = Lexicon::new(silence);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line");
        let phones: Vec<String> = fields.map(str::to_string).collect();
        if phones.is_empty() {
            return Err(AmError::EmptyPronunciation { line: i + 1, word: word.to_string() });
        }
        if !lex.add(word, phones)? {
            log::warn!("lexicon line {}: duplicate pronunciation for {word} ignored", i + 1);
        }
    }
    Ok(lex)
}
