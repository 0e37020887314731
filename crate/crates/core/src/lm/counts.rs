use std::collections::BTreeMap;

use super::{LmError, BOS, EOS, UNK};

/// Raw n-gram counts for orders `1..=order` over `<s>`/`</s>` padded lines.
/// The unigram table also counts `<s>` so that every history is itself
/// present one order down.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CountsTable {
    order: usize,
    counts: Vec<BTreeMap<Vec<String>, u64>>,
}

impl CountsTable {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Counts for n-grams of length `n` (1-based).
    pub fn of_order(&self, n: usize) -> &BTreeMap<Vec<String>, u64> {
        &self.counts[n - 1]
    }

    pub fn get(&self, ngram: &[&str]) -> u64 {
        let key: Vec<String> = ngram.iter().map(|s| s.to_string()).collect();
        self.counts.get(key.len().wrapping_sub(1)).and_then(|m| m.get(&key)).copied().unwrap_or(0)
    }

    /// Total n-gram tokens at order `n`; at order 1 `<s>` is not counted.
    pub fn total(&self, n: usize) -> u64 {
        self.counts[n - 1].iter().filter(|(k, _)| n > 1 || k[0] != BOS).map(|(_, c)| c).sum()
    }

    /// Makes `<unk>` part of the vocabulary with a unigram count of at least one.
    pub fn add_unk(&mut self) {
        let c = self.counts[0].entry(vec![UNK.to_string()]).or_insert(0);
        *c = (*c).max(1);
    }

    /// Merges another table of the same order into this one.
    pub fn merge(&mut self, other: &CountsTable) {
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (k, c) in theirs {
                *mine.entry(k.clone()).or_insert(0) += c;
            }
        }
    }
}

/// Counts every n-gram of every padded line.
pub fn count_ngrams(corpus: &[Vec<String>], order: usize) -> Result<CountsTable, LmError> {
    if order == 0 {
        return Err(LmError::InvalidOrder(order));
    }
    if corpus.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let mut counts = vec![BTreeMap::new(); order];
    for (lineno, line) in corpus.iter().enumerate() {
        if let Some(bad) = line.iter().find(|t| t.is_empty() || t.chars().any(char::is_whitespace) || *t == BOS || *t == EOS) {
            return Err(LmError::InvalidToken { line: lineno + 1, token: bad.clone() });
        }
        let mut padded: Vec<&str> = Vec::with_capacity(line.len() + 2);
        padded.push(BOS);
        padded.extend(line.iter().map(String::as_str));
        padded.push(EOS);
        for n in 1..=order.min(padded.len()) {
            for window in padded.windows(n) {
                let key: Vec<String> = window.iter().map(|s| s.to_string()).collect();
                *counts[n - 1].entry(key).or_insert(0) += 1;
            }
        }
    }
    Ok(CountsTable { order, counts })
}

/// Upper-cases every token except the sentence and unknown markers.
pub fn normalize_corpus(lines: &[Vec<String>]) -> Vec<Vec<String>> {
    lines
        .iter()
        .map(|l| l.iter().map(|t| if t == UNK { t.clone() } else { t.to_uppercase() }).collect())
        .collect()
}

/// One sentence per line, whitespace tokenized, upper-cased. Blank lines
/// are skipped.
pub fn read_corpus(text: &str) -> Vec<Vec<String>> {
    let lines: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|l| !l.is_empty())
        .collect();
    normalize_corpus(&lines)
}
