//! Backoff n-gram language models: counting, interpolated Kneser-Ney
//! estimation, ARPA text I/O, static interpolation, perplexity, weight
//! tuning and relative-entropy pruning.
//!
//! All probabilities are stored as log10 values, the ARPA convention.

mod arpa;
mod counts;
mod interpolate;
mod kneser_ney;
mod perplexity;
mod prune;

use std::collections::HashMap;

use thiserror::Error;

pub use arpa::{parse_arpa, serialize_arpa};
pub use counts::{count_ngrams, normalize_corpus, read_corpus, CountsTable};
pub use interpolate::{interpolate, tune_weight, InterpolationConfig, TuneResult};
pub use kneser_ney::{train_kneser_ney, Discounts, KneserNeyModel};
pub use perplexity::{perplexity, OovPolicy, PerplexityResult};
pub use prune::{entropy_pruning_delta, prune_entropy};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";
/// log10 value stored for tokens that must be listed but are never predicted.
pub const LOG_ZERO: f64 = -99.0;

#[derive(Debug, Error, PartialEq)]
pub enum LmError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("invalid token {token:?} on corpus line {line}")]
    InvalidToken { line: usize, token: String },
    #[error("discount {value} for order {order} must lie in [0, 1)")]
    InvalidDiscount { order: usize, value: f64 },
    #[error("expected {expected} discounts, got {got}")]
    DiscountCount { expected: usize, got: usize },
    #[error("ARPA count mismatch for order {order}: header says {header}, section has {found}")]
    ArpaCountMismatch { order: usize, header: usize, found: usize },
    #[error("ARPA syntax error on line {line}: {message}")]
    ArpaSyntax { line: usize, message: String },
    #[error("ARPA input ends without \\end\\")]
    ArpaMissingEnd,
    #[error("model orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("interpolation weight {0} outside [0, 1]")]
    InvalidWeight(f64),
    #[error("grid step {0} must be in (0, 1]")]
    InvalidGridStep(f64),
    #[error("text is empty")]
    EmptyText,
    #[error("out-of-vocabulary token {0:?} and the model has no <unk>")]
    OovWithoutUnk(String),
}

/// One n-gram's log10 probability and, when it is a context, its log10
/// backoff weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NgramEntry {
    pub log10_prob: f64,
    pub log10_backoff: Option<f64>,
}

pub(crate) fn clamp_log(v: f64) -> f64 {
    if v.is_nan() || v < LOG_ZERO {
        LOG_ZERO
    } else {
        v
    }
}

pub(crate) fn log10_or_zero(p: f64) -> f64 {
    if p > 0.0 {
        clamp_log(p.log10())
    } else {
        LOG_ZERO
    }
}

/// A backoff n-gram model.
///
/// Tokens are interned with ids assigned in lexicographic order, so two
/// models with the same entries are equal field by field.
#[derive(Clone, Debug, PartialEq)]
pub struct NGramModel {
    order: usize,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    /// `entries[n - 1]` holds the n-grams.
    entries: Vec<HashMap<Vec<u32>, NgramEntry>>,
}

impl NGramModel {
    /// Builds a model from token-keyed entries. Every token must appear as a
    /// unigram. Backoff weights are taken as given.
    pub fn from_token_entries(order: usize, sections: Vec<Vec<(Vec<String>, NgramEntry)>>) -> Result<Self, LmError> {
        if order == 0 {
            return Err(LmError::InvalidOrder(0));
        }
        let mut vocab: Vec<String> = sections
            .first()
            .map(|uni| uni.iter().map(|(k, _)| k[0].clone()).collect())
            .unwrap_or_default();
        vocab.sort();
        vocab.dedup();
        let index: HashMap<String, u32> = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let mut entries = vec![HashMap::new(); order];
        for (n, section) in sections.into_iter().enumerate().take(order) {
            for (key, e) in section {
                let ids = key
                    .iter()
                    .map(|t| {
                        index.get(t).copied().ok_or_else(|| LmError::ArpaSyntax {
                            line: 0,
                            message: format!("token {t:?} in a {}-gram is not a unigram", n + 1),
                        })
                    })
                    .collect::<Result<Vec<u32>, _>>()?;
                entries[n].insert(
                    ids,
                    NgramEntry { log10_prob: clamp_log(e.log10_prob), log10_backoff: e.log10_backoff },
                );
            }
        }
        Ok(Self { order, vocab, index, entries })
    }

    pub(crate) fn from_parts(order: usize, vocab: Vec<String>, entries: Vec<HashMap<Vec<u32>, NgramEntry>>) -> Self {
        debug_assert!(vocab.windows(2).all(|w| w[0] < w[1]));
        let index = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { order, vocab, index, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// All unigram tokens, sorted, including `<s>`.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.vocab[id as usize]
    }

    /// Tokens a distribution is normalized over: the vocabulary minus `<s>`.
    pub fn predictable_ids(&self) -> Vec<u32> {
        (0..self.vocab.len() as u32).filter(|&i| self.vocab[i as usize] != BOS).collect()
    }

    pub fn num_entries(&self, n: usize) -> usize {
        self.entries.get(n - 1).map_or(0, |m| m.len())
    }

    pub fn entry(&self, ngram: &[&str]) -> Option<NgramEntry> {
        let ids: Option<Vec<u32>> = ngram.iter().map(|t| self.token_id(t)).collect();
        let ids = ids?;
        self.entries.get(ids.len().checked_sub(1)?)?.get(&ids).copied()
    }

    pub(crate) fn section(&self, n: usize) -> &HashMap<Vec<u32>, NgramEntry> {
        &self.entries[n - 1]
    }

    /// Entries of order `n` as token tuples, sorted lexicographically.
    pub fn sorted_entries(&self, n: usize) -> Vec<(Vec<&str>, NgramEntry)> {
        let mut out: Vec<(Vec<u32>, NgramEntry)> = self.entries[n - 1].iter().map(|(k, v)| (k.clone(), *v)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out.into_iter().map(|(k, v)| (k.iter().map(|&i| self.token(i)).collect(), v)).collect()
    }

    /// log10 p(word | history) under the backoff recursion, with ids.
    /// Only the last `order − 1` history ids are used.
    pub fn log10_prob_ids(&self, history: &[u32], word: u32) -> f64 {
        let keep = self.order - 1;
        let h = &history[history.len().saturating_sub(keep)..];
        let mut key: Vec<u32> = Vec::with_capacity(h.len() + 1);
        let mut backoff = 0.0;
        for start in 0..=h.len() {
            let ctx = &h[start..];
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.entries[ctx.len()].get(&key) {
                return clamp_log(backoff + e.log10_prob);
            }
            if !ctx.is_empty() {
                if let Some(bo) = self.entries[ctx.len() - 1].get(ctx).and_then(|e| e.log10_backoff) {
                    backoff += bo;
                }
            }
        }
        LOG_ZERO
    }

    /// log10 p(word | history) for tokens. Unknown history tokens cut the
    /// history at that point; an unknown word scores [`LOG_ZERO`].
    pub fn log10_prob(&self, history: &[&str], word: &str) -> f64 {
        let Some(w) = self.token_id(word) else {
            return LOG_ZERO;
        };
        let mut ids = Vec::with_capacity(history.len());
        for t in history {
            match self.token_id(t) {
                Some(id) => ids.push(id),
                None => ids.clear(),
            }
        }
        self.log10_prob_ids(&ids, w)
    }

    pub fn prob(&self, history: &[&str], word: &str) -> f64 {
        let lp = self.log10_prob(history, word);
        if lp <= LOG_ZERO {
            0.0
        } else {
            10f64.powf(lp)
        }
    }

    pub(crate) fn prob_ids(&self, history: &[u32], word: u32) -> f64 {
        let lp = self.log10_prob_ids(history, word);
        if lp <= LOG_ZERO {
            0.0
        } else {
            10f64.powf(lp)
        }
    }

    /// Every history that has explicit continuations, including the empty one.
    pub fn contexts(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = vec![Vec::new()];
        for n in 2..=self.order {
            let mut seen: Vec<Vec<u32>> = self.entries[n - 1].keys().map(|k| k[..n - 1].to_vec()).collect();
            seen.sort();
            seen.dedup();
            out.extend(seen);
        }
        out
    }

    /// Σ_w p(w | context) over the predictable vocabulary.
    pub fn context_mass(&self, context: &[u32]) -> f64 {
        self.predictable_ids().into_iter().map(|w| self.prob_ids(context, w)).sum()
    }

    /// Recomputes every backoff weight so that each context normalizes:
    /// `bow(h) = (1 − Σ_E p(w|h)) / (1 − Σ_E p(w|h'))` over the explicit
    /// continuations `E` of `h`. Entries that are not contexts lose their
    /// backoff weight.
    pub(crate) fn recompute_backoffs(&mut self) {
        for section in self.entries.iter_mut() {
            for e in section.values_mut() {
                e.log10_backoff = None;
            }
        }
        for n in 1..self.order {
            let mut children: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
            for key in self.entries[n].keys() {
                children.entry(key[..n].to_vec()).or_default().push(key[n]);
            }
            let mut updates = Vec::with_capacity(children.len());
            for (ctx, mut words) in children {
                words.sort_unstable();
                let mut explicit = 0.0;
                let mut lower = 0.0;
                let mut key = ctx.clone();
                for &w in &words {
                    key.truncate(n);
                    key.push(w);
                    let e = &self.entries[n][&key];
                    explicit += if e.log10_prob <= LOG_ZERO { 0.0 } else { 10f64.powf(e.log10_prob) };
                    lower += self.prob_ids(&ctx[1..], w);
                }
                let num = 1.0 - explicit;
                let den = 1.0 - lower;
                let bow = if num <= 1e-15 {
                    LOG_ZERO
                } else if den <= 1e-15 {
                    0.0
                } else {
                    log10_or_zero(num / den)
                };
                updates.push((ctx, bow));
            }
            for (ctx, bow) in updates {
                if let Some(e) = self.entries[n - 1].get_mut(&ctx) {
                    e.log10_backoff = Some(bow);
                }
            }
        }
    }

    /// The model restricted to orders `1..=order`, backoffs renormalized.
    pub fn truncate_order(&self, order: usize) -> NGramModel {
        let order = order.clamp(1, self.order);
        let mut out = NGramModel::from_parts(order, self.vocab.clone(), self.entries[..order].to_vec());
        out.recompute_backoffs();
        out
    }
}
