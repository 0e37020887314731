use serde::{Deserialize, Serialize};

use super::{LmError, NGramModel, BOS, EOS, UNK};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OovPolicy {
    /// Map out-of-vocabulary tokens to `<unk>`; an error if the model has none.
    #[default]
    RequireUnk,
    /// Drop out-of-vocabulary tokens from the score and the token count.
    SkipOov,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerplexityResult {
    pub ppl: f64,
    pub log10_prob: f64,
    pub oov_count: usize,
    /// Scored tokens, `</s>` included, `<s>` excluded.
    pub word_count: usize,
    pub sentences: usize,
}

/// `10^(−Σ log10 p / M)` over every predicted token.
pub fn perplexity(model: &NGramModel, text: &[Vec<String>], policy: OovPolicy) -> Result<PerplexityResult, LmError> {
    if text.is_empty() {
        return Err(LmError::EmptyText);
    }
    let bos = model.token_id(BOS);
    let eos = model.token_id(EOS);
    let unk = model.token_id(UNK);
    let mut total = 0.0;
    let mut oov_count = 0;
    let mut word_count = 0;
    let mut history: Vec<u32> = Vec::new();
    for line in text {
        history.clear();
        history.extend(bos);
        for tok in line.iter().map(String::as_str).chain(std::iter::once(EOS)) {
            let id = if tok == EOS { eos } else { model.token_id(tok) };
            let id = match (id, policy) {
                (Some(id), _) => id,
                (None, OovPolicy::RequireUnk) => {
                    oov_count += 1;
                    unk.ok_or_else(|| LmError::OovWithoutUnk(tok.to_string()))?
                }
                (None, OovPolicy::SkipOov) => {
                    oov_count += 1;
                    // The unknown token breaks the history.
                    history.clear();
                    continue;
                }
            };
            total += model.log10_prob_ids(&history, id);
            word_count += 1;
            history.push(id);
        }
    }
    let ppl = if word_count == 0 { f64::INFINITY } else { 10f64.powf(-total / word_count as f64) };
    Ok(PerplexityResult { ppl, log10_prob: total, oov_count, word_count, sentences: text.len() })
}

#[cfg(test)]
mod tests {
    use super::super::{NgramEntry, LOG_ZERO};
    use super::*;

    fn uniform(n: usize) -> NGramModel {
        let mut uni = vec![(vec![BOS.to_string()], NgramEntry { log10_prob: LOG_ZERO, log10_backoff: None })];
        uni.push((vec![EOS.to_string()], NgramEntry { log10_prob: -(n as f64).log10(), log10_backoff: None }));
        for i in 0..n - 1 {
            uni.push((vec![format!("W{i}")], NgramEntry { log10_prob: -(n as f64).log10(), log10_backoff: None }));
        }
        NGramModel::from_token_entries(1, vec![uni]).unwrap()
    }

    fn text(lines: &[&str]) -> Vec<Vec<String>> {
        lines.iter().map(|l| l.split_whitespace().map(str::to_string).collect()).collect()
    }

    #[test]
    fn uniform_model_has_vocabulary_perplexity() {
        let m = uniform(50);
        let r = perplexity(&m, &text(&["W1 W2 W3", "W40", ""]), OovPolicy::RequireUnk).unwrap();
        assert!((r.ppl - 50.0).abs() < 1e-6);
        assert_eq!(r.word_count, 4 + 2 + 1);
    }

    #[test]
    fn oov_policies() {
        let m = uniform(10);
        assert_eq!(
            perplexity(&m, &text(&["NOPE"]), OovPolicy::RequireUnk),
            Err(LmError::OovWithoutUnk("NOPE".into()))
        );
        let r = perplexity(&m, &text(&["NOPE NADA"]), OovPolicy::SkipOov).unwrap();
        assert_eq!((r.word_count, r.oov_count), (1, 2));
        assert_eq!(perplexity(&m, &[], OovPolicy::SkipOov), Err(LmError::EmptyText));
    }
}
