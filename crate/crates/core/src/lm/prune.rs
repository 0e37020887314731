use std::collections::{HashMap, HashSet};

use super::{NGramModel, BOS};

/// Probability mass below which a context counts as fully explicit.
const SATURATED: f64 = 1e-12;

/// Probability of a history under the model by the chain rule. A leading
/// `<s>` is given, not predicted.
fn history_prob(model: &NGramModel, history: &[u32]) -> f64 {
    let bos = model.token_id(BOS);
    let mut logp = 0.0;
    for i in 0..history.len() {
        if i == 0 && Some(history[0]) == bos {
            continue;
        }
        logp += model.log10_prob_ids(&history[..i], history[i]);
    }
    10f64.powf(logp)
}

/// Relative-entropy increase, in nats, caused by dropping the explicit
/// n-gram `history + [word]` and letting it back off:
///
/// `ΔH = −P(h)·[ p(w|h)·ln(p'(w|h)/p(w|h)) + (1 − Σ_E p(·|h))·ln(α'(h)/α(h)) ]`
///
/// where `α'` is the backoff weight recomputed without the n-gram and
/// `p'(w|h) = α'(h)·p(w|h')`.
pub fn entropy_pruning_delta(model: &NGramModel, history: &[u32], word: u32) -> f64 {
    let n = history.len() + 1;
    let (mut explicit, mut lower) = (0.0, 0.0);
    for k in model.section(n).keys().filter(|k| &k[..n - 1] == history) {
        explicit += model.prob_ids(history, k[n - 1]);
        lower += model.prob_ids(&history[1..], k[n - 1]);
    }
    delta_given_sums(model, history, word, explicit, lower)
}

/// `explicit` and `lower` are Σ p(v|h) and Σ p(v|h') over the explicit
/// continuations v of h.
fn delta_given_sums(model: &NGramModel, history: &[u32], word: u32, explicit: f64, lower: f64) -> f64 {
    let p = model.prob_ids(history, word);
    let p_lower = model.prob_ids(&history[1..], word);
    let backed_off = (1.0 - explicit).max(0.0);
    let lower_rest = (1.0 - lower).max(0.0);
    let alpha_new = (backed_off + p) / (lower_rest + p_lower);
    let p_new = alpha_new * p_lower;
    let mut inner = 0.0;
    if p > 0.0 {
        inner += p * (p_new / p).ln();
    }
    // A context whose explicit continuations cover the vocabulary has no
    // backed-off mass to reweight.
    if backed_off > SATURATED && lower_rest > SATURATED {
        inner += backed_off * (alpha_new * lower_rest / backed_off).ln();
    }
    (-history_prob(model, history) * inner).max(0.0)
}

/// Removes every n-gram (n ≥ 2) whose removal raises training-set
/// perplexity by a relative amount `exp(ΔH) − 1` below `theta`, then
/// renormalizes backoff weights. N-grams that are still contexts of a kept
/// higher-order n-gram are kept. Unigrams are never pruned, and
/// `theta = 0` prunes nothing.
pub fn prune_entropy(model: &NGramModel, theta: f64) -> NGramModel {
    let mut out = model.clone();
    if !(theta > 0.0) || model.order() < 2 {
        return out;
    }
    let mut kept_contexts: HashSet<Vec<u32>> = HashSet::new();
    for n in (2..=model.order()).rev() {
        let mut section: Vec<&Vec<u32>> = model.section(n).keys().collect();
        section.sort();
        let mut sums: HashMap<&[u32], (f64, f64)> = HashMap::new();
        for key in &section {
            let (h, w) = (&key[..n - 1], key[n - 1]);
            let s = sums.entry(h).or_insert((0.0, 0.0));
            s.0 += model.prob_ids(h, w);
            s.1 += model.prob_ids(&h[1..], w);
        }
        let mut deltas: HashMap<Vec<u32>, bool> = HashMap::new();
        for key in section {
            if kept_contexts.contains(key) {
                deltas.insert(key.clone(), false);
                continue;
            }
            let (explicit, lower) = sums[&key[..n - 1]];
            let delta = delta_given_sums(model, &key[..n - 1], key[n - 1], explicit, lower);
            deltas.insert(key.clone(), delta.exp_m1() < theta);
        }
        let kept = &mut out.entries[n - 1];
        kept.retain(|k, _| !deltas[k]);
        kept_contexts = kept.keys().map(|k| k[..n - 1].to_vec()).collect();
    }
    out.recompute_backoffs();
    out
}
