use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{log10_or_zero, perplexity, LmError, NGramModel, NgramEntry, OovPolicy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterpolationConfig {
    /// Weight on the first (in-domain) model.
    pub lambda: f64,
    pub grid_step: f64,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        Self { lambda: 0.5, grid_step: 0.01 }
    }
}

/// Static linear interpolation `λ·p_a + (1−λ)·p_b`, materialized as a single
/// backoff model over the union of both vocabularies and n-gram sets.
pub fn interpolate(a: &NGramModel, b: &NGramModel, cfg: &InterpolationConfig) -> Result<NGramModel, LmError> {
    if a.order() != b.order() {
        return Err(LmError::OrderMismatch(a.order(), b.order()));
    }
    let lambda = cfg.lambda;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(LmError::InvalidWeight(lambda));
    }
    let vocab: Vec<String> = a.vocab().iter().chain(b.vocab()).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let index: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, t)| (t.as_str(), i as u32)).collect();
    // Translate a union id into each model's id space.
    let to_a: Vec<Option<u32>> = vocab.iter().map(|t| a.token_id(t)).collect();
    let to_b: Vec<Option<u32>> = vocab.iter().map(|t| b.token_id(t)).collect();

    let order = a.order();
    let mut entries: Vec<HashMap<Vec<u32>, NgramEntry>> = vec![HashMap::new(); order];
    let mut keys: Vec<BTreeSet<Vec<u32>>> = vec![BTreeSet::new(); order];
    for model in [a, b] {
        for n in 1..=order {
            for k in model.section(n).keys() {
                keys[n - 1].insert(k.iter().map(|&id| index[model.token(id)]).collect());
            }
        }
    }
    let component = |model: &NGramModel, map: &[Option<u32>], key: &[u32]| -> f64 {
        let (hist, word) = key.split_at(key.len() - 1);
        let Some(w) = map[word[0] as usize] else {
            return 0.0;
        };
        let mut h = Vec::with_capacity(hist.len());
        for &id in hist {
            match map[id as usize] {
                Some(x) => h.push(x),
                None => h.clear(),
            }
        }
        model.prob_ids(&h, w)
    };
    for (n, section) in keys.into_iter().enumerate() {
        for key in section {
            let p = lambda * component(a, &to_a, &key) + (1.0 - lambda) * component(b, &to_b, &key);
            entries[n].insert(key, NgramEntry { log10_prob: log10_or_zero(p), log10_backoff: None });
        }
    }
    let mut model = NGramModel::from_parts(order, vocab, entries);
    model.recompute_backoffs();
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub lambda: f64,
    pub ppl: f64,
    /// Every (λ, perplexity) evaluated, ascending λ.
    pub curve: Vec<(f64, f64)>,
}

/// Relative slack under which two perplexities count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// Grid search over λ ∈ {0, step, …, 1} for the lowest dev perplexity.
/// Ties go to the larger λ, i.e. toward the first model.
pub fn tune_weight(
    a: &NGramModel,
    b: &NGramModel,
    dev: &[Vec<String>],
    grid_step: f64,
    policy: OovPolicy,
) -> Result<TuneResult, LmError> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(LmError::InvalidGridStep(grid_step));
    }
    let steps = (1.0 / grid_step).round() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|k| (k as f64 * grid_step).min(1.0)).collect();
    if *grid.last().expect("non-empty") < 1.0 {
        grid.push(1.0);
    }
    grid.dedup();

    let mut curve = Vec::with_capacity(grid.len());
    let mut best = (0.0, f64::INFINITY);
    let mut lowest = f64::INFINITY;
    for lambda in grid {
        let model = interpolate(a, b, &InterpolationConfig { lambda, grid_step })?;
        let ppl = perplexity(&model, dev, policy)?.ppl;
        curve.push((lambda, ppl));
        if ppl <= lowest * (1.0 + TIE_TOLERANCE) || best.1.is_infinite() {
            best = (lambda, ppl);
        }
        lowest = lowest.min(ppl);
    }
    let (lambda, ppl) = best;
    Ok(TuneResult { lambda, ppl, curve })
}
