use std::collections::HashMap;

use log::warn;

use super::{log10_or_zero, CountsTable, LmError, NGramModel, NgramEntry, BOS, LOG_ZERO};

/// Absolute discount per order.
#[derive(Clone, Debug, PartialEq)]
pub enum Discounts {
    /// `D_n = n1 / (n1 + 2·n2)` from the count-of-counts of each order.
    Estimate,
    /// One value per order, lowest order first.
    Fixed(Vec<f64>),
}

/// Discount used when the count-of-counts cannot support an estimate.
pub const FALLBACK_DISCOUNT: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct KneserNeyModel {
    pub model: NGramModel,
    /// Discount actually applied at each order.
    pub discounts: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Interpolated Kneser-Ney estimation, written out in backoff form.
///
/// The highest order discounts raw counts; lower orders discount
/// continuation counts (the number of distinct left neighbours), except for
/// n-grams starting with `<s>`, which have no left neighbour and keep their
/// raw counts. Unigrams interpolate with a uniform distribution over the
/// vocabulary (without `<s>`). Every context's backoff weight is its
/// interpolation weight `γ(h) = D·N1+(h•)/c(h)`.
pub fn train_kneser_ney(counts: &CountsTable, discounts: &Discounts) -> Result<KneserNeyModel, LmError> {
    let order = counts.order();
    if order == 0 {
        return Err(LmError::InvalidOrder(0));
    }
    let mut vocab: Vec<String> = counts.of_order(1).keys().map(|k| k[0].clone()).collect();
    if !vocab.iter().any(|t| t == BOS) {
        vocab.push(BOS.to_string());
    }
    vocab.sort();
    vocab.dedup();
    let index: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, t)| (t.as_str(), i as u32)).collect();
    let bos = index[BOS];

    let raw: Vec<HashMap<Vec<u32>, u64>> = (1..=order)
        .map(|n| {
            counts
                .of_order(n)
                .iter()
                .map(|(k, &c)| (k.iter().map(|t| index[t.as_str()]).collect(), c))
                .collect()
        })
        .collect();

    // Adjusted counts: raw at the top order, continuation counts below.
    let mut adjusted: Vec<HashMap<Vec<u32>, u64>> = Vec::with_capacity(order);
    for n in 1..=order {
        if n == order {
            adjusted.push(raw[n - 1].clone());
            continue;
        }
        let mut cont: HashMap<&[u32], u64> = HashMap::new();
        for key in raw[n].keys() {
            *cont.entry(&key[1..]).or_insert(0) += 1;
        }
        let adj = raw[n - 1]
            .iter()
            .map(|(k, &c)| {
                let v = if k[0] == bos { c } else { cont.get(k.as_slice()).copied().filter(|&v| v > 0).unwrap_or(c) };
                (k.clone(), v)
            })
            .collect();
        adjusted.push(adj);
    }

    let mut warnings = Vec::new();
    let used: Vec<f64> = match discounts {
        Discounts::Fixed(d) => {
            if d.len() != order {
                return Err(LmError::DiscountCount { expected: order, got: d.len() });
            }
            for (i, &v) in d.iter().enumerate() {
                if !(0.0..1.0).contains(&v) {
                    return Err(LmError::InvalidDiscount { order: i + 1, value: v });
                }
            }
            d.clone()
        }
        Discounts::Estimate => (1..=order)
            .map(|n| {
                let (mut n1, mut n2) = (0u64, 0u64);
                for (k, &c) in &adjusted[n - 1] {
                    if n == 1 && k[0] == bos {
                        continue;
                    }
                    match c {
                        1 => n1 += 1,
                        2 => n2 += 1,
                        _ => {}
                    }
                }
                if n1 == 0 || n2 == 0 {
                    let msg = format!(
                        "order {n}: count-of-counts n1={n1}, n2={n2} cannot support an estimate; using D={FALLBACK_DISCOUNT}"
                    );
                    warn!("{msg}");
                    warnings.push(msg);
                    FALLBACK_DISCOUNT
                } else {
                    n1 as f64 / (n1 as f64 + 2.0 * n2 as f64)
                }
            })
            .collect(),
    };

    // Interpolated probabilities for every listed n-gram, lowest order first.
    let predictable = (vocab.len() - 1) as f64;
    let mut probs: Vec<HashMap<Vec<u32>, f64>> = Vec::with_capacity(order);
    let mut gammas: Vec<HashMap<Vec<u32>, f64>> = Vec::with_capacity(order);
    for n in 1..=order {
        let d = used[n - 1];
        let adj = &adjusted[n - 1];
        let mut totals: HashMap<&[u32], (u64, u64)> = HashMap::new();
        for (k, &c) in adj {
            if n == 1 && k[0] == bos {
                continue;
            }
            let t = totals.entry(&k[..n - 1]).or_insert((0, 0));
            t.0 += c;
            if c > 0 {
                t.1 += 1;
            }
        }
        let gamma: HashMap<Vec<u32>, f64> = totals
            .iter()
            .map(|(h, &(total, types))| (h.to_vec(), if total == 0 { 1.0 } else { d * types as f64 / total as f64 }))
            .collect();
        let mut p = HashMap::with_capacity(adj.len());
        for (k, &c) in adj {
            if n == 1 && k[0] == bos {
                p.insert(k.clone(), 0.0);
                continue;
            }
            let h = &k[..n - 1];
            let (total, _) = totals[h];
            let discounted = if total == 0 { 0.0 } else { (c as f64 - d).max(0.0) / total as f64 };
            let lower = if n == 1 { 1.0 / predictable } else { probs[n - 2][&k[1..]] };
            p.insert(k.clone(), discounted + gamma[h] * lower);
        }
        probs.push(p);
        gammas.push(gamma);
    }

    let mut entries: Vec<HashMap<Vec<u32>, NgramEntry>> = probs
        .iter()
        .map(|section| {
            section
                .iter()
                .map(|(k, &p)| (k.clone(), NgramEntry { log10_prob: log10_or_zero(p), log10_backoff: None }))
                .collect()
        })
        .collect();
    for n in 2..=order {
        for (h, &g) in &gammas[n - 1] {
            if let Some(e) = entries[n - 2].get_mut(h) {
                e.log10_backoff = Some(if g > 0.0 { log10_or_zero(g) } else { LOG_ZERO });
            }
        }
    }

    Ok(KneserNeyModel { model: NGramModel::from_parts(order, vocab, entries), discounts: used, warnings })
}

#[cfg(test)]
mod tests {
    use super::super::count_ngrams;
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines.iter().map(|l| l.split_whitespace().map(str::to_string).collect()).collect()
    }

    #[test]
    fn unigram_shares_mass_with_end_marker() {
        let counts = count_ngrams(&corpus(&["a", "a", "a"]), 1).unwrap();
        let kn = train_kneser_ney(&counts, &Discounts::Estimate).unwrap();
        // n1 = n2 = 0 here, so the fallback discount applies.
        assert_eq!(kn.discounts, vec![FALLBACK_DISCOUNT]);
        assert_eq!(kn.warnings.len(), 1);
        let m = &kn.model;
        let total = m.prob(&[], "a") + m.prob(&[], "</s>");
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(m.prob(&[], "<s>"), 0.0);
    }

    #[test]
    fn fixed_discount_validation() {
        let counts = count_ngrams(&corpus(&["a b"]), 2).unwrap();
        assert!(matches!(
            train_kneser_ney(&counts, &Discounts::Fixed(vec![0.5])),
            Err(LmError::DiscountCount { expected: 2, got: 1 })
        ));
        assert!(matches!(
            train_kneser_ney(&counts, &Discounts::Fixed(vec![0.5, 1.5])),
            Err(LmError::InvalidDiscount { order: 2, .. })
        ));
    }

    #[test]
    fn unk_gets_mass_when_injected() {
        let mut counts = count_ngrams(&corpus(&["a b", "b a"]), 2).unwrap();
        counts.add_unk();
        let m = train_kneser_ney(&counts, &Discounts::Estimate).unwrap().model;
        assert!(m.prob(&["a"], "<unk>") > 0.0);
        let ctx = vec![m.token_id("a").unwrap()];
        assert!((m.context_mass(&ctx) - 1.0).abs() < 1e-9);
    }
}
