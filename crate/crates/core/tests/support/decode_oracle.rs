//! Brute-force decoding oracle: enumerates every word sequence,
//! pronunciation choice and silence placement, scores each with a plain
//! left-to-right forced alignment, and keeps the best.

use mrlt_core::am::{AcousticScorer, DecoderConfig, DecodingGraph, HmmTopology, Lexicon};
use mrlt_core::features::{FeatureMatrix, StreamKind};
use mrlt_core::lm::{count_ngrams, train_kneser_ney, Discounts, NGramModel, BOS, EOS};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Frame-by-state score table.
pub struct TableScorer {
    pub scores: Vec<Vec<f64>>,
    pub k: usize,
}

impl AcousticScorer for TableScorer {
    fn num_states(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }

    fn dims(&self) -> Option<usize> {
        None
    }

    fn frame_subsampling(&self) -> usize {
        self.k
    }

    fn log_likelihood(&self, _feats: &FeatureMatrix, frame: usize, state: usize) -> f64 {
        self.scores[frame][state]
    }
}

pub struct Instance {
    pub lexicon: Lexicon,
    pub hmm: HmmTopology,
    pub lm: NGramModel,
    pub scorer: TableScorer,
    pub feats: FeatureMatrix,
    pub cfg: DecoderConfig,
}

pub fn dummy_features(frames: usize) -> FeatureMatrix {
    FeatureMatrix::new(Array2::zeros((frames, 1)), 10.0, StreamKind::Poly).unwrap()
}

/// Random tiny instance: up to three words of one or two phones (two
/// states each), a Kneser-Ney bigram over random text, random frame scores.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phones = ["a", "b", "c"];
    let names = ["X", "Y", "Z"];
    let n_words = rng.random_range(1..=3);
    let mut lexicon = Lexicon::new("SIL");
    for &name in &names[..n_words] {
        let prons = if rng.random_bool(0.3) { 2 } else { 1 };
        for _ in 0..prons {
            let len = rng.random_range(1..=2);
            let pron = (0..len).map(|_| phones[rng.random_range(0..3)].to_string()).collect();
            lexicon.add(name, pron).unwrap();
        }
    }
    let mut hmm = HmmTopology::new(lexicon.phones(), 2, 0.5).unwrap();
    for p in hmm.self_loop.iter_mut() {
        *p = rng.random_range(0.1..0.9);
    }
    let lines: Vec<Vec<String>> = (0..6)
        .map(|_| (0..rng.random_range(1..=4)).map(|_| names[rng.random_range(0..n_words)].to_string()).collect())
        .collect();
    let lm = train_kneser_ney(&count_ngrams(&lines, 2).unwrap(), &Discounts::Fixed(vec![0.5, 0.5])).unwrap().model;
    let k = rng.random_range(1..=2);
    let frames = rng.random_range(4..=9) * k - rng.random_range(0..k);
    let scores = (0..frames).map(|_| (0..hmm.num_states()).map(|_| rng.random_range(-5.0..0.0)).collect()).collect();
    let cfg = DecoderConfig {
        beam: f64::INFINITY,
        lm_scale: rng.random_range(0.0..3.0),
        word_insertion_penalty: rng.random_range(-1.0..1.0),
        n_best: 5,
        silence_prior: rng.random_range(0.2..0.8),
        max_expansions: 100_000,
    };
    Instance { lexicon, hmm, lm, scorer: TableScorer { scores, k }, feats: dummy_features(frames), cfg }
}

/// Best path score through a fixed left-to-right state sequence over
/// `ac[step][state]`, entering at the first state and leaving the last.
fn linear_viterbi(states: &[usize], hmm: &HmmTopology, ac: &[Vec<f64>]) -> f64 {
    let n = states.len();
    if ac.len() < n || n == 0 {
        return f64::NEG_INFINITY;
    }
    let self_p = |s: usize| hmm.self_loop[s].ln();
    let fwd_p = |s: usize| (1.0 - hmm.self_loop[s]).ln();
    let mut d = vec![f64::NEG_INFINITY; n];
    d[0] = ac[0][states[0]];
    for row in &ac[1..] {
        let mut nd = vec![f64::NEG_INFINITY; n];
        for j in 0..n {
            let stay = d[j] + self_p(states[j]);
            let adv = if j > 0 { d[j - 1] + fwd_p(states[j - 1]) } else { f64::NEG_INFINITY };
            nd[j] = stay.max(adv) + row[states[j]];
        }
        d = nd;
    }
    d[n - 1] + fwd_p(states[n - 1])
}

fn bigram_ln(lm: &NGramModel, h: &str, w: &str) -> f64 {
    lm.log10_prob(&[h], w) * std::f64::consts::LN_10
}

/// Exhaustive best (score, words) over all sequences of up to `max_words`.
pub fn brute_force(inst: &Instance, max_words: usize) -> (f64, Vec<String>) {
    let hmm = &inst.hmm;
    let k = inst.scorer.k;
    let t = inst.scorer.scores.len();
    let ac: Vec<Vec<f64>> = (0..t.div_ceil(k))
        .map(|i| {
            let w = k.min(t - i * k) as f64;
            inst.scorer.scores[i * k].iter().map(|x| w * x).collect()
        })
        .collect();
    let sil: Vec<usize> = {
        let p = hmm.phones.iter().position(|p| p == "SIL").unwrap();
        (0..hmm.states_per_phone).map(|s| p * hmm.states_per_phone + s).collect()
    };
    let expand = |pron: &[String]| -> Vec<usize> {
        pron.iter()
            .flat_map(|ph| {
                let p = hmm.phones.iter().position(|x| x == ph).unwrap();
                (0..hmm.states_per_phone).map(move |s| p * hmm.states_per_phone + s)
            })
            .collect()
    };
    let words = inst.lexicon.words();
    let cfg = &inst.cfg;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut seqs: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_words {
        let next: Vec<Vec<usize>> = seqs
            .iter()
            .filter(|s| s.len() == seqs.last().unwrap().len())
            .flat_map(|s| (0..words.len()).map(move |w| [s.clone(), vec![w]].concat()))
            .collect();
        seqs.extend(next);
    }
    for seq in seqs.iter().filter(|s| !s.is_empty()) {
        let ws: Vec<&str> = seq.iter().map(|&i| words[i].as_str()).collect();
        let mut lm = 0.0;
        let mut h = BOS;
        for w in &ws {
            lm += bigram_ln(&inst.lm, h, w);
            h = w;
        }
        lm += bigram_ln(&inst.lm, h, EOS);
        let lm_part = cfg.lm_scale * lm - cfg.word_insertion_penalty * ws.len() as f64;
        // Every pronunciation choice.
        let prons: Vec<&[Vec<String>]> = ws.iter().map(|w| inst.lexicon.pronunciations(w).unwrap()).collect();
        let mut choice = vec![0usize; ws.len()];
        loop {
            // Every silence placement: before word 0 and after each word.
            for mask in 0..(1u32 << (ws.len() + 1)) {
                let mut states = Vec::new();
                let mut branch = 0.0;
                for slot in 0..=ws.len() {
                    if mask & (1 << slot) != 0 {
                        states.extend(&sil);
                        branch += cfg.silence_prior.ln();
                    } else {
                        branch += (1.0 - cfg.silence_prior).ln();
                    }
                    if slot < ws.len() {
                        states.extend(expand(&prons[slot][choice[slot]]));
                    }
                }
                let total = linear_viterbi(&states, hmm, &ac) + branch + lm_part;
                if total > best.0 {
                    best = (total, ws.iter().map(|s| s.to_string()).collect());
                }
            }
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < prons[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
    }
    best
}

/// Decodes and compares with the oracle. Returns a description of the
/// first disagreement, if any.
pub fn check_instance(seed: u64) -> Result<(), String> {
    let inst = random_instance(seed);
    let graph = DecodingGraph::new(&inst.lexicon, &inst.hmm, &inst.lm, &inst.cfg).map_err(|e| e.to_string())?;
    let nbest = mrlt_core::am::viterbi_decode(&inst.feats, &inst.scorer, &graph).map_err(|e| e.to_string())?;
    // Every word spans at least two states, so no path fits more words.
    let max_words = inst.scorer.scores.len().div_ceil(inst.scorer.k) / 2;
    let (oracle_score, oracle_words) = brute_force(&inst, max_words);
    match nbest.best() {
        None if oracle_score == f64::NEG_INFINITY => Ok(()),
        None => Err(format!("seed {seed}: decoder empty, oracle {oracle_words:?} at {oracle_score}")),
        Some(h) => {
            if (h.combined - oracle_score).abs() > 1e-9 * oracle_score.abs().max(1.0) {
                return Err(format!("seed {seed}: decoder {:?} at {} vs oracle {oracle_words:?} at {oracle_score}", h.words, h.combined));
            }
            // Exact score ties may legitimately pick a different sequence.
            let runner_up = nbest.hypotheses.get(1).map(|x| x.combined);
            let tied = runner_up.is_some_and(|r| (r - h.combined).abs() < 1e-9);
            if h.words != oracle_words && !tied {
                return Err(format!("seed {seed}: decoder {:?} vs oracle {oracle_words:?}", h.words));
            }
            Ok(())
        }
    }
}
