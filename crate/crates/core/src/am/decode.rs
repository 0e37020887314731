use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use super::model::HmmTopology;
use super::nbest::{lm_word_log10, sequence_lm_score};
use super::{AcousticScorer, AmError, Lexicon};
use crate::features::FeatureMatrix;
use crate::lm::{NGramModel, BOS, EOS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    /// Pruning beam in natural-log units; `inf` disables pruning.
    pub beam: f64,
    pub lm_scale: f64,
    /// Cost subtracted per hypothesized word.
    pub word_insertion_penalty: f64,
    pub n_best: usize,
    /// Prior of an optional silence after each word and at the start.
    pub silence_prior: f64,
    /// Cap on partial paths expanded while extracting the N-best list.
    pub max_expansions: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            beam: 16.0,
            lm_scale: 8.0,
            word_insertion_penalty: 0.0,
            n_best: 50,
            silence_prior: 0.5,
            max_expansions: 50_000,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), AmError> {
        if !(self.beam > 0.0) {
            return Err(AmError::InvalidConfig(format!("beam must be positive, got {}", self.beam)));
        }
        if !(self.lm_scale >= 0.0) || !self.word_insertion_penalty.is_finite() {
            return Err(AmError::InvalidConfig("lm_scale must be non-negative and the penalty finite".into()));
        }
        if self.n_best == 0 {
            return Err(AmError::InvalidConfig("n_best must be positive".into()));
        }
        if !(self.silence_prior > 0.0 && self.silence_prior < 1.0) {
            return Err(AmError::InvalidConfig("silence_prior must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub words: Vec<String>,
    /// Half-open frame range of each word, in input frames.
    pub spans: Vec<(usize, usize)>,
    /// Acoustic, HMM transition and silence-prior log score.
    pub acoustic: f64,
    /// Natural-log LM score of the sequence including `</s>`.
    pub lm: f64,
    /// `acoustic + lm_scale·lm − penalty·|words|`.
    pub combined: f64,
}

/// Ranked hypotheses, best first. Empty when no path survived decoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NBestList {
    pub hypotheses: Vec<Hypothesis>,
    pub lm_scale: f64,
    pub word_insertion_penalty: f64,
    pub frame_shift_ms: f64,
    pub num_frames: usize,
}

impl NBestList {
    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn best(&self) -> Option<&Hypothesis> {
        self.hypotheses.first()
    }

    pub fn best_words(&self) -> Vec<String> {
        self.best().map(|h| h.words.clone()).unwrap_or_default()
    }

    pub(crate) fn combine(&self, acoustic: f64, lm: f64, n_words: usize) -> f64 {
        acoustic + self.lm_scale * lm - self.word_insertion_penalty * n_words as f64
    }

    pub(crate) fn sort(&mut self) {
        self.hypotheses.sort_by(|a, b| b.combined.total_cmp(&a.combined));
    }
}

struct Chain {
    word: usize,
    states: Vec<usize>,
    offset: usize,
}

/// Word-loop search network: every pronunciation as a chain of HMM states,
/// a bigram LM applied on word entry, and per-history silence chains.
pub struct DecodingGraph {
    words: Vec<String>,
    chains: Vec<Chain>,
    word_states: usize,
    silence: Vec<usize>,
    hmm: HmmTopology,
    lm: NGramModel,
    lm_start: Vec<f64>,
    lm_trans: Vec<f64>,
    lm_end: Vec<f64>,
    cfg: DecoderConfig,
}

impl DecodingGraph {
    /// Builds the network for every lexicon word. Models above order two are
    /// projected to their bigram part for the first pass.
    pub fn new(lexicon: &Lexicon, hmm: &HmmTopology, lm: &NGramModel, cfg: &DecoderConfig) -> Result<Self, AmError> {
        cfg.validate()?;
        let lm = if lm.order() > 2 { lm.truncate_order(2) } else { lm.clone() };
        let words = lexicon.words();
        if words.is_empty() {
            return Err(AmError::EmptyLexicon);
        }
        let mut chains = Vec::new();
        let mut offset = 0;
        for (w, word) in words.iter().enumerate() {
            for pron in lexicon.pronunciations(word).expect("listed word") {
                let states = hmm.expand(pron)?;
                let len = states.len();
                chains.push(Chain { word: w, states, offset });
                offset += len;
            }
        }
        let silence = match hmm.phone_index(lexicon.silence()) {
            Some(_) => hmm.expand(&[lexicon.silence().to_string()])?,
            None => Vec::new(),
        };
        let v = words.len();
        let ln10 = std::f64::consts::LN_10;
        let lm_start = words.iter().map(|w| ln10 * lm_word_log10(&lm, &[BOS], w)).collect();
        let mut lm_trans = vec![0.0; v * v];
        for (h, hw) in words.iter().enumerate() {
            for (w, ww) in words.iter().enumerate() {
                lm_trans[h * v + w] = ln10 * lm_word_log10(&lm, &[hw.as_str()], ww);
            }
        }
        let lm_end = words.iter().map(|h| ln10 * lm_word_log10(&lm, &[h.as_str()], EOS)).collect();
        Ok(Self {
            words,
            chains,
            word_states: offset,
            silence,
            hmm: hmm.clone(),
            lm,
            lm_start,
            lm_trans,
            lm_end,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// The first-pass LM.
    pub fn lm(&self) -> &NGramModel {
        &self.lm
    }

    fn lm_from(&self, hist: usize, w: usize) -> f64 {
        if hist == self.words.len() {
            self.lm_start[w]
        } else {
            self.lm_trans[hist * self.words.len() + w]
        }
    }
}

const START: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Record {
    word: u32,
    start: u32,
    end: u32,
    exit: f64,
}

/// A point where a path may enter a new word: after a word with no
/// silence, after a silence, or at the utterance start.
#[derive(Clone, Copy)]
struct Event {
    pred: u32,
    hist: u32,
    score: f64,
}

#[derive(PartialEq)]
struct Item {
    est: f64,
    g: f64,
    at: u32,
    node: u32,
    seq: u64,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        self.est.total_cmp(&o.est).then(o.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct SuffixNode {
    word: u32,
    start: u32,
    end: u32,
    parent: u32,
}

/// Token-passing Viterbi search followed by N-best extraction.
///
/// Only every k-th frame is scored, where k is the scorer's subsampling
/// factor, and each scored frame's log-likelihood is multiplied by the
/// number of input frames it stands for. With an infinite beam the best
/// hypothesis is the exact best path through the network.
pub fn viterbi_decode(feats: &FeatureMatrix, scorer: &dyn AcousticScorer, graph: &DecodingGraph) -> Result<NBestList, AmError> {
    if let Some(d) = scorer.dims() {
        if d != feats.dims() {
            return Err(AmError::DimensionMismatch { expected: d, found: feats.dims() });
        }
    }
    if scorer.num_states() < graph.hmm.num_states() {
        return Err(AmError::StateCountMismatch { scorer: scorer.num_states(), graph: graph.hmm.num_states() });
    }
    let cfg = &graph.cfg;
    let mut out = NBestList {
        hypotheses: Vec::new(),
        lm_scale: cfg.lm_scale,
        word_insertion_penalty: cfg.word_insertion_penalty,
        frame_shift_ms: feats.frame_shift_ms,
        num_frames: feats.num_frames(),
    };
    let total_frames = feats.num_frames();
    if total_frames == 0 {
        return Ok(out);
    }
    let k = scorer.frame_subsampling().max(1);
    let steps = total_frames.div_ceil(k);
    let v = graph.words.len();
    let hmm = &graph.hmm;
    let n_sil = graph.silence.len();
    let (l_sil, l_skip) = if n_sil > 0 { (cfg.silence_prior.ln(), (1.0 - cfg.silence_prior).ln()) } else { (f64::NEG_INFINITY, 0.0) };
    let ninf = f64::NEG_INFINITY;

    let mut used = vec![false; hmm.num_states()];
    for c in &graph.chains {
        for &s in &c.states {
            used[s] = true;
        }
    }
    for &s in &graph.silence {
        used[s] = true;
    }
    let used: Vec<usize> = (0..used.len()).filter(|&s| used[s]).collect();
    let mut ac = vec![0.0; hmm.num_states()];

    let nw = graph.word_states;
    let (mut wscore, mut wentry) = (vec![ninf; nw], vec![0u32; nw]);
    let (mut nwscore, mut nwentry) = (vec![ninf; nw], vec![0u32; nw]);
    let ns = (v + 1) * n_sil;
    let (mut sscore, mut spred) = (vec![ninf; ns], vec![START; ns]);
    let (mut nsscore, mut nspred) = (vec![ninf; ns], vec![START; ns]);

    let mut records: Vec<Record> = Vec::new();
    let initial = vec![Event { pred: START, hist: v as u32, score: l_skip }];
    let mut events: Vec<Vec<Event>> = Vec::with_capacity(steps);
    let mut entry_scores: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let compute_entry = |evs: &[Event]| -> Vec<f64> {
        let mut best_hist = vec![ninf; v + 1];
        for e in evs {
            let b = &mut best_hist[e.hist as usize];
            *b = b.max(e.score);
        }
        let mut entry = vec![ninf; v];
        for (h, &b) in best_hist.iter().enumerate() {
            if b == ninf {
                continue;
            }
            for (w, slot) in entry.iter_mut().enumerate() {
                let c = b + cfg.lm_scale * graph.lm_from(h, w) - cfg.word_insertion_penalty;
                if c > *slot {
                    *slot = c;
                }
            }
        }
        entry
    };
    let mut entry = compute_entry(&initial);
    let mut sil_entry: Vec<(f64, u32)> = vec![(ninf, START); v + 1];
    sil_entry[v] = (l_sil, START);

    for t in 0..steps {
        let frame = t * k;
        let weight = k.min(total_frames - frame) as f64;
        for &s in &used {
            ac[s] = weight * scorer.log_likelihood(feats, frame, s);
        }
        let mut best = ninf;
        for c in &graph.chains {
            let o = c.offset;
            for (j, &s) in c.states.iter().enumerate() {
                let mut sc = wscore[o + j] + hmm.log_self(s);
                let mut en = wentry[o + j];
                let (adv, adv_en) = if j == 0 {
                    (entry[c.word], t as u32)
                } else {
                    (wscore[o + j - 1] + hmm.log_forward(c.states[j - 1]), wentry[o + j - 1])
                };
                if adv > sc {
                    sc = adv;
                    en = adv_en;
                }
                nwscore[o + j] = if sc > ninf { sc + ac[s] } else { ninf };
                nwentry[o + j] = en;
                best = best.max(nwscore[o + j]);
            }
        }
        for h in 0..=v {
            let o = h * n_sil;
            for (j, &s) in graph.silence.iter().enumerate() {
                let mut sc = sscore[o + j] + hmm.log_self(s);
                let mut pr = spred[o + j];
                let (adv, adv_pr) = if j == 0 {
                    sil_entry[h]
                } else {
                    (sscore[o + j - 1] + hmm.log_forward(graph.silence[j - 1]), spred[o + j - 1])
                };
                if adv > sc {
                    sc = adv;
                    pr = adv_pr;
                }
                nsscore[o + j] = if sc > ninf { sc + ac[s] } else { ninf };
                nspred[o + j] = pr;
                best = best.max(nsscore[o + j]);
            }
        }
        if best == ninf {
            log::warn!("no surviving token at step {t}; returning an empty decode");
            return Ok(out);
        }
        let thr = best - cfg.beam;
        for x in nwscore.iter_mut().chain(nsscore.iter_mut()) {
            if *x < thr {
                *x = ninf;
            }
        }
        std::mem::swap(&mut wscore, &mut nwscore);
        std::mem::swap(&mut wentry, &mut nwentry);
        std::mem::swap(&mut sscore, &mut nsscore);
        std::mem::swap(&mut spred, &mut nspred);
        entry_scores.push(entry);

        let mut ev = Vec::new();
        let mut sil_next: Vec<(f64, u32)> = vec![(ninf, START); v + 1];
        for c in &graph.chains {
            let last = c.offset + c.states.len() - 1;
            if wscore[last] == ninf {
                continue;
            }
            let exit = wscore[last] + hmm.log_forward(*c.states.last().expect("non-empty"));
            let r = records.len() as u32;
            records.push(Record { word: c.word as u32, start: wentry[last], end: t as u32, exit });
            ev.push(Event { pred: r, hist: c.word as u32, score: exit + l_skip });
            if exit + l_sil > sil_next[c.word].0 {
                sil_next[c.word] = (exit + l_sil, r);
            }
        }
        if n_sil > 0 {
            let fwd = hmm.log_forward(graph.silence[n_sil - 1]);
            for h in 0..=v {
                let last = h * n_sil + n_sil - 1;
                if sscore[last] > ninf {
                    ev.push(Event { pred: spred[last], hist: h as u32, score: sscore[last] + fwd });
                }
            }
        }
        entry = compute_entry(&ev);
        sil_entry = sil_next;
        events.push(ev);
    }

    // N-best by best-first search backwards over word-end records. The
    // forward Viterbi score of each record is an exact bound on any prefix
    // ending there, so complete paths pop in score order.
    let exit_of = |p: u32| if p == START { 0.0 } else { records[p as usize].exit };
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for e in &events[steps - 1] {
        if e.pred == START {
            continue;
        }
        let g = cfg.lm_scale * graph.lm_end[e.hist as usize] + (e.score - exit_of(e.pred));
        heap.push(Item { est: exit_of(e.pred) + g, g, at: e.pred, node: START, seq });
        seq += 1;
    }
    let mut arena: Vec<SuffixNode> = Vec::new();
    let mut expanded: HashSet<(u32, Vec<u32>)> = HashSet::new();
    let mut emitted: HashSet<Vec<u32>> = HashSet::new();
    let suffix = |arena: &[SuffixNode], mut node: u32| {
        let mut words = Vec::new();
        while node != START {
            let n = &arena[node as usize];
            words.push(n.word);
            node = n.parent;
        }
        words
    };
    let mut pops = 0usize;
    while let Some(item) = heap.pop() {
        pops += 1;
        if pops > cfg.max_expansions {
            log::debug!("N-best extraction stopped after {} expansions", cfg.max_expansions);
            break;
        }
        if item.at == START {
            let ids = suffix(&arena, item.node);
            if !emitted.insert(ids.clone()) {
                continue;
            }
            let mut spans = Vec::with_capacity(ids.len());
            let mut node = item.node;
            while node != START {
                let n = &arena[node as usize];
                spans.push((n.start as usize * k, ((n.end as usize + 1) * k).min(total_frames)));
                node = n.parent;
            }
            let words: Vec<String> = ids.iter().map(|&w| graph.words[w as usize].clone()).collect();
            let lm = sequence_lm_score(&graph.lm, &words);
            let n = words.len();
            out.hypotheses.push(Hypothesis {
                acoustic: item.g - cfg.lm_scale * lm + cfg.word_insertion_penalty * n as f64,
                lm,
                combined: item.g,
                words,
                spans,
            });
            if out.hypotheses.len() >= cfg.n_best {
                break;
            }
            continue;
        }
        if !expanded.insert((item.at, suffix(&arena, item.node))) {
            continue;
        }
        let r = records[item.at as usize];
        let w = r.word as usize;
        let seg = r.exit - entry_scores[r.start as usize][w];
        let node = arena.len() as u32;
        arena.push(SuffixNode { word: r.word, start: r.start, end: r.end, parent: item.node });
        let preds = if r.start == 0 { &initial } else { &events[r.start as usize - 1] };
        for e in preds {
            let g = item.g + seg + cfg.lm_scale * graph.lm_from(e.hist as usize, w) - cfg.word_insertion_penalty
                + (e.score - exit_of(e.pred));
            heap.push(Item { est: exit_of(e.pred) + g, g, at: e.pred, node, seq });
            seq += 1;
        }
    }
    out.sort();
    Ok(out)
}

/// Builds the network and decodes one utterance.
pub fn viterbi_decode_with(
    feats: &FeatureMatrix,
    scorer: &dyn AcousticScorer,
    lexicon: &Lexicon,
    hmm: &HmmTopology,
    lm: &NGramModel,
    cfg: &DecoderConfig,
) -> Result<NBestList, AmError> {
    viterbi_decode(feats, scorer, &DecodingGraph::new(lexicon, hmm, lm, cfg)?)
}
