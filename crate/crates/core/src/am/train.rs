use serde::{Deserialize, Serialize};

use super::model::{log_sum_exp, AcousticModel, DiagGmm, GmmScorer, HmmTopology};
use super::{AmError, Lexicon};
use crate::features::FeatureMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub states_per_phone: usize,
    /// Upper bound on mixture components per state.
    pub max_gaussians: usize,
    pub em_iterations: usize,
    /// Viterbi realignment (and mixture splitting) every this many
    /// iterations; 0 keeps the flat-start alignment.
    pub realign_every: usize,
    /// Variance floor as a fraction of the global per-dimension variance.
    pub var_floor_fraction: f64,
    /// Prior of an optional silence between words and at the ends.
    pub silence_prior: f64,
    /// Components whose weight falls below this are dropped at realignment.
    pub min_weight: f64,
    /// Mean offset, in standard deviations, when a component is split.
    pub split_offset: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            states_per_phone: 3,
            max_gaussians: 4,
            em_iterations: 20,
            realign_every: 4,
            var_floor_fraction: 0.01,
            silence_prior: 0.5,
            min_weight: 1e-5,
            split_offset: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AmError> {
        let bad = |m: &str| Err(AmError::InvalidConfig(m.to_string()));
        if self.states_per_phone == 0 {
            return bad("states_per_phone must be positive");
        }
        if self.max_gaussians == 0 {
            return bad("max_gaussians must be positive");
        }
        if !(self.silence_prior > 0.0 && self.silence_prior < 1.0) {
            return bad("silence_prior must lie in (0, 1)");
        }
        if !(self.var_floor_fraction > 0.0) {
            return bad("var_floor_fraction must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Increments at every realignment.
    pub phase: usize,
    pub log_likelihood: f64,
    pub frames: usize,
    pub gaussians: usize,
}

impl IterationLog {
    pub fn per_frame(&self) -> f64 {
        self.log_likelihood / self.frames.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: AcousticModel,
    pub log: Vec<IterationLog>,
    /// Per-frame state ids of the final alignment, one entry per input
    /// utterance; empty for skipped utterances.
    pub alignments: Vec<Vec<usize>>,
    /// Utterances too short for their state sequence.
    pub skipped: Vec<usize>,
}

/// Node of a linear alignment graph.
struct Node {
    state: usize,
    log_self: f64,
    log_fwd: f64,
    /// Predecessors with extra weight on top of their forward probability.
    preds: Vec<(usize, f64)>,
    start: f64,
    end: f64,
}

/// Alignment graph for one transcript: optional silence, then each word
/// (any pronunciation) followed by optional silence.
pub(crate) struct AlignGraph {
    nodes: Vec<Node>,
    min_frames: usize,
}

impl AlignGraph {
    pub(crate) fn build(
        words: &[Vec<Vec<usize>>],
        silence: Option<&[usize]>,
        silence_prior: f64,
        hmm: &HmmTopology,
    ) -> Self {
        const START: usize = usize::MAX;
        let (l_sil, l_skip) = (silence_prior.ln(), (1.0 - silence_prior).ln());
        let mut nodes: Vec<Node> = Vec::new();
        let mut exits: Vec<(usize, f64)> = vec![(START, 0.0)];
        let mut min_frames = 0;

        let add_chain = |nodes: &mut Vec<Node>, states: &[usize], entry: Vec<(usize, f64)>| -> usize {
            let first = nodes.len();
            for (k, &s) in states.iter().enumerate() {
                let mut node = Node {
                    state: s,
                    log_self: hmm.log_self(s),
                    log_fwd: hmm.log_forward(s),
                    preds: Vec::new(),
                    start: f64::NEG_INFINITY,
                    end: f64::NEG_INFINITY,
                };
                if k == 0 {
                    for &(p, w) in &entry {
                        if p == START {
                            node.start = node.start.max(w);
                        } else {
                            node.preds.push((p, w));
                        }
                    }
                } else {
                    node.preds.push((first + k - 1, 0.0));
                }
                nodes.push(node);
            }
            nodes.len() - 1
        };
        let optional_silence = |nodes: &mut Vec<Node>, exits: Vec<(usize, f64)>| -> Vec<(usize, f64)> {
            match silence {
                Some(sil) => {
                    let entry = exits.iter().map(|&(p, w)| (p, w + l_sil)).collect();
                    let last = add_chain(nodes, sil, entry);
                    let mut out: Vec<(usize, f64)> = exits.into_iter().map(|(p, w)| (p, w + l_skip)).collect();
                    out.push((last, 0.0));
                    out
                }
                None => exits,
            }
        };

        exits = optional_silence(&mut nodes, exits);
        for prons in words {
            let mut next = Vec::new();
            for states in prons {
                let last = add_chain(&mut nodes, states, exits.clone());
                next.push((last, 0.0));
            }
            min_frames += prons.iter().map(Vec::len).min().unwrap_or(0);
            exits = optional_silence(&mut nodes, next);
        }
        for (p, w) in exits {
            if p != START {
                let n = &mut nodes[p];
                n.end = n.end.max(w + n.log_fwd);
            }
        }
        Self { nodes, min_frames }
    }

    pub(crate) fn min_frames(&self) -> usize {
        self.min_frames
    }

    /// Best path as (per-frame node index, per-frame state id, score).
    /// `score(t, state)` is the frame log-likelihood.
    pub(crate) fn viterbi(&self, frames: usize, score: impl Fn(usize, usize) -> f64) -> Option<(Vec<usize>, Vec<usize>, f64)> {
        let n = self.nodes.len();
        if frames == 0 || n == 0 {
            return None;
        }
        const NONE: u32 = u32::MAX;
        let mut back = vec![NONE; frames * n];
        let mut prev: Vec<f64> = self.nodes.iter().map(|nd| nd.start).collect();
        for (j, nd) in self.nodes.iter().enumerate() {
            if prev[j] > f64::NEG_INFINITY {
                prev[j] += score(0, nd.state);
            }
        }
        let mut cur = vec![f64::NEG_INFINITY; n];
        for t in 1..frames {
            for (j, nd) in self.nodes.iter().enumerate() {
                let mut best = prev[j] + nd.log_self;
                let mut arg = j as u32;
                for &(p, w) in &nd.preds {
                    let c = prev[p] + self.nodes[p].log_fwd + w;
                    if c > best {
                        best = c;
                        arg = p as u32;
                    }
                }
                if best > f64::NEG_INFINITY {
                    cur[j] = best + score(t, nd.state);
                    back[t * n + j] = arg;
                } else {
                    cur[j] = f64::NEG_INFINITY;
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        let (mut j, total) = self
            .nodes
            .iter()
            .enumerate()
            .map(|(j, nd)| (j, prev[j] + nd.end))
            .fold((usize::MAX, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if j == usize::MAX {
            return None;
        }
        let mut path = vec![0; frames];
        for t in (0..frames).rev() {
            path[t] = j;
            if t > 0 {
                j = back[t * n + j] as usize;
            }
        }
        let states = path.iter().map(|&j| self.nodes[j].state).collect();
        Some((path, states, total))
    }
}

/// Frames split evenly across the concatenated state sequence.
fn uniform_alignment(states: &[usize], frames: usize) -> (Vec<usize>, Vec<usize>) {
    let l = states.len();
    let pos: Vec<usize> = (0..frames).map(|t| t * l / frames).collect();
    let ids = pos.iter().map(|&p| states[p]).collect();
    (pos, ids)
}

/// Self-loop probabilities from aligned frames, clamped to [0.1, 0.9].
/// States never seen keep their previous value.
fn estimate_transitions(hmm: &mut HmmTopology, alignments: &[(Vec<usize>, Vec<usize>)]) {
    let n = hmm.num_states();
    let mut stay = vec![0usize; n];
    let mut total = vec![0usize; n];
    for (pos, ids) in alignments {
        for t in 0..ids.len() {
            total[ids[t]] += 1;
            if t + 1 < ids.len() && pos[t + 1] == pos[t] {
                stay[ids[t]] += 1;
            }
        }
    }
    for s in 0..n {
        if total[s] > 0 {
            hmm.self_loop[s] = (stay[s] as f64 / total[s] as f64).clamp(0.1, 0.9);
        }
    }
}

struct Stats {
    occ: Vec<f64>,
    sum: Vec<Vec<f64>>,
    sq: Vec<Vec<f64>>,
}

/// Flat-start GMM-HMM training.
///
/// Every state starts from the global mean and variance with frames spread
/// uniformly over the transcript's phones. EM then runs on a fixed
/// alignment; every `realign_every` iterations the data is realigned by
/// Viterbi (with optional silence) and each mixture is split toward
/// `max_gaussians`. The log-likelihood of each iteration is recorded before
/// its parameter update, so it never decreases within a phase.
pub fn train_gmm_hmm(
    data: &[(FeatureMatrix, Vec<String>)],
    lexicon: &Lexicon,
    cfg: &TrainConfig,
) -> Result<TrainedModel, AmError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(AmError::EmptyData);
    }
    let dims = data[0].0.dims();
    for (i, (f, words)) in data.iter().enumerate() {
        if f.dims() != dims {
            return Err(AmError::DimensionMismatch { expected: dims, found: f.dims() });
        }
        if let Some(w) = words.iter().find(|w| !lexicon.contains(w)) {
            return Err(AmError::OovWord { utterance: i, word: w.clone() });
        }
    }

    let mut hmm = HmmTopology::new(lexicon.phones(), cfg.states_per_phone, 0.5)?;
    let sil_states = hmm.expand(&[lexicon.silence().to_string()])?;
    let mut graphs = Vec::with_capacity(data.len());
    for (_, words) in data {
        let prons = words
            .iter()
            .map(|w| lexicon.pronunciations(w).expect("checked").iter().map(|p| hmm.expand(p)).collect())
            .collect::<Result<Vec<Vec<Vec<usize>>>, _>>()?;
        graphs.push(prons);
    }

    let mut mean = vec![0.0; dims];
    let mut sq = vec![0.0; dims];
    let mut frames = 0usize;
    for (f, _) in data {
        for row in f.values.rows() {
            for (d, x) in row.iter().enumerate() {
                mean[d] += x;
                sq[d] += x * x;
            }
        }
        frames += f.num_frames();
    }
    if frames == 0 {
        return Err(AmError::EmptyData);
    }
    let global_var: Vec<f64> = (0..dims)
        .map(|d| {
            mean[d] /= frames as f64;
            (sq[d] / frames as f64 - mean[d] * mean[d]).max(1e-8)
        })
        .collect();
    let var_floor: Vec<f64> = global_var.iter().map(|v| (v * cfg.var_floor_fraction).max(1e-8)).collect();
    let n_states = hmm.num_states();
    let mut gmms: Vec<DiagGmm> = (0..n_states).map(|_| DiagGmm::single(mean.clone(), global_var.clone())).collect();

    // Flat start: first pronunciation of each word, no silence.
    let mut skipped = Vec::new();
    let mut alignments: Vec<(Vec<usize>, Vec<usize>)> = Vec::with_capacity(data.len());
    for (i, ((f, _), prons)) in data.iter().zip(&graphs).enumerate() {
        let states: Vec<usize> = prons.iter().flat_map(|p| p[0].iter().copied()).collect();
        if f.num_frames() < states.len() || states.is_empty() {
            log::warn!("utterance {i}: {} frames cannot cover {} states, skipped", f.num_frames(), states.len());
            skipped.push(i);
            alignments.push((Vec::new(), Vec::new()));
        } else {
            alignments.push(uniform_alignment(&states, f.num_frames()));
        }
    }
    if skipped.len() == data.len() {
        return Err(AmError::EmptyData);
    }
    estimate_transitions(&mut hmm, &alignments);

    let mut log = Vec::with_capacity(cfg.em_iterations);
    let mut phase = 0;
    let mut buf = Vec::new();
    for it in 0..cfg.em_iterations {
        if cfg.realign_every > 0 && it > 0 && it % cfg.realign_every == 0 {
            phase += 1;
            let scorer = GmmScorer { gmms: gmms.clone(), var_floor: var_floor.clone(), subsampling: 1 };
            realign(data, &graphs, &sil_states, &hmm, &scorer, cfg.silence_prior, &skipped, &mut alignments);
            estimate_transitions(&mut hmm, &alignments);
            for g in &mut gmms {
                drop_light_components(g, cfg.min_weight);
                split_components(g, cfg.max_gaussians, cfg.split_offset);
            }
        }

        let mut stats: Vec<Stats> = gmms
            .iter()
            .map(|g| Stats {
                occ: vec![0.0; g.num_components()],
                sum: vec![vec![0.0; dims]; g.num_components()],
                sq: vec![vec![0.0; dims]; g.num_components()],
            })
            .collect();
        let mut total_ll = 0.0;
        let mut counted = 0;
        for ((f, _), (_, ids)) in data.iter().zip(&alignments) {
            for (t, &s) in ids.iter().enumerate() {
                let row = f.values.row(t);
                let owned;
                let x = match row.as_slice() {
                    Some(x) => x,
                    None => {
                        owned = row.to_vec();
                        &owned
                    }
                };
                gmms[s].component_log_likelihoods(x, &mut buf);
                let ll = log_sum_exp(&buf);
                total_ll += ll;
                counted += 1;
                let st = &mut stats[s];
                for (m, c) in buf.iter().enumerate() {
                    let post = (c - ll).exp();
                    if post == 0.0 {
                        continue;
                    }
                    st.occ[m] += post;
                    for d in 0..dims {
                        st.sum[m][d] += post * x[d];
                        st.sq[m][d] += post * x[d] * x[d];
                    }
                }
            }
        }
        log.push(IterationLog {
            iteration: it,
            phase,
            log_likelihood: total_ll,
            frames: counted,
            gaussians: gmms.iter().map(DiagGmm::num_components).sum(),
        });
        for (g, st) in gmms.iter_mut().zip(&stats) {
            update_gmm(g, st, &var_floor);
        }
    }

    let alignments = alignments.into_iter().map(|(_, ids)| ids).collect();
    let scorer = GmmScorer { gmms, var_floor, subsampling: 1 };
    Ok(TrainedModel { model: AcousticModel { hmm, scorer }, log, alignments, skipped })
}

#[allow(clippy::too_many_arguments)]
fn realign(
    data: &[(FeatureMatrix, Vec<String>)],
    graphs: &[Vec<Vec<Vec<usize>>>],
    sil_states: &[usize],
    hmm: &HmmTopology,
    scorer: &GmmScorer,
    silence_prior: f64,
    skipped: &[usize],
    alignments: &mut [(Vec<usize>, Vec<usize>)],
) {
    use super::AcousticScorer;
    for (i, ((f, _), prons)) in data.iter().zip(graphs).enumerate() {
        if skipped.contains(&i) {
            continue;
        }
        let graph = AlignGraph::build(prons, Some(sil_states), silence_prior, hmm);
        if f.num_frames() < graph.min_frames() {
            continue;
        }
        // Nodes share states, so score each used (frame, state) once.
        let n_states = hmm.num_states();
        let mut used = vec![false; n_states];
        for nd in &graph.nodes {
            used[nd.state] = true;
        }
        let mut cache = vec![0.0; f.num_frames() * n_states];
        for t in 0..f.num_frames() {
            for s in (0..n_states).filter(|&s| used[s]) {
                cache[t * n_states + s] = scorer.log_likelihood(f, t, s);
            }
        }
        let score = |t: usize, s: usize| cache[t * n_states + s];
        match graph.viterbi(f.num_frames(), score) {
            Some((pos, ids, _)) => alignments[i] = (pos, ids),
            None => log::warn!("utterance {i}: realignment found no path, keeping previous alignment"),
        }
    }
}

fn update_gmm(g: &mut DiagGmm, st: &Stats, floor: &[f64]) {
    let total: f64 = st.occ.iter().sum();
    if total < 1e-10 {
        return;
    }
    for m in 0..g.num_components() {
        let occ = st.occ[m];
        g.weights[m] = occ / total;
        if occ < 1e-10 {
            continue;
        }
        for d in 0..floor.len() {
            let mu = st.sum[m][d] / occ;
            g.means[m][d] = mu;
            g.vars[m][d] = (st.sq[m][d] / occ - mu * mu).max(floor[d]);
        }
    }
    g.refresh();
}

fn drop_light_components(g: &mut DiagGmm, min_weight: f64) {
    if g.num_components() < 2 {
        return;
    }
    let keep: Vec<usize> = (0..g.num_components()).filter(|&m| g.weights[m] >= min_weight).collect();
    if keep.len() == g.num_components() || keep.is_empty() {
        return;
    }
    let total: f64 = keep.iter().map(|&m| g.weights[m]).sum();
    *g = DiagGmm::new(
        keep.iter().map(|&m| g.weights[m] / total).collect(),
        keep.iter().map(|&m| g.means[m].clone()).collect(),
        keep.iter().map(|&m| g.vars[m].clone()).collect(),
    );
}

/// Splits the heaviest components until the count doubles or reaches `max`.
fn split_components(g: &mut DiagGmm, max: usize, offset: f64) {
    let target = (g.num_components() * 2).min(max);
    while g.num_components() < target {
        let m = (0..g.num_components())
            .max_by(|&a, &b| g.weights[a].total_cmp(&g.weights[b]).then(b.cmp(&a)))
            .expect("non-empty");
        let w = g.weights[m] / 2.0;
        let delta: Vec<f64> = g.vars[m].iter().map(|v| offset * v.sqrt()).collect();
        let plus: Vec<f64> = g.means[m].iter().zip(&delta).map(|(a, d)| a + d).collect();
        let minus: Vec<f64> = g.means[m].iter().zip(&delta).map(|(a, d)| a - d).collect();
        g.weights[m] = w;
        g.means[m] = minus;
        g.weights.push(w);
        g.means.push(plus);
        g.vars.push(g.vars[m].clone());
    }
    g.refresh();
}
