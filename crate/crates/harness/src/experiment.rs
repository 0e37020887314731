//! End-to-end experiment: for every seed, synthesize (or reuse) a corpus,
//! build the three LMs, train one GMM-HMM per feature stream, decode the
//! test split with every (stream, LM) pair and score the output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use mrlt_core::am::{
    rescore_nbest, train_gmm_hmm, viterbi_decode, word_confidence, AcousticModel, AmError, DecoderConfig, DecodingGraph,
    NBestList, TrainConfig,
};
use mrlt_core::audio::{decode_wav, encode_wav, AudioBuffer};
use mrlt_core::eval::{
    aggregate_errors, genre_report, label_words, pooled_confidence_bins, score_transcripts, summarize_confidence, wer,
    AlignmentResult, ConfidenceBin, ConfidenceSummary, Csid, ErrorTable, EvalReport, Genre, GenreRow,
};
use mrlt_core::features::{extract_stream, stack, FeatureMatrix, FeaturePreset, StreamKind};
use mrlt_core::lm::{
    count_ngrams, interpolate, parse_arpa, perplexity, prune_entropy, serialize_arpa, train_kneser_ney, tune_weight, Discounts,
    InterpolationConfig, NGramModel, OovPolicy,
};
use mrlt_core::separation::{measure_snr, oracle_mask_separate, SeparationDistortion};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Utterance};
use crate::error::{read_text, HarnessError, Result};
use crate::synth::{synth_corpus, Split, SynthConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmKind {
    /// Out-of-domain text only, entropy-pruned.
    General,
    /// In-domain lyrics text only.
    Lyrics,
    /// Linear mix of the two with the weight tuned on dev.
    Interpolated,
}

impl LmKind {
    pub const ALL: [LmKind; 3] = [LmKind::General, LmKind::Lyrics, LmKind::Interpolated];

    pub fn as_str(self) -> &'static str {
        match self {
            LmKind::General => "general",
            LmKind::Lyrics => "lyrics",
            LmKind::Interpolated => "interpolated",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    pub preset: FeaturePreset,
    /// Per-utterance mean normalization of each stream before stacking.
    pub normalize: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self { preset: FeaturePreset::Hires, normalize: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmOptions {
    pub order: usize,
    pub add_unk: bool,
    /// One discount per order, lowest first; estimated from counts when absent.
    pub discounts: Option<Vec<f64>>,
    /// Entropy-pruning threshold for the general LM; 0 disables pruning.
    pub general_prune_theta: f64,
    pub grid_step: f64,
    pub oov_policy: OovPolicy,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { order: 3, add_unk: true, discounts: None, general_prune_theta: 1e-6, grid_step: 0.05, oov_policy: OovPolicy::RequireUnk }
    }
}

impl LmOptions {
    pub fn discount_spec(&self) -> Discounts {
        match &self.discounts {
            Some(d) => Discounts::Fixed(d.clone()),
            None => Discounts::Estimate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Holds one corpus per seed in `seed-<n>/`; missing corpora are synthesized.
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub streams: Vec<StreamKind>,
    pub lms: Vec<LmKind>,
    pub features: FeatureOptions,
    /// Decoder scores every k-th frame; training always uses every frame.
    pub frame_subsampling: usize,
    pub distortion: SeparationDistortion,
    pub synth: SynthConfig,
    pub lm: LmOptions,
    pub train: TrainConfig,
    /// A `[decoder]` table without `beam` gets [`EXPERIMENT_BEAM`].
    #[serde(deserialize_with = "experiment_decoder")]
    pub decoder: DecoderConfig,
    pub confidence_bins: usize,
}

/// Acoustic log-likelihoods of the synthetic corpus spread by hundreds of
/// nats across competing paths, so the library's beam of 16 loses every
/// hypothesis. 2000 reproduces beam-infinity results on the default corpus.
pub const EXPERIMENT_BEAM: f64 = 2000.0;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("report"),
            seeds: (1..=5).collect(),
            streams: StreamKind::ALL.to_vec(),
            lms: LmKind::ALL.to_vec(),
            features: FeatureOptions::default(),
            frame_subsampling: 3,
            distortion: SeparationDistortion { mask_erosion: 0.3, ..SeparationDistortion::default() },
            synth: SynthConfig::default(),
            lm: LmOptions::default(),
            train: TrainConfig::default(),
            decoder: DecoderConfig { beam: EXPERIMENT_BEAM, ..DecoderConfig::default() },
            confidence_bins: 10,
        }
    }
}

fn experiment_decoder<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<DecoderConfig, D::Error> {
    let mut table = toml::Table::deserialize(d)?;
    table.entry("beam").or_insert(toml::Value::Float(EXPERIMENT_BEAM));
    table.try_into().map_err(serde::de::Error::custom)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        toml::from_str(&read_text(path)?).map_err(|e| HarnessError::ConfigParse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::InvalidConfig(m.to_string()));
        if self.streams.is_empty() {
            return bad("at least one feature stream is required");
        }
        if self.lms.is_empty() {
            return bad("at least one language model is required");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.frame_subsampling == 0 {
            return bad("frame_subsampling must be positive");
        }
        if self.confidence_bins == 0 {
            return bad("confidence_bins must be positive");
        }
        if self.lm.order == 0 {
            return bad("lm.order must be positive");
        }
        if !(self.lm.general_prune_theta >= 0.0) {
            return bad("lm.general_prune_theta must be non-negative");
        }
        self.distortion.validate()?;
        self.train.validate()?;
        self.decoder.validate()?;
        self.synth.validate()
    }

    pub fn seed_data_dir(&self, seed: u64) -> PathBuf {
        self.data_dir.join(format!("seed-{seed}"))
    }
}

/// Corpus of one seed, synthesized on first use.
pub fn prepare_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    let dir = cfg.seed_data_dir(seed);
    if !dir.join("meta/utterances.csv").exists() {
        info!("synthesizing corpus for seed {seed} in {}", dir.display());
        synth_corpus(&SynthConfig { seed, ..cfg.synth.clone() }, &dir)?;
    }
    Dataset::load(&dir)
}

/// Kneser-Ney model, optionally pruned, passed through its ARPA form so
/// that the in-memory model equals what a reader of the saved file gets.
pub fn build_lm(text: &[Vec<String>], opts: &LmOptions, prune_theta: f64) -> Result<NGramModel> {
    let mut counts = count_ngrams(text, opts.order)?;
    if opts.add_unk {
        counts.add_unk();
    }
    let kn = train_kneser_ney(&counts, &opts.discount_spec())?;
    for w in &kn.warnings {
        warn!("{w}");
    }
    let model = if prune_theta > 0.0 { prune_entropy(&kn.model, prune_theta) } else { kn.model };
    Ok(parse_arpa(&serialize_arpa(&model))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerplexityRow {
    pub lm: LmKind,
    pub split: Split,
    pub ppl: f64,
    pub oov_count: usize,
    pub word_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmReport {
    /// Weight of the lyrics LM in the interpolated model.
    pub lambda: Option<f64>,
    pub tuning_curve: Vec<(f64, f64)>,
    pub perplexities: Vec<PerplexityRow>,
}

pub struct LanguageModels {
    pub models: BTreeMap<LmKind, NGramModel>,
    pub report: LmReport,
}

/// Builds every requested LM and measures dev and test perplexity. The
/// dev split is used only to tune the interpolation weight.
pub fn build_language_models(data: &Dataset, cfg: &ExperimentConfig) -> Result<LanguageModels> {
    let mut models = BTreeMap::new();
    let lyrics = build_lm(&data.lyrics_lm_text, &cfg.lm, 0.0)?;
    let general = build_lm(&data.general_lm_text, &cfg.lm, cfg.lm.general_prune_theta)?;
    let words = |split| data.transcripts(split).into_iter().map(|(_, w)| w).filter(|w| !w.is_empty()).collect::<Vec<_>>();
    let dev = words(Split::Dev);
    let test = words(Split::Test);
    let mut lambda = None;
    let mut tuning_curve = Vec::new();
    if cfg.lms.contains(&LmKind::Interpolated) {
        if dev.is_empty() {
            return Err(HarnessError::InvalidConfig("the interpolated LM needs a non-empty dev split".into()));
        }
        let tuned = tune_weight(&lyrics, &general, &dev, cfg.lm.grid_step, cfg.lm.oov_policy)?;
        info!("interpolation weight {} (dev ppl {:.3})", tuned.lambda, tuned.ppl);
        let mixed = interpolate(&lyrics, &general, &InterpolationConfig { lambda: tuned.lambda, grid_step: cfg.lm.grid_step })?;
        models.insert(LmKind::Interpolated, parse_arpa(&serialize_arpa(&mixed))?);
        lambda = Some(tuned.lambda);
        tuning_curve = tuned.curve;
    }
    if cfg.lms.contains(&LmKind::Lyrics) {
        models.insert(LmKind::Lyrics, lyrics);
    }
    if cfg.lms.contains(&LmKind::General) {
        models.insert(LmKind::General, general);
    }
    let mut perplexities = Vec::new();
    for (&kind, model) in &models {
        for (split, text) in [(Split::Dev, &dev), (Split::Test, &test)] {
            if text.is_empty() {
                continue;
            }
            let r = perplexity(model, text, cfg.lm.oov_policy)?;
            perplexities.push(PerplexityRow { lm: kind, split, ppl: r.ppl, oov_count: r.oov_count, word_count: r.word_count });
        }
    }
    Ok(LanguageModels { models, report: LmReport { lambda, tuning_curve, perplexities } })
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Distortion of one utterance: the configured one with its seed mixed
/// with the utterance id, so that each utterance gets its own erosion
/// pattern.
pub fn utterance_distortion(base: &SeparationDistortion, utt_id: &str) -> SeparationDistortion {
    SeparationDistortion { seed: base.seed ^ fnv1a(utt_id), ..base.clone() }
}

/// Rounds every value to `f32`, the precision of the feature archive.
pub fn archive_precision(mut fm: FeatureMatrix) -> FeatureMatrix {
    fm.values.mapv_inplace(|v| v as f32 as f64);
    fm
}

/// Rounds audio to 16-bit PCM, the precision of `mrlt separate` output.
pub fn pcm16(buf: &AudioBuffer) -> Result<AudioBuffer> {
    Ok(decode_wav(&encode_wav(buf)?)?)
}

/// Features of every requested stream for one utterance.
pub fn utterance_features(
    mixture: &AudioBuffer,
    separated: Option<&AudioBuffer>,
    opts: &FeatureOptions,
    streams: &[StreamKind],
) -> Result<BTreeMap<StreamKind, FeatureMatrix>> {
    let mut out = BTreeMap::new();
    let needs_vocal = streams.iter().any(|s| *s != StreamKind::Poly);
    let needs_poly = streams.iter().any(|s| *s != StreamKind::Vocal);
    let poly = needs_poly.then(|| extract_stream(mixture, opts.preset, opts.normalize, StreamKind::Poly)).transpose()?;
    let vocal = match (needs_vocal, separated) {
        (true, Some(v)) => Some(extract_stream(v, opts.preset, opts.normalize, StreamKind::Vocal)?),
        (true, None) => return Err(HarnessError::InvalidConfig("vocal features need separated audio".into())),
        (false, _) => None,
    };
    for &s in streams {
        let fm = match s {
            StreamKind::Poly => poly.clone().expect("poly extracted"),
            StreamKind::Vocal => vocal.clone().expect("vocal extracted"),
            StreamKind::Robust => stack(poly.as_ref().expect("poly extracted"), vocal.as_ref().expect("vocal extracted"))?,
        };
        out.insert(s, archive_precision(fm));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub genre: Option<Genre>,
    pub utterances: usize,
    pub mixture_snr_db: f64,
    pub separated_snr_db: f64,
}

struct UttFeatures {
    streams: BTreeMap<StreamKind, FeatureMatrix>,
    snr: Option<(f64, f64)>,
}

fn extract_all(data: &Dataset, utts: &[&Utterance], cfg: &ExperimentConfig) -> Result<Vec<UttFeatures>> {
    let needs_vocal = cfg.streams.iter().any(|s| *s != StreamKind::Poly);
    utts.par_iter()
        .map(|u| {
            let mixture = data.mixture(&u.meta.id)?;
            let mut snr = None;
            let separated = if needs_vocal {
                let (vocal, music) = data.stems(&u.meta.id)?;
                let sep = pcm16(&oracle_mask_separate(&mixture, &vocal, &music, &utterance_distortion(&cfg.distortion, &u.meta.id))?)?;
                if vocal.power() > 0.0 {
                    snr = Some((measure_snr(&mixture, &vocal)?, measure_snr(&sep, &vocal)?));
                }
                Some(sep)
            } else {
                None
            };
            let streams = utterance_features(&mixture, separated.as_ref(), &cfg.features, &cfg.streams)?;
            Ok(UttFeatures { streams, snr })
        })
        .collect()
}

/// Best words, N-best list and word confidences of one utterance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub nbest: NBestList,
    pub words: Vec<String>,
    pub confidences: Vec<(String, f64)>,
}

/// First-pass decode with the graph's bigram, then N-best rescoring with
/// `full_lm` when it has a higher order.
pub fn decode_utterance(feats: &FeatureMatrix, model: &AcousticModel, graph: &DecodingGraph, full_lm: &NGramModel) -> std::result::Result<Decoded, AmError> {
    let mut nbest = viterbi_decode(feats, &model.scorer, graph)?;
    if nbest.is_empty() {
        return Err(AmError::EmptyNBest);
    }
    if full_lm.order() > 2 {
        nbest = rescore_nbest(&nbest, full_lm, graph.config().lm_scale)?;
    }
    let confidences = word_confidence(&nbest);
    Ok(Decoded { words: nbest.best_words(), confidences, nbest })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceResult {
    pub id: String,
    pub song: String,
    pub genre: Genre,
    pub reference: Vec<String>,
    pub hypothesis: Vec<String>,
    pub confidences: Vec<f64>,
    pub counts: Csid,
    /// Decoding failed; scored as an empty hypothesis.
    pub failed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub stream: StreamKind,
    pub lm: LmKind,
    pub counts: Csid,
    pub wer: Option<f64>,
    pub genres: Vec<GenreRow>,
    pub errors: ErrorTable,
    pub confidence: ConfidenceSummary,
    pub confidence_bins: Vec<ConfidenceBin>,
    pub utterances: Vec<UtteranceResult>,
    #[serde(skip)]
    pub ctm: String,
}

impl SystemReport {
    pub fn name(&self) -> String {
        format!("{}-{}", self.stream.as_str(), self.lm.as_str())
    }

    pub fn genre_wer(&self, genre: Genre) -> Option<f64> {
        self.genres.iter().find(|r| r.genre == genre).and_then(|r| r.wer)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub stream: StreamKind,
    pub dims: usize,
    pub utterances: usize,
    pub skipped: usize,
    pub gaussians: usize,
    pub final_log_likelihood_per_frame: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub lm: LmReport,
    pub separation: Vec<SeparationRow>,
    pub training: Vec<TrainingSummary>,
    pub systems: Vec<SystemReport>,
}

impl SeedReport {
    pub fn system(&self, stream: StreamKind, lm: LmKind) -> Option<&SystemReport> {
        self.systems.iter().find(|s| s.stream == stream && s.lm == lm)
    }
}

/// Everything one seed produces, including the artifacts the report
/// directory stores next to it.
pub struct SeedRun {
    pub report: SeedReport,
    pub models: BTreeMap<StreamKind, AcousticModel>,
    pub lms: BTreeMap<LmKind, NGramModel>,
}

fn separation_rows(utts: &[&Utterance], feats: &[UttFeatures]) -> Vec<SeparationRow> {
    let mut acc: BTreeMap<Option<Genre>, (usize, f64, f64)> = BTreeMap::new();
    for (u, f) in utts.iter().zip(feats) {
        if let Some((m, s)) = f.snr {
            for key in [None, Some(u.meta.genre)] {
                let e = acc.entry(key).or_default();
                e.0 += 1;
                e.1 += m;
                e.2 += s;
            }
        }
    }
    acc.into_iter()
        .map(|(genre, (n, m, s))| SeparationRow { genre, utterances: n, mixture_snr_db: m / n as f64, separated_snr_db: s / n as f64 })
        .collect()
}

fn score_system(
    data: &Dataset,
    test: &[&Utterance],
    decoded: Vec<Option<Decoded>>,
    stream: StreamKind,
    lm: LmKind,
    bins: usize,
) -> Result<SystemReport> {
    let refs: Vec<(String, Vec<String>)> = test.iter().map(|u| (u.meta.id.clone(), u.words.clone())).collect();
    let hyps: Vec<(String, Vec<String>)> =
        test.iter().zip(&decoded).map(|(u, d)| (u.meta.id.clone(), d.as_ref().map(|d| d.words.clone()).unwrap_or_default())).collect();
    let report = score_transcripts(&refs, &hyps);

    let mut songs: BTreeMap<String, EvalReport> = BTreeMap::new();
    let mut genres: BTreeMap<Genre, EvalReport> = BTreeMap::new();
    let mut confidence_items: Vec<(Vec<(String, f64)>, AlignmentResult)> = Vec::new();
    let mut labeled = Vec::new();
    let mut utterances = Vec::with_capacity(test.len());
    let mut ctm = String::new();
    for ((u, d), (_, alignment)) in test.iter().zip(&decoded).zip(&report.utterances) {
        songs.entry(u.meta.song.clone()).or_default().push(u.meta.id.clone(), alignment.clone());
        genres.entry(u.meta.genre).or_default().push(u.meta.id.clone(), alignment.clone());
        let conf = d.as_ref().map(|d| d.confidences.clone()).unwrap_or_default();
        labeled.extend(label_words(&conf, alignment)?);
        if let Some(d) = d {
            ctm.push_str(&mrlt_core::am::ctm_lines(&u.meta.id, &d.nbest, &d.confidences));
        }
        utterances.push(UtteranceResult {
            id: u.meta.id.clone(),
            song: u.meta.song.clone(),
            genre: u.meta.genre,
            reference: u.words.clone(),
            hypothesis: d.as_ref().map(|d| d.words.clone()).unwrap_or_default(),
            confidences: conf.iter().map(|c| c.1).collect(),
            counts: alignment.counts,
            failed: d.is_none(),
        });
        confidence_items.push((conf, alignment.clone()));
    }
    let songs: Vec<(String, EvalReport)> = songs.into_iter().collect();
    let by_genre: Vec<(String, EvalReport)> = genres.into_iter().map(|(g, r)| (g.to_string(), r)).collect();
    Ok(SystemReport {
        stream,
        lm,
        counts: report.totals(),
        wer: wer(&report).ok(),
        genres: genre_report(&songs, &data.genres)?,
        errors: aggregate_errors(&by_genre)?,
        confidence: summarize_confidence(&labeled),
        confidence_bins: pooled_confidence_bins(&confidence_items, bins)?,
        utterances,
        ctm,
    })
}

/// Runs the whole pipeline for one seed. Nothing is written to disk except
/// a synthesized corpus.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    cfg.validate()?;
    let data = prepare_dataset(cfg, seed)?;
    let lms = build_language_models(&data, cfg)?;

    let train: Vec<&Utterance> = data.split(Split::Train).collect();
    let test: Vec<&Utterance> = data.split(Split::Test).collect();
    info!("seed {seed}: extracting features for {} train and {} test utterances", train.len(), test.len());
    let train_feats = extract_all(&data, &train, cfg)?;
    let test_feats = extract_all(&data, &test, cfg)?;

    let mut models = BTreeMap::new();
    let mut training = Vec::new();
    let mut systems = Vec::new();
    for &stream in &cfg.streams {
        let examples: Vec<(FeatureMatrix, Vec<String>)> =
            train.iter().zip(&train_feats).map(|(u, f)| (f.streams[&stream].clone(), u.words.clone())).collect();
        info!("seed {seed}: training {} model", stream.as_str());
        let trained = train_gmm_hmm(&examples, &data.lexicon, &cfg.train)?;
        let model = AcousticModel { hmm: trained.model.hmm, scorer: trained.model.scorer.with_subsampling(cfg.frame_subsampling) };
        training.push(TrainingSummary {
            stream,
            dims: examples[0].0.dims(),
            utterances: examples.len(),
            skipped: trained.skipped.len(),
            gaussians: model.scorer.total_gaussians(),
            final_log_likelihood_per_frame: trained.log.last().map(|l| l.per_frame()),
        });
        for (&kind, lm) in &lms.models {
            let graph = DecodingGraph::new(&data.lexicon, &model.hmm, lm, &cfg.decoder)?;
            let decoded: Vec<Option<Decoded>> = test
                .par_iter()
                .zip(&test_feats)
                .map(|(u, f)| match decode_utterance(&f.streams[&stream], &model, &graph, lm) {
                    Ok(d) => Some(d),
                    Err(e) => {
                        warn!("{}: decoding with {}-{} failed: {e}", u.meta.id, stream.as_str(), kind.as_str());
                        None
                    }
                })
                .collect();
            let sys = score_system(&data, &test, decoded, stream, kind, cfg.confidence_bins)?;
            info!("seed {seed}: {} WER {:?}", sys.name(), sys.wer);
            systems.push(sys);
        }
        models.insert(stream, model);
    }
    let report = SeedReport { seed, lm: lms.report, separation: separation_rows(&test, &test_feats), training, systems };
    Ok(SeedRun { report, models, lms: lms.models })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub stream: StreamKind,
    pub lm: LmKind,
    /// `None` for the whole test set.
    pub genre: Option<Genre>,
    pub mean_wer: Option<f64>,
    pub per_seed: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedReport>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn mean_wer(&self, stream: StreamKind, lm: LmKind, genre: Option<Genre>) -> Option<f64> {
        self.summary.iter().find(|r| r.stream == stream && r.lm == lm && r.genre == genre).and_then(|r| r.mean_wer)
    }
}

/// Mean WER of every system over seeds, overall and per genre.
pub fn summarize(cfg: &ExperimentConfig, seeds: &[SeedReport]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &stream in &cfg.streams {
        for &lm in &cfg.lms {
            for genre in std::iter::once(None).chain(Genre::ALL.into_iter().map(Some)) {
                let per_seed: Vec<Option<f64>> = seeds
                    .iter()
                    .map(|s| {
                        s.system(stream, lm).and_then(|sys| match genre {
                            None => sys.wer,
                            Some(g) => sys.genre_wer(g),
                        })
                    })
                    .collect();
                let mean_wer = per_seed
                    .iter()
                    .copied()
                    .collect::<Option<Vec<f64>>>()
                    .filter(|v| !v.is_empty())
                    .map(|v| v.iter().sum::<f64>() / v.len() as f64);
                rows.push(SummaryRow { stream, lm, genre, mean_wer, per_seed });
            }
        }
    }
    rows
}

/// Runs every seed and writes the report directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut seeds = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let run = run_seed(cfg, seed)?;
        crate::report::write_seed(&cfg.out_dir, &run)?;
        seeds.push(run.report);
    }
    let report = ExperimentReport { config: cfg.clone(), summary: summarize(cfg, &seeds), seeds };
    crate::report::write_experiment(&cfg.out_dir, &report)?;
    Ok(report)
}
