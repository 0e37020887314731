use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use mrlt_core::am::{
    ctm_lines, parse_ctm, parse_lexicon, rescore_nbest, train_gmm_hmm, word_confidence, AcousticModel, DecoderConfig,
    DecodingGraph, NBestList, TrainConfig,
};
use mrlt_core::audio::{read_wav, write_wav};
use mrlt_core::eval::{
    aggregate_errors, aggregate_rows, alignment_table_text, bins_to_csv, bins_to_svg, format_transcripts, genre_report,
    genre_table_csv, genre_table_text, label_words, parse_genre_map, parse_transcripts, pooled_confidence_bins,
    score_transcripts, segment_lines, summarize_confidence, wer, ErrorRow, EvalReport, LineAnnotation,
};
use mrlt_core::features::{read_archive, stack, write_archive, write_csv, FeatureMatrix, FeaturePreset, StreamKind};
use mrlt_core::lm::{
    count_ngrams, interpolate, parse_arpa, perplexity, prune_entropy, read_corpus, serialize_arpa, tune_weight,
    InterpolationConfig, NGramModel, OovPolicy,
};
use mrlt_core::separation::{measure_snr, oracle_mask_separate, SeparationDistortion};
use mrlt_harness::experiment::{
    archive_precision, build_lm, decode_utterance, run_experiment, utterance_distortion, ExperimentConfig, FeatureOptions,
    LmOptions,
};
use mrlt_harness::synth::{synth_corpus, SynthConfig};
use serde::de::DeserializeOwned;

/// Lyrics transcription toolkit: features, separation, n-gram LMs,
/// GMM-HMM training and decoding, scoring and the synthetic experiment.
///
/// Subcommands that take `--config` read a TOML file whose keys match the
/// documented defaults (see README.md); flags override file values.
#[derive(Parser)]
#[command(name = "mrlt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MFCC feature extraction and stream stacking.
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Oracle-mask vocal separation with optional distortion.
    Separate(SeparateArgs),
    /// N-gram language model tools.
    #[command(subcommand)]
    Lm(LmCmd),
    /// Acoustic model training, decoding and N-best rescoring.
    #[command(subcommand)]
    Am(AmCmd),
    /// Alignment, WER and report tables.
    #[command(subcommand)]
    Score(ScoreCmd),
    /// Merge annotated lines into 20-30 s segments.
    Segment(SegmentArgs),
    /// Write a synthetic singing corpus.
    Synth(SynthArgs),
    /// End-to-end experiment.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Hires,
    Align,
}

impl From<PresetArg> for FeaturePreset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Hires => FeaturePreset::Hires,
            PresetArg::Align => FeaturePreset::Align,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StreamArg {
    Poly,
    Vocal,
}

#[derive(Subcommand)]
enum FeaturesCmd {
    /// Extract one stream from WAV files; utterance ids are the file stems.
    Extract {
        #[arg(required = true)]
        wavs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "hires")]
        preset: PresetArg,
        /// Which stream the audio represents (mixture = poly, separated = vocal).
        #[arg(long, value_enum, default_value = "poly")]
        stream: StreamArg,
        /// Skip per-utterance mean normalization.
        #[arg(long)]
        no_normalize: bool,
        /// Write CSV (single input only) instead of the binary archive.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frame-wise concatenation of a vocal and a poly archive (vocal first).
    Stack {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long)]
        vocal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SeparateArgs {
    #[arg(long)]
    mixture: PathBuf,
    #[arg(long)]
    vocal: PathBuf,
    #[arg(long)]
    music: PathBuf,
    /// TOML with mask_erosion, mask_blur, residual_music, seed.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mask_erosion: Option<f64>,
    #[arg(long)]
    mask_blur: Option<usize>,
    #[arg(long)]
    residual_music: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mix the seed with this utterance id, as the experiment does.
    #[arg(long)]
    utterance: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum LmCmd {
    /// N-gram counts as `count<TAB>tokens` lines.
    Count {
        #[arg(long)]
        text: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kneser-Ney model in ARPA format.
    Train {
        #[arg(long)]
        text: PathBuf,
        /// TOML with order, add_unk, discounts.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
        /// Entropy-pruning threshold applied after training.
        #[arg(long, default_value_t = 0.0)]
        prune: f64,
        #[arg(long)]
        no_unk: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// `lambda·A + (1 − lambda)·B`.
    Interpolate {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perplexity of a text; prints the value with six decimals.
    Ppl {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        text: PathBuf,
        /// Drop OOV tokens instead of mapping them to `<unk>`.
        #[arg(long)]
        skip_oov: bool,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Grid search for the interpolation weight of A on a dev text.
    Tune {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long)]
        skip_oov: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy-based pruning.
    Prune {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AmCmd {
    /// Flat-start GMM-HMM training; writes the model as JSON.
    Train {
        #[arg(long)]
        feats: PathBuf,
        /// `utt WORD WORD ...` lines.
        #[arg(long)]
        trans: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        /// TOML with TrainConfig keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Frame subsampling stored in the model for decoding.
        #[arg(long, default_value_t = 3)]
        subsampling: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Viterbi decoding; N-best rescoring with the full LM when its order exceeds two.
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        feats: PathBuf,
        /// TOML with DecoderConfig keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        lm_scale: Option<f64>,
        #[arg(long)]
        beam: Option<f64>,
        /// Override the model's frame subsampling.
        #[arg(long)]
        subsampling: Option<usize>,
        /// Best hypotheses as transcripts.
        #[arg(long)]
        out: Option<PathBuf>,
        /// N-best lists as JSON.
        #[arg(long)]
        nbest: Option<PathBuf>,
        #[arg(long)]
        ctm: Option<PathBuf>,
    },
    /// Rescore saved N-best lists with another LM.
    Rescore {
        #[arg(long)]
        nbest: PathBuf,
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        lm_scale: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        nbest_out: Option<PathBuf>,
        #[arg(long)]
        ctm: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ScoreCmd {
    /// Per-utterance alignment with csid, WER and the C/S/I/D pattern.
    Align {
        #[arg(long)]
        r#ref: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
    },
    /// Pooled WER.
    Wer {
        #[arg(long)]
        r#ref: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        /// Print the full per-utterance report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Insertion/deletion/substitution table with an `All` row.
    Errors {
        /// `NAME:REF:HYP`, repeatable.
        #[arg(long = "set")]
        sets: Vec<String>,
        /// CSV rows `name,ins,del,sub,ref_words` instead of transcripts.
        #[arg(long)]
        rows: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
    /// Pooled WER per genre.
    Genre {
        #[arg(long)]
        r#ref: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        /// `song_id,genre` rows.
        #[arg(long)]
        genres: PathBuf,
        /// CSV whose first two columns are `utt_id,song_id`.
        #[arg(long)]
        utterances: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Confidence histogram of correct and incorrect words from a CTM.
    Confidence {
        #[arg(long)]
        r#ref: PathBuf,
        #[arg(long)]
        ctm: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SegmentArgs {
    /// CSV `song_id,utt_id,start_sec,end_sec,text`, as in meta/lines.csv.
    #[arg(long)]
    lines: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    min: f64,
    #[arg(long, default_value_t = 30.0)]
    max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML with SynthConfig keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Run every seed and write the report directory.
    Run {
        /// TOML with ExperimentConfig keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run only these seeds (repeatable).
        #[arg(long)]
        seed: Vec<u64>,
        /// Report directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Corpus directory.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Print the effective configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => toml::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display())),
        None => Ok(T::default()),
    }
}

/// Writes to `out` or, without one, to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_lm(path: &Path) -> Result<NGramModel> {
    parse_arpa(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_archive(path: &Path) -> Result<Vec<(String, FeatureMatrix)>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_archive(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn save_archive(path: &Path, entries: &[(String, FeatureMatrix)]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    write_archive(&mut w, entries)?;
    w.flush()?;
    Ok(())
}

fn load_model(path: &Path) -> Result<AcousticModel> {
    let mut model: AcousticModel = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    model.scorer.refresh();
    Ok(model)
}

fn transcripts(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    parse_transcripts(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn file_stem(p: &Path) -> Result<String> {
    p.file_stem().and_then(|s| s.to_str()).map(str::to_string).with_context(|| format!("no file name in {}", p.display()))
}

fn policy(skip_oov: bool) -> OovPolicy {
    if skip_oov {
        OovPolicy::SkipOov
    } else {
        OovPolicy::RequireUnk
    }
}

fn features(cmd: FeaturesCmd) -> Result<()> {
    match cmd {
        FeaturesCmd::Extract { wavs, preset, stream, no_normalize, csv, out } => {
            let opts = FeatureOptions { preset: preset.into(), normalize: !no_normalize };
            let kind = match stream {
                StreamArg::Poly => StreamKind::Poly,
                StreamArg::Vocal => StreamKind::Vocal,
            };
            let mut entries = Vec::with_capacity(wavs.len());
            for wav in &wavs {
                let audio = read_wav(wav).with_context(|| format!("reading {}", wav.display()))?;
                let fm = mrlt_core::features::extract_stream(&audio, opts.preset, opts.normalize, kind)?;
                entries.push((file_stem(wav)?, archive_precision(fm)));
            }
            if csv {
                if entries.len() != 1 {
                    bail!("--csv takes exactly one input");
                }
                let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
                write_csv(&mut w, &entries[0].1)?;
                w.flush()?;
                Ok(())
            } else {
                save_archive(&out, &entries)
            }
        }
        FeaturesCmd::Stack { poly, vocal, out } => {
            let vocal: BTreeMap<String, FeatureMatrix> = load_archive(&vocal)?.into_iter().collect();
            let mut entries = Vec::new();
            for (id, p) in load_archive(&poly)? {
                let v = vocal.get(&id).with_context(|| format!("{id} missing from the vocal archive"))?;
                entries.push((id, stack(&p, v)?));
            }
            save_archive(&out, &entries)
        }
    }
}

fn separate(a: SeparateArgs) -> Result<()> {
    let mut d: SeparationDistortion = load_toml(a.config.as_deref())?;
    if let Some(v) = a.mask_erosion {
        d.mask_erosion = v;
    }
    if let Some(v) = a.mask_blur {
        d.mask_blur = v;
    }
    if let Some(v) = a.residual_music {
        d.residual_music = v;
    }
    if let Some(v) = a.seed {
        d.seed = v;
    }
    if let Some(id) = &a.utterance {
        d = utterance_distortion(&d, id);
    }
    let mixture = read_wav(&a.mixture)?;
    let vocal = read_wav(&a.vocal)?;
    let music = read_wav(&a.music)?;
    let out = oracle_mask_separate(&mixture, &vocal, &music, &d)?;
    write_wav(&out, &a.out)?;
    if vocal.power() > 0.0 {
        let report = serde_json::json!({
            "mixture_snr_db": measure_snr(&mixture, &vocal)?,
            "separated_snr_db": measure_snr(&out, &vocal)?,
        });
        println!("{report}");
    }
    Ok(())
}

fn lm(cmd: LmCmd) -> Result<()> {
    match cmd {
        LmCmd::Count { text, order, out } => {
            let counts = count_ngrams(&read_corpus(&read(&text)?), order)?;
            let mut s = String::new();
            for n in 1..=order {
                for (k, c) in counts.of_order(n) {
                    s.push_str(&format!("{c}\t{}\n", k.join(" ")));
                }
            }
            emit(out.as_deref(), &s)
        }
        LmCmd::Train { text, config, order, prune, no_unk, out } => {
            let mut opts: LmOptions = load_toml(config.as_deref())?;
            if let Some(o) = order {
                opts.order = o;
            }
            if no_unk {
                opts.add_unk = false;
            }
            let model = build_lm(&read_corpus(&read(&text)?), &opts, prune)?;
            emit(out.as_deref(), &serialize_arpa(&model))
        }
        LmCmd::Interpolate { a, b, lambda, out } => {
            let cfg = InterpolationConfig { lambda, ..InterpolationConfig::default() };
            let model = interpolate(&load_lm(&a)?, &load_lm(&b)?, &cfg)?;
            emit(out.as_deref(), &serialize_arpa(&model))
        }
        LmCmd::Ppl { lm, text, skip_oov, json } => {
            let r = perplexity(&load_lm(&lm)?, &read_corpus(&read(&text)?), policy(skip_oov))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                println!("{:.6}", r.ppl);
            }
            Ok(())
        }
        LmCmd::Tune { a, b, dev, step, skip_oov, out } => {
            let r = tune_weight(&load_lm(&a)?, &load_lm(&b)?, &read_corpus(&read(&dev)?), step, policy(skip_oov))?;
            emit(out.as_deref(), &(serde_json::to_string_pretty(&r)? + "\n"))
        }
        LmCmd::Prune { lm, theta, out } => emit(out.as_deref(), &serialize_arpa(&prune_entropy(&load_lm(&lm)?, theta))),
    }
}

fn write_nbest_outputs(
    results: &[(String, Option<NBestList>)],
    out: Option<&Path>,
    nbest_out: Option<&Path>,
    ctm: Option<&Path>,
) -> Result<()> {
    let mut hyps = Vec::new();
    let mut ctm_text = String::new();
    for (id, nbest) in results {
        match nbest {
            Some(n) => {
                let conf = word_confidence(n);
                ctm_text.push_str(&ctm_lines(id, n, &conf));
                hyps.push((id.clone(), n.best_words()));
            }
            None => hyps.push((id.clone(), Vec::new())),
        }
    }
    if let Some(p) = nbest_out {
        let map: BTreeMap<&str, &NBestList> = results.iter().filter_map(|(id, n)| n.as_ref().map(|n| (id.as_str(), n))).collect();
        emit(Some(p), &serde_json::to_string(&map)?)?;
    }
    if let Some(p) = ctm {
        emit(Some(p), &ctm_text)?;
    }
    emit(out, &format_transcripts(&hyps))
}

fn am(cmd: AmCmd) -> Result<()> {
    match cmd {
        AmCmd::Train { feats, trans, lexicon, config, subsampling, out } => {
            let cfg: TrainConfig = load_toml(config.as_deref())?;
            let lex = parse_lexicon(&read(&lexicon)?)?;
            let words: BTreeMap<String, Vec<String>> = transcripts(&trans)?.into_iter().collect();
            let mut data = Vec::new();
            for (id, fm) in load_archive(&feats)? {
                let w = words.get(&id).with_context(|| format!("no transcript for {id}"))?;
                data.push((fm, w.clone()));
            }
            let trained = train_gmm_hmm(&data, &lex, &cfg)?;
            if !trained.skipped.is_empty() {
                warn!("{} utterances were too short for their transcripts", trained.skipped.len());
            }
            let model = AcousticModel { hmm: trained.model.hmm, scorer: trained.model.scorer.with_subsampling(subsampling) };
            emit(Some(&out), &serde_json::to_string(&model)?)
        }
        AmCmd::Decode { model, lexicon, lm, feats, config, lm_scale, beam, subsampling, out, nbest, ctm } => {
            let mut cfg: DecoderConfig = load_toml(config.as_deref())?;
            if let Some(v) = lm_scale {
                cfg.lm_scale = v;
            }
            if let Some(v) = beam {
                cfg.beam = v;
            }
            let mut model = load_model(&model)?;
            if let Some(k) = subsampling {
                model.scorer = model.scorer.with_subsampling(k);
            }
            let lex = parse_lexicon(&read(&lexicon)?)?;
            let lm = load_lm(&lm)?;
            let graph = DecodingGraph::new(&lex, &model.hmm, &lm, &cfg)?;
            let results: Vec<(String, Option<NBestList>)> = load_archive(&feats)?
                .into_iter()
                .map(|(id, fm)| match decode_utterance(&fm, &model, &graph, &lm) {
                    Ok(d) => (id, Some(d.nbest)),
                    Err(e) => {
                        warn!("{id}: decoding failed: {e}");
                        (id, None)
                    }
                })
                .collect();
            write_nbest_outputs(&results, out.as_deref(), nbest.as_deref(), ctm.as_deref())
        }
        AmCmd::Rescore { nbest, lm, lm_scale, out, nbest_out, ctm } => {
            let lists: BTreeMap<String, NBestList> = serde_json::from_str(&read(&nbest)?)?;
            let lm = load_lm(&lm)?;
            let mut results = Vec::new();
            for (id, n) in lists {
                let scale = lm_scale.unwrap_or(n.lm_scale);
                results.push((id, Some(rescore_nbest(&n, &lm, scale)?)));
            }
            write_nbest_outputs(&results, out.as_deref(), nbest_out.as_deref(), ctm.as_deref())
        }
    }
}

fn score(cmd: ScoreCmd) -> Result<()> {
    match cmd {
        ScoreCmd::Align { r#ref, hyp } => {
            let report = score_transcripts(&transcripts(&r#ref)?, &transcripts(&hyp)?);
            let refs: BTreeMap<String, Vec<String>> = transcripts(&r#ref)?.into_iter().collect();
            let mut s = String::new();
            for (id, a) in &report.utterances {
                s.push_str(&format!("id: {id}\n"));
                s.push_str(&alignment_table_text(&refs[id], &[("HYP".to_string(), a.clone())]));
            }
            emit(None, &s)
        }
        ScoreCmd::Wer { r#ref, hyp, json } => {
            let report = score_transcripts(&transcripts(&r#ref)?, &transcripts(&hyp)?);
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                let c = report.totals();
                println!("%WER {:.2} [ {} / {} ] #csid {c}", wer(&report)?, c.errors(), c.ref_words());
            }
            Ok(())
        }
        ScoreCmd::Errors { sets, rows, csv } => {
            let table = match rows {
                Some(p) => {
                    let mut parsed = Vec::new();
                    for (i, line) in read(&p)?.lines().enumerate() {
                        let f: Vec<&str> = line.split(',').map(str::trim).collect();
                        if line.trim().is_empty() || (i == 0 && f.first() == Some(&"name")) {
                            continue;
                        }
                        if f.len() != 5 {
                            bail!("{}:{}: expected name,ins,del,sub,ref_words", p.display(), i + 1);
                        }
                        let n = |k: usize| f[k].parse::<usize>().with_context(|| format!("{}:{}: bad count", p.display(), i + 1));
                        parsed.push(ErrorRow { name: f[0].to_string(), insertions: n(1)?, deletions: n(2)?, substitutions: n(3)?, ref_words: n(4)? });
                    }
                    aggregate_rows(parsed)?
                }
                None => {
                    let mut reports = Vec::new();
                    for s in &sets {
                        let [name, r, h]: [&str; 3] =
                            s.splitn(3, ':').collect::<Vec<_>>().try_into().map_err(|_| anyhow::anyhow!("--set {s}: expected NAME:REF:HYP"))?;
                        reports.push((name.to_string(), score_transcripts(&transcripts(Path::new(r))?, &transcripts(Path::new(h))?)));
                    }
                    aggregate_errors(&reports)?
                }
            };
            emit(None, &if csv { table.to_csv() } else { table.to_text() })
        }
        ScoreCmd::Genre { r#ref, hyp, genres, utterances, csv } => {
            let genres = parse_genre_map(&read(&genres)?)?;
            let mut song_of = BTreeMap::new();
            for line in read(&utterances)?.lines().skip(1) {
                let mut f = line.split(',');
                if let (Some(u), Some(s)) = (f.next(), f.next()) {
                    song_of.insert(u.trim().to_string(), s.trim().to_string());
                }
            }
            let report = score_transcripts(&transcripts(&r#ref)?, &transcripts(&hyp)?);
            let mut songs: BTreeMap<String, EvalReport> = BTreeMap::new();
            for (id, a) in report.utterances {
                let song = song_of.get(&id).with_context(|| format!("no song for utterance {id}"))?;
                songs.entry(song.clone()).or_default().push(id, a);
            }
            let rows = genre_report(&songs.into_iter().collect::<Vec<_>>(), &genres)?;
            emit(None, &if csv { genre_table_csv(&rows) } else { genre_table_text(&rows) })
        }
        ScoreCmd::Confidence { r#ref, ctm, bins, svg } => {
            let refs = transcripts(&r#ref)?;
            let mut decoded: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
            for l in parse_ctm(&read(&ctm)?)? {
                decoded.entry(l.utterance).or_default().push((l.word, l.confidence));
            }
            let mut items = Vec::new();
            let mut labeled = Vec::new();
            for (id, r) in &refs {
                let words = decoded.remove(id).unwrap_or_default();
                let hyp: Vec<String> = words.iter().map(|w| w.0.clone()).collect();
                let a = mrlt_core::eval::align_transcripts(r, &hyp);
                labeled.extend(label_words(&words, &a)?);
                items.push((words, a));
            }
            let hist = pooled_confidence_bins(&items, bins)?;
            if let Some(p) = svg {
                emit(Some(&p), &bins_to_svg(&hist))?;
            }
            let summary = summarize_confidence(&labeled);
            let mut s = bins_to_csv(&hist);
            let mean = |m: Option<f64>| m.map_or("n/a".to_string(), |m| format!("{m:.4}"));
            s.push_str(&format!(
                "# correct {} mean {}; incorrect {} mean {}\n",
                summary.correct,
                mean(summary.mean_correct),
                summary.incorrect,
                mean(summary.mean_incorrect)
            ));
            emit(None, &s)
        }
    }
}

fn segment(a: SegmentArgs) -> Result<()> {
    let mut songs: BTreeMap<String, Vec<LineAnnotation>> = BTreeMap::new();
    for (i, line) in read(&a.lines)?.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(5, ',').collect();
        if f.len() != 5 {
            bail!("{}:{}: expected song_id,utt_id,start_sec,end_sec,text", a.lines.display(), i + 1);
        }
        let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("{}:{}: bad time {s:?}", a.lines.display(), i + 1));
        songs.entry(f[0].to_string()).or_default().push(LineAnnotation::new(f[4].trim(), num(f[2])?, num(f[3])?));
    }
    let mut out = BTreeMap::new();
    for (song, lines) in songs {
        out.insert(song, segment_lines(&lines, a.min, a.max)?);
    }
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg: SynthConfig = load_toml(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let summary = synth_corpus(&cfg, &a.out)?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

fn experiment(cmd: ExperimentCmd) -> Result<()> {
    let ExperimentCmd::Run { config, seed, out, data, print_config } = cmd;
    let mut cfg: ExperimentConfig = load_toml(config.as_deref())?;
    if !seed.is_empty() {
        cfg.seeds = seed;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    if let Some(d) = data {
        cfg.data_dir = d;
    }
    if print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let report = run_experiment(&cfg)?;
    print!("{}", mrlt_harness::report::summary_text(&report));
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Features(c) => features(c),
        Command::Separate(a) => separate(a),
        Command::Lm(c) => lm(c),
        Command::Am(c) => am(c),
        Command::Score(c) => score(c),
        Command::Segment(a) => segment(a),
        Command::Synth(a) => synth(a),
        Command::Experiment(c) => experiment(c),
    }
}
