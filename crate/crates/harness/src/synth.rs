//! Synthetic singing corpus: sinusoidal phone templates sung over
//! genre-dependent accompaniment, with transcripts, lexicon, line timings
//! and LM training text.
//!
//! Directory layout written by [`synth_corpus`]:
//!
//! ```text
//! wav/<utt>.wav             mixture, 16-bit PCM
//! stems/<utt>.vocal.wav     vocal stem
//! stems/<utt>.music.wav     accompaniment stem (mixture = vocal + music, sample-exact)
//! trans/{train,dev,test}.txt    "<utt> WORD WORD ..."
//! trans/lyrics_lm.txt       in-domain LM text (train transcripts + extra lines)
//! trans/general_lm.txt      out-of-domain LM text
//! lex/lexicon.txt           "WORD ph1 ph2 ..."
//! meta/utterances.csv       utt_id,song_id,genre,split,snr_db
//! meta/genres.csv           song_id,genre
//! meta/lines.csv            song_id,utt_id,start_sec,end_sec,text
//! meta/synth.toml           the generating configuration
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use mrlt_core::am::Lexicon;
use mrlt_core::audio::{write_wav, AudioBuffer};
use mrlt_core::eval::{format_genre_map, format_transcripts, Genre};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, write_text, HarnessError, Result};

/// Accompaniment texture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MusicKind {
    /// Broadband noise plus a harmonic power-chord drone.
    Drone,
    /// Sustained harmonic chords with hi-hat bursts.
    Chords,
    /// Babble of other sung phones over a kick drum.
    DenseVocal,
    /// No accompaniment; the mixture equals the vocal stem.
    Silent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenreProfile {
    pub genre: Genre,
    /// Vocal-to-music power ratio of every mixture of this genre; unused
    /// with silent accompaniment.
    pub snr_db: f64,
    pub music: MusicKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub sample_rate: u32,
    pub vocabulary_size: usize,
    pub phone_count: usize,
    pub min_partials: usize,
    pub max_partials: usize,
    pub min_phone_ms: f64,
    pub max_phone_ms: f64,
    pub min_word_phones: usize,
    pub max_word_phones: usize,
    pub min_line_words: usize,
    pub max_line_words: usize,
    pub lines_per_song: usize,
    pub train_songs_per_genre: usize,
    pub dev_songs_per_genre: usize,
    pub test_songs_per_genre: usize,
    /// Successors per word in the in-domain grammar.
    pub lyrics_successors: usize,
    /// Extra in-domain LM lines beyond the training transcripts.
    pub lyrics_lm_lines: usize,
    pub general_lm_lines: usize,
    /// Words that occur only in the general text.
    pub general_extra_words: usize,
    pub general_successors: usize,
    /// Probability that a general-text word follows the lyrics grammar
    /// instead of the general one.
    pub general_lyrics_overlap: f64,
    /// Per-song singer pitch factor range.
    pub min_singer_pitch: f64,
    pub max_singer_pitch: f64,
    /// Peak amplitude of every mixture.
    pub peak: f64,
    pub genres: Vec<GenreProfile>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            sample_rate: 16_000,
            vocabulary_size: 50,
            phone_count: 20,
            min_partials: 2,
            max_partials: 3,
            min_phone_ms: 100.0,
            max_phone_ms: 180.0,
            min_word_phones: 2,
            max_word_phones: 3,
            min_line_words: 3,
            max_line_words: 6,
            lines_per_song: 8,
            train_songs_per_genre: 12,
            dev_songs_per_genre: 2,
            test_songs_per_genre: 6,
            lyrics_successors: 4,
            lyrics_lm_lines: 300,
            general_lm_lines: 3000,
            general_extra_words: 100,
            general_successors: 15,
            general_lyrics_overlap: 0.5,
            min_singer_pitch: 0.92,
            max_singer_pitch: 1.08,
            peak: 0.9,
            genres: vec![
                GenreProfile { genre: Genre::Metal, snr_db: -5.0, music: MusicKind::Drone },
                GenreProfile { genre: Genre::Pop, snr_db: 5.0, music: MusicKind::Chords },
                GenreProfile { genre: Genre::Hiphop, snr_db: 10.0, music: MusicKind::DenseVocal },
            ],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        if self.vocabulary_size == 0 || self.phone_count == 0 {
            return bad("vocabulary and phone inventory must be non-empty".into());
        }
        if !(self.min_phone_ms > 0.0 && self.min_phone_ms <= self.max_phone_ms) {
            return bad(format!("phone duration range {}..{} ms", self.min_phone_ms, self.max_phone_ms));
        }
        for (name, lo, hi) in [
            ("partials", self.min_partials, self.max_partials),
            ("word_phones", self.min_word_phones, self.max_word_phones),
            ("line_words", self.min_line_words, self.max_line_words),
        ] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} range {lo}..{hi}"));
            }
        }
        let distinct = (self.min_word_phones..=self.max_word_phones)
            .map(|n| (self.phone_count as f64).powi(n as i32))
            .sum::<f64>();
        if (self.vocabulary_size as f64) > distinct {
            return bad(format!("{} words cannot get distinct pronunciations", self.vocabulary_size));
        }
        if self.lines_per_song == 0 || self.train_songs_per_genre == 0 || self.test_songs_per_genre == 0 {
            return bad("every split except dev needs songs and lines".into());
        }
        if self.genres.is_empty() {
            return bad("at least one genre profile is required".into());
        }
        if let Some(g) = self.genres.iter().find(|g| !g.snr_db.is_finite()) {
            return bad(format!("{} SNR is not finite", g.genre));
        }
        if !(self.peak > 0.0 && self.peak < 1.0) {
            return bad(format!("peak {} not in (0, 1)", self.peak));
        }
        if !(0.0..=1.0).contains(&self.general_lyrics_overlap) {
            return bad(format!("general_lyrics_overlap {} not in [0, 1]", self.general_lyrics_overlap));
        }
        if !(self.min_singer_pitch > 0.0 && self.min_singer_pitch <= self.max_singer_pitch) {
            return bad(format!("singer pitch range {}..{}", self.min_singer_pitch, self.max_singer_pitch));
        }
        if self.lyrics_successors == 0 || self.general_successors == 0 {
            return bad("successor counts must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Envelope {
    Flat,
    Rise,
    Fall,
    Tremolo(f64),
}

#[derive(Clone, Debug)]
struct PhoneTemplate {
    name: String,
    partials: Vec<(f64, f64)>,
    envelope: Envelope,
}

const PHONE_NAMES: [&str; 20] = ["a", "e", "i", "o", "u", "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z"];

fn phone_inventory(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<PhoneTemplate> {
    (0..cfg.phone_count)
        .map(|i| {
            let name = if cfg.phone_count <= PHONE_NAMES.len() { PHONE_NAMES[i].to_string() } else { format!("p{i}") };
            let n = rng.random_range(cfg.min_partials..=cfg.max_partials);
            let mut freqs: Vec<f64> = Vec::with_capacity(n);
            while freqs.len() < n {
                let f = (rng.random_range(250f64.ln()..3500f64.ln())).exp();
                if freqs.iter().all(|g| (f / g).ln().abs() > 0.15) {
                    freqs.push(f);
                }
            }
            freqs.sort_by(f64::total_cmp);
            let partials = freqs.into_iter().map(|f| (f, rng.random_range(0.3..1.0))).collect();
            let envelope = match rng.random_range(0..4) {
                0 => Envelope::Flat,
                1 => Envelope::Rise,
                2 => Envelope::Fall,
                _ => Envelope::Tremolo(rng.random_range(8.0..20.0)),
            };
            PhoneTemplate { name, partials, envelope }
        })
        .collect()
}

fn lexicon_words(cfg: &SynthConfig, phones: &[PhoneTemplate], rng: &mut ChaCha8Rng) -> Vec<(String, Vec<usize>)> {
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut spellings: BTreeSet<String> = BTreeSet::new();
    let mut words = Vec::with_capacity(cfg.vocabulary_size);
    while words.len() < cfg.vocabulary_size {
        let n = rng.random_range(cfg.min_word_phones..=cfg.max_word_phones);
        let pron: Vec<usize> = (0..n).map(|_| rng.random_range(0..phones.len())).collect();
        let spelling: String = pron.iter().map(|&p| phones[p].name.to_uppercase()).collect();
        if seen.contains(&pron) || spellings.contains(&spelling) {
            continue;
        }
        seen.insert(pron.clone());
        spellings.insert(spelling.clone());
        words.push((spelling, pron));
    }
    words
}

/// First-order word grammar: a start distribution and a few weighted
/// successors per word.
struct Grammar {
    starts: Vec<(usize, f64)>,
    successors: Vec<Vec<(usize, f64)>>,
}

fn weighted(rng: &mut ChaCha8Rng, n_items: usize, k: usize) -> Vec<(usize, f64)> {
    let mut picks: BTreeSet<usize> = BTreeSet::new();
    while picks.len() < k.min(n_items) {
        picks.insert(rng.random_range(0..n_items));
    }
    picks.into_iter().map(|i| (i, -rng.random_range(1e-9f64..1.0).ln())).collect()
}

fn draw(rng: &mut ChaCha8Rng, items: &[(usize, f64)]) -> usize {
    let total: f64 = items.iter().map(|x| x.1).sum();
    let mut u = rng.random::<f64>() * total;
    for &(i, w) in items {
        if u < w {
            return i;
        }
        u -= w;
    }
    items.last().expect("non-empty").0
}

impl Grammar {
    fn new(rng: &mut ChaCha8Rng, n_words: usize, starts: usize, successors: usize) -> Self {
        Self {
            starts: weighted(rng, n_words, starts),
            successors: (0..n_words).map(|_| weighted(rng, n_words, successors)).collect(),
        }
    }

    fn line(&self, rng: &mut ChaCha8Rng, len: usize) -> Vec<usize> {
        let mut out = vec![draw(rng, &self.starts)];
        while out.len() < len {
            out.push(draw(rng, &self.successors[*out.last().expect("non-empty")]));
        }
        out
    }
}

struct SongPlan {
    id: String,
    genre: Genre,
    split: Split,
    /// Singer pitch factor applied to every template.
    pitch: f64,
    lines: Vec<Vec<usize>>,
}

fn fade(i: usize, n: usize, ramp: usize) -> f64 {
    let r = ramp.min(n / 2).max(1);
    let edge = i.min(n - 1 - i);
    if edge >= r {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge as f64 / r as f64).cos()
    }
}

/// Appends one sung phone to `out`.
fn sing(out: &mut Vec<f64>, t: &PhoneTemplate, n: usize, sr: f64, pitch: f64, gain: f64, rng: &mut ChaCha8Rng) {
    let phases: Vec<f64> = t.partials.iter().map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let ramp = (0.01 * sr) as usize;
    for i in 0..n {
        let time = i as f64 / sr;
        let tau = i as f64 / n as f64;
        let env = match t.envelope {
            Envelope::Flat => 1.0,
            Envelope::Rise => 0.3 + 0.7 * tau,
            Envelope::Fall => 1.0 - 0.7 * tau,
            Envelope::Tremolo(rate) => 0.65 + 0.35 * (2.0 * PI * rate * time).sin(),
        };
        let v: f64 = t.partials.iter().zip(&phases).map(|(&(f, a), ph)| a * (2.0 * PI * f * pitch * time + ph).sin()).sum();
        out.push(gain * env * fade(i, n, ramp) * v);
    }
}

fn silence(out: &mut Vec<f64>, n: usize, rng: &mut ChaCha8Rng) {
    out.extend((0..n).map(|_| 1e-4 * rng.random_range(-1.0..1.0)));
}

/// Vocal line plus the frame-free word sequence it realizes.
fn sing_line(cfg: &SynthConfig, phones: &[PhoneTemplate], words: &[(String, Vec<usize>)], line: &[usize], pitch: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sr = cfg.sample_rate as f64;
    let samples = |ms: f64| (ms / 1000.0 * sr).round() as usize;
    let mut out = Vec::new();
    silence(&mut out, samples(rng.random_range(150.0..300.0)), rng);
    for (k, &w) in line.iter().enumerate() {
        if k > 0 && rng.random_bool(0.3) {
            silence(&mut out, samples(rng.random_range(40.0..120.0)), rng);
        }
        for &p in &words[w].1 {
            let n = samples(rng.random_range(cfg.min_phone_ms..=cfg.max_phone_ms));
            let jitter = rng.random_range(0.97..1.03);
            let gain = rng.random_range(0.5..1.0);
            sing(&mut out, &phones[p], n, sr, pitch * jitter, gain, rng);
        }
    }
    silence(&mut out, samples(rng.random_range(150.0..300.0)), rng);
    out
}

/// One-pole low-passed white noise.
fn colored_noise(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut y = 0.0;
    (0..n)
        .map(|_| {
            y = 0.6 * y + rng.random_range(-1.0..1.0);
            y
        })
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn accompaniment(kind: MusicKind, n: usize, sr: f64, phones: &[PhoneTemplate], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = vec![0.0; n];
    match kind {
        MusicKind::Drone => {
            let f0 = rng.random_range(70.0..110.0);
            let am = rng.random_range(0.5..2.0);
            for (i, v) in out.iter_mut().enumerate() {
                let t = i as f64 / sr;
                let mut s = 0.0;
                for h in 1..=16 {
                    let h = h as f64;
                    s += ((2.0 * PI * f0 * h * t).sin() + (2.0 * PI * 1.5 * f0 * h * t).sin()) / h;
                }
                *v = s * (0.8 + 0.2 * (2.0 * PI * am * t).sin());
            }
            let noise = colored_noise(n, rng);
            let scale = rms(&out) / rms(&noise).max(1e-12);
            for (v, z) in out.iter_mut().zip(noise) {
                *v += scale * z;
            }
        }
        MusicKind::Chords => {
            let chord_len = sr as usize;
            let mut start = 0;
            while start < n {
                let root = rng.random_range(150.0..300.0);
                for (i, v) in out[start..(start + chord_len).min(n)].iter_mut().enumerate() {
                    let t = i as f64 / sr;
                    let decay = (-t / 0.8).exp();
                    let mut s = 0.0;
                    for ratio in [1.0, 1.26, 1.5] {
                        for h in 1..=4 {
                            s += (2.0 * PI * root * ratio * h as f64 * t).sin() / h as f64;
                        }
                    }
                    *v += decay * s;
                }
                start += chord_len;
            }
            let hat = (0.25 * sr) as usize;
            let level = 0.3 * rms(&out);
            for beat in (0..n).step_by(hat.max(1)) {
                for i in beat..(beat + hat).min(n) {
                    let t = (i - beat) as f64 / sr;
                    out[i] += level * 3.0 * (-t / 0.02).exp() * rng.random_range(-1.0..1.0);
                }
            }
        }
        MusicKind::DenseVocal => {
            let mut babble = Vec::with_capacity(n + sr as usize);
            let pitch = rng.random_range(0.75..1.3);
            while babble.len() < n {
                let p = &phones[rng.random_range(0..phones.len())];
                let len = (rng.random_range(0.06..0.12) * sr) as usize;
                sing(&mut babble, p, len, sr, pitch, rng.random_range(0.5..1.0), rng);
            }
            babble.truncate(n);
            let kick = (0.5 * sr) as usize;
            let level = rms(&babble);
            for beat in (0..n).step_by(kick.max(1)) {
                for i in beat..(beat + kick).min(n) {
                    let t = (i - beat) as f64 / sr;
                    babble[i] += level * 2.0 * (-t / 0.1).exp() * (2.0 * PI * 55.0 * t).sin();
                }
            }
            out = babble;
        }
        MusicKind::Silent => {}
    }
    out
}

/// Integer-valued stems so that the mixture is their exact sum.
struct Quantized {
    vocal: Vec<i32>,
    music: Vec<i32>,
}

fn quantize(vocal: &[f64], music: &[f64], snr_db: f64, peak: f64) -> Quantized {
    let pv = vocal.iter().map(|v| v * v).sum::<f64>();
    let pm = music.iter().map(|v| v * v).sum::<f64>();
    let g = if pm > 0.0 { (pv / (pm * 10f64.powf(snr_db / 10.0))).sqrt() } else { 0.0 };
    let max = vocal.iter().zip(music).map(|(v, m)| (v + g * m).abs()).fold(0.0, f64::max);
    let s = if max > 0.0 { peak / max } else { 1.0 };
    let q = |x: f64| (x * s * 32768.0).round().clamp(-32768.0, 32767.0) as i32;
    Quantized { vocal: vocal.iter().map(|&v| q(v)).collect(), music: music.iter().map(|&m| q(g * m)).collect() }
}

fn to_buffer(x: &[i32], sr: u32) -> AudioBuffer {
    AudioBuffer::new(x.iter().map(|&v| v as f64 / 32768.0).collect(), sr).expect("finite samples")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceMeta {
    pub id: String,
    pub song: String,
    pub genre: Genre,
    pub split: Split,
    pub snr_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub utterances: usize,
    pub songs: usize,
    pub seconds: f64,
}

fn utterance_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Writes a complete synthetic dataset under `out`.
pub fn synth_corpus(cfg: &SynthConfig, out: &Path) -> Result<SynthSummary> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phones = phone_inventory(cfg, &mut rng);
    let words = lexicon_words(cfg, &phones, &mut rng);
    let lyrics = Grammar::new(&mut rng, words.len(), 8, cfg.lyrics_successors);
    let line_len = |rng: &mut ChaCha8Rng| rng.random_range(cfg.min_line_words..=cfg.max_line_words);

    let mut songs: Vec<SongPlan> = Vec::new();
    for split in Split::ALL {
        let per_genre = match split {
            Split::Train => cfg.train_songs_per_genre,
            Split::Dev => cfg.dev_songs_per_genre,
            Split::Test => cfg.test_songs_per_genre,
        };
        for profile in &cfg.genres {
            for _ in 0..per_genre {
                let mut lines: Vec<Vec<usize>> = Vec::with_capacity(cfg.lines_per_song);
                for _ in 0..cfg.lines_per_song {
                    // Choruses: some lines repeat an earlier line of the song.
                    if !lines.is_empty() && rng.random_bool(0.25) {
                        let k = rng.random_range(0..lines.len());
                        lines.push(lines[k].clone());
                    } else {
                        let n = line_len(&mut rng);
                        lines.push(lyrics.line(&mut rng, n));
                    }
                }
                songs.push(SongPlan {
                    id: format!("{}{:03}", split.as_str(), songs.len()),
                    genre: profile.genre,
                    split,
                    pitch: rng.random_range(cfg.min_singer_pitch..=cfg.max_singer_pitch),
                    lines,
                });
            }
        }
    }

    let spell = |line: &[usize]| -> Vec<String> { line.iter().map(|&w| words[w].0.clone()).collect() };
    let mut lyrics_text: Vec<Vec<String>> = songs
        .iter()
        .filter(|s| s.split == Split::Train)
        .flat_map(|s| s.lines.iter().map(|l| spell(l)))
        .collect();
    for _ in 0..cfg.lyrics_lm_lines {
        let n = line_len(&mut rng);
        lyrics_text.push(spell(&lyrics.line(&mut rng, n)));
    }
    let general_vocab: Vec<String> = words
        .iter()
        .map(|w| w.0.clone())
        .chain((0..cfg.general_extra_words).map(|i| format!("GEN{i:03}")))
        .collect();
    let general = Grammar::new(&mut rng, general_vocab.len(), 30, cfg.general_successors);
    let general_text: Vec<Vec<String>> = (0..cfg.general_lm_lines)
        .map(|_| {
            let n = rng.random_range(2..=10);
            let mut line: Vec<usize> = Vec::with_capacity(n);
            while line.len() < n {
                let shared = rng.random_bool(cfg.general_lyrics_overlap);
                let next = match line.last() {
                    None if shared => draw(&mut rng, &lyrics.starts),
                    None => draw(&mut rng, &general.starts),
                    Some(&w) if shared && w < words.len() => draw(&mut rng, &lyrics.successors[w]),
                    Some(&w) => draw(&mut rng, &general.successors[w]),
                };
                line.push(next);
            }
            line.into_iter().map(|w| general_vocab[w].clone()).collect()
        })
        .collect();

    struct Job<'a> {
        index: usize,
        id: String,
        song: &'a SongPlan,
        line: &'a [usize],
    }
    let jobs: Vec<Job> = songs
        .iter()
        .flat_map(|s| s.lines.iter().enumerate().map(move |(k, l)| (s, k, l)))
        .enumerate()
        .map(|(index, (song, k, line))| Job { index, id: format!("{}-{:02}", song.id, k), song, line })
        .collect();
    let profile_of = |g: Genre| cfg.genres.iter().find(|p| p.genre == g).expect("genre profile");
    let sr = cfg.sample_rate;
    let rendered: Vec<Quantized> = jobs
        .par_iter()
        .map(|job| {
            let mut rng = ChaCha8Rng::seed_from_u64(utterance_seed(cfg.seed, job.index));
            let vocal = sing_line(cfg, &phones, &words, job.line, job.song.pitch, &mut rng);
            let profile = profile_of(job.song.genre);
            let music = accompaniment(profile.music, vocal.len(), sr as f64, &phones, &mut rng);
            quantize(&vocal, &music, profile.snr_db, cfg.peak)
        })
        .collect();

    for dir in ["wav", "stems", "trans", "lex", "meta"] {
        std::fs::create_dir_all(out.join(dir)).map_err(io_err(out.join(dir)))?;
    }
    let mut seconds = 0.0;
    let mut utt_csv = String::from("utt_id,song_id,genre,split,snr_db\n");
    let mut lines_csv = String::from("song_id,utt_id,start_sec,end_sec,text\n");
    let mut song_clock: BTreeMap<&str, f64> = BTreeMap::new();
    let mut line_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED);
    let mut by_split: BTreeMap<Split, Vec<(String, Vec<String>)>> = BTreeMap::new();
    for (job, q) in jobs.iter().zip(&rendered) {
        let mixture: Vec<i32> = q.vocal.iter().zip(&q.music).map(|(v, m)| v + m).collect();
        write_wav(&to_buffer(&mixture, sr), out.join("wav").join(format!("{}.wav", job.id)))?;
        write_wav(&to_buffer(&q.vocal, sr), out.join("stems").join(format!("{}.vocal.wav", job.id)))?;
        write_wav(&to_buffer(&q.music, sr), out.join("stems").join(format!("{}.music.wav", job.id)))?;
        let dur = mixture.len() as f64 / sr as f64;
        seconds += dur;
        let snr = profile_of(job.song.genre).snr_db;
        let _ = writeln!(utt_csv, "{},{},{},{},{}", job.id, job.song.id, job.song.genre, job.song.split.as_str(), snr);
        let clock = song_clock.entry(job.song.id.as_str()).or_insert(0.0);
        let _ = writeln!(lines_csv, "{},{},{:.3},{:.3},{}", job.song.id, job.id, *clock, *clock + dur, spell(job.line).join(" "));
        *clock += dur + line_rng.random_range(0.5..2.0);
        by_split.entry(job.song.split).or_default().push((job.id.clone(), spell(job.line)));
    }
    for split in Split::ALL {
        let items = by_split.remove(&split).unwrap_or_default();
        write_text(&out.join("trans").join(format!("{}.txt", split.as_str())), &format_transcripts(&items))?;
    }
    let join = |lines: &[Vec<String>]| lines.iter().map(|l| l.join(" ") + "\n").collect::<String>();
    write_text(&out.join("trans/lyrics_lm.txt"), &join(&lyrics_text))?;
    write_text(&out.join("trans/general_lm.txt"), &join(&general_text))?;

    let mut lexicon = Lexicon::new(mrlt_core::am::DEFAULT_SILENCE_PHONE);
    for (spelling, pron) in &words {
        lexicon.add(spelling.clone(), pron.iter().map(|&p| phones[p].name.clone()).collect())?;
    }
    write_text(&out.join("lex/lexicon.txt"), &lexicon.to_text())?;
    let genres: BTreeMap<String, Genre> = songs.iter().map(|s| (s.id.clone(), s.genre)).collect();
    write_text(&out.join("meta/genres.csv"), &format_genre_map(&genres))?;
    write_text(&out.join("meta/utterances.csv"), &utt_csv)?;
    write_text(&out.join("meta/lines.csv"), &lines_csv)?;
    let echo = toml::to_string(cfg).map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
    write_text(&out.join("meta/synth.toml"), &echo)?;
    Ok(SynthSummary { utterances: jobs.len(), songs: songs.len(), seconds })
}
