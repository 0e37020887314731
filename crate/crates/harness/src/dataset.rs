//! Loading a corpus written by [`crate::synth::synth_corpus`] (or laid out
//! the same way by hand).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mrlt_core::am::{parse_lexicon, Lexicon};
use mrlt_core::audio::{read_wav, AudioBuffer};
use mrlt_core::eval::{parse_genre_map, parse_transcripts, Genre};
use mrlt_core::lm::read_corpus;

use crate::error::{read_text, HarnessError, Result};
use crate::synth::{Split, UtteranceMeta};

#[derive(Clone, Debug)]
pub struct Utterance {
    pub meta: UtteranceMeta,
    pub words: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub utterances: Vec<Utterance>,
    pub lexicon: Lexicon,
    pub genres: BTreeMap<String, Genre>,
    pub lyrics_lm_text: Vec<Vec<String>>,
    pub general_lm_text: Vec<Vec<String>>,
}

fn parse_utterances(path: &Path, text: &str) -> Result<Vec<UtteranceMeta>> {
    let bad = |line: usize, message: String| HarnessError::Dataset { path: path.to_path_buf(), message: format!("line {line}: {message}") };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(bad(i + 1, format!("expected 5 columns, found {}", cols.len())));
        }
        out.push(UtteranceMeta {
            id: cols[0].to_string(),
            song: cols[1].to_string(),
            genre: cols[2].parse().map_err(|e: mrlt_core::eval::EvalError| bad(i + 1, e.to_string()))?,
            split: cols[3].parse().map_err(|e: String| bad(i + 1, e))?,
            snr_db: cols[4].parse().map_err(|_| bad(i + 1, format!("bad SNR {:?}", cols[4])))?,
        });
    }
    Ok(out)
}

impl Dataset {
    pub fn load(root: &Path) -> Result<Self> {
        let meta_path = root.join("meta/utterances.csv");
        let metas = parse_utterances(&meta_path, &read_text(&meta_path)?)?;
        let mut transcripts: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for split in Split::ALL {
            let path = root.join("trans").join(format!("{}.txt", split.as_str()));
            if path.exists() {
                transcripts.extend(parse_transcripts(&read_text(&path)?)?);
            }
        }
        let mut utterances = Vec::with_capacity(metas.len());
        for meta in metas {
            let words = transcripts.remove(&meta.id).ok_or_else(|| HarnessError::Dataset {
                path: root.join("trans"),
                message: format!("no transcript for {}", meta.id),
            })?;
            utterances.push(Utterance { meta, words });
        }
        let lexicon = parse_lexicon(&read_text(&root.join("lex/lexicon.txt"))?)?;
        let genres = parse_genre_map(&read_text(&root.join("meta/genres.csv"))?)?;
        Ok(Self {
            root: root.to_path_buf(),
            utterances,
            lexicon,
            genres,
            lyrics_lm_text: read_corpus(&read_text(&root.join("trans/lyrics_lm.txt"))?),
            general_lm_text: read_corpus(&read_text(&root.join("trans/general_lm.txt"))?),
        })
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().filter(move |u| u.meta.split == split)
    }

    pub fn transcripts(&self, split: Split) -> Vec<(String, Vec<String>)> {
        self.split(split).map(|u| (u.meta.id.clone(), u.words.clone())).collect()
    }

    pub fn mixture(&self, id: &str) -> Result<AudioBuffer> {
        Ok(read_wav(self.root.join("wav").join(format!("{id}.wav")))?)
    }

    /// Vocal and music stems of one utterance.
    pub fn stems(&self, id: &str) -> Result<(AudioBuffer, AudioBuffer)> {
        let dir = self.root.join("stems");
        Ok((read_wav(dir.join(format!("{id}.vocal.wav")))?, read_wav(dir.join(format!("{id}.music.wav")))?))
    }
}
