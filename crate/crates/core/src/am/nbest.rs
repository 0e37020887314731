use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{AmError, NBestList};
use crate::eval::{align_transcripts, EditLabel};
use crate::lm::{NGramModel, BOS, EOS, UNK};

/// log10 P(word | history), mapping tokens outside the model to `<unk>`
/// when the model has it.
pub fn lm_word_log10(model: &NGramModel, history: &[&str], word: &str) -> f64 {
    let has_unk = model.contains(UNK);
    let map = |t: &'_ str| -> String {
        if model.contains(t) || !has_unk {
            t.to_string()
        } else {
            UNK.to_string()
        }
    };
    let hist: Vec<String> = history.iter().map(|t| map(t)).collect();
    let hist: Vec<&str> = hist.iter().map(String::as_str).collect();
    model.log10_prob(&hist, &map(word))
}

/// Natural-log probability of `<s> words </s>` under the model.
pub fn sequence_lm_score<S: AsRef<str>>(model: &NGramModel, words: &[S]) -> f64 {
    let keep = model.order().saturating_sub(1);
    let mut history: Vec<&str> = vec![BOS];
    let mut total = 0.0;
    for w in words.iter().map(AsRef::as_ref).chain(std::iter::once(EOS)) {
        let h = &history[history.len().saturating_sub(keep)..];
        total += lm_word_log10(model, h, w);
        history.push(w);
    }
    total * std::f64::consts::LN_10
}

/// Recomputes LM scores with `lm` and re-ranks by
/// `acoustic + lm_scale·lm − penalty·|words|`.
pub fn rescore_nbest(nbest: &NBestList, lm: &NGramModel, lm_scale: f64) -> Result<NBestList, AmError> {
    if nbest.is_empty() {
        return Err(AmError::EmptyNBest);
    }
    let mut out = nbest.clone();
    out.lm_scale = lm_scale;
    for h in &mut out.hypotheses {
        h.lm = sequence_lm_score(lm, &h.words);
    }
    let combined: Vec<f64> = out.hypotheses.iter().map(|h| out.combine(h.acoustic, h.lm, h.words.len())).collect();
    for (h, c) in out.hypotheses.iter_mut().zip(combined) {
        h.combined = c;
    }
    out.sort();
    Ok(out)
}

/// Hypothesis posteriors `softmax(combined / lm_scale)`; a scale of zero
/// is treated as one.
pub fn hypothesis_posteriors(nbest: &NBestList) -> Vec<f64> {
    let temp = if nbest.lm_scale > 0.0 { nbest.lm_scale } else { 1.0 };
    let scaled: Vec<f64> = nbest.hypotheses.iter().map(|h| h.combined / temp).collect();
    let m = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// N-best consensus confidence of each word of the top hypothesis: the
/// posterior mass of hypotheses whose minimum-edit alignment to the top
/// hypothesis matches that word.
pub fn word_confidence(nbest: &NBestList) -> Vec<(String, f64)> {
    let Some(top) = nbest.best() else {
        return Vec::new();
    };
    let post = hypothesis_posteriors(nbest);
    let mut conf = vec![0.0; top.words.len()];
    for (h, p) in nbest.hypotheses.iter().zip(&post) {
        let a = align_transcripts(&top.words, &h.words);
        let mut i = 0;
        for pair in &a.pairs {
            if pair.reference.is_some() {
                if pair.label == EditLabel::Correct {
                    conf[i] += p;
                }
                i += 1;
            }
        }
    }
    top.words.iter().cloned().zip(conf.into_iter().map(|c| c.clamp(0.0, 1.0))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtmLine {
    pub utterance: String,
    pub channel: u32,
    pub start_sec: f64,
    pub duration_sec: f64,
    pub word: String,
    pub confidence: f64,
}

/// CTM lines for the top hypothesis:
/// `utt 1 start dur word confidence`.
pub fn ctm_lines(utterance: &str, nbest: &NBestList, confidences: &[(String, f64)]) -> String {
    let mut out = String::new();
    let Some(top) = nbest.best() else {
        return out;
    };
    let shift = nbest.frame_shift_ms / 1000.0;
    for ((word, &(s, e)), (_, c)) in top.words.iter().zip(&top.spans).zip(confidences) {
        let _ = writeln!(out, "{utterance} 1 {:.2} {:.2} {word} {c:.4}", s as f64 * shift, (e - s) as f64 * shift);
    }
    out
}

pub fn parse_ctm(text: &str) -> Result<Vec<CtmLine>, AmError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        let bad = |m: &str| AmError::CtmSyntax { line: i + 1, message: m.to_string() };
        if f.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        out.push(CtmLine {
            utterance: f[0].to_string(),
            channel: f[1].parse().map_err(|_| bad("bad channel"))?,
            start_sec: num(f[2])?,
            duration_sec: num(f[3])?,
            word: f[4].to_string(),
            confidence: num(f[5])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::Hypothesis;
    use super::*;

    fn hyp(words: &str, combined: f64) -> Hypothesis {
        let words: Vec<String> = words.split_whitespace().map(str::to_string).collect();
        let spans = (0..words.len()).map(|i| (i * 10, i * 10 + 10)).collect();
        Hypothesis { words, spans, acoustic: combined, lm: 0.0, combined }
    }

    fn list(h: Vec<Hypothesis>) -> NBestList {
        NBestList { hypotheses: h, lm_scale: 1.0, word_insertion_penalty: 0.0, frame_shift_ms: 10.0, num_frames: 100 }
    }

    #[test]
    fn single_hypothesis_is_certain() {
        let c = word_confidence(&list(vec![hyp("A B C", -3.0)]));
        assert!(c.iter().all(|(_, x)| *x == 1.0));
    }

    #[test]
    fn two_way_tie_on_one_word() {
        let c = word_confidence(&list(vec![hyp("A B C", -3.0), hyp("A X C", -3.0)]));
        let vals: Vec<f64> = c.iter().map(|(_, x)| *x).collect();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 0.5).abs() < 1e-12 && (vals[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ctm_format_and_parse() {
        let l = list(vec![hyp("A B", -1.0)]);
        let text = ctm_lines("utt1", &l, &word_confidence(&l));
        assert_eq!(text, "utt1 1 0.00 0.10 A 1.0000\nutt1 1 0.10 0.10 B 1.0000\n");
        let parsed = parse_ctm(&text).unwrap();
        assert_eq!(parsed[1].word, "B");
        assert!(matches!(parse_ctm("x 1 0 0 A"), Err(AmError::CtmSyntax { line: 1, .. })));
    }
}
