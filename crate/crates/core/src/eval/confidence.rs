use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{AlignmentResult, EditLabel, EvalError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBin {
    pub lo: f64,
    pub hi: f64,
    pub correct: usize,
    pub incorrect: usize,
}

/// Bin index for `c` among `bins` equal-width bins over [0, 1]. The top bin
/// is closed on the right.
pub fn bin_index(c: f64, bins: usize) -> usize {
    ((c * bins as f64).floor() as usize).min(bins - 1)
}

fn empty_bins(bins: usize) -> Vec<ConfidenceBin> {
    (0..bins)
        .map(|k| ConfidenceBin { lo: k as f64 / bins as f64, hi: (k + 1) as f64 / bins as f64, correct: 0, incorrect: 0 })
        .collect()
}

/// Pairs each decoded word with its alignment label: `true` when correct.
pub fn label_words(words: &[(String, f64)], alignment: &AlignmentResult) -> Result<Vec<(f64, bool)>, EvalError> {
    let hyp: Vec<(&str, EditLabel)> = alignment.hyp_labels().collect();
    if hyp.len() != words.len() {
        return Err(EvalError::HypothesisMismatch { decoded: words.len(), aligned: hyp.len() });
    }
    words
        .iter()
        .zip(hyp)
        .map(|((w, c), (h, label))| {
            if w != h {
                return Err(EvalError::HypothesisWordMismatch { decoded: w.clone(), aligned: h.to_string() });
            }
            if !(0.0..=1.0).contains(c) {
                return Err(EvalError::ConfidenceOutOfRange(*c));
            }
            Ok((*c, label == EditLabel::Correct))
        })
        .collect()
}

/// Histogram of decoded-word confidences split by correctness.
pub fn confidence_bins(words: &[(String, f64)], alignment: &AlignmentResult, bins: usize) -> Result<Vec<ConfidenceBin>, EvalError> {
    if bins == 0 {
        return Err(EvalError::ZeroBins);
    }
    let mut out = empty_bins(bins);
    add_to_bins(&mut out, &label_words(words, alignment)?);
    Ok(out)
}

/// Accumulates already-labeled words into existing bins.
pub fn add_to_bins(bins: &mut [ConfidenceBin], labeled: &[(f64, bool)]) {
    let n = bins.len();
    for &(c, ok) in labeled {
        let b = &mut bins[bin_index(c, n)];
        if ok {
            b.correct += 1;
        } else {
            b.incorrect += 1;
        }
    }
}

/// Histogram over many utterances.
pub fn pooled_confidence_bins(items: &[(Vec<(String, f64)>, AlignmentResult)], bins: usize) -> Result<Vec<ConfidenceBin>, EvalError> {
    if bins == 0 {
        return Err(EvalError::ZeroBins);
    }
    let mut out = empty_bins(bins);
    for (words, a) in items {
        add_to_bins(&mut out, &label_words(words, a)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSummary {
    pub correct: usize,
    pub incorrect: usize,
    pub mean_correct: Option<f64>,
    pub mean_incorrect: Option<f64>,
}

pub fn summarize_confidence(labeled: &[(f64, bool)]) -> ConfidenceSummary {
    let mean = |want: bool| {
        let v: Vec<f64> = labeled.iter().filter(|(_, ok)| *ok == want).map(|(c, _)| *c).collect();
        (v.len(), (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
    };
    let (correct, mean_correct) = mean(true);
    let (incorrect, mean_incorrect) = mean(false);
    ConfidenceSummary { correct, incorrect, mean_correct, mean_incorrect }
}

pub fn bins_to_csv(bins: &[ConfidenceBin]) -> String {
    let mut out = String::from("lo,hi,correct,incorrect\n");
    for b in bins {
        let _ = writeln!(out, "{:.3},{:.3},{},{}", b.lo, b.hi, b.correct, b.incorrect);
    }
    out
}

/// Grouped bar chart, correct in green and incorrect in red.
pub fn bins_to_svg(bins: &[ConfidenceBin]) -> String {
    let (w, h, margin) = (640.0, 320.0, 40.0);
    let max = bins.iter().map(|b| b.correct.max(b.incorrect)).max().unwrap_or(0).max(1) as f64;
    let slot = (w - 2.0 * margin) / bins.len().max(1) as f64;
    let bar = slot * 0.4;
    let scale = (h - 2.0 * margin) / max;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let base = h - margin;
    let _ = writeln!(s, r#"<line x1="{margin}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, w - margin);
    for (k, b) in bins.iter().enumerate() {
        let x = margin + k as f64 * slot + slot * 0.1;
        for (i, (count, colour)) in [(b.correct, "#2a9d3f"), (b.incorrect, "#c0392b")].into_iter().enumerate() {
            let bh = count as f64 * scale;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar:.1}" height="{bh:.1}" fill="{colour}"/>"#,
                x + i as f64 * bar,
                base - bh
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{:.1}</text>"#,
            x + bar,
            base + 14.0,
            b.lo
        );
    }
    let _ = writeln!(s, r#"<text x="{margin}" y="20" font-size="12">correct (green) / incorrect (red) by confidence</text>"#);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::super::align_transcripts;
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn top_bin_is_right_closed() {
        assert_eq!(bin_index(0.95, 10), 9);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.0, 10), 0);
    }

    #[test]
    fn all_confident_and_correct() {
        let r = words("A B C");
        let a = align_transcripts(&r, &r);
        let decoded: Vec<(String, f64)> = r.iter().map(|w| (w.clone(), 1.0)).collect();
        let bins = confidence_bins(&decoded, &a, 10).unwrap();
        assert_eq!((bins[9].correct, bins[9].incorrect), (3, 0));
        assert_eq!(bins[..9].iter().map(|b| b.correct + b.incorrect).sum::<usize>(), 0);
    }

    #[test]
    fn mismatched_hypothesis_is_rejected() {
        let a = align_transcripts(&words("A B"), &words("A B"));
        let decoded = vec![("A".to_string(), 0.5)];
        assert!(matches!(confidence_bins(&decoded, &a, 4), Err(EvalError::HypothesisMismatch { .. })));
        let decoded = vec![("A".to_string(), 0.5), ("B".to_string(), 1.5)];
        assert_eq!(confidence_bins(&decoded, &a, 4), Err(EvalError::ConfidenceOutOfRange(1.5)));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = bins_to_svg(&empty_bins(5));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
