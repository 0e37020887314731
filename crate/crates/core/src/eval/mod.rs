//! Scoring: word alignment, error rates, error and genre tables,
//! confidence histograms and line segmentation.

mod align;
mod confidence;
mod report;
mod segment;

use std::collections::BTreeMap;

use thiserror::Error;

pub use align::{align_transcripts, normalize_text, AlignedPair, AlignmentResult, Csid, EditLabel};
pub use confidence::{
    add_to_bins, bin_index, bins_to_csv, bins_to_svg, confidence_bins, label_words, pooled_confidence_bins,
    summarize_confidence, ConfidenceBin, ConfidenceSummary,
};
pub use report::{
    aggregate_errors, aggregate_rows, alignment_table_text, format_percent, genre_report, genre_table_csv,
    genre_table_text, percent_hundredths, song_count_table, wer, CountDiscrepancy, ErrorCounts, ErrorRow, ErrorTable,
    EvalReport, Genre, GenreRow, SongCountTable,
};
pub use segment::{segment_lines, LineAnnotation, Segment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no reference words to score against")]
    ZeroReference,
    #[error("no reports to aggregate")]
    NoReports,
    #[error("song {0:?} has no genre")]
    MissingGenre(String),
    #[error("unknown genre {0:?}")]
    UnknownGenre(String),
    #[error("{decoded} decoded words but {aligned} hypothesis words in the alignment")]
    HypothesisMismatch { decoded: usize, aligned: usize },
    #[error("decoded word {decoded:?} does not match aligned hypothesis word {aligned:?}")]
    HypothesisWordMismatch { decoded: String, aligned: String },
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("histogram needs at least one bin")]
    ZeroBins,
    #[error("segment bounds min {min_sec} / max {max_sec} are invalid")]
    InvalidSegmentBounds { min_sec: f64, max_sec: f64 },
    #[error("line {index} has invalid span [{start}, {end})")]
    InvalidLine { index: usize, start: f64, end: f64 },
    #[error("line {index} starts before the previous line ends")]
    UnsortedLines { index: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate utterance id {0:?}")]
    DuplicateId(String),
}

/// Parses `utt-id TOKEN TOKEN …` lines. Tokens are normalized for scoring.
/// Blank lines are skipped; an id with no tokens is an empty transcript.
pub fn parse_transcripts(text: &str) -> Result<Vec<(String, Vec<String>)>, EvalError> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        if !seen.insert(id.to_string()) {
            return Err(EvalError::DuplicateId(id.to_string()));
        }
        out.push((id.to_string(), normalize_text(rest)));
    }
    Ok(out)
}

pub fn format_transcripts<S: AsRef<str>>(items: &[(String, Vec<S>)]) -> String {
    let mut out = String::new();
    for (id, words) in items {
        out.push_str(id);
        for w in words {
            out.push(' ');
            out.push_str(w.as_ref());
        }
        out.push('\n');
    }
    out
}

/// Parses `song_id,genre` rows. A first row of `song_id,genre` is treated
/// as a header.
pub fn parse_genre_map(text: &str) -> Result<BTreeMap<String, Genre>, EvalError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.eq_ignore_ascii_case("song_id,genre")) {
            continue;
        }
        let (song, genre) = line
            .split_once(',')
            .ok_or_else(|| EvalError::Parse { line: i + 1, message: "expected song_id,genre".into() })?;
        let genre: Genre = genre.parse().map_err(|e: EvalError| EvalError::Parse { line: i + 1, message: e.to_string() })?;
        out.insert(song.trim().to_string(), genre);
    }
    Ok(out)
}

pub fn format_genre_map(map: &BTreeMap<String, Genre>) -> String {
    let mut out = String::from("song_id,genre\n");
    for (song, g) in map {
        out.push_str(&format!("{song},{g}\n"));
    }
    out
}

/// Scores hypotheses against references by utterance id. A reference with
/// no hypothesis scores as an empty hypothesis.
pub fn score_transcripts(refs: &[(String, Vec<String>)], hyps: &[(String, Vec<String>)]) -> EvalReport {
    let by_id: std::collections::HashMap<&str, &Vec<String>> = hyps.iter().map(|(id, w)| (id.as_str(), w)).collect();
    let empty = Vec::new();
    EvalReport::new(
        refs.iter()
            .map(|(id, r)| (id.clone(), align_transcripts(r, by_id.get(id.as_str()).copied().unwrap_or(&empty))))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transcript_round_trip() {
        let text = "u1 hello, World\nu2\n\nu3 it's  fine\n";
        let parsed = parse_transcripts(text).unwrap();
        assert_eq!(parsed[0].1, vec!["HELLO", "WORLD"]);
        assert!(parsed[1].1.is_empty());
        assert_eq!(parse_transcripts(&format_transcripts(&parsed)).unwrap(), parsed);
        assert_eq!(parse_transcripts("a x\na y"), Err(EvalError::DuplicateId("a".into())));
    }

    #[test]
    fn genre_map_round_trip() {
        let m = parse_genre_map("song_id,genre\ns1,metal\ns2, Pop\n").unwrap();
        assert_eq!(m["s2"], Genre::Pop);
        assert_eq!(parse_genre_map(&format_genre_map(&m)).unwrap(), m);
        assert!(matches!(parse_genre_map("s1;metal"), Err(EvalError::Parse { line: 1, .. })));
    }

    #[test]
    fn missing_hypothesis_is_all_deletions() {
        let refs = vec![("u".to_string(), vec!["A".to_string(), "B".to_string()])];
        let r = score_transcripts(&refs, &[]);
        assert_eq!(r.totals(), Csid::new(0, 0, 0, 2));
    }
}
