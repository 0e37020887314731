use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineAnnotation {
    pub text: String,
    pub start_sec: f64,
    pub end_sec: f64,
}

impl LineAnnotation {
    pub fn new(text: impl Into<String>, start_sec: f64, end_sec: f64) -> Self {
        Self { text: text.into(), start_sec, end_sec }
    }

    pub fn duration(&self) -> f64 {
        self.end_sec - self.start_sec
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_sec: f64,
    pub end_sec: f64,
    /// Indices of the merged input lines, contiguous and ascending.
    pub lines: std::ops::Range<usize>,
    pub text: String,
    /// A single line longer than the maximum span.
    pub oversize: bool,
    /// Span below the minimum.
    pub undersize: bool,
}

impl Segment {
    pub fn span(&self) -> f64 {
        self.end_sec - self.start_sec
    }

    pub fn flagged(&self) -> bool {
        self.oversize || self.undersize
    }
}

/// Greedy left-to-right merge of consecutive lines into segments whose span
/// (first start to last end) stays within `max_sec`.
pub fn segment_lines(lines: &[LineAnnotation], min_sec: f64, max_sec: f64) -> Result<Vec<Segment>, EvalError> {
    if !(min_sec >= 0.0 && max_sec > 0.0 && min_sec <= max_sec) {
        return Err(EvalError::InvalidSegmentBounds { min_sec, max_sec });
    }
    for (i, l) in lines.iter().enumerate() {
        if !(l.start_sec >= 0.0 && l.start_sec < l.end_sec) {
            return Err(EvalError::InvalidLine { index: i, start: l.start_sec, end: l.end_sec });
        }
        if i > 0 && l.start_sec < lines[i - 1].end_sec {
            return Err(EvalError::UnsortedLines { index: i });
        }
    }

    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let start = lines[i].start_sec;
        let mut j = i + 1;
        while j < lines.len() && lines[j].end_sec - start <= max_sec {
            j += 1;
        }
        let end = lines[j - 1].end_sec;
        let oversize = end - start > max_sec;
        let text: Vec<&str> = lines[i..j].iter().map(|l| l.text.trim()).filter(|t| !t.is_empty()).collect();
        out.push(Segment {
            start_sec: start,
            end_sec: end,
            lines: i..j,
            text: text.join(" "),
            oversize,
            undersize: !oversize && end - start < min_sec,
        });
        i = j;
    }
    Ok(out)
}
