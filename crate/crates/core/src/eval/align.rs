use std::fmt;

use serde::{Deserialize, Serialize};

/// Edit operation attached to one aligned pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditLabel {
    #[serde(rename = "C")]
    Correct,
    #[serde(rename = "S")]
    Substitution,
    #[serde(rename = "I")]
    Insertion,
    #[serde(rename = "D")]
    Deletion,
}

impl EditLabel {
    pub fn letter(self) -> char {
        match self {
            EditLabel::Correct => 'C',
            EditLabel::Substitution => 'S',
            EditLabel::Insertion => 'I',
            EditLabel::Deletion => 'D',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub reference: Option<String>,
    pub hypothesis: Option<String>,
    pub label: EditLabel,
}

/// Correct / substituted / inserted / deleted word counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Csid {
    pub correct: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl Csid {
    pub fn new(correct: usize, substitutions: usize, insertions: usize, deletions: usize) -> Self {
        Self { correct, substitutions, insertions, deletions }
    }

    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    pub fn ref_words(&self) -> usize {
        self.correct + self.substitutions + self.deletions
    }

    pub fn hyp_words(&self) -> usize {
        self.correct + self.substitutions + self.insertions
    }
}

impl std::ops::Add for Csid {
    type Output = Csid;

    fn add(self, o: Csid) -> Csid {
        Csid::new(
            self.correct + o.correct,
            self.substitutions + o.substitutions,
            self.insertions + o.insertions,
            self.deletions + o.deletions,
        )
    }
}

impl std::iter::Sum for Csid {
    fn sum<I: Iterator<Item = Csid>>(iter: I) -> Csid {
        iter.fold(Csid::default(), |a, b| a + b)
    }
}

impl fmt::Display for Csid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.correct, self.substitutions, self.insertions, self.deletions)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub pairs: Vec<AlignedPair>,
    pub counts: Csid,
}

impl AlignmentResult {
    pub fn ref_len(&self) -> usize {
        self.counts.ref_words()
    }

    /// One letter per aligned pair, space separated: `S S C C I`.
    pub fn pattern(&self) -> String {
        let letters: Vec<String> = self.pairs.iter().map(|p| p.label.letter().to_string()).collect();
        letters.join(" ")
    }

    /// Hypothesis tokens in order with their labels.
    pub fn hyp_labels(&self) -> impl Iterator<Item = (&str, EditLabel)> {
        self.pairs.iter().filter_map(|p| p.hypothesis.as_deref().map(|h| (h, p.label)))
    }
}

/// Minimum edit distance alignment with unit costs.
///
/// When several alignments share the minimum cost, the backtrace (from the
/// end of both sequences) prefers match, then substitution, then insertion,
/// then deletion.
pub fn align_transcripts<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> AlignmentResult {
    let (n, m) = (reference.len(), hypothesis.len());
    let eq = |i: usize, j: usize| reference[i].as_ref() == hypothesis[j].as_ref();
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[i - 1][j - 1] + usize::from(!eq(i - 1, j - 1));
            d[i][j] = diag.min(d[i][j - 1] + 1).min(d[i - 1][j] + 1);
        }
    }

    let mut pairs = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let label = if i > 0 && j > 0 && eq(i - 1, j - 1) && d[i][j] == d[i - 1][j - 1] {
            EditLabel::Correct
        } else if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1 {
            EditLabel::Substitution
        } else if j > 0 && d[i][j] == d[i][j - 1] + 1 {
            EditLabel::Insertion
        } else {
            EditLabel::Deletion
        };
        let (r, h) = match label {
            EditLabel::Correct | EditLabel::Substitution => {
                i -= 1;
                j -= 1;
                (Some(i), Some(j))
            }
            EditLabel::Insertion => {
                j -= 1;
                (None, Some(j))
            }
            EditLabel::Deletion => {
                i -= 1;
                (Some(i), None)
            }
        };
        pairs.push(AlignedPair {
            reference: r.map(|k| reference[k].as_ref().to_string()),
            hypothesis: h.map(|k| hypothesis[k].as_ref().to_string()),
            label,
        });
    }
    pairs.reverse();

    let mut counts = Csid::default();
    for p in &pairs {
        match p.label {
            EditLabel::Correct => counts.correct += 1,
            EditLabel::Substitution => counts.substitutions += 1,
            EditLabel::Insertion => counts.insertions += 1,
            EditLabel::Deletion => counts.deletions += 1,
        }
    }
    AlignmentResult { pairs, counts }
}

/// Scoring normalization: upper case, punctuation removed except
/// apostrophes inside a word.
pub fn normalize_text(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let chars: Vec<char> = raw.chars().collect();
            let mut out = String::with_capacity(raw.len());
            for (k, &c) in chars.iter().enumerate() {
                if c.is_alphanumeric() {
                    out.extend(c.to_uppercase());
                } else if c == '\'' {
                    let before = k > 0 && chars[k - 1].is_alphanumeric();
                    let after = chars.get(k + 1).is_some_and(|n| n.is_alphanumeric());
                    if before && after {
                        out.push(c);
                    }
                }
            }
            (!out.is_empty()).then_some(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn identity_and_empty() {
        let r = words("A B C D");
        assert_eq!(align_transcripts(&r, &r).counts, Csid::new(4, 0, 0, 0));
        let empty: Vec<String> = vec![];
        assert_eq!(align_transcripts(&r, &empty).counts, Csid::new(0, 0, 0, 4));
        assert_eq!(align_transcripts(&empty, &r).counts, Csid::new(0, 0, 4, 0));
        assert_eq!(align_transcripts(&empty, &empty).pairs.len(), 0);
    }

    #[test]
    fn labels_match_gaps() {
        let a = align_transcripts(&words("A B C"), &words("X A C C"));
        for p in &a.pairs {
            match p.label {
                EditLabel::Insertion => assert!(p.reference.is_none() && p.hypothesis.is_some()),
                EditLabel::Deletion => assert!(p.reference.is_some() && p.hypothesis.is_none()),
                _ => assert!(p.reference.is_some() && p.hypothesis.is_some()),
            }
        }
        assert_eq!(a.counts.ref_words(), 3);
        assert_eq!(a.counts.hyp_words(), 4);
    }

    #[test]
    fn normalization_keeps_inner_apostrophes() {
        assert_eq!(normalize_text("I should've known, 'cause it's \"you\"!"), words("I SHOULD'VE KNOWN CAUSE IT'S YOU"));
        assert_eq!(normalize_text(" -- ... "), Vec::<String>::new());
    }
}
