use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AlignmentResult, Csid, EvalError};

/// Anything carrying pooled csid counts.
pub trait ErrorCounts {
    fn csid(&self) -> Csid;
}

impl ErrorCounts for Csid {
    fn csid(&self) -> Csid {
        *self
    }
}

impl ErrorCounts for AlignmentResult {
    fn csid(&self) -> Csid {
        self.counts
    }
}

/// `100·(S+I+D)/N` over pooled counts. Not clamped, so insertion-heavy
/// output can exceed 100.
pub fn wer<T: ErrorCounts + ?Sized>(x: &T) -> Result<f64, EvalError> {
    let c = x.csid();
    if c.ref_words() == 0 {
        return Err(EvalError::ZeroReference);
    }
    Ok(100.0 * c.errors() as f64 / c.ref_words() as f64)
}

/// Scored utterances of one test set, in input order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub utterances: Vec<(String, AlignmentResult)>,
}

impl EvalReport {
    pub fn new(utterances: Vec<(String, AlignmentResult)>) -> Self {
        Self { utterances }
    }

    /// Aligns each `(id, ref, hyp)` triple.
    pub fn from_pairs<S: AsRef<str>>(items: &[(String, Vec<S>, Vec<S>)]) -> Self {
        Self {
            utterances: items.iter().map(|(id, r, h)| (id.clone(), super::align_transcripts(r, h))).collect(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, result: AlignmentResult) {
        self.utterances.push((id.into(), result));
    }

    pub fn totals(&self) -> Csid {
        self.utterances.iter().map(|(_, a)| a.counts).sum()
    }

    pub fn wer(&self) -> Result<f64, EvalError> {
        wer(self)
    }
}

impl ErrorCounts for EvalReport {
    fn csid(&self) -> Csid {
        self.totals()
    }
}

/// `100·count/total` in hundredths of a percent, rounded half up with
/// integer arithmetic.
pub fn percent_hundredths(count: usize, total: usize) -> Option<u64> {
    if total == 0 {
        return None;
    }
    let (c, t) = (count as u128, total as u128);
    Some(((c * 20_000 + t) / (2 * t)) as u64)
}

/// Two-decimal percentage string, e.g. `3.50`.
pub fn format_percent(count: usize, total: usize) -> String {
    match percent_hundredths(count, total) {
        Some(h) => format!("{}.{:02}", h / 100, h % 100),
        None => "n/a".to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub name: String,
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    pub ref_words: usize,
}

impl ErrorRow {
    pub fn from_counts(name: impl Into<String>, c: Csid) -> Self {
        Self {
            name: name.into(),
            insertions: c.insertions,
            deletions: c.deletions,
            substitutions: c.substitutions,
            ref_words: c.ref_words(),
        }
    }

    /// Insertion, deletion and substitution percentages.
    pub fn percentages(&self) -> [String; 3] {
        [
            format_percent(self.insertions, self.ref_words),
            format_percent(self.deletions, self.ref_words),
            format_percent(self.substitutions, self.ref_words),
        ]
    }
}

/// Per-set error counts with a pooled `All` row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
    pub all: ErrorRow,
}

pub fn aggregate_errors(reports: &[(String, EvalReport)]) -> Result<ErrorTable, EvalError> {
    let rows: Vec<ErrorRow> = reports.iter().map(|(name, r)| ErrorRow::from_counts(name.clone(), r.totals())).collect();
    aggregate_rows(rows)
}

/// Sums precomputed rows into an `All` row.
pub fn aggregate_rows(rows: Vec<ErrorRow>) -> Result<ErrorTable, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::NoReports);
    }
    let mut all = ErrorRow { name: "All".to_string(), insertions: 0, deletions: 0, substitutions: 0, ref_words: 0 };
    for r in &rows {
        all.insertions += r.insertions;
        all.deletions += r.deletions;
        all.substitutions += r.substitutions;
        all.ref_words += r.ref_words;
    }
    Ok(ErrorTable { rows, all })
}

impl ErrorTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("set,ins,del,sub,ref_words,ins_pct,del_pct,sub_pct\n");
        for r in self.rows.iter().chain(std::iter::once(&self.all)) {
            let [pi, pd, ps] = r.percentages();
            let _ = writeln!(out, "{},{},{},{},{},{pi},{pd},{ps}", r.name, r.insertions, r.deletions, r.substitutions, r.ref_words);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut table = vec![vec!["set".into(), "ins".into(), "del".into(), "sub".into(), "words".into()]];
        for r in self.rows.iter().chain(std::iter::once(&self.all)) {
            let [pi, pd, ps] = r.percentages();
            table.push(vec![
                r.name.clone(),
                format!("{} ({pi}%)", r.insertions),
                format!("{} ({pd}%)", r.deletions),
                format!("{} ({ps}%)", r.substitutions),
                r.ref_words.to_string(),
            ]);
        }
        render_table(&table)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    Metal,
    Pop,
    Hiphop,
}

impl Genre {
    pub const ALL: [Genre; 3] = [Genre::Metal, Genre::Pop, Genre::Hiphop];

    pub fn as_str(self) -> &'static str {
        match self {
            Genre::Metal => "metal",
            Genre::Pop => "pop",
            Genre::Hiphop => "hiphop",
        }
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Genre {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "metal" => Ok(Genre::Metal),
            "pop" => Ok(Genre::Pop),
            "hiphop" | "hip-hop" | "hip hop" => Ok(Genre::Hiphop),
            other => Err(EvalError::UnknownGenre(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenreRow {
    pub genre: Genre,
    pub songs: usize,
    pub counts: Csid,
    /// `None` when the genre has no reference words.
    pub wer: Option<f64>,
}

/// Pooled WER per genre. Each song is one entry of `songs`.
pub fn genre_report(songs: &[(String, EvalReport)], genres: &BTreeMap<String, Genre>) -> Result<Vec<GenreRow>, EvalError> {
    let mut acc: BTreeMap<Genre, (usize, Csid)> = Genre::ALL.iter().map(|&g| (g, (0, Csid::default()))).collect();
    for (song, report) in songs {
        let g = genres.get(song).ok_or_else(|| EvalError::MissingGenre(song.clone()))?;
        let slot = acc.get_mut(g).expect("all genres present");
        slot.0 += 1;
        slot.1 = slot.1 + report.totals();
    }
    Ok(acc
        .into_iter()
        .map(|(genre, (songs, counts))| GenreRow { genre, songs, counts, wer: wer(&counts).ok() })
        .collect())
}

pub fn genre_table_text(rows: &[GenreRow]) -> String {
    let mut table = vec![vec!["genre".into(), "songs".into(), "ref words".into(), "WER%".into()]];
    for r in rows {
        let w = r.wer.map_or("n/a".to_string(), |w| format!("{w:.2}"));
        table.push(vec![r.genre.to_string(), r.songs.to_string(), r.counts.ref_words().to_string(), w]);
    }
    render_table(&table)
}

pub fn genre_table_csv(rows: &[GenreRow]) -> String {
    let mut out = String::from("genre,songs,correct,sub,ins,del,wer\n");
    for r in rows {
        let w = r.wer.map_or(String::new(), |w| format!("{w:.4}"));
        let c = r.counts;
        let _ = writeln!(out, "{},{},{},{},{},{},{w}", r.genre, r.songs, c.correct, c.substitutions, c.insertions, c.deletions);
    }
    out
}

/// Songs per genre for each named set, plus computed totals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongCountTable {
    pub sets: Vec<(String, BTreeMap<Genre, usize>)>,
    pub totals: BTreeMap<Genre, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountDiscrepancy {
    pub genre: Genre,
    pub declared: usize,
    pub computed: usize,
}

pub fn song_count_table(sets: &[(String, BTreeMap<Genre, usize>)]) -> SongCountTable {
    let mut totals: BTreeMap<Genre, usize> = Genre::ALL.iter().map(|&g| (g, 0)).collect();
    for (_, counts) in sets {
        for (g, n) in counts {
            *totals.entry(*g).or_default() += n;
        }
    }
    SongCountTable { sets: sets.to_vec(), totals }
}

impl SongCountTable {
    /// Compares externally stated totals with the computed column sums.
    pub fn check_declared(&self, declared: &BTreeMap<Genre, usize>) -> Vec<CountDiscrepancy> {
        declared
            .iter()
            .filter_map(|(&genre, &d)| {
                let computed = self.totals.get(&genre).copied().unwrap_or(0);
                (computed != d).then_some(CountDiscrepancy { genre, declared: d, computed })
            })
            .collect()
    }
}

/// Side-by-side alignment display: one block per system with its csid,
/// WER and C/S/I/D pattern.
pub fn alignment_table_text(reference: &[String], systems: &[(String, AlignmentResult)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "REF: {}", reference.join(" "));
    for (name, a) in systems {
        let hyp: Vec<&str> = a.pairs.iter().filter_map(|p| p.hypothesis.as_deref()).collect();
        let w = wer(a).map_or("n/a".to_string(), |w| format!("{w:.1}"));
        let _ = writeln!(out, "{name}: {}", hyp.join(" "));
        let _ = writeln!(out, "  #csid: {}  WER%: {w}", a.counts);
        let _ = writeln!(out, "  pattern: {}", a.pattern());
    }
    out
}

/// Left-aligned columns separated by two spaces.
pub(crate) fn render_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
