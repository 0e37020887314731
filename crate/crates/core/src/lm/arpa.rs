use std::fmt::Write;

use super::{LmError, NGramModel, NgramEntry};

fn syntax(line: usize, message: impl Into<String>) -> LmError {
    LmError::ArpaSyntax { line, message: message.into() }
}

fn parse_log(field: &str, line: usize, what: &str) -> Result<f64, LmError> {
    let v: f64 = field.parse().map_err(|_| syntax(line, format!("{what} {field:?} is not a number")))?;
    if v.is_nan() {
        return Err(syntax(line, format!("{what} is NaN")));
    }
    Ok(v)
}

/// Parses an ARPA backoff model.
pub fn parse_arpa(text: &str) -> Result<NGramModel, LmError> {
    #[derive(PartialEq)]
    enum State {
        Preamble,
        Header,
        Section(usize),
        Done,
    }
    let mut state = State::Preamble;
    let mut declared: Vec<(usize, usize)> = Vec::new();
    let mut sections: Vec<Vec<(Vec<String>, NgramEntry)>> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if state == State::Done {
            break;
        }
        if line == "\\data\\" {
            if state != State::Preamble {
                return Err(syntax(lineno, "repeated \\data\\"));
            }
            state = State::Header;
            continue;
        }
        if state == State::Preamble || line.is_empty() {
            continue;
        }
        if line == "\\end\\" {
            state = State::Done;
            continue;
        }
        if let Some(rest) = line.strip_prefix('\\') {
            let n: usize = rest
                .strip_suffix("-grams:")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| syntax(lineno, format!("unrecognized section marker {line:?}")))?;
            if n == 0 || n > declared.len() {
                return Err(syntax(lineno, format!("section for order {n} not declared in header")));
            }
            if n != sections.len() + 1 {
                return Err(syntax(lineno, format!("section for order {n} out of sequence")));
            }
            sections.push(Vec::new());
            state = State::Section(n);
            continue;
        }
        match state {
            State::Header => {
                let spec = line
                    .strip_prefix("ngram ")
                    .ok_or_else(|| syntax(lineno, format!("expected \"ngram n=count\", found {line:?}")))?;
                let (n, count) = spec
                    .split_once('=')
                    .ok_or_else(|| syntax(lineno, "missing '=' in ngram count"))?;
                let n: usize = n.trim().parse().map_err(|_| syntax(lineno, format!("bad order {n:?}")))?;
                let count: usize = count.trim().parse().map_err(|_| syntax(lineno, format!("bad count {count:?}")))?;
                if n != declared.len() + 1 {
                    return Err(syntax(lineno, format!("order {n} declared out of sequence")));
                }
                declared.push((n, count));
            }
            State::Section(n) => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != n + 1 && fields.len() != n + 2 {
                    return Err(syntax(lineno, format!("a {n}-gram line needs {} or {} fields, found {}", n + 1, n + 2, fields.len())));
                }
                let log10_prob = parse_log(fields[0], lineno, "log probability")?;
                let log10_backoff = if fields.len() == n + 2 { Some(parse_log(fields[n + 1], lineno, "backoff")?) } else { None };
                let key: Vec<String> = fields[1..=n].iter().map(|s| s.to_string()).collect();
                sections[n - 1].push((key, NgramEntry { log10_prob, log10_backoff }));
            }
            State::Preamble | State::Done => unreachable!(),
        }
    }

    if state != State::Done {
        return Err(LmError::ArpaMissingEnd);
    }
    if declared.is_empty() {
        return Err(syntax(0, "no ngram counts declared"));
    }
    for &(n, header) in &declared {
        let found = sections.get(n - 1).map_or(0, |s| s.len());
        if found != header {
            return Err(LmError::ArpaCountMismatch { order: n, header, found });
        }
    }
    for (n, section) in sections.iter().enumerate() {
        let mut keys: Vec<&Vec<String>> = section.iter().map(|(k, _)| k).collect();
        keys.sort();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(syntax(0, format!("duplicate {}-gram {:?}", n + 1, w[0].join(" "))));
        }
    }
    while sections.len() < declared.len() {
        sections.push(Vec::new());
    }
    NGramModel::from_token_entries(declared.len(), sections)
}

/// Canonical ARPA text: ascending orders, n-grams sorted by token tuple,
/// six decimals for every log value.
pub fn serialize_arpa(model: &NGramModel) -> String {
    let mut out = String::new();
    out.push_str("\\data\\\n");
    for n in 1..=model.order() {
        let _ = writeln!(out, "ngram {n}={}", model.num_entries(n));
    }
    for n in 1..=model.order() {
        let _ = write!(out, "\n\\{n}-grams:\n");
        for (tokens, e) in model.sorted_entries(n) {
            let _ = write!(out, "{:.6}\t{}", e.log10_prob, tokens.join(" "));
            match e.log10_backoff {
                Some(b) if !(n == model.order() && b == 0.0) => {
                    let _ = write!(out, "\t{b:.6}");
                }
                _ => {}
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}
