//! Report directory layout:
//!
//! ```text
//! <out>/config.toml                    echo of the full configuration
//! <out>/report.json                    every number below, machine-readable
//! <out>/summary.txt, summary.csv       mean WER over seeds per system and genre
//! <out>/seed-<n>/lm.json               interpolation weight, tuning curve, perplexities
//! <out>/seed-<n>/lms/<lm>.arpa
//! <out>/seed-<n>/models/<stream>.am.json
//! <out>/seed-<n>/<stream>-<lm>/        hyp.txt, hyp.ctm, utterances.csv,
//!                                      genres.{txt,csv}, errors.{txt,csv},
//!                                      confidence.{csv,svg}, system.json
//! ```

use std::fmt::Write as _;
use std::path::Path;

use mrlt_core::eval::{bins_to_csv, bins_to_svg, format_transcripts, genre_table_csv, genre_table_text};
use mrlt_core::lm::serialize_arpa;

use crate::error::{write_text, Result};
use crate::experiment::{ExperimentReport, SeedRun, SystemReport};

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn utterance_csv(sys: &SystemReport) -> String {
    let mut out = String::from("utt_id,song_id,genre,correct,sub,ins,del,failed,hypothesis\n");
    for u in &sys.utterances {
        let c = u.counts;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            u.id,
            u.song,
            u.genre,
            c.correct,
            c.substitutions,
            c.insertions,
            c.deletions,
            u.failed,
            u.hypothesis.join(" ")
        );
    }
    out
}

pub fn write_system(dir: &Path, sys: &SystemReport) -> Result<()> {
    let hyps: Vec<(String, Vec<String>)> = sys.utterances.iter().map(|u| (u.id.clone(), u.hypothesis.clone())).collect();
    write_text(&dir.join("hyp.txt"), &format_transcripts(&hyps))?;
    write_text(&dir.join("hyp.ctm"), &sys.ctm)?;
    write_text(&dir.join("utterances.csv"), &utterance_csv(sys))?;
    write_text(&dir.join("genres.txt"), &genre_table_text(&sys.genres))?;
    write_text(&dir.join("genres.csv"), &genre_table_csv(&sys.genres))?;
    write_text(&dir.join("errors.txt"), &sys.errors.to_text())?;
    write_text(&dir.join("errors.csv"), &sys.errors.to_csv())?;
    write_text(&dir.join("confidence.csv"), &bins_to_csv(&sys.confidence_bins))?;
    write_text(&dir.join("confidence.svg"), &bins_to_svg(&sys.confidence_bins))?;
    write_text(&dir.join("system.json"), &json(sys)?)
}

/// Writes one seed's artifacts under `<out>/seed-<n>/`.
pub fn write_seed(out: &Path, run: &SeedRun) -> Result<()> {
    let dir = out.join(format!("seed-{}", run.report.seed));
    write_text(&dir.join("lm.json"), &json(&run.report.lm)?)?;
    for (kind, lm) in &run.lms {
        write_text(&dir.join("lms").join(format!("{}.arpa", kind.as_str())), &serialize_arpa(lm))?;
    }
    for (stream, model) in &run.models {
        write_text(&dir.join("models").join(format!("{}.am.json", stream.as_str())), &serde_json::to_string(model)?)?;
    }
    for sys in &run.report.systems {
        write_system(&dir.join(sys.name()), sys)?;
    }
    Ok(())
}

fn fmt_wer(w: Option<f64>) -> String {
    w.map_or("n/a".to_string(), |w| format!("{w:.2}"))
}

pub fn summary_text(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let seeds: Vec<String> = report.config.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "mean test WER (%) over seeds {}", seeds.join(", "));
    let _ = writeln!(out, "{:<8} {:<13} {:>8} {:>8} {:>8} {:>8}", "stream", "lm", "all", "metal", "pop", "hiphop");
    for chunk in report.summary.chunks(4) {
        let (first, rest) = chunk.split_first().expect("four rows per system");
        let _ = write!(out, "{:<8} {:<13} {:>8}", first.stream.as_str(), first.lm.as_str(), fmt_wer(first.mean_wer));
        for r in rest {
            let _ = write!(out, " {:>8}", fmt_wer(r.mean_wer));
        }
        out.push('\n');
    }
    for seed in &report.seeds {
        let _ = write!(out, "\nseed {}:", seed.seed);
        if let Some(l) = seed.lm.lambda {
            let _ = write!(out, " lambda {l:.2};");
        }
        for p in &seed.lm.perplexities {
            let _ = write!(out, " {}/{} ppl {:.3};", p.lm.as_str(), p.split.as_str(), p.ppl);
        }
        out.push('\n');
        for s in &seed.separation {
            let g = s.genre.map_or("all".to_string(), |g| g.to_string());
            let _ = writeln!(out, "  separation {g}: mixture SNR {:.2} dB, separated SNR {:.2} dB", s.mixture_snr_db, s.separated_snr_db);
        }
        for sys in &seed.systems {
            let c = &sys.confidence;
            let mean = |m: Option<f64>| m.map_or("n/a".to_string(), |m| format!("{m:.3}"));
            let _ = writeln!(
                out,
                "  {:<22} WER {:>7}  confidence correct {} ({}) incorrect {} ({})",
                sys.name(),
                fmt_wer(sys.wer),
                mean(c.mean_correct),
                c.correct,
                mean(c.mean_incorrect),
                c.incorrect
            );
        }
    }
    out
}

pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("stream,lm,genre,mean_wer");
    for s in &report.config.seeds {
        let _ = write!(out, ",seed_{s}");
    }
    out.push('\n');
    let cell = |w: Option<f64>| w.map_or(String::new(), |w| format!("{w:.4}"));
    for r in &report.summary {
        let g = r.genre.map_or("all".to_string(), |g| g.to_string());
        let _ = write!(out, "{},{},{g},{}", r.stream.as_str(), r.lm.as_str(), cell(r.mean_wer));
        for w in &r.per_seed {
            let _ = write!(out, ",{}", cell(*w));
        }
        out.push('\n');
    }
    out
}

pub fn write_experiment(out: &Path, report: &ExperimentReport) -> Result<()> {
    write_text(&out.join("config.toml"), &report.config.to_toml()?)?;
    write_text(&out.join("report.json"), &json(report)?)?;
    write_text(&out.join("summary.txt"), &summary_text(report))?;
    write_text(&out.join("summary.csv"), &summary_csv(report))
}
