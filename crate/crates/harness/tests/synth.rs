use std::collections::BTreeSet;
use std::path::Path;

use mrlt_core::audio::read_wav;
use mrlt_core::eval::Genre;
use mrlt_core::separation::measure_snr;
use mrlt_harness::dataset::Dataset;
use mrlt_harness::synth::{synth_corpus, GenreProfile, MusicKind, Split, SynthConfig};

fn small() -> SynthConfig {
    SynthConfig {
        seed: 11,
        lines_per_song: 3,
        train_songs_per_genre: 2,
        dev_songs_per_genre: 1,
        test_songs_per_genre: 1,
        lyrics_lm_lines: 20,
        general_lm_lines: 50,
        ..SynthConfig::default()
    }
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn same_seed_gives_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = synth_corpus(&small(), a.path()).unwrap();
    let sb = synth_corpus(&small(), b.path()).unwrap();
    assert_eq!(sa, sb);
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.len() > 20);
    assert_eq!(fa, fb);

    let c = tempfile::tempdir().unwrap();
    synth_corpus(&SynthConfig { seed: 12, ..small() }, c.path()).unwrap();
    assert_ne!(files(c.path()), fa);
}

#[test]
fn mixtures_are_exact_sums_at_the_target_snr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let summary = synth_corpus(&cfg, dir.path()).unwrap();
    let data = Dataset::load(dir.path()).unwrap();
    assert_eq!(data.utterances.len(), summary.utterances);
    assert_eq!(summary.utterances, 3 * 4 * cfg.lines_per_song);
    for u in &data.utterances {
        let mixture = data.mixture(&u.meta.id).unwrap();
        let (vocal, music) = data.stems(&u.meta.id).unwrap();
        for ((x, v), m) in mixture.samples().iter().zip(vocal.samples()).zip(music.samples()) {
            assert_eq!(*x, v + m, "{}", u.meta.id);
        }
        let target = cfg.genres.iter().find(|g| g.genre == u.meta.genre).unwrap().snr_db;
        let snr = measure_snr(&mixture, &vocal).unwrap();
        assert!((snr - target).abs() < 0.1, "{}: {snr} vs {target}", u.meta.id);
        assert!(mixture.samples().iter().all(|s| s.abs() <= cfg.peak + 1e-4));
    }
}

#[test]
fn splits_lexicon_and_metadata_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    synth_corpus(&cfg, dir.path()).unwrap();
    let data = Dataset::load(dir.path()).unwrap();

    let songs = |split: Split| -> BTreeSet<String> { data.split(split).map(|u| u.meta.song.clone()).collect() };
    let (train, dev, test) = (songs(Split::Train), songs(Split::Dev), songs(Split::Test));
    assert_eq!(train.len(), 3 * cfg.train_songs_per_genre);
    assert_eq!(dev.len(), 3);
    assert!(train.is_disjoint(&dev) && train.is_disjoint(&test) && dev.is_disjoint(&test));

    for u in &data.utterances {
        assert_eq!(data.genres[&u.meta.song], u.meta.genre);
        for w in &u.words {
            assert!(data.lexicon.pronunciations(w).is_some(), "{w} has no pronunciation");
        }
    }
    assert_eq!(data.lexicon.len(), cfg.vocabulary_size);
    assert_eq!(data.lyrics_lm_text.len(), train.len() * cfg.lines_per_song + cfg.lyrics_lm_lines);
    assert_eq!(data.general_lm_text.len(), cfg.general_lm_lines);
    assert!(data.general_lm_text.iter().flatten().any(|w| w.starts_with("GEN")));

    let lines = std::fs::read_to_string(dir.path().join("meta/lines.csv")).unwrap();
    assert_eq!(lines.lines().count(), data.utterances.len() + 1);
    let saved: SynthConfig = toml::from_str(&std::fs::read_to_string(dir.path().join("meta/synth.toml")).unwrap()).unwrap();
    assert_eq!(saved, cfg);
}

#[test]
fn silent_accompaniment_leaves_the_vocal_alone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        genres: vec![GenreProfile { genre: Genre::Pop, snr_db: 0.0, music: MusicKind::Silent }],
        ..small()
    };
    synth_corpus(&cfg, dir.path()).unwrap();
    let data = Dataset::load(dir.path()).unwrap();
    for u in &data.utterances {
        let music = read_wav(dir.path().join(format!("stems/{}.music.wav", u.meta.id))).unwrap();
        assert!(music.samples().iter().all(|s| *s == 0.0));
        assert_eq!(data.mixture(&u.meta.id).unwrap(), data.stems(&u.meta.id).unwrap().0);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        SynthConfig { vocabulary_size: 0, ..small() },
        SynthConfig { min_phone_ms: 200.0, max_phone_ms: 100.0, ..small() },
        SynthConfig { min_partials: 0, ..small() },
        SynthConfig { vocabulary_size: 500, phone_count: 3, max_word_phones: 2, ..small() },
        SynthConfig { peak: 1.5, ..small() },
        SynthConfig { genres: vec![], ..small() },
        SynthConfig { general_lyrics_overlap: 2.0, ..small() },
        SynthConfig {
            genres: vec![GenreProfile { genre: Genre::Metal, snr_db: f64::NAN, music: MusicKind::Drone }],
            ..small()
        },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
    small().validate().unwrap();
}
