use mrlt_core::am::{parse_lexicon, train_gmm_hmm, AmError, TrainConfig};
use mrlt_core::features::{FeatureMatrix, StreamKind};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
    let dims = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    FeatureMatrix::new(Array2::from_shape_vec((flat.len() / dims, dims), flat).unwrap(), 10.0, StreamKind::Poly).unwrap()
}

/// Frames drawn from consecutive Gaussian segments.
fn segments(rng: &mut ChaCha8Rng, means: &[Vec<f64>], sd: f64, len: std::ops::Range<usize>) -> Vec<Vec<f64>> {
    let noise = Normal::new(0.0, sd).unwrap();
    let mut rows = Vec::new();
    for m in means {
        for _ in 0..rng.random_range(len.clone()) {
            rows.push(m.iter().map(|x| x + noise.sample(rng)).collect());
        }
    }
    rows
}

#[test]
fn single_gaussian_means_are_segment_means() {
    let lex = parse_lexicon("HI h i\n").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows = segments(&mut rng, &[vec![0.0, 1.0], vec![3.0, -1.0], vec![5.0, 5.0], vec![-2.0, 0.0]], 0.5, 8..14);
    let data = vec![(matrix(rows), vec!["HI".to_string()])];
    let cfg = TrainConfig { states_per_phone: 2, max_gaussians: 1, em_iterations: 7, realign_every: 3, ..Default::default() };
    let trained = train_gmm_hmm(&data, &lex, &cfg).unwrap();
    let align = &trained.alignments[0];
    let feats = &data[0].0;
    for s in 0..trained.model.hmm.num_states() {
        let frames: Vec<usize> = (0..align.len()).filter(|&t| align[t] == s).collect();
        if frames.is_empty() {
            continue;
        }
        for d in 0..2 {
            let mean = frames.iter().map(|&t| feats.values[[t, d]]).sum::<f64>() / frames.len() as f64;
            let got = trained.model.scorer.gmms[s].means[0][d];
            assert!((got - mean).abs() < 1e-9, "state {s} dim {d}: {got} vs {mean}");
        }
    }
}

#[test]
fn recovers_a_two_state_generator() {
    let truth = [vec![0.0, 0.0, 0.0], vec![2.0, -1.0, 1.5]];
    let lex = parse_lexicon("W a\n").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data: Vec<_> = (0..30)
        .map(|_| (matrix(segments(&mut rng, &truth, 0.3, 10..30)), vec!["W".to_string()]))
        .collect();
    let cfg = TrainConfig { states_per_phone: 2, max_gaussians: 1, em_iterations: 12, realign_every: 3, ..Default::default() };
    let trained = train_gmm_hmm(&data, &lex, &cfg).unwrap();
    let hmm = &trained.model.hmm;
    let a = hmm.phone_index("a").unwrap();
    for (s, mean) in truth.iter().enumerate() {
        let got = &trained.model.scorer.gmms[hmm.state_id(a, s)].means[0];
        for d in 0..3 {
            assert!((got[d] - mean[d]).abs() < 0.1, "state {s}: {got:?} vs {mean:?}");
        }
    }
}

#[test]
fn log_likelihood_never_drops_within_a_phase() {
    let lex = parse_lexicon("AB a b\nBA b a\nC c\n").unwrap();
    let centers = |p: char| match p {
        'a' => vec![1.0, 0.0, -1.0, 0.5],
        'b' => vec![-1.0, 2.0, 0.0, 0.0],
        _ => vec![0.0, -2.0, 1.0, 1.0],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words = ["AB", "BA", "C"];
    let data: Vec<_> = (0..25)
        .map(|_| {
            let ws: Vec<&str> = (0..rng.random_range(1..4)).map(|_| words[rng.random_range(0..3)]).collect();
            let means: Vec<Vec<f64>> = ws
                .iter()
                .flat_map(|w| w.to_lowercase().chars().collect::<Vec<_>>())
                .flat_map(|c| {
                    let m = centers(c);
                    [m.clone(), m.iter().map(|x| x + 0.5).collect(), m]
                })
                .collect();
            (matrix(segments(&mut rng, &means, 0.6, 3..8)), ws.iter().map(|s| s.to_string()).collect::<Vec<_>>())
        })
        .collect();
    let cfg = TrainConfig { max_gaussians: 4, em_iterations: 16, realign_every: 4, ..Default::default() };
    let trained = train_gmm_hmm(&data, &lex, &cfg).unwrap();
    assert_eq!(trained.log.len(), 16);
    for w in trained.log.windows(2) {
        if w[0].phase == w[1].phase {
            assert!(w[1].per_frame() >= w[0].per_frame() - 1e-6, "{:?} -> {:?}", w[0], w[1]);
        }
    }
    assert!(trained.log.last().unwrap().gaussians > trained.log[0].gaussians);
    for g in &trained.model.scorer.gmms {
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for v in &g.vars {
            assert!(v.iter().zip(&trained.model.scorer.var_floor).all(|(x, f)| x >= f));
        }
    }
    for s in 0..trained.model.hmm.num_states() {
        let p = trained.model.hmm.self_loop[s];
        assert!((0.1..=0.9).contains(&p));
    }
}

#[test]
fn rejects_oov_words_and_empty_data() {
    let lex = parse_lexicon("A a\n").unwrap();
    let f = matrix(vec![vec![0.0]; 10]);
    let err = train_gmm_hmm(&[(f, vec!["A".into(), "NOPE".into()])], &lex, &TrainConfig::default()).unwrap_err();
    assert_eq!(err, AmError::OovWord { utterance: 0, word: "NOPE".into() });
    assert_eq!(train_gmm_hmm(&[], &lex, &TrainConfig::default()).unwrap_err(), AmError::EmptyData);
}
