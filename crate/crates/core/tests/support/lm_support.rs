//! Random corpora and model checks shared by the LM tests and the
//! acceptance target.

use mrlt_core::lm::{
    count_ngrams, interpolate, prune_entropy, train_kneser_ney, Discounts, InterpolationConfig, NGramModel, BOS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lines over a small vocabulary with a skewed word distribution.
pub fn random_corpus(rng: &mut ChaCha8Rng, vocab: usize, lines: std::ops::Range<usize>) -> Vec<Vec<String>> {
    let weights: Vec<f64> = (0..vocab).map(|i| 1.0 / (i + 1) as f64).collect();
    let total: f64 = weights.iter().sum();
    let pick = |rng: &mut ChaCha8Rng| {
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        vocab - 1
    };
    (0..rng.random_range(lines))
        .map(|_| (0..rng.random_range(1..=8)).map(|_| format!("W{}", pick(rng))).collect())
        .collect()
}

/// The models one random corpus seed exercises: a trained model, an
/// interpolation of it with a second trained model, and pruned versions.
pub fn random_models(seed: u64) -> Vec<(String, NGramModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = rng.random_range(2..=3);
    let (va, vb) = (rng.random_range(3..=8), rng.random_range(3..=10));
    let a_text = random_corpus(&mut rng, va, 5..30);
    let b_text = random_corpus(&mut rng, vb, 5..30);
    let discounts = if rng.random_bool(0.5) {
        Discounts::Estimate
    } else {
        Discounts::Fixed((0..order).map(|_| rng.random_range(0.1..0.9)).collect())
    };
    let a = train_kneser_ney(&count_ngrams(&a_text, order).unwrap(), &discounts).unwrap().model;
    let b = train_kneser_ney(&count_ngrams(&b_text, order).unwrap(), &Discounts::Estimate).unwrap().model;
    let lambda = rng.random_range(0.0..=1.0);
    let mixed = interpolate(&a, &b, &InterpolationConfig { lambda, ..Default::default() }).unwrap();
    let theta = 10f64.powf(rng.random_range(-4.0..-1.0));
    let pruned = prune_entropy(&a, theta);
    let pruned_mixed = prune_entropy(&mixed, theta);
    vec![
        (format!("seed {seed} trained"), a),
        (format!("seed {seed} interpolated"), mixed),
        (format!("seed {seed} pruned"), pruned),
        (format!("seed {seed} pruned interpolated"), pruned_mixed),
    ]
}

/// Largest |Σ_w p(w|h) − 1| over every history of length < order built
/// from the vocabulary, explicit or not.
pub fn max_normalization_error(model: &NGramModel) -> f64 {
    let vocab: Vec<&str> = model.vocab().iter().map(String::as_str).collect();
    let targets: Vec<&str> = vocab.iter().copied().filter(|t| *t != BOS).collect();
    let mut histories: Vec<Vec<&str>> = vec![vec![]];
    let mut frontier: Vec<Vec<&str>> = vec![vec![]];
    for _ in 1..model.order() {
        frontier = frontier
            .iter()
            .flat_map(|h| vocab.iter().map(move |t| [h.as_slice(), &[*t]].concat()))
            .collect();
        histories.extend(frontier.iter().cloned());
    }
    histories
        .iter()
        .map(|h| {
            let mass: f64 = targets.iter().map(|w| model.prob(h, w)).sum();
            (mass - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Hand-written trigram model with backoffs at every order, one zero
/// probability and tokens that sort unusually.
pub const ARPA_FIXTURE: &str = "\\data\\
ngram 1=6
ngram 2=6
ngram 3=3

\\1-grams:
-1.204120	</s>
-99.000000	<s>	-0.301030
-1.000000	<unk>
-0.698970	AIN'T	-0.176091
-0.602060	LOVE	-0.221849
-0.903090	ME	-0.124939

\\2-grams:
-0.477121	<s> AIN'T
-0.301030	<s> LOVE	-0.096910
-0.397940	AIN'T LOVE
-0.176091	LOVE ME	-0.045757
-0.124939	ME </s>
-0.522879	ME LOVE

\\3-grams:
-0.096910	<s> LOVE ME
-0.045757	LOVE ME </s>
-0.698970	ME LOVE ME

\\end\\
";
