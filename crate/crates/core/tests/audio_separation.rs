use std::f64::consts::PI;

use mrlt_core::audio::{decode_wav, encode_wav, power_spectrum, resample_speed, AudioBuffer, FrameConfig};
use mrlt_core::separation::{measure_snr, oracle_mask_separate, SeparationDistortion};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn frame_count_follows_snip_edges(n in 0usize..20_000) {
        let cfg = FrameConfig::default();
        let expected = if n < 400 { 0 } else { 1 + (n - 400) / 160 };
        prop_assert_eq!(cfg.num_frames(n, 16_000), expected);
        if n > 0 {
            let buf = AudioBuffer::new(vec![0.01; n], 16_000).unwrap();
            prop_assert_eq!(power_spectrum(&buf, &cfg, 512).unwrap().num_frames(), expected);
        }
    }

    #[test]
    fn pcm16_round_trip_is_within_one_step(samples in prop::collection::vec(-1.2f64..1.2, 1..500)) {
        let buf = AudioBuffer::new(samples.clone(), 16_000).unwrap();
        let back = decode_wav(&encode_wav(&buf).unwrap()).unwrap();
        prop_assert_eq!(back.len(), samples.len());
        for (a, b) in back.samples().iter().zip(&samples) {
            prop_assert!((a - b.clamp(-1.0, 1.0)).abs() <= 1.0 / 32768.0 + 1e-12);
        }
        prop_assert_eq!(decode_wav(&encode_wav(&back).unwrap()).unwrap(), back);
    }

    #[test]
    fn speed_perturbation_scales_duration(factor in 0.5f64..2.0, n in 1000usize..4000) {
        let buf = AudioBuffer::new((0..n).map(|i| (i as f64 * 0.05).sin() * 0.5).collect(), 16_000).unwrap();
        let out = resample_speed(&buf, factor).unwrap();
        prop_assert_eq!(out.sample_rate(), 16_000);
        prop_assert!((out.len() as f64 - n as f64 / factor).abs() <= 1.0);
    }
}

struct Stems {
    vocal: AudioBuffer,
    music: AudioBuffer,
    mixture: AudioBuffer,
}

fn stems(seed: u64) -> Stems {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 16_000;
    let f0 = rng.random_range(150.0..400.0);
    let vocal: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / 16_000.0;
            let env = (PI * t * 3.0).sin().abs();
            0.3 * env * ((2.0 * PI * f0 * t).sin() + 0.5 * (4.0 * PI * f0 * t).sin())
        })
        .collect();
    let music: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / 16_000.0;
            0.2 * (2.0 * PI * 82.0 * t).sin() + 0.05 * rng.random_range(-1.0..1.0)
        })
        .collect();
    let mixture: Vec<f64> = vocal.iter().zip(&music).map(|(v, m)| v + m).collect();
    Stems {
        vocal: AudioBuffer::new(vocal, 16_000).unwrap(),
        music: AudioBuffer::new(music, 16_000).unwrap(),
        mixture: AudioBuffer::new(mixture, 16_000).unwrap(),
    }
}

#[test]
fn stronger_distortion_lowers_vocal_snr() {
    for seed in 0..3 {
        let s = stems(seed);
        let mut last = f64::INFINITY;
        for erosion in [0.0, 0.2, 0.4, 0.6, 0.8] {
            let d = SeparationDistortion { mask_erosion: erosion, seed, ..Default::default() };
            let out = oracle_mask_separate(&s.mixture, &s.vocal, &s.music, &d).unwrap();
            assert_eq!(out.len(), s.mixture.len());
            let snr = measure_snr(&out, &s.vocal).unwrap();
            assert!(snr < last, "seed {seed} erosion {erosion}: {snr} >= {last}");
            last = snr;
        }
        let clean = oracle_mask_separate(&s.mixture, &s.vocal, &s.music, &SeparationDistortion::none()).unwrap();
        let before = measure_snr(&s.mixture, &s.vocal).unwrap();
        assert!(measure_snr(&clean, &s.vocal).unwrap() > before + 5.0);
        let leaky = SeparationDistortion { residual_music: 0.5, ..Default::default() };
        let out = oracle_mask_separate(&s.mixture, &s.vocal, &s.music, &leaky).unwrap();
        assert!(measure_snr(&out, &s.vocal).unwrap() < measure_snr(&clean, &s.vocal).unwrap());
    }
}

#[test]
fn separation_is_deterministic() {
    let s = stems(7);
    let d = SeparationDistortion { mask_erosion: 0.3, mask_blur: 1, residual_music: 0.1, seed: 11 };
    let a = oracle_mask_separate(&s.mixture, &s.vocal, &s.music, &d).unwrap();
    let b = oracle_mask_separate(&s.mixture, &s.vocal, &s.music, &d).unwrap();
    assert_eq!(a, b);
    let other = SeparationDistortion { seed: 12, ..d };
    assert_ne!(a, oracle_mask_separate(&s.mixture, &s.vocal, &s.music, &other).unwrap());
}
