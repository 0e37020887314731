//! Straight-line MFCC front end: direct DFT, explicit triangular weights
//! and explicit DCT sums, with no shared code beyond the config struct.

use std::f64::consts::PI;

use mrlt_core::audio::AudioBuffer;
use mrlt_core::features::MfccConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

/// Frames × cepstra, computed one element at a time.
pub fn brute_force_mfcc(samples: &[f64], cfg: &MfccConfig) -> Vec<Vec<f64>> {
    let sr = cfg.sample_rate as f64;
    let len = (sr * cfg.frame.frame_length_ms / 1000.0).round() as usize;
    let shift = (sr * cfg.frame.frame_shift_ms / 1000.0).round() as usize;
    let mut nfft = 1;
    while nfft < len {
        nfft *= 2;
    }
    let frames = if samples.len() < len { 0 } else { 1 + (samples.len() - len) / shift };
    let m = cfg.num_mel_filters;
    let (mlo, mhi) = (mel(cfg.low_freq_hz), mel(cfg.high_freq_hz));
    let edge = |i: usize| mlo + (mhi - mlo) * i as f64 / (m + 1) as f64;
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let raw = &samples[t * shift..t * shift + len];
        let mean: f64 = raw.iter().sum::<f64>() / len as f64;
        let x: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let pre: Vec<f64> = (0..len)
            .map(|i| if i == 0 { x[0] - cfg.frame.preemphasis * x[0] } else { x[i] - cfg.frame.preemphasis * x[i - 1] })
            .collect();
        let windowed: Vec<f64> = (0..len)
            .map(|i| {
                let hann = 0.5 - 0.5 * (2.0 * PI * i as f64 / (len - 1) as f64).cos();
                pre[i] * hann.powf(0.85)
            })
            .collect();
        let power: Vec<f64> = (0..=nfft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, v) in windowed.iter().enumerate() {
                    let angle = -2.0 * PI * (k * n) as f64 / nfft as f64;
                    re += v * angle.cos();
                    im += v * angle.sin();
                }
                re * re + im * im
            })
            .collect();
        let log_mel: Vec<f64> = (0..m)
            .map(|j| {
                let (l, c, r) = (edge(j), edge(j + 1), edge(j + 2));
                let mut e = 0.0;
                for (k, p) in power.iter().enumerate() {
                    let f = mel(k as f64 * sr / nfft as f64);
                    let w = if f > l && f <= c {
                        (f - l) / (c - l)
                    } else if f > c && f < r {
                        (r - f) / (r - c)
                    } else {
                        0.0
                    };
                    e += w * p;
                }
                e.max(cfg.log_floor).ln()
            })
            .collect();
        let mut ceps: Vec<f64> = (0..cfg.num_cepstra)
            .map(|q| {
                let norm = if q == 0 { (1.0 / m as f64).sqrt() } else { (2.0 / m as f64).sqrt() };
                norm * (0..m).map(|j| log_mel[j] * (PI * q as f64 * (j as f64 + 0.5) / m as f64).cos()).sum::<f64>()
            })
            .collect();
        if cfg.use_energy_as_c0 {
            ceps[0] = energy.max(cfg.log_floor).ln();
        }
        out.push(ceps);
    }
    out
}

/// Half a second of random tones, noise and a DC offset at 16 kHz.
pub fn random_buffer(seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(7000..9000);
    let tones: Vec<(f64, f64)> = (0..3).map(|_| (rng.random_range(50.0..7500.0), rng.random_range(0.0..0.3))).collect();
    let noise = rng.random_range(0.0..0.1);
    let dc = rng.random_range(-0.1..0.1);
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / 16_000.0;
            dc + noise * rng.random_range(-1.0..1.0) + tones.iter().map(|(f, a)| a * (2.0 * PI * f * t).sin()).sum::<f64>()
        })
        .collect();
    AudioBuffer::new(samples, 16_000).unwrap()
}

/// Largest `|got − want| / max(|want|, 1e-3)` over every element.
pub fn max_relative_error(got: &ndarray::Array2<f64>, want: &[Vec<f64>]) -> f64 {
    assert_eq!(got.nrows(), want.len());
    let mut worst: f64 = 0.0;
    for (t, row) in want.iter().enumerate() {
        assert_eq!(got.ncols(), row.len());
        for (d, w) in row.iter().enumerate() {
            worst = worst.max((got[[t, d]] - w).abs() / w.abs().max(1e-3));
        }
    }
    worst
}
