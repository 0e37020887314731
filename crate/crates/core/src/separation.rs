//! Oracle vocal extraction: an ideal ratio mask computed from known stems,
//! degraded on purpose so that the separated stream carries realistic
//! artifacts.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{istft, mean_square, stft, AudioBuffer, Stft};

pub const SEPARATION_FFT_SIZE: usize = 1024;
pub const SEPARATION_HOP: usize = 256;
const MASK_EPSILON: f64 = 1e-12;
/// Reported when the signal matches the reference exactly.
pub const SNR_CAP_DB: f64 = 120.0;

#[derive(Debug, Error, PartialEq)]
pub enum SeparationError {
    #[error("length mismatch: mixture {mixture}, vocal {vocal}, music {music}")]
    LengthMismatch { mixture: usize, vocal: usize, music: usize },
    #[error("sample rate mismatch: mixture {mixture}, vocal {vocal}, music {music}")]
    RateMismatch { mixture: u32, vocal: u32, music: u32 },
    #[error("mixture is not vocal + music (residual RMS {0:.3e})")]
    InconsistentMixture(f64),
    #[error("invalid distortion: {0}")]
    InvalidDistortion(String),
    #[error("signal length {signal} differs from reference length {reference}")]
    SnrLengthMismatch { signal: usize, reference: usize },
    #[error("reference signal is silent")]
    SilentReference,
}

/// How far the oracle mask is degraded before it is applied.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeparationDistortion {
    /// Fraction of time-frequency cells whose mask is zeroed.
    pub mask_erosion: f64,
    /// Box-blur radius, in cells, applied over time and frequency.
    pub mask_blur: usize,
    /// Fraction of the masked-out music power that leaks back in.
    pub residual_music: f64,
    pub seed: u64,
}

impl SeparationDistortion {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), SeparationError> {
        for (name, v) in [("mask_erosion", self.mask_erosion), ("residual_music", self.residual_music)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SeparationError::InvalidDistortion(format!("{name} = {v} not in [0,1]")));
            }
        }
        Ok(())
    }
}

fn box_blur(mask: &Array2<f64>, radius: usize) -> Array2<f64> {
    if radius == 0 {
        return mask.clone();
    }
    let (rows, cols) = mask.dim();
    let r = radius as isize;
    Array2::from_shape_fn((rows, cols), |(i, j)| {
        let (mut sum, mut n) = (0.0, 0usize);
        for di in -r..=r {
            for dj in -r..=r {
                let (ii, jj) = (i as isize + di, j as isize + dj);
                if ii >= 0 && jj >= 0 && (ii as usize) < rows && (jj as usize) < cols {
                    sum += mask[[ii as usize, jj as usize]];
                    n += 1;
                }
            }
        }
        sum / n as f64
    })
}

/// Ideal ratio mask `|V|²/(|V|²+|S|²+ε)`, then blur, then erosion.
fn degraded_mask(vocal: &Stft, music: &Stft, distortion: &SeparationDistortion) -> Array2<f64> {
    let mut mask = Array2::from_shape_fn(vocal.bins.dim(), |idx| {
        let v = vocal.bins[idx].norm_sqr();
        let s = music.bins[idx].norm_sqr();
        v / (v + s + MASK_EPSILON)
    });
    mask = box_blur(&mask, distortion.mask_blur);
    if distortion.mask_erosion > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(distortion.seed);
        for m in mask.iter_mut() {
            if rng.random::<f64>() < distortion.mask_erosion {
                *m = 0.0;
            }
        }
    }
    mask
}

/// Extracts the vocal stream from `mixture` using the known stems.
///
/// The output is `M ⊙ X + sqrt(residual) · (1 − M) ⊙ S` in the STFT domain,
/// resynthesized by overlap-add to the input length.
pub fn oracle_mask_separate(
    mixture: &AudioBuffer,
    vocal_stem: &AudioBuffer,
    music_stem: &AudioBuffer,
    distortion: &SeparationDistortion,
) -> Result<AudioBuffer, SeparationError> {
    distortion.validate()?;
    let (n, nv, nm) = (mixture.len(), vocal_stem.len(), music_stem.len());
    if n != nv || n != nm {
        return Err(SeparationError::LengthMismatch { mixture: n, vocal: nv, music: nm });
    }
    let (r, rv, rm) = (mixture.sample_rate(), vocal_stem.sample_rate(), music_stem.sample_rate());
    if r != rv || r != rm {
        return Err(SeparationError::RateMismatch { mixture: r, vocal: rv, music: rm });
    }
    let residual: Vec<f64> = mixture
        .samples()
        .iter()
        .zip(vocal_stem.samples())
        .zip(music_stem.samples())
        .map(|((x, v), s)| x - v - s)
        .collect();
    let residual_rms = mean_square(&residual).sqrt();
    if residual_rms > 1e-6 {
        return Err(SeparationError::InconsistentMixture(residual_rms));
    }
    if n == 0 {
        return Ok(mixture.clone());
    }

    let mix = stft(mixture.samples(), SEPARATION_FFT_SIZE, SEPARATION_HOP);
    let voc = stft(vocal_stem.samples(), SEPARATION_FFT_SIZE, SEPARATION_HOP);
    let mus = stft(music_stem.samples(), SEPARATION_FFT_SIZE, SEPARATION_HOP);
    let mask = degraded_mask(&voc, &mus, distortion);
    let leak = distortion.residual_music.sqrt();
    let bins = Array2::from_shape_fn(mix.bins.dim(), |idx| {
        let m = mask[idx];
        mix.bins[idx] * m + mus.bins[idx] * (leak * (1.0 - m))
    });
    let out = istft(&Stft { bins, ..mix });
    Ok(AudioBuffer::new(out, r).expect("finite output"))
}

/// `10·log10(P_ref / P_(signal − reference))`, capped at [`SNR_CAP_DB`].
pub fn measure_snr(signal: &AudioBuffer, reference: &AudioBuffer) -> Result<f64, SeparationError> {
    if signal.len() != reference.len() {
        return Err(SeparationError::SnrLengthMismatch { signal: signal.len(), reference: reference.len() });
    }
    let p_ref = reference.power();
    if p_ref <= 0.0 {
        return Err(SeparationError::SilentReference);
    }
    let noise: Vec<f64> = signal.samples().iter().zip(reference.samples()).map(|(s, r)| s - r).collect();
    let p_noise = mean_square(&noise);
    if p_noise <= 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (p_ref / p_noise).log10()).min(SNR_CAP_DB))
}
