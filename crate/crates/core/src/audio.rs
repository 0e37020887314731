//! Audio buffers, WAV I/O, speed perturbation and the framing/STFT
//! primitives shared by feature extraction and separation.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sample rate every pipeline stage runs at.
pub const TARGET_SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("audio file not found: {0}")]
    NotFound(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed WAV header ({field}): {detail}")]
    MalformedHeader { field: &'static str, detail: String },
    #[error("unsupported WAV encoding: {field} = {value}")]
    UnsupportedCodec { field: &'static str, value: u32 },
    #[error("cannot write an empty buffer")]
    EmptyBuffer,
    #[error("invalid audio buffer: {0}")]
    InvalidBuffer(String),
    #[error("speed factor {0} outside [0.5, 2.0]")]
    FactorOutOfRange(f64),
    #[error("invalid frame configuration: {0}")]
    InvalidFrameConfig(String),
    #[error("fft size {fft_size} is smaller than the frame length {frame_len}")]
    FftTooSmall { fft_size: usize, frame_len: usize },
}

/// Mono audio at a fixed sample rate. Samples are nominally in [-1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidBuffer("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidBuffer(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self { samples: vec![0.0; len], sample_rate: sample_rate.max(1) }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Mean square amplitude.
    pub fn power(&self) -> f64 {
        mean_square(&self.samples)
    }
}

pub(crate) fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

// ---------------------------------------------------------------------------
// WAV I/O
// ---------------------------------------------------------------------------

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads a RIFF/WAVE file (PCM16 or float32, mono or stereo) at its native
/// sample rate. Stereo is averaged down to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            AudioError::NotFound(path.to_path_buf())
        } else {
            AudioError::Io { path: path.to_path_buf(), source: e }
        }
    })?;
    decode_wav(&bytes)
}

/// Decodes an in-memory WAV image.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    if bytes.len() < 12 {
        return Err(AudioError::MalformedHeader {
            field: "RIFF header",
            detail: format!("file is only {} bytes", bytes.len()),
        });
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(AudioError::MalformedHeader {
            field: "RIFF tag",
            detail: format!("found {:?}", String::from_utf8_lossy(&bytes[0..4])),
        });
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(AudioError::MalformedHeader {
            field: "WAVE tag",
            detail: format!("found {:?}", String::from_utf8_lossy(&bytes[8..12])),
        });
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body = pos + 8;
        if body + size > bytes.len() {
            let field = if id == b"data" { "data chunk size" } else { "chunk size" };
            return Err(AudioError::MalformedHeader {
                field,
                detail: format!(
                    "chunk {:?} declares {} bytes but only {} remain",
                    String::from_utf8_lossy(id),
                    size,
                    bytes.len() - body
                ),
            });
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(AudioError::MalformedHeader {
                        field: "fmt chunk size",
                        detail: format!("{size} < 16"),
                    });
                }
                let mut tag = read_u16(bytes, body);
                let channels = read_u16(bytes, body + 2);
                let rate = read_u32(bytes, body + 4);
                let bits = read_u16(bytes, body + 14);
                if tag == FORMAT_EXTENSIBLE && size >= 26 {
                    // First two bytes of the subformat GUID carry the real tag.
                    tag = read_u16(bytes, body + 24);
                }
                fmt = Some((tag, channels, rate, bits));
            }
            b"data" => data = Some(&bytes[body..body + size]),
            _ => {}
        }
        // Chunks are word aligned.
        pos = body + size + (size & 1);
    }

    let (tag, channels, rate, bits) = fmt.ok_or(AudioError::MalformedHeader {
        field: "fmt chunk",
        detail: "missing".into(),
    })?;
    let data = data.ok_or(AudioError::MalformedHeader {
        field: "data chunk",
        detail: "missing".into(),
    })?;
    if channels == 0 || channels > 2 {
        return Err(AudioError::UnsupportedCodec { field: "channels", value: channels as u32 });
    }
    if rate == 0 {
        return Err(AudioError::MalformedHeader { field: "sample rate", detail: "zero".into() });
    }
    let interleaved: Vec<f64> = match (tag, bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (FORMAT_FLOAT, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        (FORMAT_PCM, b) | (FORMAT_FLOAT, b) => {
            return Err(AudioError::UnsupportedCodec { field: "bits per sample", value: b as u32 })
        }
        (t, _) => return Err(AudioError::UnsupportedCodec { field: "format tag", value: t as u32 }),
    };
    let samples = if channels == 2 {
        interleaved.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    } else {
        interleaved
    };
    AudioBuffer::new(samples, rate)
}

/// Encodes a buffer as 16-bit PCM mono WAV bytes.
pub fn encode_wav(buf: &AudioBuffer) -> Result<Vec<u8>, AudioError> {
    if buf.is_empty() {
        return Err(AudioError::EmptyBuffer);
    }
    let data_len = buf.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&buf.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buf.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &buf.samples {
        out.extend_from_slice(&quantize_pcm16(s).to_le_bytes());
    }
    Ok(out)
}

pub(crate) fn quantize_pcm16(s: f64) -> i16 {
    let q = (s.clamp(-1.0, 1.0) * 32768.0).round();
    q.clamp(-32768.0, 32767.0) as i16
}

pub fn write_wav(buf: &AudioBuffer, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let bytes = encode_wav(buf)?;
    let path = path.as_ref();
    fs::write(path, bytes).map_err(|e| AudioError::Io { path: path.to_path_buf(), source: e })
}

/// Reads a WAV file and brings it to [`TARGET_SAMPLE_RATE`].
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let buf = read_wav(path)?;
    Ok(resample_to_rate(&buf, TARGET_SAMPLE_RATE))
}

// ---------------------------------------------------------------------------
// Band-limited resampling
// ---------------------------------------------------------------------------

const SINC_HALF_WIDTH: f64 = 48.0;
const KAISER_BETA: f64 = 9.0;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Evaluates `x` at fractional input positions `n * step` through a
/// Kaiser-windowed sinc with the given cutoff (1.0 = input Nyquist).
fn sinc_resample(x: &[f64], step: f64, out_len: usize, cutoff: f64) -> Vec<f64> {
    let width = SINC_HALF_WIDTH / cutoff;
    let norm = bessel_i0(KAISER_BETA);
    let kernel = |d: f64| -> f64 {
        if d.abs() >= width {
            return 0.0;
        }
        let r = d / width;
        let win = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm;
        let arg = PI * d * cutoff;
        let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
        cutoff * sinc * win
    };
    (0..out_len)
        .map(|n| {
            let t = n as f64 * step;
            let lo = ((t - width).ceil().max(0.0)) as usize;
            let hi = ((t + width).floor() as isize).min(x.len() as isize - 1);
            if hi < lo as isize {
                return 0.0;
            }
            (lo..=hi as usize).map(|k| x[k] * kernel(t - k as f64)).sum()
        })
        .collect()
}

/// Speed perturbation: the waveform is resampled by `factor` and relabeled at
/// the original rate, so duration becomes `duration / factor` and pitch
/// scales by `factor`. Output length is `round(len / factor)`.
pub fn resample_speed(buf: &AudioBuffer, factor: f64) -> Result<AudioBuffer, AudioError> {
    if !(0.5..=2.0).contains(&factor) || !factor.is_finite() {
        return Err(AudioError::FactorOutOfRange(factor));
    }
    let out_len = (buf.len() as f64 / factor).round() as usize;
    let cutoff = if factor > 1.0 { 1.0 / factor } else { 1.0 };
    let samples = sinc_resample(&buf.samples, factor, out_len, cutoff);
    Ok(AudioBuffer { samples, sample_rate: buf.sample_rate })
}

/// Sample-rate conversion preserving duration.
pub fn resample_to_rate(buf: &AudioBuffer, rate: u32) -> AudioBuffer {
    if buf.sample_rate == rate {
        return buf.clone();
    }
    let step = buf.sample_rate as f64 / rate as f64;
    let out_len = (buf.len() as f64 / step).round() as usize;
    let cutoff = if step > 1.0 { 1.0 / step } else { 1.0 };
    AudioBuffer { samples: sinc_resample(&buf.samples, step, out_len, cutoff), sample_rate: rate }
}

// ---------------------------------------------------------------------------
// Framing and power spectra
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// Hann raised to 0.85, as in the common ASR front ends.
    Povey,
    Hamming,
    Hann,
}

impl WindowKind {
    /// Symmetric window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let denom = (n.max(2) - 1) as f64;
        (0..n)
            .map(|i| {
                let c = (2.0 * PI * i as f64 / denom).cos();
                match self {
                    WindowKind::Povey => (0.5 - 0.5 * c).powf(0.85),
                    WindowKind::Hamming => 0.54 - 0.46 * c,
                    WindowKind::Hann => 0.5 - 0.5 * c,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameConfig {
    pub frame_length_ms: f64,
    pub frame_shift_ms: f64,
    pub window: WindowKind,
    pub preemphasis: f64,
    pub dither: f64,
    pub dither_seed: u64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_length_ms: 25.0,
            frame_shift_ms: 10.0,
            window: WindowKind::Povey,
            preemphasis: 0.97,
            dither: 0.0,
            dither_seed: 0,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<(), AudioError> {
        if !(self.frame_length_ms > 0.0 && self.frame_shift_ms > 0.0) {
            return Err(AudioError::InvalidFrameConfig("frame length and shift must be positive".into()));
        }
        if self.frame_shift_ms > self.frame_length_ms {
            return Err(AudioError::InvalidFrameConfig(format!(
                "frame shift {} ms exceeds frame length {} ms",
                self.frame_shift_ms, self.frame_length_ms
            )));
        }
        if !(0.0..1.0).contains(&self.preemphasis) {
            return Err(AudioError::InvalidFrameConfig(format!("preemphasis {} not in [0,1)", self.preemphasis)));
        }
        if !(self.dither >= 0.0) {
            return Err(AudioError::InvalidFrameConfig(format!("dither {} is negative", self.dither)));
        }
        Ok(())
    }

    pub fn frame_length_samples(&self, sample_rate: u32) -> usize {
        (sample_rate as f64 * self.frame_length_ms / 1000.0).round() as usize
    }

    pub fn frame_shift_samples(&self, sample_rate: u32) -> usize {
        (sample_rate as f64 * self.frame_shift_ms / 1000.0).round() as usize
    }

    /// Snip-edges frame count: frames never run past the end of the signal.
    pub fn num_frames(&self, num_samples: usize, sample_rate: u32) -> usize {
        let len = self.frame_length_samples(sample_rate);
        let shift = self.frame_shift_samples(sample_rate);
        if num_samples < len || shift == 0 {
            0
        } else {
            1 + (num_samples - len) / shift
        }
    }
}

/// Power spectrogram, one row per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrogramMatrix {
    pub values: Array2<f64>,
    pub fft_size: usize,
    pub frame_shift_ms: f64,
    /// Set when the input was shorter than a single frame.
    pub short_input: bool,
}

impl SpectrogramMatrix {
    pub fn num_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.values.ncols()
    }
}

/// Frame-level analysis shared by `power_spectrum` and MFCC extraction.
pub(crate) struct FrameAnalyzer {
    cfg: FrameConfig,
    frame_len: usize,
    shift: usize,
    window: Vec<f64>,
    fft_size: usize,
    fft: Arc<dyn Fft<f64>>,
}

pub(crate) struct AnalyzedFrames {
    pub power: Array2<f64>,
    /// Raw frame energy after DC removal, before preemphasis and windowing.
    pub energy: Vec<f64>,
}

impl FrameAnalyzer {
    pub fn new(cfg: &FrameConfig, sample_rate: u32, fft_size: usize) -> Result<Self, AudioError> {
        cfg.validate()?;
        let frame_len = cfg.frame_length_samples(sample_rate);
        let shift = cfg.frame_shift_samples(sample_rate);
        if frame_len == 0 || shift == 0 {
            return Err(AudioError::InvalidFrameConfig("frame rounds to zero samples".into()));
        }
        if fft_size < frame_len {
            return Err(AudioError::FftTooSmall { fft_size, frame_len });
        }
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Ok(Self { cfg: cfg.clone(), frame_len, shift, window: cfg.window.coefficients(frame_len), fft_size, fft })
    }

    pub fn analyze(&self, samples: &[f64]) -> AnalyzedFrames {
        let bins = self.fft_size / 2 + 1;
        let n_frames = if samples.len() < self.frame_len { 0 } else { 1 + (samples.len() - self.frame_len) / self.shift };
        let mut power = Array2::zeros((n_frames, bins));
        let mut energy = Vec::with_capacity(n_frames);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.dither_seed);
        let mut frame = vec![0.0; self.frame_len];
        let mut spec = vec![Complex64::new(0.0, 0.0); self.fft_size];
        for t in 0..n_frames {
            let start = t * self.shift;
            frame.copy_from_slice(&samples[start..start + self.frame_len]);
            if self.cfg.dither > 0.0 {
                for v in frame.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *v += self.cfg.dither * g;
                }
            }
            let mean = frame.iter().sum::<f64>() / self.frame_len as f64;
            frame.iter_mut().for_each(|v| *v -= mean);
            energy.push(frame.iter().map(|v| v * v).sum());
            let p = self.cfg.preemphasis;
            if p != 0.0 {
                for i in (1..self.frame_len).rev() {
                    frame[i] -= p * frame[i - 1];
                }
                frame[0] -= p * frame[0];
            }
            for (i, s) in spec.iter_mut().enumerate() {
                *s = if i < self.frame_len {
                    Complex64::new(frame[i] * self.window[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            self.fft.process(&mut spec);
            for (k, v) in power.row_mut(t).iter_mut().enumerate() {
                *v = spec[k].norm_sqr();
            }
        }
        AnalyzedFrames { power, energy }
    }
}

/// Per-frame power spectrum: dither, DC removal, preemphasis, window,
/// zero-pad to `fft_size`, squared magnitude of the DFT.
pub fn power_spectrum(buf: &AudioBuffer, cfg: &FrameConfig, fft_size: usize) -> Result<SpectrogramMatrix, AudioError> {
    let analyzer = FrameAnalyzer::new(cfg, buf.sample_rate, fft_size)?;
    let frames = analyzer.analyze(&buf.samples);
    Ok(SpectrogramMatrix {
        short_input: frames.power.nrows() == 0,
        values: frames.power,
        fft_size,
        frame_shift_ms: cfg.frame_shift_ms,
    })
}

// ---------------------------------------------------------------------------
// STFT with overlap-add resynthesis
// ---------------------------------------------------------------------------

/// Complex STFT with centered frames (half a window of zero padding on each
/// side) and a periodic Hann window.
#[derive(Clone, Debug)]
pub struct Stft {
    pub fft_size: usize,
    pub hop: usize,
    /// frames × (fft_size/2 + 1)
    pub bins: Array2<Complex64>,
    /// Length of the signal that was analyzed.
    pub signal_len: usize,
}

fn periodic_hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

pub fn stft(x: &[f64], fft_size: usize, hop: usize) -> Stft {
    let pad = fft_size / 2;
    let padded_len = x.len() + 2 * pad;
    let n_frames = if padded_len < fft_size { 1 } else { 1 + (padded_len - fft_size).div_ceil(hop) };
    let window = periodic_hann(fft_size);
    let fft = FftPlanner::new().plan_fft_forward(fft_size);
    let n_bins = fft_size / 2 + 1;
    let mut bins = Array2::from_elem((n_frames, n_bins), Complex64::new(0.0, 0.0));
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for t in 0..n_frames {
        for (i, b) in buf.iter_mut().enumerate() {
            let idx = (t * hop + i) as isize - pad as isize;
            let v = if idx >= 0 && (idx as usize) < x.len() { x[idx as usize] } else { 0.0 };
            *b = Complex64::new(v * window[i], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..n_bins {
            bins[[t, k]] = buf[k];
        }
    }
    Stft { fft_size, hop, bins, signal_len: x.len() }
}

/// Weighted overlap-add inverse of [`stft`]; output has the analyzed length.
pub fn istft(spec: &Stft) -> Vec<f64> {
    let n = spec.fft_size;
    let pad = n / 2;
    let window = periodic_hann(n);
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let n_frames = spec.bins.nrows();
    let total = (n_frames - 1) * spec.hop + n;
    let mut out = vec![0.0; total];
    let mut wsum = vec![0.0; total];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..n_frames {
        for k in 0..=n / 2 {
            buf[k] = spec.bins[[t, k]];
        }
        for k in n / 2 + 1..n {
            buf[k] = spec.bins[[t, n - k]].conj();
        }
        ifft.process(&mut buf);
        for i in 0..n {
            let pos = t * spec.hop + i;
            out[pos] += buf[i].re / n as f64 * window[i];
            wsum[pos] += window[i] * window[i];
        }
    }
    (0..spec.signal_len)
        .map(|i| {
            let w = wsum[i + pad];
            if w > 1e-10 {
                out[i + pad] / w
            } else {
                0.0
            }
        })
        .collect()
}
