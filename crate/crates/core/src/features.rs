//! MFCC extraction, delta augmentation, mean normalization and the
//! two-stream stacking that forms the music-robust feature.

use std::io::{self, Read, Write};

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioBuffer, AudioError, FrameAnalyzer, FrameConfig, TARGET_SAMPLE_RATE};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("invalid MFCC configuration: {0}")]
    InvalidConfig(String),
    #[error("buffer sample rate {actual} differs from configured {expected}")]
    SampleRateMismatch { expected: u32, actual: u32 },
    #[error("feature matrix is empty")]
    Empty,
    #[error("frame count mismatch: poly has {poly} frames, vocal has {vocal}")]
    FrameCountMismatch { poly: usize, vocal: usize },
    #[error("frame shift mismatch: poly {poly} ms, vocal {vocal} ms")]
    FrameShiftMismatch { poly: f64, vocal: f64 },
    #[error("expected streams (poly, vocal), got ({0}, {1})")]
    StreamMismatch(StreamKind, StreamKind),
    #[error("non-finite feature value at frame {frame}, dim {dim}")]
    NonFinite { frame: usize, dim: usize },
    #[error("feature archive: {0}")]
    Archive(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which audio a feature stream was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    /// Music-present: the polyphonic mixture.
    Poly,
    /// Music-removed: separated vocals.
    Vocal,
    /// Frame-wise concatenation of vocal and poly.
    Robust,
}

impl StreamKind {
    pub const ALL: [StreamKind; 3] = [StreamKind::Poly, StreamKind::Vocal, StreamKind::Robust];

    pub fn as_str(self) -> &'static str {
        match self {
            StreamKind::Poly => "poly",
            StreamKind::Vocal => "vocal",
            StreamKind::Robust => "robust",
        }
    }

    fn tag(self) -> u8 {
        match self {
            StreamKind::Poly => 0,
            StreamKind::Vocal => 1,
            StreamKind::Robust => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(StreamKind::Poly),
            1 => Some(StreamKind::Vocal),
            2 => Some(StreamKind::Robust),
            _ => None,
        }
    }
}

impl std::fmt::Display for StreamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StreamKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "poly" => Ok(StreamKind::Poly),
            "vocal" => Ok(StreamKind::Vocal),
            "robust" => Ok(StreamKind::Robust),
            other => Err(format!("unknown stream {other:?} (expected poly, vocal or robust)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub frame: FrameConfig,
    pub sample_rate: u32,
    pub num_mel_filters: usize,
    pub num_cepstra: usize,
    pub low_freq_hz: f64,
    pub high_freq_hz: f64,
    pub use_energy_as_c0: bool,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self::hires()
    }
}

impl MfccConfig {
    /// 40 filters, 40 cepstra: the high-resolution network input.
    pub fn hires() -> Self {
        Self {
            frame: FrameConfig::default(),
            sample_rate: TARGET_SAMPLE_RATE,
            num_mel_filters: 40,
            num_cepstra: 40,
            low_freq_hz: 20.0,
            high_freq_hz: 7800.0,
            use_energy_as_c0: false,
            log_floor: 1e-10,
        }
    }

    /// 13 cepstra with energy as c0; 39 dims once deltas are appended.
    pub fn align() -> Self {
        Self {
            num_mel_filters: 23,
            num_cepstra: 13,
            use_energy_as_c0: true,
            ..Self::hires()
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        self.frame.validate()?;
        if self.num_mel_filters == 0 || self.num_cepstra == 0 {
            return Err(FeatureError::InvalidConfig("filter and cepstrum counts must be positive".into()));
        }
        if self.num_cepstra > self.num_mel_filters {
            return Err(FeatureError::InvalidConfig(format!(
                "{} cepstra requested from {} filters",
                self.num_cepstra, self.num_mel_filters
            )));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if self.high_freq_hz > nyquist {
            return Err(FeatureError::InvalidConfig(format!(
                "high frequency {} Hz above Nyquist {} Hz",
                self.high_freq_hz, nyquist
            )));
        }
        if !(self.low_freq_hz >= 0.0 && self.low_freq_hz < self.high_freq_hz) {
            return Err(FeatureError::InvalidConfig(format!(
                "need 0 <= low ({}) < high ({})",
                self.low_freq_hz, self.high_freq_hz
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(FeatureError::InvalidConfig("log floor must be positive".into()));
        }
        Ok(())
    }

    /// Smallest power of two holding one frame.
    pub fn fft_size(&self) -> usize {
        self.frame.frame_length_samples(self.sample_rate).next_power_of_two()
    }
}

/// Named front-end configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturePreset {
    /// 13 MFCC + Δ + ΔΔ = 39 dims.
    Align,
    /// 40-dim high-resolution MFCC, no deltas.
    Hires,
}

impl FeaturePreset {
    pub fn mfcc_config(self) -> MfccConfig {
        match self {
            FeaturePreset::Align => MfccConfig::align(),
            FeaturePreset::Hires => MfccConfig::hires(),
        }
    }

    pub fn uses_deltas(self) -> bool {
        matches!(self, FeaturePreset::Align)
    }

    /// Per-stream dimensionality (poly or vocal).
    pub fn stream_dims(self) -> usize {
        match self {
            FeaturePreset::Align => 39,
            FeaturePreset::Hires => 40,
        }
    }
}

impl std::str::FromStr for FeaturePreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "align" => Ok(FeaturePreset::Align),
            "hires" => Ok(FeaturePreset::Hires),
            other => Err(format!("unknown preset {other:?} (expected align or hires)")),
        }
    }
}

/// frames × dims feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub frame_shift_ms: f64,
    pub stream: StreamKind,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>, frame_shift_ms: f64, stream: StreamKind) -> Result<Self, FeatureError> {
        if let Some(((frame, dim), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(FeatureError::NonFinite { frame, dim });
        }
        Ok(Self { values, frame_shift_ms, stream })
    }

    pub fn num_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn dims(&self) -> usize {
        self.values.ncols()
    }

    pub fn frame(&self, t: usize) -> ndarray::ArrayView1<'_, f64> {
        self.values.row(t)
    }

    pub fn with_stream(mut self, stream: StreamKind) -> Self {
        self.stream = stream;
        self
    }
}

pub fn mel_scale(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

pub fn inverse_mel_scale(mel: f64) -> f64 {
    700.0 * ((mel / 1127.0).exp() - 1.0)
}

/// Center frequency (Hz) of every mel filter.
pub fn mel_center_frequencies(cfg: &MfccConfig) -> Vec<f64> {
    let (lo, hi) = (mel_scale(cfg.low_freq_hz), mel_scale(cfg.high_freq_hz));
    let step = (hi - lo) / (cfg.num_mel_filters + 1) as f64;
    (1..=cfg.num_mel_filters).map(|m| inverse_mel_scale(lo + m as f64 * step)).collect()
}

/// Triangular filters on the mel scale, `num_mel_filters × (fft_size/2 + 1)`.
pub fn mel_filterbank(cfg: &MfccConfig, fft_size: usize, sample_rate: u32) -> Result<Array2<f64>, FeatureError> {
    let cfg = MfccConfig { sample_rate, ..cfg.clone() };
    cfg.validate()?;
    let bins = fft_size / 2 + 1;
    let (lo, hi) = (mel_scale(cfg.low_freq_hz), mel_scale(cfg.high_freq_hz));
    let step = (hi - lo) / (cfg.num_mel_filters + 1) as f64;
    let bin_hz = sample_rate as f64 / fft_size as f64;
    let mut fb = Array2::zeros((cfg.num_mel_filters, bins));
    for m in 0..cfg.num_mel_filters {
        let left = lo + m as f64 * step;
        let center = left + step;
        let right = center + step;
        for k in 0..bins {
            let mel = mel_scale(k as f64 * bin_hz);
            if mel > left && mel < right {
                fb[[m, k]] = if mel <= center { (mel - left) / (center - left) } else { (right - mel) / (right - center) };
            }
        }
    }
    Ok(fb)
}

/// Orthonormal DCT-II basis, `num_out × num_in`.
fn dct_matrix(num_out: usize, num_in: usize) -> Array2<f64> {
    let n = num_in as f64;
    Array2::from_shape_fn((num_out, num_in), |(k, m)| {
        let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        scale * (std::f64::consts::PI * k as f64 * (m as f64 + 0.5) / n).cos()
    })
}

/// Reusable MFCC front end; filterbank, DCT and FFT plan are built once.
pub struct MfccExtractor {
    cfg: MfccConfig,
    analyzer: FrameAnalyzer,
    filterbank: Array2<f64>,
    dct: Array2<f64>,
}

impl MfccExtractor {
    pub fn new(cfg: &MfccConfig) -> Result<Self, FeatureError> {
        cfg.validate()?;
        let fft_size = cfg.fft_size();
        Ok(Self {
            analyzer: FrameAnalyzer::new(&cfg.frame, cfg.sample_rate, fft_size)?,
            filterbank: mel_filterbank(cfg, fft_size, cfg.sample_rate)?,
            dct: dct_matrix(cfg.num_cepstra, cfg.num_mel_filters),
            cfg: cfg.clone(),
        })
    }

    pub fn compute(&self, buf: &AudioBuffer, stream: StreamKind) -> Result<FeatureMatrix, FeatureError> {
        if buf.sample_rate() != self.cfg.sample_rate {
            return Err(FeatureError::SampleRateMismatch { expected: self.cfg.sample_rate, actual: buf.sample_rate() });
        }
        let frames = self.analyzer.analyze(buf.samples());
        let floor = self.cfg.log_floor;
        let mel = frames.power.dot(&self.filterbank.t()).mapv(|e| e.max(floor).ln());
        let mut ceps = mel.dot(&self.dct.t());
        if self.cfg.use_energy_as_c0 {
            for (t, e) in frames.energy.iter().enumerate() {
                ceps[[t, 0]] = e.max(floor).ln();
            }
        }
        FeatureMatrix::new(ceps, self.cfg.frame.frame_shift_ms, stream)
    }
}

/// power spectrum → mel energies → floored log → orthonormal DCT-II.
pub fn compute_mfcc(buf: &AudioBuffer, cfg: &MfccConfig, stream: StreamKind) -> Result<FeatureMatrix, FeatureError> {
    MfccExtractor::new(cfg)?.compute(buf, stream)
}

fn regression_deltas(x: &Array2<f64>, window: usize) -> Array2<f64> {
    let frames = x.nrows();
    let denom = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    let last = frames as isize - 1;
    let at = |t: isize| t.clamp(0, last) as usize;
    let mut out = Array2::zeros(x.raw_dim());
    for t in 0..frames {
        let mut row = out.row_mut(t);
        for n in 1..=window {
            let fwd = x.row(at(t as isize + n as isize));
            let back = x.row(at(t as isize - n as isize));
            row.scaled_add(n as f64, &(&fwd - &back));
        }
        row /= denom;
    }
    out
}

/// Appends regression deltas and delta-deltas, tripling the dimension.
pub fn append_deltas(fm: &FeatureMatrix, window: usize) -> Result<FeatureMatrix, FeatureError> {
    if fm.num_frames() == 0 || fm.dims() == 0 {
        return Err(FeatureError::Empty);
    }
    let window = window.max(1);
    let d1 = regression_deltas(&fm.values, window);
    let d2 = regression_deltas(&d1, window);
    let values = ndarray::concatenate(Axis(1), &[fm.values.view(), d1.view(), d2.view()]).expect("equal row counts");
    Ok(FeatureMatrix { values, frame_shift_ms: fm.frame_shift_ms, stream: fm.stream })
}

/// Per-utterance mean subtraction; variances are left as they are.
/// A single frame normalizes to all zeros.
pub fn cmvn(fm: &FeatureMatrix) -> FeatureMatrix {
    if fm.num_frames() == 0 {
        return fm.clone();
    }
    let mean = fm.values.mean_axis(Axis(0)).expect("non-empty");
    FeatureMatrix { values: &fm.values - &mean, frame_shift_ms: fm.frame_shift_ms, stream: fm.stream }
}

/// Music-robust feature: vocal dims followed by poly dims, frame by frame.
pub fn stack(poly: &FeatureMatrix, vocal: &FeatureMatrix) -> Result<FeatureMatrix, FeatureError> {
    if poly.stream != StreamKind::Poly || vocal.stream != StreamKind::Vocal {
        return Err(FeatureError::StreamMismatch(poly.stream, vocal.stream));
    }
    if poly.num_frames() != vocal.num_frames() {
        return Err(FeatureError::FrameCountMismatch { poly: poly.num_frames(), vocal: vocal.num_frames() });
    }
    if (poly.frame_shift_ms - vocal.frame_shift_ms).abs() > 1e-9 {
        return Err(FeatureError::FrameShiftMismatch { poly: poly.frame_shift_ms, vocal: vocal.frame_shift_ms });
    }
    let values = ndarray::concatenate(Axis(1), &[vocal.values.view(), poly.values.view()])
        .expect("equal row counts")
        .as_standard_layout()
        .into_owned();
    Ok(FeatureMatrix { values, frame_shift_ms: poly.frame_shift_ms, stream: StreamKind::Robust })
}

/// Splits a robust matrix back into (vocal, poly) halves.
pub fn unstack(robust: &FeatureMatrix) -> (FeatureMatrix, FeatureMatrix) {
    let half = robust.dims() / 2;
    let vocal = robust.values.slice(s![.., ..half]).to_owned();
    let poly = robust.values.slice(s![.., half..]).to_owned();
    (
        FeatureMatrix { values: vocal, frame_shift_ms: robust.frame_shift_ms, stream: StreamKind::Vocal },
        FeatureMatrix { values: poly, frame_shift_ms: robust.frame_shift_ms, stream: StreamKind::Poly },
    )
}

/// Full front end for one stream: MFCC, optional deltas, optional mean
/// normalization.
pub fn extract_stream(
    buf: &AudioBuffer,
    preset: FeaturePreset,
    normalize: bool,
    stream: StreamKind,
) -> Result<FeatureMatrix, FeatureError> {
    let mut fm = compute_mfcc(buf, &preset.mfcc_config(), stream)?;
    if preset.uses_deltas() && fm.num_frames() > 0 {
        fm = append_deltas(&fm, 2)?;
    }
    if normalize {
        fm = cmvn(&fm);
    }
    Ok(fm)
}

// ---------------------------------------------------------------------------
// Binary archive and CSV export
// ---------------------------------------------------------------------------
//
// Archive layout, all integers little-endian:
//   header:  b"MRFA"  u32 version (=1)
//   record:  u32 id_len, id bytes (UTF-8), u32 frames, u32 dims,
//            f32 frame_shift_ms, u8 stream (0 poly, 1 vocal, 2 robust),
//            frames*dims f32 values, row-major
// Records repeat until end of file.

pub const ARCHIVE_MAGIC: &[u8; 4] = b"MRFA";
pub const ARCHIVE_VERSION: u32 = 1;

pub fn write_archive<W: Write>(mut w: W, entries: &[(String, FeatureMatrix)]) -> Result<(), FeatureError> {
    w.write_all(ARCHIVE_MAGIC)?;
    w.write_all(&ARCHIVE_VERSION.to_le_bytes())?;
    for (id, fm) in entries {
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
        w.write_all(&(fm.num_frames() as u32).to_le_bytes())?;
        w.write_all(&(fm.dims() as u32).to_le_bytes())?;
        w.write_all(&(fm.frame_shift_ms as f32).to_le_bytes())?;
        w.write_all(&[fm.stream.tag()])?;
        for v in fm.values.iter() {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize>(bytes: &[u8], pos: &mut usize, what: &str) -> Result<[u8; N], FeatureError> {
    if *pos + N > bytes.len() {
        return Err(FeatureError::Archive(format!("truncated while reading {what} at byte {}", *pos)));
    }
    let mut out = [0u8; N];
    out.copy_from_slice(&bytes[*pos..*pos + N]);
    *pos += N;
    Ok(out)
}

pub fn read_archive<R: Read>(mut r: R) -> Result<Vec<(String, FeatureMatrix)>, FeatureError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0;
    if take::<4>(&bytes, &mut pos, "magic")? != *ARCHIVE_MAGIC {
        return Err(FeatureError::Archive("bad magic".into()));
    }
    let version = u32::from_le_bytes(take::<4>(&bytes, &mut pos, "version")?);
    if version != ARCHIVE_VERSION {
        return Err(FeatureError::Archive(format!("unsupported version {version}")));
    }
    let mut out = Vec::new();
    while pos < bytes.len() {
        let id_len = u32::from_le_bytes(take::<4>(&bytes, &mut pos, "id length")?) as usize;
        if pos + id_len > bytes.len() {
            return Err(FeatureError::Archive("truncated utterance id".into()));
        }
        let id = String::from_utf8(bytes[pos..pos + id_len].to_vec())
            .map_err(|_| FeatureError::Archive("utterance id is not UTF-8".into()))?;
        pos += id_len;
        let frames = u32::from_le_bytes(take::<4>(&bytes, &mut pos, "frames")?) as usize;
        let dims = u32::from_le_bytes(take::<4>(&bytes, &mut pos, "dims")?) as usize;
        let shift = f32::from_le_bytes(take::<4>(&bytes, &mut pos, "frame shift")?) as f64;
        let tag = take::<1>(&bytes, &mut pos, "stream")?[0];
        let stream = StreamKind::from_tag(tag).ok_or_else(|| FeatureError::Archive(format!("unknown stream tag {tag}")))?;
        let n = frames * dims;
        if pos + 4 * n > bytes.len() {
            return Err(FeatureError::Archive(format!("truncated data for {id}")));
        }
        let data: Vec<f64> = bytes[pos..pos + 4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        pos += 4 * n;
        let values = Array2::from_shape_vec((frames, dims), data).expect("sized above");
        out.push((id, FeatureMatrix::new(values, shift, stream)?));
    }
    Ok(out)
}

/// CSV with a `frame,d0,d1,...` header.
pub fn write_csv<W: Write>(mut w: W, fm: &FeatureMatrix) -> io::Result<()> {
    let header: Vec<String> = (0..fm.dims()).map(|d| format!("d{d}")).collect();
    writeln!(w, "frame,{}", header.join(","))?;
    for (t, row) in fm.values.rows().into_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(w, "{t},{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn fm(values: Array2<f64>, stream: StreamKind) -> FeatureMatrix {
        FeatureMatrix::new(values, 10.0, stream).unwrap()
    }

    #[test]
    fn mel_of_700_hz() {
        assert!((mel_scale(700.0) - 1127.0 * 2f64.ln()).abs() < 1e-12);
        assert!((mel_scale(700.0) - 781.17).abs() < 0.01);
        assert!((inverse_mel_scale(mel_scale(1234.5)) - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn filter_support_within_band() {
        let cfg = MfccConfig { low_freq_hz: 300.0, high_freq_hz: 3400.0, ..MfccConfig::align() };
        let fb = mel_filterbank(&cfg, 512, 16000).unwrap();
        for ((_, k), &w) in fb.indexed_iter() {
            assert!(w >= 0.0);
            if w > 0.0 {
                let f = k as f64 * 16000.0 / 512.0;
                assert!((300.0..=3400.0).contains(&f), "bin {k} at {f} Hz");
            }
        }
    }

    #[test]
    fn high_freq_above_nyquist_is_rejected() {
        let cfg = MfccConfig { high_freq_hz: 9000.0, ..MfccConfig::hires() };
        assert!(matches!(mel_filterbank(&cfg, 512, 16000), Err(FeatureError::InvalidConfig(_))));
        let too_many = MfccConfig { num_cepstra: 41, ..MfccConfig::hires() };
        assert!(too_many.validate().is_err());
    }

    #[test]
    fn hires_shape_for_one_second() {
        let buf = AudioBuffer::silence(16000, 16000);
        let out = compute_mfcc(&buf, &MfccConfig::hires(), StreamKind::Poly).unwrap();
        assert_eq!((out.num_frames(), out.dims()), (98, 40));
    }

    #[test]
    fn constant_signal_gives_dct_of_floor() {
        let buf = AudioBuffer::new(vec![0.25; 8000], 16000).unwrap();
        let cfg = MfccConfig::hires();
        let out = compute_mfcc(&buf, &cfg, StreamKind::Poly).unwrap();
        let expected_c0 = (cfg.num_mel_filters as f64).sqrt() * cfg.log_floor.ln();
        for row in out.values.rows() {
            assert!((row[0] - expected_c0).abs() < 1e-9);
            assert!(row.iter().skip(1).all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn sample_rate_mismatch_is_an_error() {
        let buf = AudioBuffer::silence(8000, 8000);
        assert!(matches!(
            compute_mfcc(&buf, &MfccConfig::hires(), StreamKind::Poly),
            Err(FeatureError::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn deltas_of_constant_and_ramp() {
        let constant = fm(Array2::from_elem((6, 3), 2.5), StreamKind::Poly);
        let d = append_deltas(&constant, 2).unwrap();
        assert_eq!(d.dims(), 9);
        assert!(d.values.slice(s![.., 3..]).iter().all(|&v| v == 0.0));

        let ramp = fm(Array2::from_shape_fn((12, 2), |(t, _)| t as f64), StreamKind::Poly);
        let d = append_deltas(&ramp, 2).unwrap();
        // delta is 1 wherever the window stays inside; delta-delta needs a
        // further 2 frames of margin.
        for t in 2..10 {
            assert!((d.values[[t, 2]] - 1.0).abs() < 1e-12);
        }
        for t in 4..8 {
            assert!(d.values[[t, 4]].abs() < 1e-12);
        }
    }

    #[test]
    fn deltas_reject_empty() {
        let empty = fm(Array2::zeros((0, 4)), StreamKind::Poly);
        assert!(matches!(append_deltas(&empty, 2), Err(FeatureError::Empty)));
    }

    #[test]
    fn cmvn_single_frame_is_zero() {
        let one = fm(Array2::from_elem((1, 4), 3.0), StreamKind::Vocal);
        assert!(cmvn(&one).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stack_shapes_and_errors() {
        let poly = fm(Array2::from_elem((98, 40), 1.0), StreamKind::Poly);
        let vocal = fm(Array2::zeros((98, 40)), StreamKind::Vocal);
        let robust = stack(&poly, &vocal).unwrap();
        assert_eq!((robust.num_frames(), robust.dims(), robust.stream), (98, 80, StreamKind::Robust));
        assert_eq!(robust.values.slice(s![.., 40..]), poly.values);

        let short = fm(Array2::zeros((97, 40)), StreamKind::Vocal);
        assert!(matches!(stack(&poly, &short), Err(FeatureError::FrameCountMismatch { poly: 98, vocal: 97 })));
        assert!(matches!(stack(&vocal, &poly), Err(FeatureError::StreamMismatch(..))));
    }

    #[test]
    fn archive_round_trip() {
        let a = fm(Array2::from_shape_fn((3, 2), |(t, d)| (t * 2 + d) as f64 * 0.5), StreamKind::Robust);
        let mut bytes = Vec::new();
        write_archive(&mut bytes, &[("utt1".to_string(), a.clone())]).unwrap();
        let back = read_archive(&bytes[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].0, "utt1");
        assert_eq!(back[0].1, a);
        assert!(read_archive(&bytes[..bytes.len() - 1]).is_err());
    }
}
