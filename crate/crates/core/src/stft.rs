//! Short-time Fourier features: 5 ms Hann windows, zero-padded FFT,
//! frequency-range aggregation, and log-standardized 100x150 matrices.
//!
//! A 50 ms segment at 48 kHz becomes exactly 100 frames of 150 frequency
//! ranges: 240-sample windows hop by 24 samples (the tail is zero-padded to
//! reach the frame count), each window is zero-padded to a 512-point FFT
//! whose 257 one-sided magnitude bins are averaged down to 150 contiguous
//! ranges.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::segment::PhonemeSegment;

#[derive(Debug, thiserror::Error)]
pub enum StftError {
    #[error("segment of {samples} samples is shorter than the {window}-sample window")]
    SegmentTooShort { samples: usize, window: usize },

    #[error("{n_ranges} ranges requested but only {bins} bins available")]
    TooManyRanges { n_ranges: usize, bins: usize },

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("segment rate {segment} Hz does not match config rate {config} Hz")]
    SampleRateMismatch { segment: u32, config: u32 },
}

/// Analysis window shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hann,
}

/// Frame geometry and output shape of the feature extractor.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub fft_size: usize,
    pub n_ranges: usize,
    pub n_frames: usize,
    pub window_kind: WindowKind,
    pub sample_rate: u32,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_ms: 5.0,
            hop_ms: 0.5,
            fft_size: 512,
            n_ranges: 150,
            n_frames: 100,
            window_kind: WindowKind::Hann,
            sample_rate: 48_000,
        }
    }
}

impl StftConfig {
    pub fn window_samples(&self) -> usize {
        (self.window_ms / 1000.0 * self.sample_rate as f64).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        ((self.hop_ms / 1000.0 * self.sample_rate as f64).round() as usize).max(1)
    }

    /// One-sided bin count of the zero-padded FFT.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn validate(&self) -> Result<(), StftError> {
        if self.window_samples() == 0 {
            return Err(StftError::ConfigInvalid("window is zero samples".into()));
        }
        if self.fft_size < self.window_samples() {
            return Err(StftError::ConfigInvalid(format!(
                "fft_size {} is smaller than the {}-sample window",
                self.fft_size,
                self.window_samples()
            )));
        }
        if self.n_ranges == 0 || self.n_ranges > self.bins() {
            return Err(StftError::ConfigInvalid(format!(
                "n_ranges {} must be in 1..={}",
                self.n_ranges,
                self.bins()
            )));
        }
        if self.n_frames == 0 {
            return Err(StftError::ConfigInvalid("n_frames must be >= 1".into()));
        }
        Ok(())
    }
}

/// A normalized time-frequency matrix, the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_frames: usize,
    n_ranges: usize,
    /// Row-major `n_frames x n_ranges`.
    values: Vec<f32>,
    /// Mean subtracted during standardization.
    pub mean: f64,
    /// Standard deviation divided out during standardization.
    pub std: f64,
}

impl FeatureMatrix {
    pub fn from_values(
        n_frames: usize,
        n_ranges: usize,
        values: Vec<f32>,
        mean: f64,
        std: f64,
    ) -> Result<Self, StftError> {
        if values.len() != n_frames * n_ranges {
            return Err(StftError::ConfigInvalid(format!(
                "{} values for a {}x{} matrix",
                values.len(),
                n_frames,
                n_ranges
            )));
        }
        Ok(Self {
            n_frames,
            n_ranges,
            values,
            mean,
            std,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_ranges(&self) -> usize {
        self.n_ranges
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, frame: usize, range: usize) -> f32 {
        self.values[frame * self.n_ranges + range]
    }
}

fn window_coefficients(kind: WindowKind, len: usize) -> Vec<f64> {
    match kind {
        WindowKind::Hann => {
            if len <= 1 {
                return vec![1.0; len];
            }
            let denom = (len - 1) as f64;
            (0..len)
                .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / denom).cos()))
                .collect()
        }
    }
}

/// Windowed FFT magnitudes, `n_frames` rows by `fft_size/2 + 1` bins.
///
/// Frame `i` covers samples starting at `i * hop`; the segment is treated
/// as zero beyond its end so the frame count is always exactly
/// `cfg.n_frames`.
pub fn stft_magnitudes(segment: &[f32], cfg: &StftConfig) -> Result<Vec<Vec<f64>>, StftError> {
    cfg.validate()?;
    let window_len = cfg.window_samples();
    if segment.len() < window_len {
        return Err(StftError::SegmentTooShort {
            samples: segment.len(),
            window: window_len,
        });
    }
    let hop = cfg.hop_samples();
    let window = window_coefficients(cfg.window_kind, window_len);
    let bins = cfg.bins();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(cfg.fft_size);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut buffer = vec![Complex64::default(); cfg.fft_size];

    let mut frames = Vec::with_capacity(cfg.n_frames);
    for i in 0..cfg.n_frames {
        let start = i * hop;
        buffer.fill(Complex64::default());
        for (n, w) in window.iter().enumerate() {
            let sample = segment.get(start + n).copied().unwrap_or(0.0) as f64;
            buffer[n] = Complex64::new(sample * w, 0.0);
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        frames.push(buffer[..bins].iter().map(|c| c.norm()).collect());
    }
    Ok(frames)
}

/// Bin cardinality of each range: `floor(bins / n_ranges)` everywhere,
/// with the remainder folded into the last range.
pub fn range_partition(bins: usize, n_ranges: usize) -> Vec<usize> {
    let base = bins / n_ranges;
    let mut sizes = vec![base; n_ranges];
    sizes[n_ranges - 1] += bins % n_ranges;
    sizes
}

/// Averages contiguous bin ranges down to `n_ranges` columns per frame.
pub fn aggregate_ranges(
    mags: &[Vec<f64>],
    n_ranges: usize,
) -> Result<Vec<Vec<f64>>, StftError> {
    let bins = mags.first().map_or(0, Vec::len);
    if n_ranges == 0 || n_ranges > bins {
        return Err(StftError::TooManyRanges { n_ranges, bins });
    }
    let sizes = range_partition(bins, n_ranges);
    let mut out = Vec::with_capacity(mags.len());
    for frame in mags {
        let mut row = Vec::with_capacity(n_ranges);
        let mut offset = 0;
        for &size in &sizes {
            let sum: f64 = frame[offset..offset + size].iter().sum();
            row.push(sum / size as f64);
            offset += size;
        }
        out.push(row);
    }
    Ok(out)
}

/// Turns a 50 ms segment into the standardized log-magnitude feature
/// matrix the classifier consumes.
///
/// Values are `log(1 + mean-range magnitude)`, standardized to zero mean
/// and unit variance per matrix. A degenerate matrix (std below 1e-12,
/// e.g. from an all-zero segment) maps to all zeros.
pub fn featurize(segment: &PhonemeSegment, cfg: &StftConfig) -> Result<FeatureMatrix, StftError> {
    if segment.sample_rate != cfg.sample_rate {
        return Err(StftError::SampleRateMismatch {
            segment: segment.sample_rate,
            config: cfg.sample_rate,
        });
    }
    let mags = stft_magnitudes(&segment.samples, cfg)?;
    let ranges = aggregate_ranges(&mags, cfg.n_ranges)?;

    let compressed: Vec<f64> = ranges
        .iter()
        .flat_map(|row| row.iter().map(|&v| (1.0 + v).ln()))
        .collect();
    let n = compressed.len() as f64;
    let mean = compressed.iter().sum::<f64>() / n;
    let variance = compressed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = variance.sqrt();

    let values: Vec<f32> = if std < 1e-12 {
        vec![0.0; compressed.len()]
    } else {
        compressed
            .iter()
            .map(|&v| ((v - mean) / std) as f32)
            .collect()
    };
    FeatureMatrix::from_values(cfg.n_frames, cfg.n_ranges, values, mean, std)
}
