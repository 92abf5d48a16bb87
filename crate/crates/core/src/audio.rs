//! WAV I/O and the in-memory audio clip type.
//!
//! Only RIFF/WAVE, PCM, 16-bit little-endian, mono is accepted; everything
//! else is rejected explicitly. Integer sample `v` maps to amplitude
//! `v / 32768`, so `16384` reads back as exactly `0.5`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Amplitude of one 16-bit quantization step.
pub const PCM16_STEP: f32 = 1.0 / 32768.0;

/// Errors from reading, writing, or constructing audio clips.
#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("sample {index} is {value}, outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f32 },

    #[error("sample rate must be positive")]
    ZeroSampleRate,
}

/// A validated mono signal: finite samples in `[-1, 1]` at a fixed rate.
///
/// Clips are immutable after construction, so sharing one across threads
/// for concurrent reads is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    /// Validates every sample (finite, within `[-1, 1]`) and the rate.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        for (index, &value) in samples.iter().enumerate() {
            if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
                return Err(AudioError::SampleOutOfRange { index, value });
            }
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a clip from arbitrary finite samples, clamping into `[-1, 1]`.
    ///
    /// Used to re-wrap processed signals (e.g. noise-cancelled output) that
    /// may overshoot full scale by a small margin.
    pub fn from_samples_clamped(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        let clamped = samples
            .into_iter()
            .map(|v| if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 })
            .collect();
        Self::new(clamped, sample_rate)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
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

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], AudioError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| {
                AudioError::CorruptHeader(format!(
                    "truncated: wanted {} bytes at offset {}, file has {}",
                    n,
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn tag(&mut self) -> Result<[u8; 4], AudioError> {
        let s = self.take(4)?;
        Ok([s[0], s[1], s[2], s[3]])
    }

    fn u32_le(&mut self) -> Result<u32, AudioError> {
        let s = self.take(4)?;
        Ok(u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
    }

    fn u16_le(&mut self) -> Result<u16, AudioError> {
        let s = self.take(2)?;
        Ok(u16::from_le_bytes([s[0], s[1]]))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

struct FmtChunk {
    audio_format: u16,
    num_channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn parse_fmt(chunk: &[u8]) -> Result<FmtChunk, AudioError> {
    let mut r = Reader::new(chunk);
    let audio_format = r.u16_le()?;
    let num_channels = r.u16_le()?;
    let sample_rate = r.u32_le()?;
    let _byte_rate = r.u32_le()?;
    let _block_align = r.u16_le()?;
    let bits_per_sample = r.u16_le()?;
    Ok(FmtChunk {
        audio_format,
        num_channels,
        sample_rate,
        bits_per_sample,
    })
}

/// Reads a mono 16-bit PCM WAV file into a clip.
///
/// Chunk sizes are honored exactly: a truncated or malformed file yields
/// a `CorruptHeader` error rather than a panic or an out-of-bounds read.
pub fn read_wav<P: AsRef<Path>>(path: P) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            AudioError::FileNotFound(path.to_path_buf())
        } else {
            AudioError::Io(e)
        }
    })?;
    parse_wav(&bytes)
}

/// Parses WAV bytes already in memory; same contract as [`read_wav`].
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    let mut r = Reader::new(bytes);
    if &r.tag()? != b"RIFF" {
        return Err(AudioError::CorruptHeader("missing RIFF magic".into()));
    }
    let _riff_size = r.u32_le()?;
    if &r.tag()? != b"WAVE" {
        return Err(AudioError::CorruptHeader("missing WAVE form type".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    while r.remaining() >= 8 {
        let id = r.tag()?;
        let size = r.u32_le()? as usize;
        let body = r.take(size)?;
        match &id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(AudioError::CorruptHeader("fmt chunk too small".into()));
                }
                fmt = Some(parse_fmt(body)?);
            }
            b"data" => {
                data = Some(body);
                // Trailing chunks after data are irrelevant for decoding.
                break;
            }
            _ => {}
        }
        // Chunks are word-aligned; odd sizes carry one pad byte.
        if size % 2 == 1 && r.remaining() > 0 {
            r.take(1)?;
        }
    }

    let fmt = fmt.ok_or_else(|| AudioError::CorruptHeader("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::CorruptHeader("no data chunk".into()))?;

    if fmt.audio_format != 1 {
        return Err(AudioError::UnsupportedFormat(format!(
            "audio format {} (only PCM = 1)",
            fmt.audio_format
        )));
    }
    if fmt.num_channels != 1 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{} channels (only mono)",
            fmt.num_channels
        )));
    }
    if fmt.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{} bits per sample (only 16)",
            fmt.bits_per_sample
        )));
    }
    if fmt.sample_rate == 0 {
        return Err(AudioError::CorruptHeader("zero sample rate".into()));
    }
    if data.len() % 2 != 0 {
        return Err(AudioError::CorruptHeader(
            "data chunk size is odd for 16-bit samples".into(),
        ));
    }

    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32768.0)
        .collect();
    AudioClip::new(samples, fmt.sample_rate)
}

fn quantize(v: f32) -> i16 {
    (v * 32768.0).round().clamp(i16::MIN as f32, i16::MAX as f32) as i16
}

/// Encodes a clip as mono 16-bit PCM WAV bytes.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_size = (clip.len() * 2) as u32;
    let sample_rate = clip.sample_rate();
    let byte_rate = sample_rate * 2;
    let mut out = Vec::with_capacity(44 + data_size as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());
    for &v in clip.samples() {
        out.extend_from_slice(&quantize(v).to_le_bytes());
    }
    out
}

/// Writes a clip as a mono 16-bit PCM WAV file.
///
/// Round-tripping through [`read_wav`] reproduces every sample within one
/// quantization step (`1/32768`).
pub fn write_wav<P: AsRef<Path>>(clip: &AudioClip, path: P) -> Result<(), AudioError> {
    let bytes = encode_wav(clip);
    let mut file = fs::File::create(path.as_ref())?;
    file.write_all(&bytes)?;
    Ok(())
}
