//! Vowel localization and 50 ms phoneme window extraction.
//!
//! A clip is scanned with a short-frame RMS intensity envelope; the vowel is
//! the longest contiguous run of frames louder than `ratio` times the peak
//! intensity (0.25 by default). The vowel window is the first 50 ms of that
//! run, the consonant window is the 50 ms immediately before it, and the
//! silence window is the final 50 ms of the clip.

use crate::audio::AudioClip;

/// Default analysis frame length for the intensity envelope.
pub const DEFAULT_FRAME_MS: f64 = 5.0;
/// Default frame step for the intensity envelope.
pub const DEFAULT_HOP_MS: f64 = 1.0;
/// Default relative intensity threshold for vowel detection.
pub const DEFAULT_RATIO: f64 = 0.25;
/// Length of every extracted phoneme window, in seconds.
pub const SEGMENT_SECONDS: f64 = 0.050;

#[derive(Debug, thiserror::Error)]
pub enum SegmentError {
    #[error("clip of {samples} samples is shorter than one {frame_samples}-sample frame")]
    ClipTooShort {
        samples: usize,
        frame_samples: usize,
    },

    #[error("frame and hop must be positive (frame {frame_ms} ms, hop {hop_ms} ms)")]
    InvalidFrame { frame_ms: f64, hop_ms: f64 },

    #[error("threshold ratio {0} must be in (0, 1)")]
    InvalidRatio(f64),

    #[error("envelope is empty")]
    EmptyEnvelope,

    #[error("no frame exceeds the intensity threshold")]
    NoVowelFound,

    #[error("vowel onset at {onset_s:.4} s is earlier than one segment length")]
    VowelTooEarly { onset_s: f64 },

    #[error("supra-threshold run of {run_s:.4} s is shorter than one segment")]
    VowelTooShort { run_s: f64 },

    #[error("final segment of the clip exceeds the intensity threshold")]
    NoSilenceTail,
}

/// Frame-wise RMS intensity of a clip.
#[derive(Debug, Clone)]
pub struct Envelope {
    /// Nonnegative per-frame RMS values.
    pub values: Vec<f64>,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub sample_rate: u32,
}

impl Envelope {
    pub fn frame_samples(&self) -> usize {
        ms_to_samples(self.frame_ms, self.sample_rate)
    }

    pub fn hop_samples(&self) -> usize {
        ms_to_samples(self.hop_ms, self.sample_rate)
    }
}

/// What a 50 ms window contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Consonant,
    Vowel,
    Silence,
}

impl SegmentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentKind::Consonant => "consonant",
            SegmentKind::Vowel => "vowel",
            SegmentKind::Silence => "silence",
        }
    }
}

/// A labeled 50 ms slice of a parent clip.
#[derive(Debug, Clone)]
pub struct PhonemeSegment {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub kind: SegmentKind,
    /// Start time in the parent clip, seconds.
    pub source_offset: f64,
    /// Class index 0-29, once assigned by a dataset.
    pub label: Option<usize>,
}

impl PhonemeSegment {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// The three windows cut from one consonant-vowel clip.
#[derive(Debug, Clone)]
pub struct SegmentSet {
    pub consonant: PhonemeSegment,
    pub vowel: PhonemeSegment,
    pub silence: PhonemeSegment,
}

fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms / 1000.0 * sample_rate as f64).round() as usize
}

/// Computes the frame-wise RMS intensity envelope of a clip.
pub fn intensity_envelope(
    clip: &AudioClip,
    frame_ms: f64,
    hop_ms: f64,
) -> Result<Envelope, SegmentError> {
    if !(frame_ms > 0.0) || !(hop_ms > 0.0) {
        return Err(SegmentError::InvalidFrame { frame_ms, hop_ms });
    }
    let frame = ms_to_samples(frame_ms, clip.sample_rate()).max(1);
    let hop = ms_to_samples(hop_ms, clip.sample_rate()).max(1);
    let samples = clip.samples();
    if samples.len() < frame {
        return Err(SegmentError::ClipTooShort {
            samples: samples.len(),
            frame_samples: frame,
        });
    }
    let n_frames = (samples.len() - frame) / hop + 1;
    let mut values = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let window = &samples[i * hop..i * hop + frame];
        let energy: f64 = window.iter().map(|&s| s as f64 * s as f64).sum();
        values.push((energy / frame as f64).sqrt());
    }
    Ok(Envelope {
        values,
        frame_ms,
        hop_ms,
        sample_rate: clip.sample_rate(),
    })
}

/// Longest run of frames with `value > ratio * max`, as inclusive frame
/// indices. Ties break toward the earliest run.
fn supra_threshold_run(values: &[f64], ratio: f64) -> Result<(usize, usize), SegmentError> {
    if values.is_empty() {
        return Err(SegmentError::EmptyEnvelope);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SegmentError::InvalidRatio(ratio));
    }
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let threshold = ratio * max;
    let mut best: Option<(usize, usize)> = None;
    let mut start: Option<usize> = None;
    for i in 0..=values.len() {
        let above = i < values.len() && values[i] > threshold;
        match (above, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let run = (s, i - 1);
                let longer = match best {
                    None => true,
                    Some((bs, be)) => (run.1 - run.0) > (be - bs),
                };
                if longer {
                    best = Some(run);
                }
                start = None;
            }
            _ => {}
        }
    }
    best.ok_or(SegmentError::NoVowelFound)
}

/// Finds the vowel region of an intensity envelope.
///
/// Returns `(onset_s, offset_s)` in clip time: the start of the first frame
/// of the longest supra-threshold run and the end of its last frame.
pub fn detect_vowel_region(env: &Envelope, ratio: f64) -> Result<(f64, f64), SegmentError> {
    let (start, end) = supra_threshold_run(&env.values, ratio)?;
    let hop_s = env.hop_samples() as f64 / env.sample_rate as f64;
    let frame_s = env.frame_samples() as f64 / env.sample_rate as f64;
    Ok((start as f64 * hop_s, end as f64 * hop_s + frame_s))
}

fn cut(clip: &AudioClip, start: usize, len: usize, kind: SegmentKind) -> PhonemeSegment {
    PhonemeSegment {
        samples: clip.samples()[start..start + len].to_vec(),
        sample_rate: clip.sample_rate(),
        kind,
        source_offset: start as f64 / clip.sample_rate() as f64,
        label: None,
    }
}

/// Cuts the consonant, vowel, and silence windows from one clip.
///
/// The vowel window starts at the detected onset, the consonant window is
/// the 50 ms immediately before it, and the silence window is the final
/// 50 ms of the clip, which must lie entirely below the threshold.
pub fn extract_segments(clip: &AudioClip, ratio: f64) -> Result<SegmentSet, SegmentError> {
    let env = intensity_envelope(clip, DEFAULT_FRAME_MS, DEFAULT_HOP_MS)?;
    let (run_start, run_end) = supra_threshold_run(&env.values, ratio)?;
    let hop = env.hop_samples();
    let frame = env.frame_samples();
    let seg_len = (SEGMENT_SECONDS * clip.sample_rate() as f64).round() as usize;
    let rate = clip.sample_rate() as f64;

    let run_samples = (run_end - run_start) * hop + frame;
    if run_samples < seg_len {
        return Err(SegmentError::VowelTooShort {
            run_s: run_samples as f64 / rate,
        });
    }
    let onset = run_start * hop;
    if onset < seg_len {
        return Err(SegmentError::VowelTooEarly {
            onset_s: onset as f64 / rate,
        });
    }

    // Silence comes from the clip tail; every envelope frame falling fully
    // inside the final window must stay below the threshold.
    let max = env.values.iter().cloned().fold(f64::MIN, f64::max);
    let threshold = ratio * max;
    let tail_start = clip.len() - seg_len;
    for (i, &v) in env.values.iter().enumerate() {
        if i * hop >= tail_start && i * hop + frame <= clip.len() && v > threshold {
            return Err(SegmentError::NoSilenceTail);
        }
    }

    Ok(SegmentSet {
        consonant: cut(clip, onset - seg_len, seg_len, SegmentKind::Consonant),
        vowel: cut(clip, onset, seg_len, SegmentKind::Vowel),
        silence: cut(clip, tail_start, seg_len, SegmentKind::Silence),
    })
}
