//! Deterministic synthetic consonant-vowel clips, plus a corpus loader.
//!
//! Each clip mimics the corpus layout: 2 seconds at 48 kHz, a low-noise
//! floor, a shaped noise burst (the consonant) immediately before a
//! source-filter vowel (impulse train through three formant resonators),
//! and a silent tail of at least 0.25 s. Levels are engineered so the
//! relative intensity threshold always separates the parts, and every
//! sample is reproducible down to the byte from the seed.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, AudioClip, AudioError};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    SpecInvalid(String),

    #[error("directory not found: {0}")]
    DirNotFound(PathBuf),

    #[error("invalid filename pattern: {0}")]
    BadPattern(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Audio(#[from] AudioError),

    #[error("manifest parse error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Formant resonator centers and bandwidths of one vowel class, in Hz.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormantSpec {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub bw1: f64,
    pub bw2: f64,
    pub bw3: f64,
}

/// Noise-burst shape of one consonant class: two resonance bands and a
/// duration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstSpec {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    pub center2_hz: f64,
    pub bandwidth2_hz: f64,
    pub mix2: f64,
    pub duration_ms: f64,
}

/// Full description of the generator. The default tables are checked in
/// as `assets/synth_default.json` so tests can pin them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub sample_rate: u32,
    pub clip_seconds: f64,
    pub pitch_hz: f64,
    pub vowel_onset_s: f64,
    pub vowel_duration_ms: f64,
    pub attack_ms: f64,
    pub release_ms: f64,
    pub vowel_rms: f64,
    pub consonant_rms: f64,
    pub silence_rms: f64,
    /// Aspiration noise inside the vowel, relative to the voiced level.
    pub breath_level: f64,
    pub vowels: Vec<FormantSpec>,
    pub consonants: Vec<BurstSpec>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        serde_json::from_str(include_str!("../assets/synth_default.json"))
            .expect("bundled synth spec parses")
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let nyquist = self.sample_rate as f64 / 2.0;
        for (i, v) in self.vowels.iter().enumerate() {
            if [v.f1, v.f2, v.f3].iter().any(|&f| f <= 0.0 || f >= nyquist) {
                return Err(SynthError::SpecInvalid(format!(
                    "vowel {i} formants must lie in (0, {nyquist})"
                )));
            }
        }
        for (i, c) in self.consonants.iter().enumerate() {
            if c.center_hz <= 0.0
                || c.center_hz >= nyquist
                || c.center2_hz <= 0.0
                || c.center2_hz >= nyquist
            {
                return Err(SynthError::SpecInvalid(format!(
                    "consonant {i} band centers must lie in (0, {nyquist})"
                )));
            }
            if c.duration_ms <= 0.0 {
                return Err(SynthError::SpecInvalid(format!(
                    "consonant {i} duration must be positive"
                )));
            }
        }
        if self.pitch_hz <= 0.0 || self.vowel_duration_ms <= 0.0 || self.clip_seconds <= 0.0 {
            return Err(SynthError::SpecInvalid(
                "pitch, durations, and clip length must be positive".into(),
            ));
        }
        let vowel_end = self.vowel_onset_s + self.vowel_duration_ms / 1000.0;
        if self.clip_seconds - vowel_end < 0.25 {
            return Err(SynthError::SpecInvalid(
                "trailing silence must be at least 0.25 s".into(),
            ));
        }
        if self.vowel_onset_s < 0.25 {
            return Err(SynthError::SpecInvalid(
                "leading silence must be at least 0.25 s".into(),
            ));
        }
        if self.vowel_rms < 4.0 * self.silence_rms {
            return Err(SynthError::SpecInvalid(
                "vowel level must be at least 4x the silence floor".into(),
            ));
        }
        Ok(())
    }
}

/// Two-pole resonator (unity DC gain).
struct Resonator {
    a: f64,
    b: f64,
    c: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64, rate: f64) -> Self {
        let r = (-PI * bandwidth / rate).exp();
        let c = -r * r;
        let b = 2.0 * r * (2.0 * PI * freq / rate).cos();
        Self {
            a: 1.0 - b - c,
            b,
            c,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn process(&mut self, x: f64) -> f64 {
        let y = self.a * x + self.b * self.y1 + self.c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn rms(window: &[f64]) -> f64 {
    (window.iter().map(|v| v * v).sum::<f64>() / window.len().max(1) as f64).sqrt()
}

fn scale_to_rms(window: &mut [f64], target: f64) {
    let current = rms(window);
    if current > 0.0 {
        let k = target / current;
        for v in window {
            *v *= k;
        }
    }
}

/// Ground truth of a generated clip, for oracle tests.
#[derive(Debug, Clone, Copy)]
pub struct ClipTruth {
    pub vowel_onset_s: f64,
    pub vowel_end_s: f64,
    pub consonant_start_s: f64,
}

fn clip_stream_seed(spec_seed: u64, consonant: usize, vowel: usize) -> u64 {
    spec_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((consonant as u64 + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
        .wrapping_add((vowel as u64 + 1).wrapping_mul(0x1656_67B1_9E37_79F9))
}

/// Generates one consonant-vowel clip and reports the constructed timing.
pub fn synth_cv_clip_with_truth(
    consonant: usize,
    vowel: usize,
    spec: &SynthSpec,
) -> Result<(AudioClip, ClipTruth), SynthError> {
    spec.validate()?;
    let burst_spec = spec
        .consonants
        .get(consonant)
        .ok_or_else(|| SynthError::SpecInvalid(format!("no consonant profile {consonant}")))?;
    let formants = spec
        .vowels
        .get(vowel)
        .ok_or_else(|| SynthError::SpecInvalid(format!("no vowel profile {vowel}")))?;

    let rate = spec.sample_rate as f64;
    let n = (spec.clip_seconds * rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(clip_stream_seed(spec.seed, consonant, vowel));

    // Small per-clip variation: pitch, onset, level, formant drift.
    let pitch = spec.pitch_hz * rng.random_range(0.92..1.08);
    let onset_s = spec.vowel_onset_s + rng.random_range(-0.03..0.03);
    let vowel_gain = rng.random_range(0.85..1.15);
    let consonant_gain = rng.random_range(0.85..1.15);
    let drift = rng.random_range(0.97..1.03);

    let onset = (onset_s * rate).round() as usize;
    let vowel_len = (spec.vowel_duration_ms / 1000.0 * rate).round() as usize;
    let burst_len = (burst_spec.duration_ms / 1000.0 * rate).round() as usize;
    let burst_start = onset.saturating_sub(burst_len);

    // Noise floor over the whole clip.
    let silence_amp = spec.silence_rms * 3f64.sqrt();
    let mut signal: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-silence_amp..silence_amp))
        .collect();

    // Consonant: band-shaped noise burst with a smooth envelope.
    {
        let mut band1 = Resonator::new(burst_spec.center_hz, burst_spec.bandwidth_hz, rate);
        let mut band2 = Resonator::new(burst_spec.center2_hz, burst_spec.bandwidth2_hz, rate);
        let mut burst: Vec<f64> = (0..burst_len)
            .map(|i| {
                let noise = rng.random_range(-1.0..1.0);
                let shaped = band1.process(noise) + burst_spec.mix2 * band2.process(noise);
                let envelope = (PI * i as f64 / burst_len as f64).sin().powi(2);
                shaped * envelope
            })
            .collect();
        scale_to_rms(&mut burst, spec.consonant_rms * consonant_gain);
        for (i, v) in burst.into_iter().enumerate() {
            signal[burst_start + i] += v;
        }
    }

    // Vowel: pitch-periodic impulse train through cascaded formant
    // resonators, plus a little aspiration noise.
    {
        let mut r1 = Resonator::new(formants.f1 * drift, formants.bw1, rate);
        let mut r2 = Resonator::new(formants.f2 * drift, formants.bw2, rate);
        let mut r3 = Resonator::new(formants.f3 * drift, formants.bw3, rate);
        let attack = (spec.attack_ms / 1000.0 * rate).round() as usize;
        let release = (spec.release_ms / 1000.0 * rate).round() as usize;
        let mut phase = 1.0f64; // emit an impulse on the first sample
        let mut voiced: Vec<f64> = (0..vowel_len)
            .map(|i| {
                phase += pitch / rate;
                let mut source = 0.0;
                if phase >= 1.0 {
                    phase -= 1.0;
                    source = 1.0;
                }
                source += spec.breath_level * rng.random_range(-1.0..1.0);
                let y = r3.process(r2.process(r1.process(source)));
                let envelope = if i < attack {
                    i as f64 / attack as f64
                } else if i + release >= vowel_len {
                    (vowel_len - i) as f64 / release as f64
                } else {
                    1.0
                };
                y * envelope
            })
            .collect();
        scale_to_rms(&mut voiced, spec.vowel_rms * vowel_gain);
        for (i, v) in voiced.into_iter().enumerate() {
            signal[onset + i] += v;
        }
    }

    // Keep headroom; quantization to PCM16 needs |sample| <= 1.
    let peak = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.98 {
        let k = 0.98 / peak;
        for v in &mut signal {
            *v *= k;
        }
    }

    let clip = AudioClip::new(signal.iter().map(|&v| v as f32).collect(), spec.sample_rate)?;
    let truth = ClipTruth {
        vowel_onset_s: onset as f64 / rate,
        vowel_end_s: (onset + vowel_len) as f64 / rate,
        consonant_start_s: burst_start as f64 / rate,
    };
    Ok((clip, truth))
}

/// Generates one consonant-vowel clip, deterministic in
/// `(consonant, vowel, spec.seed)`.
pub fn synth_cv_clip(
    consonant: usize,
    vowel: usize,
    spec: &SynthSpec,
) -> Result<AudioClip, SynthError> {
    synth_cv_clip_with_truth(consonant, vowel, spec).map(|(clip, _)| clip)
}

/// One corpus clip on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub consonant: usize,
    pub vowel: usize,
    pub speaker: String,
}

/// Corpus index, stored as JSON lines (one entry per row).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn save_jsonl<P: AsRef<Path>>(&self, path: P) -> Result<(), SynthError> {
        let mut file = fs::File::create(path.as_ref())?;
        for entry in &self.entries {
            serde_json::to_writer(&mut file, entry)?;
            file.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load_jsonl<P: AsRef<Path>>(path: P) -> Result<Self, SynthError> {
        let file = fs::File::open(path.as_ref())?;
        let mut entries = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line)?);
        }
        Ok(Self { entries })
    }
}

/// Writes `n_consonants * n_vowels * samples_per_pair` clips under
/// `out_dir` along with per-clip seeds derived from the master seed;
/// repetition `k` plays the role of speaker `k` with its own pitch range.
pub fn build_synth_dataset(
    out_dir: &Path,
    n_consonants: usize,
    n_vowels: usize,
    samples_per_pair: usize,
    spec: &SynthSpec,
) -> Result<Manifest, SynthError> {
    if n_consonants == 0 || n_vowels == 0 || samples_per_pair == 0 {
        return Err(SynthError::SpecInvalid(
            "consonant, vowel, and per-pair counts must be positive".into(),
        ));
    }
    if n_consonants > spec.consonants.len() || n_vowels > spec.vowels.len() {
        return Err(SynthError::SpecInvalid(format!(
            "spec holds {} consonant and {} vowel profiles",
            spec.consonants.len(),
            spec.vowels.len()
        )));
    }
    fs::create_dir_all(out_dir)?;

    let mut manifest = Manifest::default();
    for k in 0..samples_per_pair {
        // Per-speaker voice: a fixed pitch factor derived from the seed.
        let mut speaker_rng =
            ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(0xA5A5_A5A5).wrapping_add(k as u64));
        let pitch_factor = speaker_rng.random_range(0.82..1.22);
        for c in 0..n_consonants {
            for v in 0..n_vowels {
                let clip_spec = SynthSpec {
                    seed: spec
                        .seed
                        .wrapping_add((k as u64 + 1).wrapping_mul(0x5851_F42D_4C95_7F2D)),
                    pitch_hz: spec.pitch_hz * pitch_factor,
                    ..spec.clone()
                };
                let clip = synth_cv_clip(c, v, &clip_spec)?;
                let name = format!("c{c:02}_v{v}_s{k:02}.wav");
                let path = out_dir.join(&name);
                write_wav(&clip, &path)?;
                manifest.entries.push(ManifestEntry {
                    path: path.to_string_lossy().into_owned(),
                    consonant: c,
                    vowel: v,
                    speaker: format!("s{k:02}"),
                });
            }
        }
    }
    Ok(manifest)
}

/// Default filename pattern for corpus discovery: `c<N>_v<N>_s<ID>.wav`.
pub const DEFAULT_PCVC_PATTERN: &str =
    r"c(?P<consonant>\d+)[_-]v(?P<vowel>\d+)[_-](?P<speaker>[A-Za-z0-9]+)\.wav$";

fn walk_wavs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), SynthError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            walk_wavs(&path, out)?;
        } else if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        {
            out.push(path);
        }
    }
    Ok(())
}

/// Scans a corpus directory for WAV files whose names match `pattern`
/// (default [`DEFAULT_PCVC_PATTERN`]); the regex must provide `consonant`,
/// `vowel`, and `speaker` capture groups. Non-matching files are skipped
/// with a warning.
pub fn load_pcvc(root: &Path, pattern: Option<&str>) -> Result<Manifest, SynthError> {
    if !root.is_dir() {
        return Err(SynthError::DirNotFound(root.to_path_buf()));
    }
    let regex = regex::Regex::new(pattern.unwrap_or(DEFAULT_PCVC_PATTERN))
        .map_err(|e| SynthError::BadPattern(e.to_string()))?;
    for group in ["consonant", "vowel", "speaker"] {
        if !regex.capture_names().flatten().any(|n| n == group) {
            return Err(SynthError::BadPattern(format!(
                "pattern must name a `{group}` capture group"
            )));
        }
    }

    let mut files = Vec::new();
    walk_wavs(root, &mut files)?;
    let mut manifest = Manifest::default();
    let mut per_speaker: std::collections::BTreeMap<String, usize> = Default::default();
    for path in files {
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        let Some(captures) = regex.captures(&name) else {
            log::warn!("skipping {}: does not match the filename pattern", name);
            continue;
        };
        let parse = |group: &str| captures[group].parse::<usize>().ok();
        let (Some(consonant), Some(vowel)) = (parse("consonant"), parse("vowel")) else {
            log::warn!("skipping {}: non-numeric class fields", name);
            continue;
        };
        let speaker = captures["speaker"].to_string();
        *per_speaker.entry(speaker.clone()).or_default() += 1;
        manifest.entries.push(ManifestEntry {
            path: path.to_string_lossy().into_owned(),
            consonant,
            vowel,
            speaker,
        });
    }
    for (speaker, count) in &per_speaker {
        log::info!("speaker {speaker}: {count} clips");
    }
    Ok(manifest)
}
