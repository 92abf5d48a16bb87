//! Consonant-vowel phoneme recognition pipeline.
//!
//! The crate covers the full path from raw 2-second recordings to a trained
//! classifier: WAV I/O, intensity-based segmentation into 50 ms phoneme
//! windows, optional adaptive noise cancellation, STFT feature extraction
//! into fixed 100x150 matrices, and a from-scratch CNN (tensors, layers,
//! backprop, Adam) assembled into the PPNet architecture with the usual
//! precision/recall/F1 evaluation. A deterministic synthetic corpus
//! generator makes the whole pipeline testable without the real dataset.

pub mod anc;
pub mod audio;
pub mod config;
pub mod container;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod segment;
pub mod stft;
pub mod synth;

pub use anc::{nlms_cancel, AncConfig, AncError};
pub use audio::{read_wav, write_wav, AudioClip, AudioError};
pub use config::{ConfigError, RunConfig};
pub use container::{
    read_checkpoint, read_tensor, write_checkpoint, write_tensor, ContainerError,
};
pub use metrics::MetricsReport;
pub use model::{
    build_ppnet, evaluate, predict, stratified_split, train, LabeledDataset, ModelError,
    PpnetConfig, TrainHistory,
};
pub use nn::{
    conv_output_shape, gradient_check, param_count, AdamParams, AdamState, LayerSpec, Network,
    NnError, Tensor,
};
pub use segment::{
    detect_vowel_region, extract_segments, intensity_envelope, Envelope, PhonemeSegment,
    SegmentError, SegmentKind, SegmentSet,
};
pub use stft::{aggregate_ranges, featurize, stft_magnitudes, FeatureMatrix, StftConfig, StftError};
pub use synth::{
    build_synth_dataset, load_pcvc, synth_cv_clip, Manifest, ManifestEntry, SynthError, SynthSpec,
};
