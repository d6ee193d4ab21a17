//! Mono PCM audio clips, WAV I/O, sample-rate conversion and silence QC.

mod resample;
mod wav;

pub use resample::{resample, resample_by_ratio, ResampleSpec};
pub use wav::{read_wav, write_wav};

use std::path::PathBuf;

/// Default silence threshold in dBFS.
pub const DEFAULT_SILENCE_DB: f64 = -50.0;

/// Floor applied to the RMS before converting to decibels.
const RMS_FLOOR: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("invalid resample spec: {0}")]
    InvalidSpec(String),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A single-channel waveform.
///
/// Samples are nominally in `[-1, 1]` and always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub source_id: String,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32, source_id: impl Into<String>) -> Self {
        Self {
            samples,
            sample_rate,
            source_id: source_id.into(),
        }
    }

    /// Checks the clip invariants: positive rate and finite samples.
    pub fn validate(&self) -> Result<(), AudioError> {
        if self.sample_rate == 0 {
            return Err(AudioError::InvalidClip("sample rate is zero".into()));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidClip(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(())
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

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Returns a clip with the same rate and id but new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
            source_id: self.source_id.clone(),
        }
    }
}

/// Root mean square of the samples, 0 for an empty clip.
pub fn rms(clip: &AudioClip) -> f64 {
    if clip.samples.is_empty() {
        return 0.0;
    }
    let sum_sq: f64 = clip.samples.iter().map(|s| s * s).sum();
    (sum_sq / clip.samples.len() as f64).sqrt()
}

/// Clip level in dBFS, floored at -200 dB.
pub fn level_db(clip: &AudioClip) -> f64 {
    20.0 * rms(clip).max(RMS_FLOOR).log10()
}

/// True when the whole-clip RMS level is below `threshold_db` dBFS.
pub fn detect_silence(clip: &AudioClip, threshold_db: f64) -> bool {
    level_db(clip) < threshold_db
}
