//! Seeded audio augmentations: band-stop filtering, multiplicative noise and
//! pitch shifting.
//!
//! Every transform is a pure function of the input clip, its spec, the run
//! [`Seed`], the clip's `source_id` and the augmentation tag.

mod band_stop;
mod noise;
mod pitch;
mod rng;

pub use band_stop::{band_stop, band_stop_with, BandStopParams, BandStopSpec, NotchCascade};
pub use noise::{noise_inject, NoiseSpec};
pub use pitch::{pitch_shift, pitch_shift_by, PhaseVocoder, PitchShiftSpec};
pub use rng::Seed;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio::AudioError;

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("clip too short: {len} samples, need at least {needed}")]
    ClipTooShort { len: usize, needed: usize },
    #[error("unknown augmentation tag {0:?}")]
    UnknownTag(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

impl AugmentError {
    /// Stable variant name, for error reporting across process boundaries.
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidSpec(_) => "InvalidSpec",
            Self::ClipTooShort { .. } => "ClipTooShort",
            Self::UnknownTag(_) => "UnknownTag",
            Self::Audio(_) => "AudioError",
        }
    }
}

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
pub struct Interval<T: Copy> {
    pub lo: T,
    pub hi: T,
}

impl<T: Copy> Interval<T> {
    pub const fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }
}

impl<T: Copy> From<[T; 2]> for Interval<T> {
    fn from([lo, hi]: [T; 2]) -> Self {
        Self { lo, hi }
    }
}

impl<T: Copy> From<Interval<T>> for [T; 2] {
    fn from(i: Interval<T>) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval<f64> {
    /// Uniform draw; a degenerate interval returns `lo` exactly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.lo + (self.hi - self.lo) * rng.random::<f64>()
    }
}

pub const TAG_BAND_STOP: &str = "bs";
pub const TAG_NOISE: &str = "gn";
pub const TAG_PITCH_SHIFT: &str = "ps";

/// One augmentation with its parameter ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentationSpec {
    BandStop(BandStopSpec),
    NoiseInject(NoiseSpec),
    PitchShift(PitchShiftSpec),
}

impl AugmentationSpec {
    /// Short stable name used in file names and plans.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::BandStop(_) => TAG_BAND_STOP,
            Self::NoiseInject(_) => TAG_NOISE,
            Self::PitchShift(_) => TAG_PITCH_SHIFT,
        }
    }

    /// Default spec for a tag.
    pub fn from_tag(tag: &str) -> Result<Self, AugmentError> {
        match tag {
            TAG_BAND_STOP => Ok(Self::BandStop(BandStopSpec::default())),
            TAG_NOISE => Ok(Self::NoiseInject(NoiseSpec::default())),
            TAG_PITCH_SHIFT => Ok(Self::PitchShift(PitchShiftSpec::default())),
            other => Err(AugmentError::UnknownTag(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        match self {
            Self::BandStop(s) => s.validate(),
            Self::NoiseInject(s) => s.validate(),
            Self::PitchShift(s) => s.validate(),
        }
    }
}

/// Applies `spec` to `clip` using the random stream for `(seed, clip.source_id, tag)`.
pub fn apply(
    clip: &crate::audio::AudioClip,
    spec: &AugmentationSpec,
    seed: Seed,
) -> Result<crate::audio::AudioClip, AugmentError> {
    let mut rng = seed.stream(&clip.source_id, spec.tag());
    match spec {
        AugmentationSpec::BandStop(s) => band_stop(clip, s, &mut rng),
        AugmentationSpec::NoiseInject(s) => noise_inject(clip, s, &mut rng),
        AugmentationSpec::PitchShift(s) => pitch_shift(clip, s, &mut rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::AudioClip;
    use std::f64::consts::PI;

    fn voice_like(id: &str) -> AudioClip {
        let s = (0..16000)
            .map(|i| {
                let t = i as f64 / 16000.0;
                0.3 * (2.0 * PI * 220.0 * t).sin()
                    + 0.2 * (2.0 * PI * 660.0 * t).sin()
                    + 0.1 * (2.0 * PI * 1800.0 * t).sin()
            })
            .collect();
        AudioClip::new(s, 16000, id)
    }

    #[test]
    fn apply_is_deterministic() {
        let clip = voice_like("c1");
        for tag in [TAG_BAND_STOP, TAG_NOISE, TAG_PITCH_SHIFT] {
            let spec = AugmentationSpec::from_tag(tag).unwrap();
            let a = apply(&clip, &spec, Seed(11)).unwrap();
            let b = apply(&clip, &spec, Seed(11)).unwrap();
            assert_eq!(a, b, "{tag}");
        }
    }

    #[test]
    fn noise_on_silence_is_silence() {
        let clip = AudioClip::new(vec![0.0; 4000], 16000, "z");
        let spec = AugmentationSpec::from_tag(TAG_NOISE).unwrap();
        let out = apply(&clip, &spec, Seed(5)).unwrap();
        assert!(out.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pitch_shift_varies_with_seed() {
        let clip = voice_like("p");
        let spec = AugmentationSpec::from_tag(TAG_PITCH_SHIFT).unwrap();
        let outputs: Vec<Vec<f64>> = (0..20)
            .map(|s| apply(&clip, &spec, Seed(s)).unwrap().samples)
            .collect();
        let distinct = outputs
            .iter()
            .enumerate()
            .filter(|(i, o)| outputs[..*i].iter().all(|p| p != *o))
            .count();
        assert!(distinct >= 2, "{distinct}");
    }

    #[test]
    fn no_value_explosion() {
        let clip = voice_like("v");
        let peak = clip.peak();
        for tag in [TAG_BAND_STOP, TAG_NOISE, TAG_PITCH_SHIFT] {
            let spec = AugmentationSpec::from_tag(tag).unwrap();
            for seed in 0..5 {
                let out = apply(&clip, &spec, Seed(seed)).unwrap();
                assert!(out.peak() <= 1.5 * peak, "{tag} seed {seed}: {}", out.peak());
            }
        }
    }

    #[test]
    fn unknown_tag() {
        assert!(matches!(
            AugmentationSpec::from_tag("xx"),
            Err(AugmentError::UnknownTag(_))
        ));
    }

    #[test]
    fn spec_serde_shape() {
        let spec = AugmentationSpec::from_tag(TAG_NOISE).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"noise_inject","factor_range":[0.001,0.03],"symmetric":false}"#
        );
        let back: AugmentationSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
