//! Band-stop augmentation built from cascaded second-order notch sections.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AugmentError, Interval};
use crate::audio::AudioClip;

/// Highest frequency a stopband edge may reach, in Hz.
pub const MAX_STOP_HZ: f64 = 4000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandStopSpec {
    /// Range the notch center is drawn from, in Hz.
    pub center_hz_range: Interval<f64>,
    /// Range of stopband width divided by center frequency (0 to 2).
    pub bandwidth_fraction_range: Interval<f64>,
    /// Minimum attenuation at the center frequency.
    pub steepness_db: f64,
    /// Number of cascaded notch sections.
    pub sections: u32,
}

impl Default for BandStopSpec {
    fn default() -> Self {
        Self {
            center_hz_range: Interval::new(200.0, 4000.0),
            bandwidth_fraction_range: Interval::new(0.25, 1.0),
            steepness_db: 30.0,
            sections: 2,
        }
    }
}

impl BandStopSpec {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let c = self.center_hz_range;
        let b = self.bandwidth_fraction_range;
        if !(c.lo > 0.0 && c.lo <= c.hi && c.hi <= MAX_STOP_HZ) {
            return Err(AugmentError::InvalidSpec(format!(
                "center range [{}, {}] must lie within (0, {MAX_STOP_HZ}]",
                c.lo, c.hi
            )));
        }
        if !(b.lo >= 0.0 && b.lo <= b.hi && b.hi <= 2.0) {
            return Err(AugmentError::InvalidSpec(format!(
                "bandwidth fraction range [{}, {}] must lie within [0, 2]",
                b.lo, b.hi
            )));
        }
        if !(self.steepness_db > 0.0 && self.steepness_db.is_finite()) {
            return Err(AugmentError::InvalidSpec("steepness_db must be positive".into()));
        }
        if self.sections == 0 {
            return Err(AugmentError::InvalidSpec("sections must be at least 1".into()));
        }
        Ok(())
    }
}

/// One concrete draw from a [`BandStopSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandStopParams {
    pub center_hz: f64,
    pub bandwidth_fraction: f64,
}

impl BandStopParams {
    pub fn draw<R: Rng>(spec: &BandStopSpec, rng: &mut R) -> Self {
        Self {
            center_hz: spec.center_hz_range.sample(rng),
            bandwidth_fraction: spec.bandwidth_fraction_range.sample(rng),
        }
    }

    /// Stopband edges, clamped to `(0, MAX_STOP_HZ]`.
    pub fn stopband(&self) -> (f64, f64) {
        let half = self.bandwidth_fraction / 2.0;
        let lo = (self.center_hz * (1.0 - half)).max(f64::MIN_POSITIVE);
        let hi = (self.center_hz * (1.0 + half)).min(MAX_STOP_HZ);
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn notch(center_hz: f64, sample_rate: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * center_hz / sample_rate;
        let alpha = w0.sin() / (2.0 * q);
        let cos = w0.cos();
        let a0 = 1.0 + alpha;
        Self {
            b: [1.0 / a0, -2.0 * cos / a0, 1.0 / a0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    /// Transposed direct form II.
    fn process(&self, samples: &mut [f64]) {
        let (mut z1, mut z2) = (0.0, 0.0);
        for x in samples.iter_mut() {
            let y = self.b[0] * *x + z1;
            z1 = self.b[1] * *x - self.a[0] * y + z2;
            z2 = self.b[2] * *x - self.a[1] * y;
            *x = y;
        }
    }

    fn magnitude(&self, w: f64) -> f64 {
        // |B(e^jw)| / |A(e^jw)|
        let eval = |c0: f64, c1: f64, c2: f64| {
            let re = c0 + c1 * w.cos() + c2 * (2.0 * w).cos();
            let im = -c1 * w.sin() - c2 * (2.0 * w).sin();
            (re * re + im * im).sqrt()
        };
        eval(self.b[0], self.b[1], self.b[2]) / eval(1.0, self.a[0], self.a[1])
    }
}

/// A designed notch cascade for one clip.
#[derive(Debug, Clone)]
pub struct NotchCascade {
    sections: Vec<Biquad>,
    sample_rate: f64,
}

impl NotchCascade {
    /// Designs `sections` identical notches at the band center. Each section's
    /// Q is narrowed so that the whole cascade is 3 dB down at the stopband
    /// edges. Returns `None` for a zero-width band.
    pub fn design(params: &BandStopParams, sections: u32, sample_rate: u32) -> Option<Self> {
        let (lo, hi) = params.stopband();
        let width = hi - lo;
        if !(width > 0.0) || params.bandwidth_fraction <= 0.0 {
            return None;
        }
        let single_q = params.center_hz / width;
        // per-section power gain at the edges so the product is one half
        let g2 = 0.5f64.powf(1.0 / sections as f64);
        let q = single_q * (g2 / (1.0 - g2)).sqrt();
        let section = Biquad::notch(params.center_hz, sample_rate as f64, q);
        Some(Self {
            sections: vec![section; sections as usize],
            sample_rate: sample_rate as f64,
        })
    }

    /// Steady-state gain of the cascade at `freq_hz`, in dB.
    pub fn response_db(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate;
        let mag: f64 = self.sections.iter().map(|s| s.magnitude(w)).product();
        20.0 * mag.max(1e-300).log10()
    }

    pub fn process(&self, samples: &mut [f64]) {
        for s in &self.sections {
            s.process(samples);
        }
    }
}

/// Applies the band-stop filter for fixed parameters.
pub fn band_stop_with(
    clip: &AudioClip,
    spec: &BandStopSpec,
    params: &BandStopParams,
) -> Result<AudioClip, AugmentError> {
    spec.validate()?;
    let nyquist = clip.sample_rate as f64 / 2.0;
    if spec.center_hz_range.hi >= nyquist || params.center_hz >= nyquist {
        return Err(AugmentError::InvalidSpec(format!(
            "center frequency up to {} Hz is not below Nyquist ({nyquist} Hz)",
            spec.center_hz_range.hi.max(params.center_hz)
        )));
    }
    let Some(cascade) = NotchCascade::design(params, spec.sections, clip.sample_rate) else {
        return Ok(clip.clone());
    };
    if cascade.response_db(params.center_hz) > -spec.steepness_db {
        return Err(AugmentError::InvalidSpec(format!(
            "designed notch does not reach {} dB at {} Hz",
            spec.steepness_db, params.center_hz
        )));
    }
    let mut samples = clip.samples.clone();
    cascade.process(&mut samples);
    Ok(clip.with_samples(samples))
}

/// Draws a center and bandwidth, then filters the clip.
pub fn band_stop<R: Rng>(
    clip: &AudioClip,
    spec: &BandStopSpec,
    rng: &mut R,
) -> Result<AudioClip, AugmentError> {
    spec.validate()?;
    let params = BandStopParams::draw(spec, rng);
    band_stop_with(clip, spec, &params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cascade(center: f64, b: f64) -> NotchCascade {
        let p = BandStopParams {
            center_hz: center,
            bandwidth_fraction: b,
        };
        NotchCascade::design(&p, 2, 16000).unwrap()
    }

    #[test]
    fn edges_are_three_db_down() {
        let c = cascade(1000.0, 0.5);
        // analog notch edges sit geometrically around the center:
        // hi - lo = 500 Hz, hi * lo = 1000^2
        let lo = 1000.0 * ((1.0f64 + 1.0 / 16.0).sqrt() - 0.25);
        for f in [lo, lo + 500.0] {
            let db = c.response_db(f);
            assert!((-3.5..-2.5).contains(&db), "{f} Hz: {db} dB");
        }
    }

    #[test]
    fn response_is_deep_at_center_and_flat_far_away() {
        let c = cascade(1000.0, 0.5);
        assert!(c.response_db(1000.0) < -100.0);
        assert!(c.response_db(3500.0).abs() < 1.0);
        assert!(c.response_db(5000.0).abs() < 0.5);
        assert!(c.response_db(150.0).abs() < 0.5);
    }

    #[test]
    fn zero_width_is_identity() {
        let p = BandStopParams {
            center_hz: 1000.0,
            bandwidth_fraction: 0.0,
        };
        assert!(NotchCascade::design(&p, 2, 16000).is_none());
    }

    #[test]
    fn stopband_is_clamped() {
        let p = BandStopParams {
            center_hz: 3000.0,
            bandwidth_fraction: 2.0,
        };
        let (lo, hi) = p.stopband();
        assert!(lo > 0.0);
        assert_eq!(hi, MAX_STOP_HZ);
    }

    #[test]
    fn center_above_nyquist_is_rejected() {
        let clip = AudioClip::new(vec![0.0; 100], 6000, "x");
        let err = band_stop_with(
            &clip,
            &BandStopSpec::default(),
            &BandStopParams {
                center_hz: 1000.0,
                bandwidth_fraction: 0.5,
            },
        );
        assert!(matches!(err, Err(AugmentError::InvalidSpec(_))));
    }

    #[test]
    fn spec_validation() {
        let mut spec = BandStopSpec::default();
        spec.center_hz_range = Interval::new(100.0, 5000.0);
        assert!(spec.validate().is_err());
        let mut spec = BandStopSpec::default();
        spec.bandwidth_fraction_range = Interval::new(0.5, 2.5);
        assert!(spec.validate().is_err());
        let mut spec = BandStopSpec::default();
        spec.sections = 0;
        assert!(spec.validate().is_err());
        assert!(BandStopSpec::default().validate().is_ok());
    }
}
