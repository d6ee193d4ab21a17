//! Windowed-sinc sample-rate conversion.
//!
//! Rational rate pairs use a polyphase bank: the rate ratio is reduced to
//! `L/M` and one normalized kernel is precomputed for each of the `L` output
//! phases. Irrational ratios (and rational ones with too many phases) fall
//! back to an oversampled kernel table with linear interpolation.

use serde::{Deserialize, Serialize};

use super::{AudioClip, AudioError};

/// Kaiser window shape parameter.
const KAISER_BETA: f64 = 8.6;
/// Cutoff as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.95;
/// Largest polyphase bank built before switching to the interpolated kernel.
const MAX_PHASES: u64 = 4096;
/// Kernel table points per input sample for the interpolated path.
const OVERSAMPLE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResampleSpec {
    pub target_rate: u32,
    /// Zero crossings spanned by the anti-alias kernel. Must be even and ≥ 16.
    pub filter_taps: usize,
}

impl Default for ResampleSpec {
    fn default() -> Self {
        Self {
            target_rate: 16000,
            filter_taps: 128,
        }
    }
}

impl ResampleSpec {
    pub fn to_rate(target_rate: u32) -> Self {
        Self {
            target_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AudioError> {
        if self.target_rate == 0 {
            return Err(AudioError::InvalidSpec("target rate is zero".into()));
        }
        if self.filter_taps < 16 || !self.filter_taps.is_multiple_of(2) {
            return Err(AudioError::InvalidSpec(format!(
                "filter_taps must be even and at least 16, got {}",
                self.filter_taps
            )));
        }
        Ok(())
    }
}

fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= half / k as f64;
        let t2 = term * term;
        sum += t2;
        if t2 < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Lowpass kernel in units of input samples.
#[derive(Debug, Clone, Copy)]
struct SincKernel {
    /// Cutoff in cycles per input sample, times two (1.0 = input Nyquist).
    cutoff: f64,
    half_width: f64,
    i0_beta: f64,
}

impl SincKernel {
    fn new(ratio: f64, taps: usize) -> Self {
        let cutoff = ROLLOFF * ratio.min(1.0);
        Self {
            cutoff,
            half_width: taps as f64 / 2.0 / cutoff,
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    fn reach(&self) -> isize {
        self.half_width.ceil() as isize
    }

    fn eval(&self, tau: f64) -> f64 {
        let x = tau / self.half_width;
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - x * x).sqrt()) / self.i0_beta;
        let arg = self.cutoff * tau;
        let sinc = if arg.abs() < 1e-12 {
            1.0
        } else {
            (std::f64::consts::PI * arg).sin() / (std::f64::consts::PI * arg)
        };
        self.cutoff * sinc * window
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn tap(input: &[f64], idx: isize) -> f64 {
    if idx < 0 {
        0.0
    } else {
        input.get(idx as usize).copied().unwrap_or(0.0)
    }
}

/// Polyphase conversion by the rational factor `up / down`.
fn polyphase(input: &[f64], up: u64, down: u64, taps: usize, out_len: usize) -> Vec<f64> {
    let kernel = SincKernel::new(up as f64 / down as f64, taps);
    let reach = kernel.reach();
    let width = (2 * reach) as usize;

    // bank[p][j] weights input[base + j - reach + 1] for phase offset p/up
    let bank: Vec<Vec<f64>> = (0..up)
        .map(|p| {
            let frac = p as f64 / up as f64;
            let mut w: Vec<f64> = (0..width)
                .map(|j| kernel.eval((j as isize - reach + 1) as f64 - frac))
                .collect();
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= sum);
            w
        })
        .collect();

    (0..out_len as u64)
        .map(|n| {
            let pos = n * down;
            let base = (pos / up) as isize;
            let weights = &bank[(pos % up) as usize];
            weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * tap(input, base + j as isize - reach + 1))
                .sum()
        })
        .collect()
}

/// Converts `input` so that output sample `n` sits at input position `n / ratio`.
///
/// Output length is `round(len * ratio)`. Used for non-integer rate changes
/// such as pitch-shift compensation.
pub fn resample_by_ratio(input: &[f64], ratio: f64, taps: usize) -> Vec<f64> {
    assert!(ratio > 0.0 && ratio.is_finite(), "ratio must be positive");
    let out_len = (input.len() as f64 * ratio).round() as usize;
    let kernel = SincKernel::new(ratio, taps);
    let reach = kernel.reach();

    let table_len = (kernel.half_width * OVERSAMPLE as f64).ceil() as usize + 2;
    let table: Vec<f64> = (0..table_len)
        .map(|i| kernel.eval(i as f64 / OVERSAMPLE as f64))
        .collect();
    let lookup = |tau: f64| -> f64 {
        let pos = tau.abs() * OVERSAMPLE as f64;
        let i = pos.floor() as usize;
        if i + 1 >= table_len {
            return 0.0;
        }
        let f = pos - i as f64;
        table[i] * (1.0 - f) + table[i + 1] * f
    };

    (0..out_len)
        .map(|n| {
            let t = n as f64 / ratio;
            let base = t.floor() as isize;
            let frac = t - base as f64;
            let mut acc = 0.0;
            let mut norm = 0.0;
            for k in (1 - reach)..=reach {
                let w = lookup(k as f64 - frac);
                acc += w * tap(input, base + k);
                norm += w;
            }
            acc / norm
        })
        .collect()
}

/// Converts a clip to `spec.target_rate`.
///
/// Output length is `round(len * target / source)`. Equal rates return the
/// samples unchanged.
pub fn resample(clip: &AudioClip, spec: &ResampleSpec) -> Result<AudioClip, AudioError> {
    spec.validate()?;
    if clip.sample_rate == 0 {
        return Err(AudioError::InvalidClip("sample rate is zero".into()));
    }
    if clip.sample_rate == spec.target_rate {
        return Ok(clip.clone());
    }
    let (src, dst) = (clip.sample_rate as u64, spec.target_rate as u64);
    let g = gcd(src, dst);
    let (up, down) = (dst / g, src / g);
    let out_len = ((clip.len() as u64 * dst + src / 2) / src) as usize;

    let samples = if up <= MAX_PHASES {
        polyphase(&clip.samples, up, down, spec.filter_taps, out_len)
    } else {
        let mut s = resample_by_ratio(&clip.samples, dst as f64 / src as f64, spec.filter_taps);
        s.resize(out_len, 0.0);
        s
    };
    Ok(AudioClip {
        samples,
        sample_rate: spec.target_rate,
        source_id: clip.source_id.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, rate: u32, secs: f64) -> AudioClip {
        let n = (rate as f64 * secs) as usize;
        let s = (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect();
        AudioClip::new(s, rate, "tone")
    }

    /// Least-squares amplitude of a known-frequency sinusoid over the interior.
    fn amplitude_at(samples: &[f64], freq: f64, rate: u32) -> f64 {
        let skip = samples.len() / 10;
        let body = &samples[skip..samples.len() - skip];
        let (mut c, mut s) = (0.0, 0.0);
        for (i, x) in body.iter().enumerate() {
            let ph = 2.0 * PI * freq * (i + skip) as f64 / rate as f64;
            c += x * ph.cos();
            s += x * ph.sin();
        }
        2.0 * (c * c + s * s).sqrt() / body.len() as f64
    }

    #[test]
    fn length_44100_to_16000() {
        let out = resample(&tone(1000.0, 44100, 1.0), &ResampleSpec::default()).unwrap();
        assert_eq!(out.sample_rate, 16000);
        assert!((out.len() as i64 - 16000).abs() <= 2);
    }

    #[test]
    fn identity_rate_is_untouched() {
        let clip = tone(300.0, 16000, 0.1);
        let out = resample(&clip, &ResampleSpec::default()).unwrap();
        assert_eq!(out, clip);
    }

    #[test]
    fn rejects_bad_spec() {
        let clip = tone(300.0, 16000, 0.1);
        let zero = ResampleSpec { target_rate: 0, filter_taps: 64 };
        assert!(matches!(resample(&clip, &zero), Err(AudioError::InvalidSpec(_))));
        let odd = ResampleSpec { target_rate: 8000, filter_taps: 17 };
        assert!(matches!(resample(&clip, &odd), Err(AudioError::InvalidSpec(_))));
    }

    #[test]
    fn passband_tones_keep_amplitude() {
        // 0.45 of the lower Nyquist (8 kHz) and a low tone, up and down
        for &(freq, from, to) in &[
            (3600.0, 44100, 16000),
            (1000.0, 44100, 16000),
            (3600.0, 16000, 48000),
            (250.0, 22050, 16000),
        ] {
            let out = resample(&tone(freq, from, 0.5), &ResampleSpec::to_rate(to)).unwrap();
            let amp = amplitude_at(&out.samples, freq, to);
            let db = 20.0 * amp.log10();
            assert!(db.abs() < 0.5, "{freq} Hz {from}->{to}: {db} dB");
        }
    }

    #[test]
    fn aliasing_tone_is_removed() {
        // 12 kHz is above the 8 kHz output Nyquist
        let out = resample(&tone(12000.0, 44100, 0.5), &ResampleSpec::default()).unwrap();
        let interior = AudioClip::new(out.samples[400..out.len() - 400].to_vec(), 16000, "i");
        let level = crate::audio::rms(&interior);
        assert!(level < 1e-3, "{level}");
    }

    #[test]
    fn large_phase_count_uses_interpolated_path() {
        // 44101/16000 reduces to 16000 phases
        let out = resample(&tone(1000.0, 44101, 0.5), &ResampleSpec::default()).unwrap();
        assert_eq!(out.len(), (44101.0_f64 * 0.5 * 16000.0 / 44101.0).round() as usize);
        let db = 20.0 * amplitude_at(&out.samples, 1000.0, 16000).log10();
        assert!(db.abs() < 0.5, "{db}");
    }

    #[test]
    fn ratio_path_matches_polyphase() {
        let clip = tone(700.0, 32000, 0.2);
        let poly = resample(&clip, &ResampleSpec::to_rate(16000)).unwrap();
        let ratio = resample_by_ratio(&clip.samples, 0.5, 128);
        assert_eq!(poly.len(), ratio.len());
        let max_diff = poly
            .samples
            .iter()
            .zip(&ratio)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_diff < 1e-4, "{max_diff}");
    }

    #[test]
    fn bessel_i0_reference_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008).abs() < 1e-12);
        assert!((bessel_i0(8.6) - 750.461_159_563_165_9).abs() / 750.46 < 1e-6);
    }
}
