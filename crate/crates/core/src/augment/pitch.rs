//! Duration-preserving pitch shift: phase-vocoder time stretch followed by
//! resampling back to the original length.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{AugmentError, Interval};
use crate::audio::{resample_by_ratio, AudioClip};

const RESAMPLE_TAPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PitchShiftSpec {
    /// Semitone range; zero is never drawn.
    pub semitone_range: Interval<i32>,
    pub fft_size: usize,
    pub hop: usize,
}

impl Default for PitchShiftSpec {
    fn default() -> Self {
        Self {
            semitone_range: Interval::new(-6, 6),
            fft_size: 2048,
            hop: 512,
        }
    }
}

impl PitchShiftSpec {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let r = self.semitone_range;
        if !(r.lo <= r.hi && r.lo >= -12 && r.hi <= 12) {
            return Err(AugmentError::InvalidSpec(format!(
                "semitone range [{}, {}] must lie within [-12, 12]",
                r.lo, r.hi
            )));
        }
        if r.lo == 0 && r.hi == 0 {
            return Err(AugmentError::InvalidSpec(
                "semitone range contains no non-zero shift".into(),
            ));
        }
        if !self.fft_size.is_power_of_two() || self.fft_size < 16 {
            return Err(AugmentError::InvalidSpec(format!(
                "fft_size {} must be a power of two >= 16",
                self.fft_size
            )));
        }
        if self.hop == 0 || !self.fft_size.is_multiple_of(self.hop) {
            return Err(AugmentError::InvalidSpec(format!(
                "hop {} must divide fft_size {}",
                self.hop, self.fft_size
            )));
        }
        Ok(())
    }

    /// Draws a non-zero semitone count uniformly from the range.
    pub fn draw_semitones<R: Rng>(&self, rng: &mut R) -> i32 {
        let r = self.semitone_range;
        let choices = (r.hi - r.lo + 1) - i32::from(r.lo <= 0 && r.hi >= 0);
        let mut s = r.lo + rng.random_range(0..choices);
        if r.lo <= 0 && s >= 0 {
            s += 1;
        }
        s
    }
}

fn hann(n: usize) -> Vec<f64> {
    // periodic Hann: constant overlap-add at hops of n/4
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Local maxima of the magnitude spectrum (strictly above both neighbours).
fn find_peaks(mag: &[f64], peaks: &mut Vec<usize>) {
    peaks.clear();
    let floor = mag.iter().cloned().fold(0.0, f64::max) * 1e-6;
    for j in 0..mag.len() {
        let left = if j == 0 { 0.0 } else { mag[j - 1] };
        let right = mag.get(j + 1).copied().unwrap_or(0.0);
        if mag[j] > floor && mag[j] > left && mag[j] >= right {
            peaks.push(j);
        }
    }
}

fn wrap_phase(p: f64) -> f64 {
    p - 2.0 * PI * (p / (2.0 * PI)).round()
}

/// STFT time stretcher with per-bin phase accumulation.
pub struct PhaseVocoder {
    fft_size: usize,
    hop: usize,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PhaseVocoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhaseVocoder")
            .field("fft_size", &self.fft_size)
            .field("hop", &self.hop)
            .finish()
    }
}

impl PhaseVocoder {
    pub fn new(fft_size: usize, hop: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fft_size,
            hop,
            window: hann(fft_size),
            forward: planner.plan_fft_forward(fft_size),
            inverse: planner.plan_fft_inverse(fft_size),
        }
    }

    /// Stretches `input` by `rate` (> 1 lengthens) without changing pitch.
    /// Output length is `round(len * rate)`.
    pub fn time_stretch(&self, input: &[f64], rate: f64) -> Vec<f64> {
        let n = self.fft_size;
        let half = n / 2;
        let bins = half + 1;
        let syn_hop = self.hop;
        let ana_hop = syn_hop as f64 / rate;
        let out_len = (input.len() as f64 * rate).round() as usize;
        let frames = (out_len + half).div_ceil(syn_hop) + 1;

        // frame k is centered on input[ana_pos(k)] and output[k * syn_hop]
        let ana_pos = |k: usize| (k as f64 * ana_hop).round() as isize;

        let mut out = vec![0.0; frames * syn_hop + n];
        let mut norm = vec![0.0; out.len()];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut mag = vec![0.0; bins];
        let mut phase = vec![0.0; bins];
        let mut prev_phase = vec![0.0; bins];
        let mut syn_phase = vec![0.0; bins];
        let mut prev_syn_phase = vec![0.0; bins];
        let mut peak_phase = vec![0.0; bins];
        let mut peaks = Vec::with_capacity(bins);

        for k in 0..frames {
            let center = ana_pos(k);
            for (i, slot) in buf.iter_mut().enumerate() {
                let idx = center - half as isize + i as isize;
                let x = if idx >= 0 && (idx as usize) < input.len() {
                    input[idx as usize]
                } else {
                    0.0
                };
                *slot = Complex::new(x * self.window[i], 0.0);
            }
            self.forward.process(&mut buf);

            let step = if k == 0 {
                0
            } else {
                center - ana_pos(k - 1)
            };
            for j in 0..bins {
                mag[j] = buf[j].norm();
                phase[j] = buf[j].arg();
            }
            if k == 0 {
                syn_phase.copy_from_slice(&phase);
            } else {
                // identity phase locking: spectral peaks advance by their
                // instantaneous frequency, other bins keep their analysis
                // phase offset to the peak that owns them
                find_peaks(&mag, &mut peaks);
                for &p in &peaks {
                    let omega = 2.0 * PI * p as f64 / n as f64;
                    let deviation = wrap_phase(phase[p] - prev_phase[p] - omega * step as f64);
                    let inst = omega + deviation / step as f64;
                    peak_phase[p] = prev_syn_phase[p] + inst * syn_hop as f64;
                }
                let mut owner = 0;
                for j in 0..bins {
                    while owner + 1 < peaks.len()
                        && peaks[owner + 1].abs_diff(j) <= peaks[owner].abs_diff(j)
                    {
                        owner += 1;
                    }
                    syn_phase[j] = match peaks.get(owner) {
                        Some(&p) => peak_phase[p] + phase[j] - phase[p],
                        None => prev_syn_phase[j] + phase[j] - prev_phase[j],
                    };
                }
            }
            prev_phase.copy_from_slice(&phase);
            prev_syn_phase.copy_from_slice(&syn_phase);
            for j in 0..bins {
                buf[j] = Complex::from_polar(mag[j], syn_phase[j]);
            }
            for j in 1..half {
                buf[n - j] = buf[j].conj();
            }
            self.inverse.process(&mut buf);

            let start = k * syn_hop;
            for i in 0..n {
                let w = self.window[i];
                out[start + i] += buf[i].re / n as f64 * w;
                norm[start + i] += w * w;
            }
        }

        let peak_norm = norm.iter().cloned().fold(0.0, f64::max);
        out.iter_mut().zip(&norm).for_each(|(y, &w)| {
            if w > peak_norm * 1e-3 {
                *y /= w;
            }
        });
        out.drain(..half);
        out.truncate(out_len);
        out
    }
}

/// Shifts the clip by a fixed number of semitones, keeping its length.
pub fn pitch_shift_by(
    clip: &AudioClip,
    spec: &PitchShiftSpec,
    semitones: i32,
) -> Result<AudioClip, AugmentError> {
    spec.validate()?;
    if clip.len() < spec.fft_size {
        return Err(AugmentError::ClipTooShort {
            len: clip.len(),
            needed: spec.fft_size,
        });
    }
    if semitones == 0 {
        return Ok(clip.clone());
    }
    let rate = 2f64.powf(semitones as f64 / 12.0);
    let vocoder = PhaseVocoder::new(spec.fft_size, spec.hop);
    let stretched = vocoder.time_stretch(&clip.samples, rate);
    let mut samples = resample_by_ratio(&stretched, 1.0 / rate, RESAMPLE_TAPS);
    samples.resize(clip.len(), 0.0);
    Ok(clip.with_samples(samples))
}

/// Draws a semitone shift and applies it.
pub fn pitch_shift<R: Rng>(
    clip: &AudioClip,
    spec: &PitchShiftSpec,
    rng: &mut R,
) -> Result<AudioClip, AugmentError> {
    spec.validate()?;
    let semitones = spec.draw_semitones(rng);
    pitch_shift_by(clip, spec, semitones)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn sine(freq: f64, rate: u32, secs: f64) -> Vec<f64> {
        (0..(rate as f64 * secs) as usize)
            .map(|i| 0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect()
    }

    #[test]
    fn semitone_draws_cover_range_without_zero() {
        let spec = PitchShiftSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let seen: BTreeSet<i32> = (0..2000).map(|_| spec.draw_semitones(&mut rng)).collect();
        let expected: BTreeSet<i32> = (-6..=6).filter(|&s| s != 0).collect();
        assert_eq!(seen, expected);

        let positive = PitchShiftSpec {
            semitone_range: Interval::new(3, 3),
            ..PitchShiftSpec::default()
        };
        assert!((0..50).all(|_| positive.draw_semitones(&mut rng) == 3));
        let with_zero_edge = PitchShiftSpec {
            semitone_range: Interval::new(-2, 0),
            ..PitchShiftSpec::default()
        };
        let seen: BTreeSet<i32> = (0..200)
            .map(|_| with_zero_edge.draw_semitones(&mut rng))
            .collect();
        assert_eq!(seen, BTreeSet::from([-2, -1]));
    }

    #[test]
    fn unity_stretch_reconstructs_input() {
        let x = sine(440.0, 16000, 0.5);
        let y = PhaseVocoder::new(1024, 256).time_stretch(&x, 1.0);
        assert_eq!(y.len(), x.len());
        let err = x[1024..x.len() - 1024]
            .iter()
            .zip(&y[1024..x.len() - 1024])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn stretch_length() {
        let x = sine(300.0, 16000, 1.0);
        let pv = PhaseVocoder::new(2048, 512);
        assert_eq!(pv.time_stretch(&x, 2.0).len(), 32000);
        assert_eq!(pv.time_stretch(&x, 0.5).len(), 8000);
    }

    #[test]
    fn short_clip_is_rejected() {
        let clip = AudioClip::new(vec![0.0; 1000], 16000, "s");
        assert!(matches!(
            pitch_shift_by(&clip, &PitchShiftSpec::default(), 3),
            Err(AugmentError::ClipTooShort { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        let bad = [
            PitchShiftSpec {
                semitone_range: Interval::new(-13, 2),
                ..Default::default()
            },
            PitchShiftSpec {
                semitone_range: Interval::new(0, 0),
                ..Default::default()
            },
            PitchShiftSpec {
                fft_size: 1000,
                ..Default::default()
            },
            PitchShiftSpec {
                hop: 300,
                ..Default::default()
            },
        ];
        for spec in bad {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
    }
}
