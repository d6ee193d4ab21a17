//! Multiplicative uniform noise: `y[i] = x[i] + x[i] * u[i]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AugmentError, Interval};
use crate::audio::AudioClip;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Range of the per-sample factor `u`.
    pub factor_range: Interval<f64>,
    /// Negate each factor with probability 1/2.
    pub symmetric: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            factor_range: Interval::new(0.001, 0.03),
            symmetric: false,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let r = self.factor_range;
        if !(r.lo >= 0.0 && r.lo <= r.hi && r.hi.is_finite()) {
            return Err(AugmentError::InvalidSpec(format!(
                "noise factor range [{}, {}] must satisfy 0 <= lo <= hi",
                r.lo, r.hi
            )));
        }
        Ok(())
    }
}

/// Scales every sample by `1 + u`, with `u` drawn independently per sample.
///
/// A degenerate range `[c, c]` yields exactly `x + x * c`; silent input stays silent.
pub fn noise_inject<R: Rng>(
    clip: &AudioClip,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<AudioClip, AugmentError> {
    spec.validate()?;
    let samples = clip
        .samples
        .iter()
        .map(|&x| {
            let mut u = spec.factor_range.sample(rng);
            if spec.symmetric && rng.random::<bool>() {
                u = -u;
            }
            x + x * u
        })
        .collect();
    Ok(clip.with_samples(samples))
}
