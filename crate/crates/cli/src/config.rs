use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use speechaug::augment::{AugmentationSpec, BandStopSpec, NoiseSpec, PitchShiftSpec};
use speechaug::audio::DEFAULT_SILENCE_DB;
use speechaug::corpus::DEFAULT_FRACTION;
use speechaug::text::NormalizationConfig;

/// File name of the effective configuration echoed next to every artifact.
pub const ECHO_FILE: &str = "run_config.toml";

/// Settings for a run, loaded from `--config` and overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub fraction: f64,
    pub tags: Vec<String>,
    pub independent_draws: bool,
    /// Keep QC-flagged rows when planning.
    pub keep_flagged: bool,
    /// 0 uses every core.
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub language: String,
    pub silence_db: f64,
    pub target_rate: u32,
    pub max_failure_fraction: f64,
    pub normalization: NormalizationConfig,
    pub band_stop: BandStopSpec,
    pub noise: NoiseSpec,
    pub pitch_shift: PitchShiftSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            fraction: DEFAULT_FRACTION,
            tags: vec!["bs".into(), "gn".into(), "ps".into()],
            independent_draws: false,
            keep_flagged: false,
            workers: 0,
            out_dir: None,
            language: "und".into(),
            silence_db: DEFAULT_SILENCE_DB,
            target_rate: 16_000,
            max_failure_fraction: 0.1,
            normalization: NormalizationConfig::default(),
            band_stop: BandStopSpec::default(),
            noise: NoiseSpec::default(),
            pitch_shift: PitchShiftSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// The configured spec for `tag`, if the tag is known.
    pub fn spec(&self, tag: &str) -> Option<AugmentationSpec> {
        match tag {
            "bs" => Some(AugmentationSpec::BandStop(self.band_stop.clone())),
            "gn" => Some(AugmentationSpec::NoiseInject(self.noise.clone())),
            "ps" => Some(AugmentationSpec::PitchShift(self.pitch_shift.clone())),
            _ => None,
        }
    }

    /// Writes the effective configuration into `dir`.
    pub fn echo(&self, dir: &Path) -> anyhow::Result<()> {
        let text = toml::to_string(self).context("serializing run config")?;
        let path = dir.join(ECHO_FILE);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
