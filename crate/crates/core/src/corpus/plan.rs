use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{ClipRecord, CorpusError, Manifest, Split};
use crate::augment::{AugmentationSpec, Seed};

pub const DEFAULT_FRACTION: f64 = 0.2;

/// Rows in a subset of `n` records at `fraction`, rounded half up.
pub fn subset_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

/// Picks `subset_size(|train|, fraction)` train records without replacement.
///
/// Every train record gets a rank from SHA-256 of `(seed, key, source_id)`
/// and the lowest ranks win, which amounts to a seeded shuffle that does not
/// depend on manifest order. The subset is returned in manifest order.
pub fn select_subset<'a>(
    manifest: &'a Manifest,
    fraction: f64,
    seed: Seed,
    key: &str,
) -> Result<Vec<&'a ClipRecord>, CorpusError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CorpusError::InvalidFraction(fraction));
    }
    let train: Vec<(usize, &ClipRecord)> = manifest
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.split == Split::Train)
        .collect();
    if train.is_empty() {
        return Err(CorpusError::EmptySplit(Split::Train));
    }
    let k = subset_size(train.len(), fraction);
    let mut ranked: Vec<([u8; 32], usize)> = train
        .iter()
        .map(|(i, r)| (seed.digest("subset", &[key, &r.source_id]), *i))
        .collect();
    ranked.sort_unstable();
    let mut chosen: Vec<usize> = ranked.into_iter().take(k).map(|(_, i)| i).collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| &manifest.records[i]).collect())
}

/// One training-set composition: the clean train split plus one subset per tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub name: String,
    pub tags: Vec<String>,
}

impl PlanConfig {
    pub fn new(tags: &[&str]) -> Self {
        let name = if tags.is_empty() {
            "baseline".to_string()
        } else {
            tags.join("+")
        };
        Self {
            name,
            tags: tags.iter().map(|t| t.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub augmentations: Vec<AugmentationSpec>,
    pub fraction: f64,
    pub seed: Seed,
    pub configs: Vec<PlanConfig>,
    /// Draw a fresh subset per (config, tag) instead of sharing one per tag.
    #[serde(default)]
    pub independent_draws: bool,
}

impl ExperimentPlan {
    /// Every combination of the given augmentations: the clean baseline, each
    /// single tag, each pair, and so on, in that order.
    pub fn new(augmentations: Vec<AugmentationSpec>, fraction: f64, seed: Seed) -> Result<Self, CorpusError> {
        let tags: Vec<&str> = augmentations.iter().map(|a| a.tag()).collect();
        let mut seen = HashSet::new();
        if let Some(dup) = tags.iter().find(|t| !seen.insert(**t)) {
            return Err(CorpusError::UnknownTag(format!("{dup} listed twice")));
        }
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(CorpusError::InvalidFraction(fraction));
        }
        let n = tags.len();
        let mut masks: Vec<u32> = (0..1u32 << n).collect();
        // by subset size, then by position of the members
        masks.sort_by_key(|m| {
            let members: Vec<u32> = (0..n as u32).filter(|b| m & (1 << b) != 0).collect();
            (m.count_ones(), members)
        });
        let configs = masks
            .into_iter()
            .map(|m| {
                let chosen: Vec<&str> = (0..n).filter(|b| m & (1 << b) != 0).map(|b| tags[b]).collect();
                PlanConfig::new(&chosen)
            })
            .collect();
        Ok(Self {
            augmentations,
            fraction,
            seed,
            configs,
            independent_draws: false,
        })
    }

    /// Plan over the default band-stop, noise and pitch-shift specs.
    pub fn with_default_augmentations(fraction: f64, seed: Seed) -> Result<Self, CorpusError> {
        let specs = ["bs", "gn", "ps"]
            .iter()
            .map(|t| AugmentationSpec::from_tag(t))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(specs, fraction, seed)
    }

    pub fn spec(&self, tag: &str) -> Option<&AugmentationSpec> {
        self.augmentations.iter().find(|a| a.tag() == tag)
    }

    pub fn specs_by_tag(&self) -> BTreeMap<String, AugmentationSpec> {
        self.augmentations.iter().map(|a| (a.tag().to_string(), a.clone())).collect()
    }

    fn subset_key(&self, config: &str, tag: &str) -> String {
        if self.independent_draws {
            format!("{config}/{tag}")
        } else {
            tag.to_string()
        }
    }
}

/// A train record scheduled for augmentation with one tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedRow {
    pub source: ClipRecord,
    pub tag: String,
    pub derived_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedDataset {
    pub name: String,
    pub language: String,
    pub audio_root: PathBuf,
    pub clean: Vec<ClipRecord>,
    pub augmented: Vec<AugmentedRow>,
}

impl PlannedDataset {
    pub fn len(&self) -> usize {
        self.clean.len() + self.augmented.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows_for(&self, tag: &str) -> impl Iterator<Item = &AugmentedRow> {
        let tag = tag.to_string();
        self.augmented.iter().filter(move |r| r.tag == tag)
    }
}

/// Expands a plan into one dataset per config.
///
/// With shared draws (the default) a tag selects the same records in every
/// config that uses it.
pub fn build_plan(manifest: &Manifest, plan: &ExperimentPlan) -> Result<Vec<PlannedDataset>, CorpusError> {
    let clean: Vec<ClipRecord> = manifest.split(Split::Train).cloned().collect();
    if clean.is_empty() {
        return Err(CorpusError::EmptySplit(Split::Train));
    }
    let mut subsets: BTreeMap<String, Vec<ClipRecord>> = BTreeMap::new();
    plan.configs
        .iter()
        .map(|config| {
            let mut augmented = Vec::new();
            for tag in &config.tags {
                if plan.spec(tag).is_none() {
                    return Err(CorpusError::UnknownTag(tag.clone()));
                }
                let key = plan.subset_key(&config.name, tag);
                if !subsets.contains_key(&key) {
                    let picked = select_subset(manifest, plan.fraction, plan.seed, &key)?;
                    subsets.insert(key.clone(), picked.into_iter().cloned().collect());
                }
                augmented.extend(subsets[&key].iter().map(|r| AugmentedRow {
                    source: r.clone(),
                    tag: tag.clone(),
                    derived_id: format!("{}#{}", r.source_id, tag),
                }));
            }
            Ok(PlannedDataset {
                name: config.name.clone(),
                language: manifest.language.clone(),
                audio_root: manifest.audio_root.clone(),
                clean: clean.clone(),
                augmented,
            })
        })
        .collect()
}
