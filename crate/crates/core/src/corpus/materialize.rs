use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{file_stem_for, ClipRecord, CorpusError, ExperimentPlan, Manifest, PlannedDataset};
use crate::audio::{read_wav, resample, write_wav, ResampleSpec};
use crate::augment::{apply, AugmentationSpec, Seed};
use crate::par::{self, Workers};

/// Subdirectory of the output directory holding augmented WAVs.
pub const AUDIO_DIR: &str = "audio";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaterializeOptions {
    pub target_rate: u32,
    pub filter_taps: usize,
    #[serde(skip)]
    pub workers: Workers,
    /// Largest tolerated share of failed augmented rows per dataset.
    pub max_failure_fraction: f64,
}

impl Default for MaterializeOptions {
    fn default() -> Self {
        Self {
            target_rate: 16_000,
            filter_taps: ResampleSpec::default().filter_taps,
            workers: Workers::ALL,
            max_failure_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowFailure {
    pub source_id: String,
    pub tag: String,
    pub message: String,
}

/// Output of one planned dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Materialized {
    pub name: String,
    pub manifest: Manifest,
    /// Sorted by source id, then tag.
    pub failures: Vec<RowFailure>,
    /// Augmented files this dataset references, relative to the output directory.
    pub written: Vec<PathBuf>,
}

struct Job<'a> {
    record: &'a ClipRecord,
    audio_root: &'a Path,
    spec: &'a AugmentationSpec,
    derived_id: &'a str,
}

fn relative_audio_path(derived_id: &str) -> PathBuf {
    Path::new(AUDIO_DIR).join(format!("{}.wav", file_stem_for(derived_id)))
}

fn run_job(job: &Job<'_>, out_dir: &Path, seed: Seed, options: &MaterializeOptions) -> Result<f64, CorpusError> {
    let mut clip = read_wav(job.audio_root.join(&job.record.audio_path))?;
    clip.source_id = job.record.source_id.clone();
    if clip.sample_rate != options.target_rate {
        let spec = ResampleSpec {
            target_rate: options.target_rate,
            filter_taps: options.filter_taps,
        };
        clip = resample(&clip, &spec)?;
    }
    let out = apply(&clip, job.spec, seed)?;
    write_wav(&out, out_dir.join(relative_audio_path(job.derived_id)))?;
    Ok(out.duration_secs())
}

/// Writes the augmented audio for one planned dataset and returns its manifest.
pub fn materialize(
    planned: &PlannedDataset,
    plan: &ExperimentPlan,
    out_dir: impl AsRef<Path>,
    options: &MaterializeOptions,
) -> Result<Materialized, CorpusError> {
    let mut all = materialize_all(std::slice::from_ref(planned), plan, out_dir, options)?;
    Ok(all.remove(0))
}

/// Materializes several datasets, synthesizing each distinct
/// `(source_id, tag)` row once even when datasets share subsets.
///
/// Clean rows keep pointing at their original audio (made absolute);
/// augmented rows point at `audio/<source_id>#<tag>.wav` under `out_dir`.
/// Failed rows are left out of the manifests. The call fails when any
/// dataset loses more than `max_failure_fraction` of its augmented rows.
pub fn materialize_all(
    planned: &[PlannedDataset],
    plan: &ExperimentPlan,
    out_dir: impl AsRef<Path>,
    options: &MaterializeOptions,
) -> Result<Vec<Materialized>, CorpusError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir.join(AUDIO_DIR))?;
    let specs = plan.specs_by_tag();

    let mut jobs: BTreeMap<&str, Job<'_>> = BTreeMap::new();
    for set in planned {
        for row in &set.augmented {
            let spec = specs.get(&row.tag).ok_or_else(|| CorpusError::UnknownTag(row.tag.clone()))?;
            jobs.entry(row.derived_id.as_str()).or_insert(Job {
                record: &row.source,
                audio_root: &set.audio_root,
                spec,
                derived_id: &row.derived_id,
            });
        }
    }
    let jobs: Vec<Job<'_>> = jobs.into_values().collect();
    tracing::info!(rows = jobs.len(), datasets = planned.len(), "augmenting");
    let results = par::map(&jobs, options.workers, |job| run_job(job, out_dir, plan.seed, options));
    let outcome: BTreeMap<&str, Result<f64, String>> = jobs
        .iter()
        .zip(results)
        .map(|(job, r)| (job.derived_id, r.map_err(|e| e.to_string())))
        .collect();

    planned
        .iter()
        .map(|set| {
            let mut records: Vec<ClipRecord> = set
                .clean
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.audio_path = absolute(&set.audio_root.join(&r.audio_path));
                    r
                })
                .collect();
            let mut failures = Vec::new();
            let mut written = Vec::new();
            for row in &set.augmented {
                match &outcome[row.derived_id.as_str()] {
                    Ok(duration) => {
                        let path = relative_audio_path(&row.derived_id);
                        let mut r = ClipRecord::new(&row.derived_id, &path, &row.source.sentence, row.source.split);
                        r.duration_s = Some(*duration);
                        r.tags = vec![row.tag.clone()];
                        records.push(r);
                        written.push(path);
                    }
                    Err(message) => failures.push(RowFailure {
                        source_id: row.source.source_id.clone(),
                        tag: row.tag.clone(),
                        message: message.clone(),
                    }),
                }
            }
            failures.sort();
            let total = set.augmented.len();
            if total > 0 && failures.len() as f64 > options.max_failure_fraction * total as f64 {
                return Err(CorpusError::TooManyFailures {
                    failed: failures.len(),
                    total,
                    limit: options.max_failure_fraction * 100.0,
                });
            }
            let mut manifest = Manifest::new(records, set.language.clone(), out_dir)?;
            manifest.provenance = format!("config {}", set.name);
            Ok(Materialized {
                name: set.name.clone(),
                manifest,
                failures,
                written,
            })
        })
        .collect()
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}
