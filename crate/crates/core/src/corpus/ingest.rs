use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ClipRecord, CorpusError, Flag, Manifest, Split};
use crate::audio::{detect_silence, read_wav, AudioError};
use crate::par::{self, Workers};

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Split for rows without a `split` column. When unset, the split is
    /// taken from the file stem (`train.tsv`, `dev.tsv`, `test.tsv`),
    /// falling back to train.
    pub default_split: Option<Split>,
    /// Replaces the extension of every audio path, e.g. `wav` for corpora
    /// whose MP3 files were converted in place.
    pub audio_extension: Option<String>,
}

/// Row counts gathered while ingesting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows: usize,
    /// 1-based line numbers of rows skipped for having the wrong field count.
    pub malformed_lines: Vec<u64>,
    pub empty_label: usize,
    pub missing_audio: usize,
}

fn split_from_stem(path: &Path) -> Split {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse().ok())
        .unwrap_or(Split::Train)
}

/// Reads a Common-Voice-style TSV.
///
/// Required columns are `path` and `sentence`; `source_id`, `split`,
/// `tags`, `flags` and `duration_s` are read when present, so manifests
/// written by [`Manifest::write_tsv`] load back unchanged. Rows with the
/// wrong number of fields are skipped and counted.
pub fn ingest_tsv(
    path: impl AsRef<Path>,
    audio_root: impl AsRef<Path>,
    language: &str,
    options: &IngestOptions,
) -> Result<(Manifest, IngestStats), CorpusError> {
    let path = path.as_ref();
    let audio_root = audio_root.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let column: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let required = |name: &str| {
        column
            .get(name)
            .copied()
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let path_col = required("path")?;
    let sentence_col = required("sentence")?;
    let id_col = column.get("source_id").copied();
    let split_col = column.get("split").copied();
    let tags_col = column.get("tags").copied();
    let flags_col = column.get("flags").copied();
    let duration_col = column.get("duration_s").copied();

    let default_split = options.default_split.unwrap_or_else(|| split_from_stem(path));
    let mut stats = IngestStats::default();
    let mut records = Vec::new();

    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != headers.len() {
            tracing::warn!(line, fields = row.len(), expected = headers.len(), "skipping malformed row");
            stats.malformed_lines.push(line);
            continue;
        }
        let mut audio_path = PathBuf::from(&row[path_col]);
        if let Some(ext) = &options.audio_extension {
            audio_path.set_extension(ext);
        }
        let source_id = match id_col {
            Some(i) if !row[i].is_empty() => row[i].to_string(),
            _ => audio_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        let split = match split_col.map(|i| &row[i]) {
            Some(s) if !s.is_empty() => s.parse().unwrap_or_else(|e| {
                tracing::warn!(line, error = %e, "unrecognised split, using default");
                default_split
            }),
            _ => default_split,
        };

        let mut record = ClipRecord::new(source_id, audio_path, &row[sentence_col], split);
        if let Some(i) = tags_col {
            record.tags = row[i].split(',').filter(|t| !t.is_empty()).map(str::to_string).collect();
        }
        if let Some(i) = flags_col {
            for name in row[i].split(',').filter(|t| !t.is_empty()) {
                match name.parse::<Flag>() {
                    Ok(f) => {
                        record.flags.insert(f);
                    }
                    Err(e) => tracing::warn!(line, error = %e, "ignoring flag"),
                }
            }
        }
        if let Some(i) = duration_col {
            record.duration_s = row[i].parse().ok();
        }
        if audio_root.join(&record.audio_path).is_file() {
            record.flags.remove(&Flag::MissingAudio);
        } else {
            record.flags.insert(Flag::MissingAudio);
        }
        records.push(record);
    }

    stats.rows = records.len();
    stats.empty_label = records.iter().filter(|r| r.has_flag(Flag::EmptyLabel)).count();
    stats.missing_audio = records.iter().filter(|r| r.has_flag(Flag::MissingAudio)).count();

    let mut manifest = Manifest::new(records, language, audio_root)?;
    manifest.provenance = path.display().to_string();
    Ok((manifest, stats))
}

/// Per-flag counts from a QC pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QcSummary {
    pub checked: usize,
    pub silent: usize,
    pub empty_label: usize,
    pub missing_audio: usize,
    pub unreadable: usize,
    pub threshold_db: f64,
    /// `(source_id, message)` for each row whose audio could not be read, by id.
    pub errors: Vec<(String, String)>,
}

enum Probe {
    Skipped,
    Read { silent: bool, duration_s: f64 },
    Failed { flag: Flag, message: String },
}

/// Reads every available clip and flags the ones quieter than `threshold_db`.
///
/// Read failures are recorded on the row and in the summary; they never abort
/// the pass.
pub fn qc(manifest: &Manifest, threshold_db: f64, workers: Workers) -> (Manifest, QcSummary) {
    let probes = par::map(&manifest.records, workers, |r| {
        if r.has_flag(Flag::MissingAudio) {
            return Probe::Skipped;
        }
        match read_wav(manifest.resolve(r)) {
            Ok(clip) => Probe::Read {
                silent: detect_silence(&clip, threshold_db),
                duration_s: clip.duration_secs(),
            },
            Err(AudioError::FileNotFound(p)) => Probe::Failed {
                flag: Flag::MissingAudio,
                message: format!("not found: {}", p.display()),
            },
            Err(e) => Probe::Failed {
                flag: Flag::Unreadable,
                message: e.to_string(),
            },
        }
    });

    let mut out = manifest.clone();
    let mut summary = QcSummary {
        threshold_db,
        ..QcSummary::default()
    };
    for (record, probe) in out.records.iter_mut().zip(probes) {
        record.flags.remove(&Flag::Silent);
        record.flags.remove(&Flag::Unreadable);
        match probe {
            Probe::Skipped => {}
            Probe::Read { silent, duration_s } => {
                summary.checked += 1;
                record.duration_s = Some(duration_s);
                if silent {
                    record.flags.insert(Flag::Silent);
                }
            }
            Probe::Failed { flag, message } => {
                record.flags.insert(flag);
                summary.errors.push((record.source_id.clone(), message));
            }
        }
    }
    summary.errors.sort();
    summary.silent = out.count_flag(Flag::Silent);
    summary.empty_label = out.count_flag(Flag::EmptyLabel);
    summary.missing_audio = out.count_flag(Flag::MissingAudio);
    summary.unreadable = out.count_flag(Flag::Unreadable);
    (out, summary)
}
