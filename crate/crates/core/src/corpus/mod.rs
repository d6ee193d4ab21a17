//! Corpus manifests, quality control, experiment plans and augmented-set
//! materialization.

mod ingest;
mod materialize;
mod plan;

pub use ingest::{ingest_tsv, qc, IngestOptions, IngestStats, QcSummary};
pub use materialize::{materialize, materialize_all, Materialized, MaterializeOptions, RowFailure};
pub use plan::{
    build_plan, select_subset, subset_size, AugmentedRow, ExperimentPlan, PlanConfig,
    PlannedDataset, DEFAULT_FRACTION,
};

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::AudioError;
use crate::augment::AugmentError;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("missing required column {0:?}")]
    MissingColumn(String),
    #[error("duplicate source id {0:?}")]
    DuplicateSourceId(String),
    #[error("duplicate audio path {0:?}")]
    DuplicatePath(PathBuf),
    #[error("split {0} has no records")]
    EmptySplit(Split),
    #[error("fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("unknown augmentation tag {0:?}")]
    UnknownTag(String),
    #[error("field {field} of {source_id:?} cannot be written as TSV: {reason}")]
    InvalidField {
        source_id: String,
        field: &'static str,
        reason: String,
    },
    #[error("{failed} of {total} augmented rows failed (limit {limit:.0}%)")]
    TooManyFailures { failed: usize, total: usize, limit: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Quality flags attached to a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// Audio level below the silence threshold.
    Silent,
    /// Transcript is empty.
    EmptyLabel,
    /// Audio file does not exist under the audio root.
    MissingAudio,
    /// Audio file exists but could not be decoded.
    Unreadable,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Silent => "silent",
            Flag::EmptyLabel => "empty_label",
            Flag::MissingAudio => "missing_audio",
            Flag::Unreadable => "unreadable",
        }
    }
}

impl FromStr for Flag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "silent" => Ok(Flag::Silent),
            "empty_label" => Ok(Flag::EmptyLabel),
            "missing_audio" => Ok(Flag::MissingAudio),
            "unreadable" => Ok(Flag::Unreadable),
            other => Err(format!("unknown flag {other:?}")),
        }
    }
}

/// One corpus row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub source_id: String,
    /// Path relative to the manifest's audio root (or absolute).
    pub audio_path: PathBuf,
    pub sentence: String,
    pub split: Split,
    pub duration_s: Option<f64>,
    pub flags: BTreeSet<Flag>,
    /// Augmentation tags applied to produce this row; empty for clean audio.
    pub tags: Vec<String>,
}

impl ClipRecord {
    pub fn new(source_id: impl Into<String>, audio_path: impl Into<PathBuf>, sentence: impl Into<String>, split: Split) -> Self {
        let sentence = sentence.into();
        let mut flags = BTreeSet::new();
        if sentence.trim().is_empty() {
            flags.insert(Flag::EmptyLabel);
        }
        Self {
            source_id: source_id.into(),
            audio_path: audio_path.into(),
            sentence,
            split,
            duration_s: None,
            flags,
            tags: Vec::new(),
        }
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }
}

/// An ordered set of records sharing an audio root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub records: Vec<ClipRecord>,
    pub language: String,
    pub provenance: String,
    pub audio_root: PathBuf,
}

/// Columns written by [`Manifest::write_tsv`], in order.
pub const MANIFEST_COLUMNS: [&str; 7] = ["source_id", "path", "sentence", "split", "tags", "flags", "duration_s"];

impl Manifest {
    pub fn new(records: Vec<ClipRecord>, language: impl Into<String>, audio_root: impl Into<PathBuf>) -> Result<Self, CorpusError> {
        let m = Self {
            records,
            language: language.into(),
            provenance: String::new(),
            audio_root: audio_root.into(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks that source ids and audio paths are unique.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut ids = HashSet::new();
        let mut paths = HashSet::new();
        for r in &self.records {
            if !ids.insert(r.source_id.as_str()) {
                return Err(CorpusError::DuplicateSourceId(r.source_id.clone()));
            }
            if !paths.insert(r.audio_path.as_path()) {
                return Err(CorpusError::DuplicatePath(r.audio_path.clone()));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, record: &ClipRecord) -> PathBuf {
        self.audio_root.join(&record.audio_path)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ClipRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn count_flag(&self, flag: Flag) -> usize {
        self.records.iter().filter(|r| r.has_flag(flag)).count()
    }

    /// Writes the manifest as TSV with the [`MANIFEST_COLUMNS`] header.
    pub fn write_tsv<W: Write>(&self, out: W) -> Result<(), CorpusError> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(b'\t')
            .quote_style(csv::QuoteStyle::Never)
            .from_writer(out);
        w.write_record(MANIFEST_COLUMNS)?;
        for r in &self.records {
            let path = r.audio_path.to_string_lossy();
            for (field, value) in [("source_id", r.source_id.as_str()), ("path", path.as_ref()), ("sentence", r.sentence.as_str())] {
                if value.contains(['\t', '\n', '\r']) {
                    return Err(CorpusError::InvalidField {
                        source_id: r.source_id.clone(),
                        field,
                        reason: "contains a tab or line break".into(),
                    });
                }
            }
            let flags: Vec<&str> = r.flags.iter().map(|f| f.as_str()).collect();
            let duration = r.duration_s.map(|d| d.to_string()).unwrap_or_default();
            w.write_record([
                r.source_id.as_str(),
                path.as_ref(),
                r.sentence.as_str(),
                r.split.as_str(),
                &r.tags.join(","),
                &flags.join(","),
                &duration,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let file = std::fs::File::create(path)?;
        self.write_tsv(std::io::BufWriter::new(file))
    }
}

/// Makes a source id safe to use as a file name.
pub(crate) fn file_stem_for(id: &str) -> String {
    id.chars()
        .map(|c| if matches!(c, '/' | '\\' | '\0') { '_' } else { c })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_parsing() {
        assert_eq!("Train".parse::<Split>().unwrap(), Split::Train);
        assert_eq!("validation".parse::<Split>().unwrap(), Split::Dev);
        assert!("other".parse::<Split>().is_err());
    }

    #[test]
    fn empty_sentence_is_flagged() {
        assert!(ClipRecord::new("a", "a.wav", "  ", Split::Train).has_flag(Flag::EmptyLabel));
        assert!(!ClipRecord::new("a", "a.wav", "hi", Split::Train).has_flag(Flag::EmptyLabel));
    }

    #[test]
    fn duplicates_rejected() {
        let a = ClipRecord::new("a", "a.wav", "x", Split::Train);
        let mut b = ClipRecord::new("a", "b.wav", "y", Split::Train);
        assert!(matches!(
            Manifest::new(vec![a.clone(), b.clone()], "ar", "."),
            Err(CorpusError::DuplicateSourceId(_))
        ));
        b.source_id = "b".into();
        b.audio_path = "a.wav".into();
        assert!(matches!(Manifest::new(vec![a, b], "ar", "."), Err(CorpusError::DuplicatePath(_))));
    }

    #[test]
    fn tabs_in_sentences_are_refused() {
        let m = Manifest::new(vec![ClipRecord::new("a", "a.wav", "x\ty", Split::Train)], "pt", ".").unwrap();
        assert!(matches!(m.write_tsv(Vec::new()), Err(CorpusError::InvalidField { .. })));
    }

    #[test]
    fn file_stems_have_no_separators() {
        assert_eq!(file_stem_for("a/b\\c#bs"), "a_b_c#bs");
    }
}
