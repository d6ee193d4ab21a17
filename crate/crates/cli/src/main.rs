//! `speechaug` command-line tool.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

/// Speech corpus preparation: ingest, augmentation plans, text normalization and WER/CER scoring.
#[derive(Debug, Parser)]
#[command(name = "speechaug", version)]
pub struct Cli {
    /// TOML run configuration; command-line flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub run_config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a Common-Voice-style TSV, check the audio and write a flagged manifest.
    Ingest(IngestArgs),
    /// Enumerate augmentation configs and write plan.json.
    Plan(PlanArgs),
    /// Synthesize augmented audio and per-config manifests from a plan.
    Augment(AugmentArgs),
    /// Normalize transcripts from a manifest or from stdin (one line each).
    Normalize(NormalizeArgs),
    /// Compute WER and CER of hypotheses against a reference manifest.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input TSV with at least `path` and `sentence` columns.
    #[arg(long, value_name = "FILE")]
    pub tsv: PathBuf,
    /// Directory the `path` column is relative to [default: directory of --tsv].
    #[arg(long, value_name = "DIR")]
    pub audio_root: Option<PathBuf>,
    /// Language code recorded in the manifest.
    #[arg(long)]
    pub lang: Option<String>,
    /// Clips whose RMS level is below this many dBFS are flagged silent [default: -50].
    #[arg(long, value_name = "DB", allow_hyphen_values = true)]
    pub silence_db: Option<f64>,
    /// Output directory for manifest.tsv, qc.json and run_config.toml.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Replace every audio file extension, e.g. `wav` after converting MP3s.
    #[arg(long, value_name = "EXT")]
    pub audio_ext: Option<String>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Manifest written by `ingest`.
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Share of the train split drawn per augmentation tag [default: 0.2].
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Root seed for subset selection and augmentation draws [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated augmentation tags: bs (band-stop), gn (noise), ps (pitch shift) [default: bs,gn,ps].
    #[arg(long, value_delimiter = ',')]
    pub tags: Option<Vec<String>>,
    /// Draw a separate subset for every config instead of sharing one per tag.
    #[arg(long)]
    pub independent_draws: bool,
    /// Keep rows flagged silent, empty, missing or unreadable.
    #[arg(long)]
    pub keep_flagged: bool,
    /// Output directory for plan.json and run_config.toml.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// plan.json written by `plan`.
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    /// Config to materialize, e.g. `bs+gn`, or `all`.
    #[arg(long, value_name = "NAME|all", default_value = "all")]
    pub config: String,
    /// Worker threads; 0 uses every core, 1 runs sequentially. Output does not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory for <config>.tsv manifests and audio/.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Draw a separate subset for every config instead of sharing one per tag.
    #[arg(long)]
    pub independent_draws: bool,
    /// Largest tolerated share of failed rows per config [default: 0.1].
    #[arg(long, value_name = "FRACTION")]
    pub max_failures: Option<f64>,
}

/// Shared toggles mirroring the normalization settings; each takes an
/// optional `true`/`false` and means `true` when given bare.
#[derive(Debug, Args, Default)]
pub struct NormalizationFlags {
    /// Remove punctuation, keeping word-internal apostrophes.
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    pub remove_punctuation: Option<bool>,
    /// Remove symbols such as currency, math and emoji.
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    pub remove_special_chars: Option<bool>,
    /// Remove Arabic diacritics (tashkeel).
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    pub strip_diacritics: Option<bool>,
    /// Lowercase letters.
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    pub lowercase: Option<bool>,
    /// Collapse whitespace runs to one space and trim.
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    pub collapse_whitespace: Option<bool>,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Manifest whose sentences are normalized; reads stdin lines when absent.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Where to write the result [default: stdout].
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub flags: NormalizationFlags,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Reference manifest (`source_id`, `path`, `sentence` columns).
    #[arg(long, value_name = "FILE")]
    pub refs: PathBuf,
    /// Hypotheses as TSV lines `source_id<TAB>hypothesis`, optional header.
    #[arg(long, value_name = "FILE")]
    pub hyps: PathBuf,
    /// Remove Arabic diacritics from both sides before scoring.
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    pub strip_diacritics: Option<bool>,
    /// Also report every utterance.
    #[arg(long)]
    pub per_utt: bool,
    /// Emit JSON lines instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Only score references from this split.
    #[arg(long)]
    pub split: Option<speechaug::corpus::Split>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
}

fn init_logging() {
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    tracing_subscriber::fmt()
        .json()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let usage = e.downcast_ref::<commands::UsageError>().is_some();
            let message = serde_json::json!({
                "error": if usage { "usage" } else { "data" },
                "message": format!("{e:#}"),
            });
            eprintln!("{message}");
            ExitCode::from(if usage { 1 } else { 2 })
        }
    }
}
