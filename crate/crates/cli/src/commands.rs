use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use speechaug::augment::{AugmentationSpec, Seed};
use speechaug::corpus::{
    build_plan, ingest_tsv, materialize_all, qc, ExperimentPlan, IngestOptions, IngestStats, Manifest,
    MaterializeOptions, QcSummary, RowFailure,
};
use speechaug::metrics::{score_corpus, ScorePair};
use speechaug::par::Workers;
use speechaug::text::{normalize, NormalizationConfig};

use crate::config::RunConfig;
use crate::{AugmentArgs, Cli, Command, IngestArgs, NormalizationFlags, NormalizeArgs, PlanArgs, ScoreArgs};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const QC_FILE: &str = "qc.json";
pub const PLAN_FILE: &str = "plan.json";
pub const FAILURES_FILE: &str = "failures.json";

/// Bad invocation detected after argument parsing; exits with status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = RunConfig::load(cli.run_config.as_deref()).map_err(|e| usage(format!("{e:#}")))?;
    match cli.command {
        Command::Ingest(args) => ingest(args, config),
        Command::Plan(args) => plan(args, config),
        Command::Augment(args) => augment(args, config),
        Command::Normalize(args) => normalize_cmd(args, config),
        Command::Score(args) => score(args, config),
    }
}

fn out_dir(flag: Option<PathBuf>, config: &mut RunConfig) -> anyhow::Result<PathBuf> {
    let dir = flag
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| usage("no output directory: pass --out/--out-dir or set out_dir in the run config"))?;
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    config.out_dir = Some(dir.clone());
    Ok(dir)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn absolute(path: &Path) -> anyhow::Result<PathBuf> {
    std::path::absolute(path).with_context(|| format!("resolving {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Loads a manifest whose paths are absolute or relative to its own directory.
fn load_manifest(path: &Path, language: &str) -> anyhow::Result<Manifest> {
    let (manifest, stats) = ingest_tsv(path, parent_dir(path), language, &IngestOptions::default())
        .with_context(|| format!("reading manifest {}", path.display()))?;
    if !stats.malformed_lines.is_empty() {
        tracing::warn!(lines = ?stats.malformed_lines, "manifest has malformed rows");
    }
    Ok(manifest)
}

#[derive(Serialize)]
struct QcReport<'a> {
    ingest: &'a IngestStats,
    qc: &'a QcSummary,
}

fn ingest(args: IngestArgs, mut config: RunConfig) -> anyhow::Result<()> {
    if let Some(lang) = args.lang {
        config.language = lang;
    }
    if let Some(db) = args.silence_db {
        config.silence_db = db;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let out = out_dir(args.out, &mut config)?;
    let audio_root = args.audio_root.unwrap_or_else(|| parent_dir(&args.tsv));
    let options = IngestOptions {
        default_split: None,
        audio_extension: args.audio_ext,
    };
    let (manifest, stats) = ingest_tsv(&args.tsv, &audio_root, &config.language, &options)
        .with_context(|| format!("ingesting {}", args.tsv.display()))?;
    let (mut manifest, summary) = qc(&manifest, config.silence_db, Workers(config.workers));

    // make the manifest usable from any directory
    for r in &mut manifest.records {
        r.audio_path = absolute(&manifest.audio_root.join(&r.audio_path))?;
    }
    manifest.save_tsv(out.join(MANIFEST_FILE))?;
    write_json(&out.join(QC_FILE), &QcReport { ingest: &stats, qc: &summary })?;
    config.echo(&out)?;
    tracing::info!(
        rows = stats.rows,
        malformed = stats.malformed_lines.len(),
        silent = summary.silent,
        empty_label = summary.empty_label,
        missing_audio = summary.missing_audio,
        unreadable = summary.unreadable,
        "ingest done"
    );
    println!(
        "{} rows, {} silent, {} empty label, {} missing audio, {} unreadable, {} malformed lines skipped",
        stats.rows,
        summary.silent,
        summary.empty_label,
        summary.missing_audio,
        summary.unreadable,
        stats.malformed_lines.len()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetSummary {
    name: String,
    tags: Vec<String>,
    clean: usize,
    augmented: usize,
    rows: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanFile {
    manifest: PathBuf,
    keep_flagged: bool,
    /// Train rows available after filtering.
    train_rows: usize,
    plan: ExperimentPlan,
    datasets: Vec<DatasetSummary>,
}

fn usable_rows(mut manifest: Manifest, keep_flagged: bool) -> Manifest {
    if !keep_flagged {
        let before = manifest.records.len();
        manifest.records.retain(|r| r.flags.is_empty());
        let dropped = before - manifest.records.len();
        if dropped > 0 {
            tracing::info!(dropped, "leaving out flagged rows");
        }
    }
    manifest
}

fn plan(args: PlanArgs, mut config: RunConfig) -> anyhow::Result<()> {
    if let Some(f) = args.fraction {
        config.fraction = f;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(tags) = args.tags {
        config.tags = tags.into_iter().map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
    }
    config.independent_draws |= args.independent_draws;
    config.keep_flagged |= args.keep_flagged;
    if !(config.fraction > 0.0 && config.fraction <= 1.0) {
        return Err(usage(format!("--fraction must be in (0, 1], got {}", config.fraction)));
    }
    let specs = config
        .tags
        .iter()
        .map(|t| config.spec(t).ok_or_else(|| usage(format!("unknown augmentation tag {t:?} (expected bs, gn or ps)"))))
        .collect::<anyhow::Result<Vec<_>>>()?;
    for spec in &specs {
        spec.validate().map_err(|e| usage(format!("{}: {e}", spec.tag())))?;
    }
    let out = out_dir(args.out, &mut config)?;

    let manifest_path = absolute(&args.manifest)?;
    let manifest = usable_rows(load_manifest(&manifest_path, &config.language)?, config.keep_flagged);
    let mut experiment = ExperimentPlan::new(specs, config.fraction, Seed(config.seed))?;
    experiment.independent_draws = config.independent_draws;
    let datasets = build_plan(&manifest, &experiment)?;

    let file = PlanFile {
        manifest: manifest_path,
        keep_flagged: config.keep_flagged,
        train_rows: datasets[0].clean.len(),
        datasets: datasets
            .iter()
            .zip(&experiment.configs)
            .map(|(d, c)| DatasetSummary {
                name: d.name.clone(),
                tags: c.tags.clone(),
                clean: d.clean.len(),
                augmented: d.augmented.len(),
                rows: d.len(),
            })
            .collect(),
        plan: experiment,
    };
    write_json(&out.join(PLAN_FILE), &file)?;
    config.echo(&out)?;
    for d in &file.datasets {
        println!("{:<10} {:>8} rows ({} clean + {} augmented)", d.name, d.rows, d.clean, d.augmented);
    }
    Ok(())
}

#[derive(Serialize)]
struct FailureReport<'a> {
    config: &'a str,
    failures: &'a [RowFailure],
}

fn augment(args: AugmentArgs, mut config: RunConfig) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.plan).with_context(|| format!("reading {}", args.plan.display()))?;
    let mut file: PlanFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.plan.display()))?;
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(m) = args.max_failures {
        config.max_failure_fraction = m;
    }
    file.plan.independent_draws |= args.independent_draws;
    config.seed = file.plan.seed.0;
    config.fraction = file.plan.fraction;
    config.independent_draws = file.plan.independent_draws;
    config.keep_flagged = file.keep_flagged;
    config.tags = file.plan.augmentations.iter().map(|a| a.tag().to_string()).collect();
    for spec in &file.plan.augmentations {
        match spec {
            AugmentationSpec::BandStop(s) => config.band_stop = s.clone(),
            AugmentationSpec::NoiseInject(s) => config.noise = s.clone(),
            AugmentationSpec::PitchShift(s) => config.pitch_shift = s.clone(),
        }
    }
    if args.config != "all" && !file.plan.configs.iter().any(|c| c.name == args.config) {
        let names: Vec<&str> = file.plan.configs.iter().map(|c| c.name.as_str()).collect();
        return Err(usage(format!("no config {:?} in plan (have {})", args.config, names.join(", "))));
    }
    let out = out_dir(args.out_dir, &mut config)?;

    let manifest = usable_rows(load_manifest(&file.manifest, &config.language)?, file.keep_flagged);
    let mut datasets = build_plan(&manifest, &file.plan)?;
    if datasets[0].clean.len() != file.train_rows {
        bail!(
            "manifest {} now has {} usable train rows, plan was made with {}",
            file.manifest.display(),
            datasets[0].clean.len(),
            file.train_rows
        );
    }
    if args.config != "all" {
        datasets.retain(|d| d.name == args.config);
    }
    let options = MaterializeOptions {
        target_rate: config.target_rate,
        workers: Workers(config.workers),
        max_failure_fraction: config.max_failure_fraction,
        ..MaterializeOptions::default()
    };
    let done = materialize_all(&datasets, &file.plan, &out, &options)?;
    let mut failures = Vec::new();
    for m in &done {
        m.manifest.save_tsv(out.join(format!("{}.tsv", m.name)))?;
        if !m.failures.is_empty() {
            tracing::warn!(config = %m.name, failed = m.failures.len(), "some rows could not be augmented");
            failures.push(FailureReport {
                config: &m.name,
                failures: &m.failures,
            });
        }
        println!("{:<10} {:>8} rows, {} failed", m.name, m.manifest.records.len(), m.failures.len());
    }
    write_json(&out.join(FAILURES_FILE), &failures)?;
    config.echo(&out)?;
    Ok(())
}

fn apply_flags(cfg: &mut NormalizationConfig, flags: &NormalizationFlags) {
    let set = |field: &mut bool, flag: Option<bool>| {
        if let Some(v) = flag {
            *field = v;
        }
    };
    set(&mut cfg.remove_punctuation, flags.remove_punctuation);
    set(&mut cfg.remove_special_chars, flags.remove_special_chars);
    set(&mut cfg.strip_arabic_diacritics, flags.strip_diacritics);
    set(&mut cfg.lowercase, flags.lowercase);
    set(&mut cfg.collapse_whitespace, flags.collapse_whitespace);
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

fn normalize_cmd(args: NormalizeArgs, mut config: RunConfig) -> anyhow::Result<()> {
    apply_flags(&mut config.normalization, &args.flags);
    let cfg = &config.normalization;
    let mut out = output(args.out.as_deref())?;
    match &args.manifest {
        Some(path) => {
            let mut manifest = load_manifest(path, &config.language)?;
            for r in &mut manifest.records {
                r.sentence = normalize(&r.sentence, cfg);
            }
            manifest.write_tsv(&mut out)?;
        }
        None => {
            for line in std::io::stdin().lock().lines() {
                writeln!(out, "{}", normalize(&line?, cfg))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads `source_id<TAB>hypothesis` lines; a `source_id` header line is skipped.
fn read_hypotheses(path: &Path) -> anyhow::Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut hyps = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() || (i == 0 && line.split('\t').next() == Some("source_id")) {
            continue;
        }
        let (id, hyp) = line.split_once('\t').unwrap_or((line, ""));
        if hyps.insert(id.to_string(), hyp.to_string()).is_some() {
            bail!("{}: duplicate hypothesis for {id:?} on line {}", path.display(), i + 1);
        }
    }
    Ok(hyps)
}

fn score(args: ScoreArgs, mut config: RunConfig) -> anyhow::Result<()> {
    if let Some(s) = args.strip_diacritics {
        config.normalization.strip_arabic_diacritics = s;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let refs = load_manifest(&args.refs, &config.language)?;
    let mut hyps = read_hypotheses(&args.hyps)?;
    let mut missing = 0usize;
    let pairs: Vec<ScorePair> = refs
        .records
        .iter()
        .filter(|r| args.split.is_none_or(|s| r.split == s))
        .map(|r| {
            let hyp = hyps.remove(&r.source_id).unwrap_or_else(|| {
                missing += 1;
                String::new()
            });
            ScorePair::new(&r.source_id, &r.sentence, hyp)
        })
        .collect();
    if missing > 0 {
        tracing::warn!(missing, "references without a hypothesis were scored against an empty hypothesis");
    }
    if !hyps.is_empty() {
        tracing::warn!(unmatched = hyps.len(), "hypotheses without a reference were ignored");
    }
    let report = score_corpus(&pairs, &config.normalization, Workers(config.workers));
    let mut out = std::io::stdout().lock();
    if args.json {
        if args.per_utt {
            out.write_all(report.to_json_lines().as_bytes())?;
        } else {
            let line = serde_json::json!({ "corpus": report.summary(), "skipped": report.skipped });
            writeln!(out, "{line}")?;
        }
    } else {
        out.write_all(report.render_table(args.per_utt).as_bytes())?;
    }
    Ok(())
}
