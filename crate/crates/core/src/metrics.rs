//! Word and character error rates.
//!
//! Both rates are `(I + S + D) / N` over a unit-cost Levenshtein alignment;
//! they differ only in tokenization. Words are the whitespace-separated
//! tokens of the normalized text. Characters are its code points, including
//! the single spaces between words.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::par::{self, Workers};
use crate::text::{normalize, NormalizationConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("reference is empty")]
    EmptyReference,
}

/// Insertion, substitution and deletion counts against a reference of `reference_length` tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EditCounts {
    pub insertions: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub reference_length: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.insertions + self.substitutions + self.deletions
    }

    /// Error rate in percent, `None` for an empty reference.
    pub fn rate(&self) -> Option<f64> {
        (self.reference_length > 0)
            .then(|| 100.0 * self.errors() as f64 / self.reference_length as f64)
    }
}

impl std::ops::Add for EditCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            insertions: self.insertions + o.insertions,
            substitutions: self.substitutions + o.substitutions,
            deletions: self.deletions + o.deletions,
            reference_length: self.reference_length + o.reference_length,
        }
    }
}

impl std::iter::Sum for EditCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditStep<T> {
    Match(T),
    Substitute { reference: T, hypothesis: T },
    Insert(T),
    Delete(T),
}

/// Minimal-cost edit script from reference to hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment<T> {
    pub steps: Vec<EditStep<T>>,
}

impl<T: Clone> Alignment<T> {
    pub fn reference(&self) -> Vec<T> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                EditStep::Match(t) | EditStep::Delete(t) => Some(t.clone()),
                EditStep::Substitute { reference, .. } => Some(reference.clone()),
                EditStep::Insert(_) => None,
            })
            .collect()
    }

    pub fn hypothesis(&self) -> Vec<T> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                EditStep::Match(t) | EditStep::Insert(t) => Some(t.clone()),
                EditStep::Substitute { hypothesis, .. } => Some(hypothesis.clone()),
                EditStep::Delete(_) => None,
            })
            .collect()
    }

    pub fn counts(&self) -> EditCounts {
        let mut c = EditCounts::default();
        for s in &self.steps {
            match s {
                EditStep::Match(_) => c.reference_length += 1,
                EditStep::Substitute { .. } => {
                    c.substitutions += 1;
                    c.reference_length += 1;
                }
                EditStep::Delete(_) => {
                    c.deletions += 1;
                    c.reference_length += 1;
                }
                EditStep::Insert(_) => c.insertions += 1,
            }
        }
        c
    }
}

/// Levenshtein alignment with unit costs.
///
/// Ties in the backtrace resolve as match, then substitution, then deletion,
/// then insertion. An empty reference with a non-empty hypothesis is an
/// error since no rate exists for it.
pub fn edit_counts<T: PartialEq + Clone>(
    reference: &[T],
    hypothesis: &[T],
) -> Result<(EditCounts, Alignment<T>), MetricsError> {
    if reference.is_empty() && !hypothesis.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let (n, m) = (reference.len(), hypothesis.len());
    let cols = m + 1;
    let mut d = vec![0u32; (n + 1) * cols];
    for j in 0..=m {
        d[j] = j as u32;
    }
    for i in 1..=n {
        d[i * cols] = i as u32;
        for j in 1..=m {
            let diag = d[(i - 1) * cols + j - 1] + u32::from(reference[i - 1] != hypothesis[j - 1]);
            let up = d[(i - 1) * cols + j] + 1;
            let left = d[i * cols + j - 1] + 1;
            d[i * cols + j] = diag.min(up).min(left);
        }
    }

    let mut steps = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * cols + j];
        if i > 0 && j > 0 {
            let diag = d[(i - 1) * cols + j - 1];
            if reference[i - 1] == hypothesis[j - 1] && diag == here {
                steps.push(EditStep::Match(reference[i - 1].clone()));
                i -= 1;
                j -= 1;
                continue;
            }
            if diag + 1 == here {
                steps.push(EditStep::Substitute {
                    reference: reference[i - 1].clone(),
                    hypothesis: hypothesis[j - 1].clone(),
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[(i - 1) * cols + j] + 1 == here {
            steps.push(EditStep::Delete(reference[i - 1].clone()));
            i -= 1;
        } else {
            steps.push(EditStep::Insert(hypothesis[j - 1].clone()));
            j -= 1;
        }
    }
    steps.reverse();
    let alignment = Alignment { steps };
    Ok((alignment.counts(), alignment))
}

fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

fn non_empty_reference(reference: &str) -> Result<(), MetricsError> {
    if reference.is_empty() {
        Err(MetricsError::EmptyReference)
    } else {
        Ok(())
    }
}

/// Word-level edit counts after normalizing both sides.
pub fn word_counts(
    reference: &str,
    hypothesis: &str,
    config: &NormalizationConfig,
) -> Result<EditCounts, MetricsError> {
    let (r, h) = (normalize(reference, config), normalize(hypothesis, config));
    non_empty_reference(&r)?;
    Ok(edit_counts(&words(&r), &words(&h))?.0)
}

/// Character-level edit counts after normalizing both sides. Spaces count.
pub fn char_counts(
    reference: &str,
    hypothesis: &str,
    config: &NormalizationConfig,
) -> Result<EditCounts, MetricsError> {
    let (r, h) = (normalize(reference, config), normalize(hypothesis, config));
    non_empty_reference(&r)?;
    let r: Vec<char> = r.chars().collect();
    let h: Vec<char> = h.chars().collect();
    Ok(edit_counts(&r, &h)?.0)
}

/// Word error rate in percent.
pub fn wer(reference: &str, hypothesis: &str, config: &NormalizationConfig) -> Result<f64, MetricsError> {
    let c = word_counts(reference, hypothesis, config)?;
    Ok(100.0 * c.errors() as f64 / c.reference_length as f64)
}

/// Character error rate in percent.
pub fn cer(reference: &str, hypothesis: &str, config: &NormalizationConfig) -> Result<f64, MetricsError> {
    let c = char_counts(reference, hypothesis, config)?;
    Ok(100.0 * c.errors() as f64 / c.reference_length as f64)
}

/// One reference/hypothesis pair to score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorePair {
    pub source_id: String,
    pub reference: String,
    pub hypothesis: String,
}

impl ScorePair {
    pub fn new(source_id: impl Into<String>, reference: impl Into<String>, hypothesis: impl Into<String>) -> Self {
        Self {
            source_id: source_id.into(),
            reference: reference.into(),
            hypothesis: hypothesis.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceScore {
    pub source_id: String,
    pub wer: f64,
    pub cer: f64,
    pub words: EditCounts,
    pub chars: EditCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedUtterance {
    pub source_id: String,
    pub reason: String,
}

/// Per-utterance scores plus pooled corpus counts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreReport {
    pub utterances: Vec<UtteranceScore>,
    pub skipped: Vec<SkippedUtterance>,
    pub words: EditCounts,
    pub chars: EditCounts,
}

/// Corpus summary line for structured output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub utterances: usize,
    pub skipped: usize,
    pub wer: Option<f64>,
    pub cer: Option<f64>,
    pub words: EditCounts,
    pub chars: EditCounts,
}

impl ScoreReport {
    /// Pooled word error rate: total word errors over total reference words.
    pub fn wer(&self) -> Option<f64> {
        self.words.rate()
    }

    pub fn cer(&self) -> Option<f64> {
        self.chars.rate()
    }

    pub fn summary(&self) -> CorpusSummary {
        CorpusSummary {
            utterances: self.utterances.len(),
            skipped: self.skipped.len(),
            wer: self.wer(),
            cer: self.cer(),
            words: self.words,
            chars: self.chars,
        }
    }

    /// One JSON object per utterance followed by `{"corpus": ...}`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for u in &self.utterances {
            out.push_str(&serde_json::to_string(u).expect("scores serialize"));
            out.push('\n');
        }
        let corpus = serde_json::json!({ "corpus": self.summary(), "skipped": self.skipped });
        out.push_str(&corpus.to_string());
        out.push('\n');
        out
    }

    /// Fixed-width text table; per-utterance rows only when `per_utterance`.
    pub fn render_table(&self, per_utterance: bool) -> String {
        struct Table<'a>(&'a ScoreReport, bool);
        impl fmt::Display for Table<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let r = self.0;
                let rate = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.2}"));
                if self.1 {
                    writeln!(
                        f,
                        "{:<32} {:>8} {:>8} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5}",
                        "source_id", "WER%", "CER%", "wI", "wS", "wD", "cI", "cS", "cD"
                    )?;
                    for u in &r.utterances {
                        writeln!(
                            f,
                            "{:<32} {:>8.2} {:>8.2} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5}",
                            u.source_id,
                            u.wer,
                            u.cer,
                            u.words.insertions,
                            u.words.substitutions,
                            u.words.deletions,
                            u.chars.insertions,
                            u.chars.substitutions,
                            u.chars.deletions
                        )?;
                    }
                    writeln!(f)?;
                }
                writeln!(f, "utterances: {}  skipped: {}", r.utterances.len(), r.skipped.len())?;
                writeln!(
                    f,
                    "WER: {}%  ({} errors / {} words; I={} S={} D={})",
                    rate(r.wer()),
                    r.words.errors(),
                    r.words.reference_length,
                    r.words.insertions,
                    r.words.substitutions,
                    r.words.deletions
                )?;
                writeln!(
                    f,
                    "CER: {}%  ({} errors / {} chars; I={} S={} D={})",
                    rate(r.cer()),
                    r.chars.errors(),
                    r.chars.reference_length,
                    r.chars.insertions,
                    r.chars.substitutions,
                    r.chars.deletions
                )?;
                for s in &r.skipped {
                    writeln!(f, "skipped {}: {}", s.source_id, s.reason)?;
                }
                Ok(())
            }
        }
        Table(self, per_utterance).to_string()
    }
}

fn score_one(pair: &ScorePair, config: &NormalizationConfig) -> Result<UtteranceScore, SkippedUtterance> {
    let skip = |e: MetricsError| SkippedUtterance {
        source_id: pair.source_id.clone(),
        reason: e.to_string(),
    };
    let words = word_counts(&pair.reference, &pair.hypothesis, config).map_err(skip)?;
    let chars = char_counts(&pair.reference, &pair.hypothesis, config).map_err(skip)?;
    Ok(UtteranceScore {
        source_id: pair.source_id.clone(),
        wer: words.rate().unwrap_or(f64::NAN),
        cer: chars.rate().unwrap_or(f64::NAN),
        words,
        chars,
    })
}

/// Scores every pair and pools counts. Pairs whose reference normalizes to
/// nothing are listed under `skipped` rather than failing the run.
pub fn score_corpus(pairs: &[ScorePair], config: &NormalizationConfig, workers: Workers) -> ScoreReport {
    let results = par::map(pairs, workers, |p| score_one(p, config));
    let mut report = ScoreReport::default();
    for r in results {
        match r {
            Ok(u) => report.utterances.push(u),
            Err(s) => report.skipped.push(s),
        }
    }
    report.words = report.utterances.iter().map(|u| u.words).sum();
    report.chars = report.utterances.iter().map(|u| u.chars).sum();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn identical_sequences() {
        let (c, a) = edit_counts(&chars("hello"), &chars("hello")).unwrap();
        assert_eq!(c.errors(), 0);
        assert_eq!(c.reference_length, 5);
        assert!(a.steps.iter().all(|s| matches!(s, EditStep::Match(_))));
    }

    #[test]
    fn swapped_pair_is_two_substitutions() {
        let (c, _) = edit_counts(&chars("ab"), &chars("ba")).unwrap();
        assert_eq!((c.substitutions, c.insertions, c.deletions), (2, 0, 0));
    }

    #[test]
    fn single_word_deletion() {
        let (c, a) = edit_counts(&["a", "b", "c"], &["a", "c"]).unwrap();
        assert_eq!((c.insertions, c.substitutions, c.deletions), (0, 0, 1));
        assert_eq!(a.steps[1], EditStep::Delete("b"));
    }

    #[test]
    fn empty_cases() {
        let empty: [&str; 0] = [];
        assert_eq!(edit_counts(&empty, &["x"]).unwrap_err(), MetricsError::EmptyReference);
        let (c, a) = edit_counts(&empty, &empty).unwrap();
        assert_eq!(c, EditCounts::default());
        assert!(a.steps.is_empty());
        let (c, _) = edit_counts(&["x", "y"], &empty).unwrap();
        assert_eq!(c.deletions, 2);
    }

    #[test]
    fn tie_break_prefers_substitution_over_indel() {
        // "ab" -> "ac": one substitution, never delete+insert
        let (_, a) = edit_counts(&chars("ab"), &chars("ac")).unwrap();
        assert_eq!(
            a.steps,
            vec![
                EditStep::Match('a'),
                EditStep::Substitute { reference: 'b', hypothesis: 'c' }
            ]
        );
    }

    #[test]
    fn rates_on_simple_strings() {
        let cfg = NormalizationConfig::default();
        assert_eq!(wer("the cat sat", "the cat sat", &cfg).unwrap(), 0.0);
        assert_eq!(wer("hello", "", &cfg).unwrap(), 100.0);
        assert_eq!(cer("abc", "", &cfg).unwrap(), 100.0);
        assert_eq!(cer("abc", "abc", &cfg).unwrap(), 0.0);
        assert_eq!(wer("", "x", &cfg).unwrap_err(), MetricsError::EmptyReference);
        assert_eq!(cer("!!", "x", &cfg).unwrap_err(), MetricsError::EmptyReference);
    }

    #[test]
    fn wer_can_exceed_one_hundred() {
        let cfg = NormalizationConfig::default();
        assert_eq!(wer("yes", "no no no", &cfg).unwrap(), 300.0);
    }

    #[test]
    fn corpus_pools_counts() {
        let cfg = NormalizationConfig::default();
        let pairs = vec![
            ScorePair::new("u1", "a b c d", "a x c"),
            ScorePair::new("u2", "a b c d e f", "a b c d e f"),
        ];
        let r = score_corpus(&pairs, &cfg, Workers::SEQUENTIAL);
        assert_eq!(r.utterances[0].wer, 50.0);
        assert_eq!(r.wer(), Some(20.0));
    }

    #[test]
    fn empty_corpus_and_skips() {
        let cfg = NormalizationConfig::default();
        let r = score_corpus(&[], &cfg, Workers::ALL);
        assert_eq!(r.words.reference_length, 0);
        assert_eq!(r.wer(), None);
        assert_eq!(r.cer(), None);
        assert!(r.render_table(false).contains("WER: n/a%"));

        let r = score_corpus(&[ScorePair::new("s", "...", "hi"), ScorePair::new("t", "ok", "ok")], &cfg, Workers::ALL);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].source_id, "s");
        assert_eq!(r.wer(), Some(0.0));
    }

    #[test]
    fn json_lines_shape() {
        let cfg = NormalizationConfig::default();
        let r = score_corpus(&[ScorePair::new("u1", "a b", "a c")], &cfg, Workers::SEQUENTIAL);
        let lines: Vec<serde_json::Value> = r
            .to_json_lines()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["source_id"], "u1");
        assert_eq!(lines[0]["wer"], 50.0);
        assert_eq!(lines[0]["words"]["substitutions"], 1);
        assert_eq!(lines[0]["chars"]["reference_length"], 3);
        assert_eq!(lines[1]["corpus"]["wer"], 50.0);
    }
}
