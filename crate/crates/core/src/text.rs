//! Transcript normalization and Arabic diacritics handling.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use unicode_general_category::get_general_category;
use unicode_normalization::UnicodeNormalization;

/// Set of code points treated as diacritics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiacriticsTable {
    marks: BTreeSet<char>,
}

impl DiacriticsTable {
    /// Arabic tashkeel, in code point order:
    ///
    /// | code point | name |
    /// |---|---|
    /// | U+064B | fathatan |
    /// | U+064C | dammatan |
    /// | U+064D | kasratan |
    /// | U+064E | fatha |
    /// | U+064F | damma |
    /// | U+0650 | kasra |
    /// | U+0651 | shadda |
    /// | U+0652 | sukun |
    /// | U+0653 | maddah above |
    /// | U+0654 | hamza above |
    /// | U+0655 | hamza below |
    /// | U+0670 | superscript alef |
    pub fn arabic() -> Self {
        Self {
            marks: ('\u{064B}'..='\u{0655}').chain(['\u{0670}']).collect(),
        }
    }

    pub fn from_marks(marks: impl IntoIterator<Item = char>) -> Self {
        Self {
            marks: marks.into_iter().collect(),
        }
    }

    pub fn contains(&self, c: char) -> bool {
        self.marks.contains(&c)
    }

    pub fn marks(&self) -> impl Iterator<Item = char> + '_ {
        self.marks.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Removes every mark in the table, composing the remainder to NFC.
    ///
    /// Works on the canonical decomposition so that marks folded into
    /// precomposed letters (alef with hamza above, for instance) are removed
    /// as well.
    pub fn strip(&self, text: &str) -> String {
        text.nfd().filter(|c| !self.contains(*c)).nfc().collect()
    }

    /// Fraction of code points in `text` that belong to the table.
    pub fn density(&self, text: &str) -> f64 {
        let (total, marks) = text.chars().fold((0usize, 0usize), |(t, m), c| {
            (t + 1, m + usize::from(self.contains(c)))
        });
        if total == 0 {
            0.0
        } else {
            marks as f64 / total as f64
        }
    }
}

impl Default for DiacriticsTable {
    fn default() -> Self {
        Self::arabic()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    /// Drop Unicode punctuation (categories P*), keeping word-internal apostrophes.
    pub remove_punctuation: bool,
    /// Drop Unicode symbols (categories S*).
    pub remove_special_chars: bool,
    pub strip_arabic_diacritics: bool,
    pub lowercase: bool,
    pub collapse_whitespace: bool,
    pub diacritics: DiacriticsTable,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            remove_punctuation: true,
            remove_special_chars: true,
            strip_arabic_diacritics: false,
            lowercase: true,
            collapse_whitespace: true,
            diacritics: DiacriticsTable::arabic(),
        }
    }
}

impl NormalizationConfig {
    /// Defaults with diacritics stripping turned on.
    pub fn stripping_diacritics() -> Self {
        Self {
            strip_arabic_diacritics: true,
            ..Self::default()
        }
    }
}

fn category_initial(c: char) -> char {
    get_general_category(c)
        .abbreviation()
        .chars()
        .next()
        .unwrap_or('C')
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || category_initial(c) == 'M'
}

fn remove_marks(text: &str, punctuation: bool, symbols: bool) -> String {
    let chars: Vec<char> = text.chars().collect();
    chars
        .iter()
        .enumerate()
        .filter(|&(i, &c)| {
            let removable = match category_initial(c) {
                'P' => punctuation,
                'S' => symbols,
                _ => false,
            };
            if !removable {
                return true;
            }
            is_apostrophe(c)
                && i > 0
                && is_word_char(chars[i - 1])
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        })
        .map(|(_, &c)| c)
        .collect()
}

fn lowercase(text: &str) -> String {
    // multi-character lowercase expansions are left alone so that length
    // never grows
    text.chars()
        .map(|c| {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) => l,
                _ => c,
            }
        })
        .collect()
}

/// Normalizes a transcript: NFC, optional diacritics strip, punctuation and
/// symbol removal, lowercasing, whitespace collapse. Idempotent.
pub fn normalize(text: &str, config: &NormalizationConfig) -> String {
    let mut s: String = text.nfc().collect();
    if config.strip_arabic_diacritics {
        s = config.diacritics.strip(&s);
    }
    if config.remove_punctuation || config.remove_special_chars {
        s = remove_marks(&s, config.remove_punctuation, config.remove_special_chars);
    }
    if config.lowercase {
        s = lowercase(&s);
    }
    if config.collapse_whitespace {
        s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    // removals can leave a base letter next to a mark it composes with
    s.nfc().collect()
}

/// Fraction of code points that are Arabic diacritics.
pub fn diacritic_density(text: &str) -> f64 {
    DiacriticsTable::arabic().density(text)
}
