#![allow(dead_code)]

pub mod fixtures;
pub mod oracle;
pub mod spectrum;

/// Reference and model output from a Portuguese ASR example.
pub const PT_REFERENCE: &str = "é necessário fornecer quando formulado uma avaliação";
pub const PT_PREDICTION: &str = "e necessário ponecer quando forme lado u mavalação";
