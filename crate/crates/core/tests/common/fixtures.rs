use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use sha2::{Digest, Sha256};
use speechaug::audio::{write_wav, AudioClip};
use speechaug::corpus::{ClipRecord, Manifest, Split};

/// Writes a mono tone of `secs` seconds; `amp` 0 gives digital silence.
pub fn write_tone(path: &Path, freq: f64, amp: f64, rate: u32, secs: f64) {
    let n = (rate as f64 * secs).round() as usize;
    let samples = (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin())
        .collect();
    write_wav(&AudioClip::new(samples, rate, "fixture"), path).unwrap();
}

/// A corpus of short tones under `root`: `train` train rows then `dev` dev rows.
pub fn synthetic_corpus(root: &Path, train: usize, dev: usize, rate: u32) -> Manifest {
    let mut records = Vec::new();
    for i in 0..train + dev {
        let (split, id) = if i < train {
            (Split::Train, format!("train_{i:04}"))
        } else {
            (Split::Dev, format!("dev_{:04}", i - train))
        };
        let file = format!("{id}.wav");
        write_tone(&root.join(&file), 200.0 + 10.0 * i as f64, 0.5, rate, 0.25);
        let mut r = ClipRecord::new(&id, file, format!("frase número {i}"), split);
        r.duration_s = Some(0.25);
        records.push(r);
    }
    Manifest::new(records, "pt", root).unwrap()
}

/// SHA-256 of every file under `dir`, keyed by path relative to `dir`.
pub fn hash_tree(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let digest = Sha256::digest(std::fs::read(&path).unwrap());
                let key = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(key, format!("{digest:x}"));
            }
        }
    }
    out
}
