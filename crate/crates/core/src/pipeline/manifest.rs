//! JSON-lines provenance manifest: one row per output file.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::apply::apply_technique;
use super::config::RenderSettings;
use crate::error::{Error, Result};
use crate::image::{resize_bilinear, ImageBuffer};
use crate::rng::RandomStream;
use crate::sampling::{content_seed, ParamMap, Technique, TechniqueParams};

/// Provenance of one output image. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory unless absolute.
    pub output_file: String,
    pub source_file: String,
    pub label: String,
    pub technique: String,
    pub replicate: u32,
    pub params: ParamMap,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub sha256: String,
}

impl ManifestEntry {
    pub fn technique(&self) -> Result<Technique> {
        self.technique.parse()
    }

    pub fn resolve_output(&self, manifest_dir: &Path) -> PathBuf {
        let p = Path::new(&self.output_file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            manifest_dir.join(p)
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Directory that relative `output_file` values are resolved against.
pub fn manifest_dir(manifest_path: &Path) -> PathBuf {
    match manifest_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn to_jsonl(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("manifest rows always serialize"));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never observe a partial manifest.
pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let dir = manifest_dir(path);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(to_jsonl(entries).as_bytes())
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Manifest {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Problem {
    Missing,
    HashMismatch { expected: String, actual: String },
    DuplicateRow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyIssue {
    pub file: PathBuf,
    pub problem: Problem,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub rows: usize,
    pub issues: Vec<VerifyIssue>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks that every row's file exists, is listed once, and hashes to the
/// recorded digest.
pub fn verify_manifest(path: &Path) -> Result<VerifyReport> {
    let entries = read_manifest(path)?;
    let dir = manifest_dir(path);
    let mut seen = HashSet::new();
    let mut report = VerifyReport {
        rows: entries.len(),
        issues: Vec::new(),
    };
    for e in &entries {
        let file = e.resolve_output(&dir);
        if !seen.insert(e.output_file.clone()) {
            report.issues.push(VerifyIssue {
                file,
                problem: Problem::DuplicateRow,
            });
            continue;
        }
        match std::fs::read(&file) {
            Ok(bytes) => {
                let actual = sha256_hex(&bytes);
                if actual != e.sha256 {
                    report.issues.push(VerifyIssue {
                        file,
                        problem: Problem::HashMismatch {
                            expected: e.sha256.clone(),
                            actual,
                        },
                    });
                }
            }
            Err(_) => report.issues.push(VerifyIssue {
                file,
                problem: Problem::Missing,
            }),
        }
    }
    Ok(report)
}

fn load_resized(path: &Path, size: usize) -> Result<ImageBuffer> {
    resize_bilinear(&ImageBuffer::load(path)?, size, size)
}

/// Regenerates a row's image from its source file, recorded parameters and
/// seed. No parameter is re-sampled.
pub fn replay_entry(entry: &ManifestEntry, render: &RenderSettings) -> Result<ImageBuffer> {
    let technique = entry.technique()?;
    let params = TechniqueParams::from_map(technique, &entry.params)?;
    let source = load_resized(Path::new(&entry.source_file), render.size)?;
    let partner = match technique {
        Technique::SamplePairing => {
            let file = entry
                .params
                .get("partner_file")
                .and_then(|v| v.as_str())
                .ok_or_else(|| Error::invalid("sample-pairing row lacks partner_file"))?;
            Some(load_resized(Path::new(file), render.size)?)
        }
        _ => None,
    };
    let mut rng = RandomStream::new(content_seed(entry.seed));
    Ok(apply_technique(&source, &params, render, partner.as_ref(), &mut rng)?.image)
}

/// Replays a row and compares the PNG digest with the recorded one.
pub fn replay_matches(entry: &ManifestEntry, render: &RenderSettings) -> Result<bool> {
    let image = replay_entry(entry, render)?;
    Ok(sha256_hex(&image.encode_png()?) == entry.sha256)
}
