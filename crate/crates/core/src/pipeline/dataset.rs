use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::ImageReader;
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

const EXTENSIONS: [&str; 3] = ["jpg", "jpeg", "png"];

/// How a class label is derived from an image path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelRule {
    /// Name of the directory containing the file.
    #[default]
    ParentDir,
    /// File stem with a trailing `_<digits>` removed (`Abyssinian_1.jpg`
    /// becomes `Abyssinian`).
    Stem,
}

impl LabelRule {
    pub fn name(self) -> &'static str {
        match self {
            LabelRule::ParentDir => "parent-dir",
            LabelRule::Stem => "stem",
        }
    }

    pub fn label_for(self, path: &Path) -> String {
        match self {
            LabelRule::ParentDir => path
                .parent()
                .and_then(Path::file_name)
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "unlabeled".to_string()),
            LabelRule::Stem => {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                strip_numeric_suffix(&stem).to_string()
            }
        }
    }
}

impl FromStr for LabelRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parent-dir" => Ok(LabelRule::ParentDir),
            "stem" => Ok(LabelRule::Stem),
            other => Err(Error::invalid(format!("unknown label rule '{other}'"))),
        }
    }
}

/// `name_123` -> `name`; anything else unchanged.
fn strip_numeric_suffix(stem: &str) -> &str {
    match stem.rsplit_once('_') {
        Some((head, digits))
            if !head.is_empty()
                && !digits.is_empty()
                && digits.bytes().all(|b| b.is_ascii_digit()) =>
        {
            head
        }
        _ => stem,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub label: String,
    pub source_index: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ScanReport {
    pub entries: Vec<DatasetEntry>,
    /// Files with an image extension that could not be decoded.
    pub skipped: Vec<(PathBuf, String)>,
}

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
        .unwrap_or(false)
}

fn probe(path: &Path) -> std::result::Result<(), String> {
    ImageReader::open(path)
        .map_err(|e| e.to_string())?
        .with_guessed_format()
        .map_err(|e| e.to_string())?
        .into_dimensions()
        .map(|_| ())
        .map_err(|e| e.to_string())
}

/// Recursively lists `.jpg`/`.jpeg`/`.png` files (any case) under
/// `input_dir` in lexicographic path order. Files whose header cannot be
/// decoded are skipped and reported.
pub fn scan_dataset(input_dir: &Path, rule: LabelRule) -> Result<ScanReport> {
    if !input_dir.is_dir() {
        return Err(Error::NotFound(input_dir.to_path_buf()));
    }
    let mut paths = Vec::new();
    for entry in WalkDir::new(input_dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(input_dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        if entry.file_type().is_file() && has_image_extension(entry.path()) {
            paths.push(entry.into_path());
        }
    }
    paths.sort();

    let mut report = ScanReport::default();
    for path in paths {
        match probe(&path) {
            Ok(()) => {
                let label = rule.label_for(&path);
                let source_index = report.entries.len();
                report.entries.push(DatasetEntry {
                    path,
                    label,
                    source_index,
                });
            }
            Err(reason) => {
                log::warn!("skipping {}: {reason}", path.display());
                report.skipped.push((path, reason));
            }
        }
    }
    if report.entries.is_empty() {
        log::warn!("no images found under {}", input_dir.display());
    }
    Ok(report)
}

/// Images per class, sorted by label.
pub fn class_counts(dataset: &[DatasetEntry]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for e in dataset {
        *counts.entry(e.label.clone()).or_insert(0) += 1;
    }
    counts
}

/// Random oversampling: duplicates minority-class entries (uniformly, with
/// replacement) until every class holds at least
/// `ceil(target_ratio * majority)` entries. Duplicates are appended with
/// fresh source indices; classes are topped up in label order.
pub fn oversample_minority(
    dataset: &[DatasetEntry],
    target_ratio: f64,
    rng: &mut RandomStream,
) -> Result<Vec<DatasetEntry>> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::invalid(format!(
            "balance ratio must lie in (0, 1], got {target_ratio}"
        )));
    }
    let counts = class_counts(dataset);
    let mut out = dataset.to_vec();
    if counts.len() < 2 {
        log::warn!("oversampling needs at least two classes; dataset left unchanged");
        return Ok(out);
    }
    let majority = counts.values().copied().max().unwrap_or(0);
    // Guard against 0.5 * 9 = 4.500000000000001 style products.
    let target = ((target_ratio * majority as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut next_index = out.iter().map(|e| e.source_index + 1).max().unwrap_or(0);
    for (label, &count) in &counts {
        if count >= target {
            continue;
        }
        let members: Vec<&DatasetEntry> = dataset.iter().filter(|e| &e.label == label).collect();
        for _ in count..target {
            let pick = members[rng.below(members.len() as u64) as usize];
            out.push(DatasetEntry {
                path: pick.path.clone(),
                label: label.clone(),
                source_index: next_index,
            });
            next_index += 1;
        }
    }
    Ok(out)
}
