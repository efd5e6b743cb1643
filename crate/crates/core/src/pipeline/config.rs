use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use super::dataset::LabelRule;
use crate::error::{Error, Result};
use crate::geometry::Interp;
use crate::image::FillMode;
use crate::sampling::{parse_technique_list, Technique, TechniqueSpec};

pub const DEFAULT_SIZE: usize = 512;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Resampling policy shared by every job in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderSettings {
    /// Sources are resized to `size x size` before augmentation.
    pub size: usize,
    pub fill: FillMode,
    pub interp: Interp,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            size: DEFAULT_SIZE,
            fill: FillMode::Reflect,
            interp: Interp::Bilinear,
        }
    }
}

/// Complete description of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub techniques: Vec<TechniqueSpec>,
    pub master_seed: u64,
    pub render: RenderSettings,
    pub label_rule: LabelRule,
    pub balance_ratio: Option<f64>,
    pub jobs: usize,
    /// Defaults to `<output_dir>/manifest.jsonl`.
    pub manifest: Option<PathBuf>,
}

impl PipelineConfig {
    /// All seven core techniques at their default multiplicities.
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            techniques: Technique::CORE_SEVEN
                .iter()
                .map(|&t| TechniqueSpec::new(t))
                .collect(),
            master_seed: seed,
            render: RenderSettings::default(),
            label_rule: LabelRule::default(),
            balance_ratio: None,
            jobs: default_jobs(),
            manifest: None,
        }
    }

    pub fn with_techniques(mut self, techniques: &[Technique]) -> Self {
        self.techniques = techniques.iter().map(|&t| TechniqueSpec::new(t)).collect();
        self
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest
            .clone()
            .unwrap_or_else(|| self.output_dir.join(MANIFEST_FILE))
    }

    pub fn validate(&self) -> Result<()> {
        if self.render.size == 0 {
            return Err(Error::invalid("size must be at least 1"));
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs must be at least 1"));
        }
        if self.techniques.is_empty() {
            return Err(Error::invalid("no techniques selected"));
        }
        for (i, a) in self.techniques.iter().enumerate() {
            if self.techniques[..i]
                .iter()
                .any(|b| b.technique() == a.technique())
            {
                return Err(Error::invalid(format!(
                    "technique {} listed more than once",
                    a.technique()
                )));
            }
            a.bounds().validate()?;
        }
        if let Some(r) = self.balance_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::invalid(format!(
                    "balance ratio must lie in (0, 1], got {r}"
                )));
            }
        }
        Ok(())
    }
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Parses a 64-bit seed written in decimal or `0x` hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse::<u64>(),
    };
    parsed.map_err(|_| Error::invalid(format!("invalid seed '{s}'")))
}

/// Parses `TECH=K,TECH=K` multiplicity overrides.
pub fn parse_multiplicities(list: &str) -> Result<BTreeMap<Technique, u32>> {
    let mut out = BTreeMap::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, k) = item
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("expected TECH=K, got '{item}'")))?;
        let t: Technique = name.trim().parse()?;
        let k: u32 = k
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("invalid multiplicity in '{item}'")))?;
        out.insert(t, k);
    }
    Ok(out)
}

/// A JSON config file. Keys mirror [`PipelineConfig`]; every key is
/// optional and command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub input_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub techniques: Option<Vec<String>>,
    pub multiplicity: Option<BTreeMap<String, u32>>,
    pub master_seed: Option<Value>,
    pub size: Option<usize>,
    pub fill: Option<String>,
    pub cval: Option<u8>,
    pub interp: Option<String>,
    pub label_rule: Option<String>,
    pub balance_ratio: Option<f64>,
    pub isotropic_zoom: Option<bool>,
    pub jobs: Option<usize>,
    pub manifest: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn technique_list(&self) -> Result<Option<Vec<Technique>>> {
        self.techniques
            .as_ref()
            .map(|names| parse_technique_list(&names.join(",")))
            .transpose()
    }

    pub fn seed(&self) -> Result<Option<u64>> {
        match &self.master_seed {
            None => Ok(None),
            Some(Value::Number(n)) => n.as_u64().map(Some).ok_or_else(|| {
                Error::invalid(format!("master_seed {n} is not a 64-bit unsigned integer"))
            }),
            Some(Value::String(s)) => parse_seed(s).map(Some),
            Some(other) => Err(Error::invalid(format!(
                "master_seed must be a number or string, got {other}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_parse_in_both_bases() {
        assert_eq!(parse_seed("42").unwrap(), 42);
        assert_eq!(parse_seed("0x2A").unwrap(), 42);
        assert_eq!(parse_seed("0xffffffffffffffff").unwrap(), u64::MAX);
        assert!(parse_seed("-1").is_err());
        assert!(parse_seed("0xg").is_err());
    }

    #[test]
    fn multiplicity_overrides() {
        let m = parse_multiplicities("rotate=2, noise=9").unwrap();
        assert_eq!(m[&Technique::Rotate], 2);
        assert_eq!(m[&Technique::NoiseGaussian], 9);
        assert!(parse_multiplicities("rotate").is_err());
        assert!(parse_multiplicities("rotata=2").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = PipelineConfig::new("in", "out", 1);
        assert!(c.validate().is_ok());
        c.techniques.push(TechniqueSpec::new(Technique::Rotate));
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::new("in", "out", 1);
        c.render.size = 0;
        assert!(c.validate().is_err());
        assert_eq!(
            PipelineConfig::new("in", "out", 1).manifest_path(),
            Path::new("out/manifest.jsonl")
        );
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let ok: ConfigFile =
            serde_json::from_str(r#"{"size": 64, "master_seed": "0x10", "techniques": ["all"]}"#)
                .unwrap();
        assert_eq!(ok.seed().unwrap(), Some(16));
        assert_eq!(ok.technique_list().unwrap().unwrap().len(), 7);
        assert!(serde_json::from_str::<ConfigFile>(r#"{"sise": 64}"#).is_err());
    }
}
