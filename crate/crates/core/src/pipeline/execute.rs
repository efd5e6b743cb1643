use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use super::apply::apply_technique;
use super::config::{PipelineConfig, RenderSettings};
use super::dataset::{oversample_minority, scan_dataset, DatasetEntry};
use super::manifest::{manifest_dir, sha256_hex, write_manifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::image::{resize_bilinear, ImageBuffer};
use crate::rng::RandomStream;
use crate::sampling::{
    content_seed, derive_seed, derive_seed_with_code, sample_params, ParamMap, Technique,
    TechniqueParams, TechniqueSpec, BALANCE_CODE,
};

/// One output to produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    /// Position of the source in the dataset slice the plan was built from.
    pub entry: usize,
    pub source_index: usize,
    pub spec: TechniqueSpec,
    pub replicate: u32,
    pub seed: u64,
}

impl Job {
    pub fn technique(&self) -> Technique {
        self.spec.technique()
    }

    /// `<Prefix>_<source_index>_<replicate>_<seedhex8>.png`
    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}_{:08x}.png",
            self.technique().prefix(),
            self.source_index,
            self.replicate,
            self.seed >> 32
        )
    }
}

/// One job per (source, technique, replicate), ordered by source index,
/// then technique code, then replicate.
pub fn plan(config: &PipelineConfig, dataset: &[DatasetEntry]) -> Vec<Job> {
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by_key(|&i| dataset[i].source_index);
    let mut specs = config.techniques.clone();
    specs.sort_by_key(|s| s.technique().code());
    let mut jobs = Vec::new();
    for i in order {
        let source_index = dataset[i].source_index;
        for spec in &specs {
            for replicate in 0..spec.multiplicity() {
                jobs.push(Job {
                    entry: i,
                    source_index,
                    spec: *spec,
                    replicate,
                    seed: derive_seed(
                        config.master_seed,
                        source_index as u64,
                        spec.technique(),
                        replicate as u64,
                    ),
                });
            }
        }
    }
    jobs
}

/// Stream used to pick oversampling duplicates.
pub fn balance_stream(master_seed: u64) -> RandomStream {
    RandomStream::new(derive_seed_with_code(master_seed, 0, BALANCE_CODE, 0))
}

/// Rendered output of a job plus everything the manifest records about it.
pub struct RenderedJob {
    pub image: ImageBuffer,
    pub params: ParamMap,
}

/// Draws parameters from the job's parameter stream, then applies them
/// with the content stream. `load` resolves dataset positions to resized
/// images (used for the sample-pairing partner).
pub fn render_job<F>(
    seed: u64,
    spec: &TechniqueSpec,
    source: &ImageBuffer,
    dataset: &[DatasetEntry],
    load: F,
    render: &RenderSettings,
) -> Result<RenderedJob>
where
    F: Fn(usize) -> Result<Arc<ImageBuffer>>,
{
    let mut param_rng = RandomStream::new(seed);
    let params = sample_params(spec, &mut param_rng);
    let mut map = params.to_map();
    let partner = match params {
        TechniqueParams::SamplePairing { .. } => {
            if dataset.is_empty() {
                return Err(Error::invalid("sample pairing needs a non-empty dataset"));
            }
            let pos = param_rng.below(dataset.len() as u64) as usize;
            let partner = &dataset[pos];
            map.insert("partner".into(), partner.source_index.into());
            map.insert(
                "partner_file".into(),
                path_string(&absolute(&partner.path)).into(),
            );
            Some(load(pos)?)
        }
        _ => None,
    };
    let mut content_rng = RandomStream::new(content_seed(seed));
    let applied = apply_technique(
        source,
        &params,
        render,
        partner.as_deref(),
        &mut content_rng,
    )?;
    map.extend(applied.observed);
    Ok(RenderedJob {
        image: applied.image,
        params: map,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobFailure {
    pub source_file: PathBuf,
    pub technique: Technique,
    pub replicate: u32,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: Vec<ManifestEntry>,
    pub manifest_path: PathBuf,
    pub failures: Vec<JobFailure>,
    /// Files skipped at scan time as undecodable.
    pub skipped_sources: Vec<(PathBuf, String)>,
    pub dataset_size: usize,
}

enum Outcome {
    Done(ManifestEntry),
    Failed(JobFailure),
    Fatal(Error),
    Cancelled,
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().replace('\\', "/")
}

fn load_sources(
    dataset: &[DatasetEntry],
    size: usize,
) -> Vec<std::result::Result<Arc<ImageBuffer>, String>> {
    let mut unique: Vec<&Path> = dataset.iter().map(|e| e.path.as_path()).collect();
    unique.sort();
    unique.dedup();
    let loaded: HashMap<&Path, std::result::Result<Arc<ImageBuffer>, String>> = unique
        .par_iter()
        .map(|&p| {
            let img = ImageBuffer::load(p)
                .and_then(|img| resize_bilinear(&img, size, size))
                .map(Arc::new)
                .map_err(|e| e.to_string());
            (p, img)
        })
        .collect();
    dataset
        .iter()
        .map(|e| loaded[e.path.as_path()].clone())
        .collect()
}

/// Runs every job on a pool of `config.jobs` workers and writes the
/// manifest once all jobs have finished. Output bytes do not depend on the
/// worker count or on scheduling.
pub fn execute(
    jobs: &[Job],
    dataset: &[DatasetEntry],
    config: &PipelineConfig,
) -> Result<RunReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute_in_pool(jobs, dataset, config))
}

fn execute_in_pool(
    jobs: &[Job],
    dataset: &[DatasetEntry],
    config: &PipelineConfig,
) -> Result<RunReport> {
    let render = config.render;
    let out_root = absolute(&config.output_dir);
    let manifest_path = config.manifest_path();
    let manifest_root = absolute(&manifest_dir(&manifest_path));

    std::fs::create_dir_all(&out_root).map_err(|e| Error::io(&out_root, e))?;
    let mut labels: Vec<&str> = jobs
        .iter()
        .map(|j| dataset[j.entry].label.as_str())
        .collect();
    labels.sort();
    labels.dedup();
    for label in labels {
        let dir = out_root.join(label);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }

    let sources = load_sources(dataset, render.size);
    let lookup = |pos: usize| -> Result<Arc<ImageBuffer>> {
        sources[pos].clone().map_err(|reason| {
            Error::invalid(format!(
                "cannot load {}: {reason}",
                dataset[pos].path.display()
            ))
        })
    };

    let abort = AtomicBool::new(false);
    let written = AtomicUsize::new(0);
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|job| {
            if abort.load(Ordering::Relaxed) {
                return Outcome::Cancelled;
            }
            let entry = &dataset[job.entry];
            let fail = |reason: String| {
                Outcome::Failed(JobFailure {
                    source_file: entry.path.clone(),
                    technique: job.technique(),
                    replicate: job.replicate,
                    reason,
                })
            };
            let source = match &sources[job.entry] {
                Ok(img) => img.clone(),
                Err(reason) => return fail(reason.clone()),
            };
            let rendered = match render_job(job.seed, &job.spec, &source, dataset, lookup, &render)
            {
                Ok(r) => r,
                Err(e) => return fail(e.to_string()),
            };
            let bytes = match rendered.image.encode_png() {
                Ok(b) => b,
                Err(e) => return fail(e.to_string()),
            };
            let out_path = out_root.join(&entry.label).join(job.file_name());
            if let Err(e) = std::fs::write(&out_path, &bytes) {
                abort.store(true, Ordering::Relaxed);
                return Outcome::Fatal(Error::io(&out_path, e));
            }
            written.fetch_add(1, Ordering::Relaxed);
            let output_file = match out_path.strip_prefix(&manifest_root) {
                Ok(rel) => path_string(rel),
                Err(_) => path_string(&out_path),
            };
            Outcome::Done(ManifestEntry {
                output_file,
                source_file: path_string(&absolute(&entry.path)),
                label: entry.label.clone(),
                technique: job.technique().name().to_string(),
                replicate: job.replicate,
                params: rendered.params,
                seed: job.seed,
                width: rendered.image.width(),
                height: rendered.image.height(),
                sha256: sha256_hex(&bytes),
            })
        })
        .collect();

    let mut manifest = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    let mut fatal = None;
    for o in outcomes {
        match o {
            Outcome::Done(e) => manifest.push(e),
            Outcome::Failed(f) => {
                log::warn!(
                    "{} {} #{} failed: {}",
                    f.source_file.display(),
                    f.technique,
                    f.replicate,
                    f.reason
                );
                failures.push(f)
            }
            Outcome::Fatal(e) => {
                fatal.get_or_insert(e);
            }
            Outcome::Cancelled => {}
        }
    }
    if let Some(source) = fatal {
        return Err(Error::Aborted {
            completed: written.load(Ordering::Relaxed),
            total: jobs.len(),
            source: Box::new(source),
        });
    }
    write_manifest(&manifest_path, &manifest)?;
    Ok(RunReport {
        manifest,
        manifest_path,
        failures,
        skipped_sources: Vec::new(),
        dataset_size: dataset.len(),
    })
}

/// Loads the dataset, applies optional oversampling, plans and executes.
pub fn run(config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let scan = scan_dataset(&config.input_dir, config.label_rule)?;
    let dataset = match config.balance_ratio {
        Some(ratio) => oversample_minority(
            &scan.entries,
            ratio,
            &mut balance_stream(config.master_seed),
        )?,
        None => scan.entries,
    };
    let jobs = plan(config, &dataset);
    let mut report = execute(&jobs, &dataset, config)?;
    report.skipped_sources = scan.skipped;
    Ok(report)
}
