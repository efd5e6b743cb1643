//! Dataset ingestion, job planning, parallel execution, manifests, class
//! balancing and preview sheets.

mod apply;
mod config;
mod dataset;
mod execute;
mod manifest;
mod preview;

pub use apply::{apply_technique, Applied};
pub use config::{
    default_jobs, parse_multiplicities, parse_seed, ConfigFile, PipelineConfig, RenderSettings,
    DEFAULT_SIZE, MANIFEST_FILE,
};
pub use dataset::{
    class_counts, oversample_minority, scan_dataset, DatasetEntry, LabelRule, ScanReport,
};
pub use execute::{
    balance_stream, execute, plan, render_job, run, Job, JobFailure, RenderedJob, RunReport,
};
pub use manifest::{
    manifest_dir, read_manifest, replay_entry, replay_matches, sha256_hex, to_jsonl,
    verify_manifest, write_manifest, ManifestEntry, Problem, VerifyIssue, VerifyReport,
};
pub use preview::{preview_sheet, PREVIEW_CELL, PREVIEW_MAX_ROWS};
