//! The `dataug` command line: `run`, `preview`, `stats` and `verify`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. Every failure
//! prints one line starting with `error[<kind>]:` on standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::geometry::Interp;
use crate::image::FillMode;
use crate::pipeline::{
    class_counts, parse_multiplicities, parse_seed, preview_sheet, run, scan_dataset,
    verify_manifest, ConfigFile, LabelRule, PipelineConfig, Problem, RenderSettings,
};
use crate::sampling::{parse_technique_list, Technique, TechniqueSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "dataug",
    version,
    about = "Deterministic image data augmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Augment every image under --input and write outputs plus a manifest.
    Run(RunArgs),
    /// Render a contact sheet of originals and augmented samples.
    Preview(PreviewArgs),
    /// Per-class image counts and the class balance ratio.
    Stats(StatsArgs),
    /// Check a manifest against the files it describes.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "DIR")]
    input: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Comma-separated technique names, or `all` for the core seven.
    #[arg(long, value_name = "LIST")]
    techniques: Option<String>,
    /// Decimal or 0x-hex; drawn from system entropy (and printed) if absent.
    #[arg(long, value_name = "N")]
    seed: Option<String>,
    #[arg(long, value_name = "N")]
    size: Option<usize>,
    #[arg(long, value_parser = ["reflect", "nearest", "wrap", "constant"])]
    fill: Option<String>,
    #[arg(long, value_name = "N")]
    cval: Option<u8>,
    #[arg(long, value_parser = ["bilinear", "nearest"])]
    interp: Option<String>,
    /// Per-technique overrides, e.g. `rotate=2,shear=1`.
    #[arg(long, value_name = "TECH=K,...")]
    multiplicity: Option<String>,
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
    #[arg(long = "label-rule", value_parser = ["parent-dir", "stem"])]
    label_rule: Option<String>,
    /// Oversample minority classes up to RATIO x the majority count.
    #[arg(long, value_name = "RATIO")]
    balance: Option<f64>,
    #[arg(long = "isotropic-zoom")]
    isotropic_zoom: bool,
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// JSON file with PipelineConfig keys; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PreviewArgs {
    #[arg(long, value_name = "DIR")]
    input: PathBuf,
    #[arg(long, value_name = "T")]
    technique: String,
    #[arg(long, value_name = "N", default_value_t = 4)]
    count: usize,
    #[arg(long, value_name = "N")]
    seed: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, value_name = "DIR")]
    input: PathBuf,
    #[arg(long = "label-rule", value_parser = ["parent-dir", "stem"], default_value = "parent-dir")]
    label_rule: String,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
}

/// A failure carrying its exit code.
struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }

    fn runtime(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            kind,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::NotFound(_) => "not-found",
            Error::Io { .. } => "io",
            Error::Decode { .. } => "decode",
            Error::Encode(_) => "encode",
            Error::Manifest { .. } => "manifest",
            Error::Aborted { .. } => "aborted",
            Error::Config { .. } => "config",
        };
        Failure::runtime(kind, e.to_string())
    }
}

/// Input errors in flag or config values are usage errors.
fn usage_err(e: Error) -> Failure {
    Failure::usage(e.to_string())
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `argv` (including the program name) and runs the subcommand,
/// writing reports to standard output and diagnostics to standard error.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`parse_and_dispatch`] with explicit output sinks.
pub fn dispatch_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{}", e.render());
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        EXIT_USAGE
                    } else {
                        EXIT_OK
                    }
                }
                _ => {
                    let rendered = e.render().to_string();
                    let text = rendered.strip_prefix("error: ").unwrap_or(&rendered);
                    let _ = write!(err, "error[usage]: {text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, out, err),
        Command::Preview(args) => cmd_preview(args, out),
        Command::Stats(args) => cmd_stats(args, out),
        Command::Verify(args) => cmd_verify(args, out, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error[{}]: {}", f.kind, f.message);
            if f.code == EXIT_USAGE {
                let _ = writeln!(err, "run `dataug --help` for usage");
            }
            f.code
        }
    }
}

fn entropy_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    if let Ok(d) = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH) {
        h.write_u128(d.as_nanos());
    }
    h.write_u32(std::process::id());
    h.finish()
}

fn resolve_seed(
    flag: Option<&str>,
    file: Option<u64>,
    out: &mut dyn Write,
) -> Result<u64, Failure> {
    match (flag, file) {
        (Some(s), _) => parse_seed(s).map_err(usage_err),
        (None, Some(seed)) => Ok(seed),
        (None, None) => {
            let seed = entropy_seed();
            let _ = writeln!(out, "no --seed given; using seed 0x{seed:016x}");
            Ok(seed)
        }
    }
}

fn build_config(args: &RunArgs, out: &mut dyn Write) -> Result<PipelineConfig, Failure> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path).map_err(usage_err)?,
        None => ConfigFile::default(),
    };
    let input = args
        .input
        .clone()
        .or(file.input_dir.clone())
        .ok_or_else(|| {
            Failure::usage("the following required argument was not provided: --input <DIR>")
        })?;
    let output = args
        .output
        .clone()
        .or(file.output_dir.clone())
        .ok_or_else(|| {
            Failure::usage("the following required argument was not provided: --output <DIR>")
        })?;

    let techniques: Vec<Technique> = match &args.techniques {
        Some(list) => parse_technique_list(list).map_err(usage_err)?,
        None => file
            .technique_list()
            .map_err(usage_err)?
            .unwrap_or_else(|| Technique::CORE_SEVEN.to_vec()),
    };

    let mut multiplicity = std::collections::BTreeMap::new();
    if let Some(m) = &file.multiplicity {
        for (name, &k) in m {
            let t: Technique = name.parse().map_err(usage_err)?;
            multiplicity.insert(t, k);
        }
    }
    if let Some(list) = &args.multiplicity {
        multiplicity.extend(parse_multiplicities(list).map_err(usage_err)?);
    }
    for t in multiplicity.keys() {
        if !techniques.contains(t) {
            return Err(Failure::usage(format!(
                "multiplicity given for '{t}', which is not among the selected techniques"
            )));
        }
    }
    let isotropic = args.isotropic_zoom || file.isotropic_zoom.unwrap_or(false);
    let mut specs = Vec::with_capacity(techniques.len());
    for t in techniques {
        let mut spec = TechniqueSpec::new(t);
        if let Some(&k) = multiplicity.get(&t) {
            spec = spec.with_multiplicity(k).map_err(usage_err)?;
        }
        if isotropic {
            spec = spec.isotropic_zoom();
        }
        specs.push(spec);
    }

    let cval = args.cval.or(file.cval).unwrap_or(0);
    let fill = match args.fill.as_deref().or(file.fill.as_deref()) {
        Some(name) => FillMode::parse(name, cval).map_err(usage_err)?,
        None => FillMode::Reflect,
    };
    let interp = match args.interp.as_deref().or(file.interp.as_deref()) {
        Some(name) => name.parse::<Interp>().map_err(usage_err)?,
        None => Interp::Bilinear,
    };
    let label_rule = match args.label_rule.as_deref().or(file.label_rule.as_deref()) {
        Some(name) => name.parse::<LabelRule>().map_err(usage_err)?,
        None => LabelRule::ParentDir,
    };
    let file_seed = file.seed().map_err(usage_err)?;
    let seed = resolve_seed(args.seed.as_deref(), file_seed, out)?;

    let mut config = PipelineConfig::new(input, output, seed);
    config.techniques = specs;
    config.render = RenderSettings {
        size: args
            .size
            .or(file.size)
            .unwrap_or(crate::pipeline::DEFAULT_SIZE),
        fill,
        interp,
    };
    config.label_rule = label_rule;
    config.balance_ratio = args.balance.or(file.balance_ratio);
    if let Some(j) = args.jobs.or(file.jobs) {
        config.jobs = j;
    }
    config.manifest = args.manifest.clone().or(file.manifest.clone());
    config.validate().map_err(usage_err)?;
    Ok(config)
}

fn cmd_run(args: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let config = build_config(&args, out)?;
    let report = run(&config)?;
    for (path, reason) in &report.skipped_sources {
        let _ = writeln!(err, "warning[skipped]: {}: {reason}", path.display());
    }
    for f in &report.failures {
        let _ = writeln!(
            err,
            "error[job]: {} {} #{}: {}",
            f.source_file.display(),
            f.technique,
            f.replicate,
            f.reason
        );
    }
    let _ = writeln!(
        out,
        "generated {} images from {} sources (seed 0x{:016x}); manifest: {}",
        report.manifest.len(),
        report.dataset_size,
        config.master_seed,
        report.manifest_path.display()
    );
    if report.failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        Err(Failure::runtime(
            "partial",
            format!(
                "{} of {} jobs failed",
                report.failures.len(),
                report.failures.len() + report.manifest.len()
            ),
        ))
    }
}

fn cmd_preview(args: PreviewArgs, out: &mut dyn Write) -> Outcome {
    let technique: Technique = args.technique.parse().map_err(usage_err)?;
    if args.count == 0 {
        return Err(Failure::usage("--count must be at least 1"));
    }
    let seed = resolve_seed(args.seed.as_deref(), None, out)?;
    let scan = scan_dataset(&args.input, LabelRule::ParentDir)?;
    let sheet = preview_sheet(
        &scan.entries,
        &TechniqueSpec::new(technique),
        args.count,
        seed,
        &RenderSettings::default(),
    )?;
    sheet.save_png(&args.out)?;
    let _ = writeln!(
        out,
        "wrote {}x{} preview to {}",
        sheet.width(),
        sheet.height(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

/// Text report of per-class counts and the minority/majority ratio.
pub fn stats_report(input: &Path, rule: LabelRule) -> crate::Result<String> {
    use std::fmt::Write as _;
    let scan = scan_dataset(input, rule)?;
    let counts = class_counts(&scan.entries);
    let mut s = String::new();
    let total = scan.entries.len();
    if total == 0 {
        let _ = writeln!(s, "0 images");
    } else {
        let width = counts.keys().map(|k| k.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(s, "{:<width$}  images", "class");
        for (label, n) in &counts {
            let _ = writeln!(s, "{label:<width$}  {n:>6}");
        }
        let _ = writeln!(s, "total: {total} images in {} classes", counts.len());
        let max = counts.values().max().copied().unwrap_or(0);
        let min = counts.values().min().copied().unwrap_or(0);
        let _ = writeln!(s, "minority/majority ratio: {:.2}", min as f64 / max as f64);
    }
    if !scan.skipped.is_empty() {
        let _ = writeln!(s, "skipped (undecodable): {}", scan.skipped.len());
    }
    Ok(s)
}

fn cmd_stats(args: StatsArgs, out: &mut dyn Write) -> Outcome {
    let rule: LabelRule = args.label_rule.parse().map_err(usage_err)?;
    let report = stats_report(&args.input, rule)?;
    let _ = write!(out, "{report}");
    Ok(EXIT_OK)
}

fn cmd_verify(args: VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let report = verify_manifest(&args.manifest)?;
    for issue in &report.issues {
        let what = match &issue.problem {
            Problem::Missing => "missing file".to_string(),
            Problem::DuplicateRow => "listed more than once".to_string(),
            Problem::HashMismatch { expected, actual } => {
                format!("sha256 mismatch (expected {expected}, found {actual})")
            }
        };
        let _ = writeln!(err, "error[verify]: {}: {what}", issue.file.display());
    }
    if report.ok() {
        let _ = writeln!(out, "ok: {} files verified", report.rows);
        Ok(EXIT_OK)
    } else {
        Err(Failure::runtime(
            "verify",
            format!(
                "{} of {} rows failed verification",
                report.issues.len(),
                report.rows
            ),
        ))
    }
}
