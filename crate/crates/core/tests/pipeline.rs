mod common;

use std::path::PathBuf;

use common::{class_fixture, fixture_23, tree, FIXTURE_SIZE};
use dataug_core::pipeline::{
    class_counts, oversample_minority, plan, preview_sheet, read_manifest, replay_matches, run,
    scan_dataset, verify_manifest, DatasetEntry, LabelRule, PipelineConfig, RenderSettings,
    PREVIEW_CELL,
};
use dataug_core::{Error, RandomStream, Technique, TechniqueSpec};

fn small_render() -> RenderSettings {
    RenderSettings {
        size: 32,
        ..RenderSettings::default()
    }
}

#[test]
fn scan_indexes_sorted_paths() {
    let dir = tempfile::tempdir().unwrap();
    let root = fixture_23(dir.path());
    let scan = scan_dataset(&root, LabelRule::ParentDir).unwrap();
    assert_eq!(scan.entries.len(), FIXTURE_SIZE);
    assert!(scan.skipped.is_empty());
    let indices: Vec<usize> = scan.entries.iter().map(|e| e.source_index).collect();
    assert_eq!(indices, (0..FIXTURE_SIZE).collect::<Vec<_>>());
    let mut paths: Vec<PathBuf> = scan.entries.iter().map(|e| e.path.clone()).collect();
    paths.sort();
    assert_eq!(
        paths,
        scan.entries
            .iter()
            .map(|e| e.path.clone())
            .collect::<Vec<_>>()
    );
    let counts = class_counts(&scan.entries);
    assert_eq!(counts["Abyssinian"], 12);
    assert_eq!(counts["Bengal"], 11);
}

#[test]
fn scan_empty_and_missing_directories() {
    let dir = tempfile::tempdir().unwrap();
    assert!(scan_dataset(dir.path(), LabelRule::ParentDir)
        .unwrap()
        .entries
        .is_empty());
    let missing = dir.path().join("nope");
    assert!(matches!(
        scan_dataset(&missing, LabelRule::ParentDir),
        Err(Error::NotFound(_))
    ));
}

#[test]
fn scan_skips_undecodable_files() {
    let dir = tempfile::tempdir().unwrap();
    let root = class_fixture(dir.path(), &[("a", 2)]);
    std::fs::write(root.join("a").join("broken.png"), b"not a png").unwrap();
    std::fs::write(root.join("a").join("notes.txt"), b"ignored").unwrap();
    let scan = scan_dataset(&root, LabelRule::ParentDir).unwrap();
    assert_eq!(scan.entries.len(), 2);
    assert_eq!(scan.skipped.len(), 1);
}

#[test]
fn stem_rule_strips_ordinal_suffix() {
    let dir = tempfile::tempdir().unwrap();
    let jpg = dir.path().join("Abyssinian_1.jpg");
    let raw = image::RgbImage::from_raw(4, 4, common::gradient(4, 4, 0).into_raw()).unwrap();
    raw.save(&jpg).unwrap();
    assert_eq!(LabelRule::Stem.label_for(&jpg), "Abyssinian");
    let scan = scan_dataset(dir.path(), LabelRule::Stem).unwrap();
    assert!(scan.entries.iter().any(|e| e.label == "Abyssinian"));
}

fn fake_dataset(n: usize) -> Vec<DatasetEntry> {
    (0..n)
        .map(|i| DatasetEntry {
            path: PathBuf::from(format!("img_{i}.png")),
            label: "x".into(),
            source_index: i,
        })
        .collect()
}

#[test]
fn plan_counts_follow_multiplicities() {
    let data = fake_dataset(FIXTURE_SIZE);
    let cfg = PipelineConfig::new("in", "out", 1);
    assert_eq!(
        plan(&cfg.clone().with_techniques(&[Technique::Rotate]), &data).len(),
        161
    );
    assert_eq!(plan(&cfg, &data).len(), 736);
    let one = fake_dataset(1);
    assert_eq!(
        plan(&cfg.with_techniques(&[Technique::Shear]), &one).len(),
        3
    );
}

#[test]
fn plan_order_and_names() {
    let data = fake_dataset(2);
    let cfg =
        PipelineConfig::new("in", "out", 9).with_techniques(&[Technique::Zoom, Technique::Rotate]);
    let jobs = plan(&cfg, &data);
    let keys: Vec<(usize, Technique, u32)> = jobs
        .iter()
        .map(|j| (j.source_index, j.technique(), j.replicate))
        .collect();
    assert_eq!(keys[0], (0, Technique::Rotate, 0));
    assert_eq!(keys[7], (0, Technique::Zoom, 0));
    assert_eq!(keys[11], (1, Technique::Rotate, 0));
    let name = jobs[0].file_name();
    assert!(
        name.starts_with("Rotated_img_0_0_") && name.ends_with(".png"),
        "{name}"
    );
    assert_eq!(name.len(), "Rotated_img_0_0_".len() + 8 + 4);
}

#[test]
fn oversampling_examples() {
    let mut entries = Vec::new();
    let mut push = |label: &str, n: usize| {
        for _ in 0..n {
            let i = entries.len();
            entries.push(DatasetEntry {
                path: PathBuf::from(format!("{label}_{i}.png")),
                label: label.into(),
                source_index: i,
            });
        }
    };
    push("A", 10);
    push("B", 5);
    let mut rng = RandomStream::new(3);
    let out = oversample_minority(&entries, 1.0, &mut rng).unwrap();
    assert_eq!(out.len(), 20);
    assert_eq!(class_counts(&out)["B"], 10);
    let indices: Vec<usize> = out.iter().map(|e| e.source_index).collect();
    assert_eq!(indices, (0..20).collect::<Vec<_>>());

    let mut balanced = entries[..10].to_vec();
    balanced.extend(entries[..10].iter().map(|e| DatasetEntry {
        label: "B".into(),
        source_index: e.source_index + 10,
        ..e.clone()
    }));
    assert_eq!(
        oversample_minority(&balanced, 1.0, &mut rng).unwrap(),
        balanced
    );

    let nine_three: Vec<DatasetEntry> = entries[..9]
        .iter()
        .cloned()
        .chain(entries[10..13].iter().cloned())
        .collect();
    let out = oversample_minority(&nine_three, 0.5, &mut rng).unwrap();
    assert_eq!(class_counts(&out)["B"], 5);

    let single = &entries[..10];
    assert_eq!(oversample_minority(single, 1.0, &mut rng).unwrap(), single);
    assert!(oversample_minority(&entries, 0.0, &mut rng).is_err());
}

fn small_config(input: PathBuf, output: PathBuf, seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(input, output, seed);
    cfg.render = small_render();
    cfg.jobs = 2;
    cfg
}

#[test]
fn runs_are_reproducible_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let root = class_fixture(dir.path(), &[("cat", 3), ("dog", 2)]);
    let all: Vec<Technique> = Technique::ALL.to_vec();
    let a = small_config(root.clone(), dir.path().join("a"), 11).with_techniques(&all);
    let mut b = small_config(root.clone(), dir.path().join("b"), 11).with_techniques(&all);
    b.jobs = 1;
    let ra = run(&a).unwrap();
    let rb = run(&b).unwrap();
    assert!(ra.failures.is_empty());
    assert_eq!(ra.manifest, rb.manifest);
    assert_eq!(tree(&a.output_dir), tree(&b.output_dir));
    assert_eq!(
        ra.manifest.len(),
        plan(
            &a,
            &scan_dataset(&root, LabelRule::ParentDir).unwrap().entries
        )
        .len()
    );

    let rows = read_manifest(&ra.manifest_path).unwrap();
    assert_eq!(rows, ra.manifest);
    for row in &rows {
        assert!(
            replay_matches(row, &a.render).unwrap(),
            "{}",
            row.output_file
        );
    }
    assert!(verify_manifest(&ra.manifest_path).unwrap().ok());

    let c = small_config(root, dir.path().join("c"), 12).with_techniques(&all);
    run(&c).unwrap();
    assert_ne!(tree(&a.output_dir), tree(&c.output_dir));
}

#[test]
fn verify_flags_corrupted_and_missing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let root = class_fixture(dir.path(), &[("cat", 2)]);
    let cfg = small_config(root, dir.path().join("out"), 4).with_techniques(&[Technique::Flip]);
    let report = run(&cfg).unwrap();
    let out = &cfg.output_dir;
    let first = out.join(&report.manifest[0].output_file);
    let mut bytes = std::fs::read(&first).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    std::fs::write(&first, bytes).unwrap();
    std::fs::remove_file(out.join(&report.manifest[1].output_file)).unwrap();
    let v = verify_manifest(&report.manifest_path).unwrap();
    assert_eq!(v.rows, report.manifest.len());
    assert_eq!(v.issues.len(), 2);
}

#[test]
fn balanced_run_duplicates_minority_sources() {
    let dir = tempfile::tempdir().unwrap();
    let root = class_fixture(dir.path(), &[("A", 4), ("B", 2)]);
    let mut cfg = small_config(root, dir.path().join("out"), 8).with_techniques(&[Technique::Flip]);
    cfg.balance_ratio = Some(1.0);
    let report = run(&cfg).unwrap();
    assert_eq!(report.dataset_size, 8);
    let b_rows = report.manifest.iter().filter(|e| e.label == "B").count();
    assert_eq!(b_rows, 4 * Technique::Flip.default_multiplicity() as usize);
}

#[test]
fn preview_layout_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let root = class_fixture(dir.path(), &[("a", 1)]);
    let entries = scan_dataset(&root, LabelRule::ParentDir).unwrap().entries;
    let render = small_render();
    let flip = TechniqueSpec::new(Technique::Flip);
    let sheet = preview_sheet(&entries, &flip, 3, 5, &render).unwrap();
    assert_eq!(
        (sheet.width(), sheet.height()),
        (4 * PREVIEW_CELL, PREVIEW_CELL)
    );
    assert_eq!((sheet.width(), sheet.height()), (512, 128));
    assert_eq!(
        sheet,
        preview_sheet(&entries, &flip, 3, 5, &render).unwrap()
    );

    let rotate = TechniqueSpec::new(Technique::Rotate);
    let sheet = preview_sheet(&entries, &rotate, 2, 5, &render).unwrap();
    let cell = |col: usize| -> Vec<[u8; 3]> {
        let mut px = Vec::new();
        for y in 0..PREVIEW_CELL {
            for x in 0..PREVIEW_CELL {
                px.push(sheet.pixel(col * PREVIEW_CELL + x, y));
            }
        }
        px
    };
    assert_ne!(cell(0), cell(1));
}
