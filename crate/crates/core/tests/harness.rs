mod common;

use std::fs;
use std::path::Path;

use bitplane_lab::features::{handcrafted_features, HANDCRAFTED_DIM};
use bitplane_lab::harness::{
    self, build_representation, emit_charts, emit_report, export_representations, ingest,
    load_external_features, read_external_features, read_report, run_experiment, write_external_features,
    ClassifierKind, ExperimentConfig, Extractor, FeatureRow, FeatureTable, IngestMode, Representation,
    CLASSIFICATION_FILE, QUALITY_FILE, REPORT_FILE,
};
use bitplane_lab::image::load_image;
use bitplane_lab::synth::{write_corpus, SynthParams};
use bitplane_lab::{Error, FeatureVector};
use common::oracles;
use rand::Rng;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn small_corpus(dir: &Path, n: usize) {
    let p = SynthParams {
        width: 40,
        height: 40,
        noise_sigma: 1.0,
        ..Default::default()
    };
    write_corpus(dir, n, &p, 100).unwrap();
}

fn fast_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.forest.n_estimators = 15;
    c
}

/// Features that separate the classes for every representation.
fn external_table(set: &harness::LabeledImageSet, dim: usize, skip: Option<&str>) -> FeatureTable {
    let mut rng = oracles::rng(9);
    let mut rows = Vec::new();
    for e in &set.entries {
        if Some(e.id.as_str()) == skip {
            continue;
        }
        for rep in Representation::ALL {
            let values = (0..dim)
                .map(|i| f64::from(e.label) * (i as f64 + 1.0) + rng.random_range(-0.1..0.1))
                .collect();
            rows.push(FeatureRow {
                image_id: e.id.clone(),
                representation: rep,
                label: e.label,
                features: FeatureVector::new(values).unwrap(),
            });
        }
    }
    FeatureTable { feature_dim: dim, rows }
}

#[test]
fn deep_feature_fixture_loads() {
    let t = load_external_features(fixture("deep_features_2x5.csv")).unwrap();
    assert_eq!(t.feature_dim, 1024);
    assert_eq!(t.rows.len(), 10);
    for rep in Representation::ALL {
        assert_eq!(t.get("IMG0000019", rep).unwrap().label, 1);
        assert_eq!(t.get("IMG0000025", rep).unwrap().label, 0);
    }
    assert_eq!(t.rows[0].features[0], 0.328493);
}

#[test]
fn feature_table_round_trips_exactly() {
    let mut rng = oracles::rng(61);
    let rows = (0..12)
        .map(|i| FeatureRow {
            image_id: format!("id,{i}"),
            representation: Representation::ALL[i % 5],
            label: (i % 2) as u8,
            features: FeatureVector::new(
                (0..7)
                    .map(|_| rng.random::<f64>() * 10f64.powi(rng.random_range(-30..30)) - 0.5)
                    .collect(),
            )
            .unwrap(),
        })
        .collect();
    let table = FeatureTable { feature_dim: 7, rows };
    let mut buf = Vec::new();
    write_external_features(&table, &mut buf).unwrap();
    assert_eq!(read_external_features(buf.as_slice()).unwrap(), table);
}

#[test]
fn end_to_end_handcrafted_run() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 20);
    let set = ingest(dir.path(), IngestMode::Auto).unwrap();
    assert_eq!(set.len(), 20);
    let config = fast_config();
    let report = run_experiment(&set, &config).unwrap();

    assert_eq!(report.class_rows.len(), 10);
    assert_eq!(report.quality_rows.len(), 100);
    assert_eq!(report.partition.test.len(), 4);
    for r in &report.class_rows {
        assert_eq!(r.confusion.total(), report.partition.test.len());
        assert!((0.0..=1.0).contains(&r.accuracy) && (0.0..=1.0).contains(&r.f1));
    }
    for q in report.quality_rows.iter().filter(|q| q.representation == Representation::Original) {
        assert_eq!((q.snr_db, q.ssim), (f64::INFINITY, 1.0));
    }
    for chunk in report.quality_rows.chunks(5) {
        let snr = |rep| chunk.iter().find(|q| q.representation == rep).unwrap().snr_db;
        assert!((snr(Representation::Msb4) + snr(Representation::Lsb4)).abs() < 1e-9);
    }
    let img = set.load(&set.entries[0]).unwrap();
    for rep in Representation::ALL {
        let f: FeatureVector = handcrafted_features(&build_representation(&img, rep, &config.nlm).unwrap()).unwrap();
        assert_eq!(f.len(), HANDCRAFTED_DIM);
    }

    assert_eq!(run_experiment(&set, &config).unwrap(), report);
    assert_eq!(harness::quality_table(&set, &config).unwrap(), report.quality_rows);
}

#[test]
fn reports_are_byte_stable_and_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 12);
    let set = ingest(dir.path(), IngestMode::Folder).unwrap();
    let report = run_experiment(&set, &fast_config()).unwrap();
    let (a, b) = (dir.path().join("out_a"), dir.path().join("out_b"));
    emit_report(&report, &a).unwrap();
    emit_report(&run_experiment(&set, &fast_config()).unwrap(), &b).unwrap();
    for f in [QUALITY_FILE, CLASSIFICATION_FILE, REPORT_FILE] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join(CLASSIFICATION_FILE)).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "extractor,classifier,representation,testing_accuracy,f1_score");
    let quality = fs::read_to_string(a.join(QUALITY_FILE)).unwrap();
    assert_eq!(quality.lines().next().unwrap(), "image_id,representation,snr_db,ssim,ssim_percent");
    assert!(quality.lines().nth(1).unwrap().ends_with(",original,inf,1,100"));
    assert_eq!(read_report(a.join(REPORT_FILE)).unwrap(), report);
}

#[test]
fn two_extractors_give_two_charts() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 10);
    let set = ingest(dir.path(), IngestMode::Auto).unwrap();
    let csv = dir.path().join("deep.csv");
    write_external_features(&external_table(&set, 8, None), fs::File::create(&csv).unwrap()).unwrap();

    let config = ExperimentConfig {
        extractors: vec![Extractor::Handcrafted, Extractor::ExternalCsv(csv)],
        classifiers: vec![ClassifierKind::DecisionTree],
        ..fast_config()
    };
    let report = run_experiment(&set, &config).unwrap();
    assert_eq!(report.class_rows.len(), 10);
    for r in report.class_rows.iter().filter(|r| r.extractor == "external") {
        assert_eq!(r.accuracy, 1.0);
    }

    let charts = emit_charts(&report, dir.path().join("charts")).unwrap();
    assert_eq!(charts.len(), 2);
    for path in charts {
        let text = fs::read_to_string(&path).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let rects = doc.descendants().filter(|n| n.has_tag_name("rect")).count();
        assert_eq!(rects, 2 * 5, "{}", path.display());
    }
}

#[test]
fn external_features_must_cover_every_image() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 10);
    let set = ingest(dir.path(), IngestMode::Auto).unwrap();
    let csv = dir.path().join("deep.csv");
    let missing = set.entries[3].id.clone();
    write_external_features(&external_table(&set, 4, Some(&missing)), fs::File::create(&csv).unwrap()).unwrap();
    let config = ExperimentConfig {
        extractors: vec![Extractor::ExternalCsv(csv.clone())],
        ..fast_config()
    };
    assert!(matches!(run_experiment(&set, &config), Err(Error::FeatureJoinMismatch(m)) if m.contains(&missing)));

    let mut table = external_table(&set, 4, None);
    table.rows[0].label ^= 1;
    write_external_features(&table, fs::File::create(&csv).unwrap()).unwrap();
    assert!(matches!(run_experiment(&set, &config), Err(Error::FeatureJoinMismatch(_))));
}

#[test]
fn exported_representations_reload() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 4);
    let set = ingest(dir.path(), IngestMode::Auto).unwrap();
    let out = dir.path().join("reps");
    let nlm = bitplane_lab::NlmParams::default();
    let written = export_representations(&set, &nlm, &out).unwrap();
    assert_eq!(written.len(), 4 * 5 + 1);
    let img = set.load(&set.entries[1]).unwrap();
    let name = harness::representation_file_name(&set.entries[1].id, Representation::PartialDenoised);
    assert_eq!(
        load_image(out.join(name)).unwrap(),
        build_representation(&img, Representation::PartialDenoised, &nlm).unwrap()
    );
    let labels = fs::read_to_string(out.join(harness::LABELS_FILE)).unwrap();
    assert_eq!(labels.lines().count(), 1 + 4 * 5);
}

#[test]
fn manifest_ingest_matches_folder_ingest() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 6);
    let by_folder = ingest(dir.path(), IngestMode::Folder).unwrap();
    let mut manifest = String::from("image_id,fractured,path\n");
    for e in by_folder.entries.iter().rev() {
        let rel = e.path.strip_prefix(dir.path()).unwrap();
        manifest.push_str(&format!("{},{},{}\n", e.id, e.label, rel.display()));
    }
    fs::write(dir.path().join("manifest.csv"), manifest).unwrap();
    let by_csv = ingest(dir.path(), IngestMode::Auto).unwrap();
    assert_eq!(by_csv.entries, by_folder.entries);
}
