//! Generator statistics, split arithmetic, dataset and logits files, and
//! overhead accounting on the standard 5000-record dataset.

use std::io::Write;

use handover_core::dataset::{self, Dataset, DatasetError, LogitsRecord};
use handover_core::eval;
use handover_core::message;
use handover_core::schema::{DecisionClass, NUM_LABELS, REASON_RANGE};
use handover_core::wire::{self, WIRE_LEN};
use handover_core::{canonical_schema, Assessment, GenConfig};

fn standard() -> Dataset {
    Dataset::generate(&GenConfig::with_seed_count(42, 5000)).unwrap()
}

fn class_counts(ds: &Dataset) -> [usize; 4] {
    let mut c = [0; 4];
    for r in &ds.records {
        c[r.class().index()] += 1;
    }
    c
}

#[test]
fn generator_statistics() {
    let ds = standard();
    assert_eq!(ds.len(), 5000);
    let avg: f64 = eval::avg_tag_count(&ds.labels(), REASON_RANGE).unwrap();
    assert!((9.0..=10.4).contains(&avg), "avg reason tags {avg}");
    for (k, n) in class_counts(&ds).iter().enumerate() {
        let share = *n as f64 / 5000.0;
        assert!((share - 0.25).abs() <= 0.02, "{:?}: {share}", DecisionClass::ALL[k]);
    }
}

#[test]
fn standard_split_sizes() {
    let ds = standard();
    let (train, test) = dataset::split_stratified(&ds, 0.8, 42).unwrap();
    assert_eq!((train.len(), test.len()), (4000, 1000));
    let (full, tr, te) = (class_counts(&ds), class_counts(&train), class_counts(&test));
    for k in 0..4 {
        assert_eq!(tr[k] + te[k], full[k]);
        let want = full[k] as f64 * 0.2;
        assert!((te[k] as f64 - want).abs() <= 1.0, "class {k}: {} vs {want}", te[k]);
    }
    let (train2, test2) = dataset::split_stratified(&ds, 0.8, 42).unwrap();
    assert_eq!((train, test), (train2, test2));
}

#[test]
fn generation_is_deterministic() {
    let mut a = Vec::new();
    let mut b = Vec::new();
    Dataset::generate(&GenConfig::with_seed_count(7, 500)).unwrap().write_to(&mut a).unwrap();
    Dataset::generate(&GenConfig::with_seed_count(7, 500)).unwrap().write_to(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dataset_file_identity() {
    let ds = standard();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("all.jsonl");
    dataset::write_dataset(&ds, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 5001);
    let back = dataset::read_dataset(&path).unwrap();
    assert_eq!(back, ds);
    let mut again = Vec::new();
    back.write_to(&mut again).unwrap();
    assert_eq!(again, text.as_bytes());
}

fn logits_file(ds: &Dataset, width: usize) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    let records: Vec<LogitsRecord> = ds
        .records
        .iter()
        .map(|r| LogitsRecord {
            id: r.id,
            logits: (0..width).map(|i| if r.label_vector().get(i) { 6.0 } else { -6.0 }).collect(),
        })
        .collect();
    dataset::write_logits(&records, &mut f).unwrap();
    f.flush().unwrap();
    f
}

#[test]
fn logits_import_aligns_and_scores_perfect_logits() {
    let (_, test) = dataset::split_stratified(&standard(), 0.8, 42).unwrap();
    let f = logits_file(&test, NUM_LABELS);
    let records = dataset::read_logits(f.path(), &test).unwrap();
    assert_eq!(records.len(), 1000);
    let schema = canonical_schema();
    let pred: Vec<_> = records
        .iter()
        .map(|r| handover_core::post::decide(&r.logit_vector(), &schema, 0.5).unwrap().to_label_vector())
        .collect();
    let report = eval::MetricsReport::compute(&test.labels(), &pred, None).unwrap();
    assert_eq!(report.main_accuracy, 1.0);
    assert_eq!(report.overall_f1, 1.0);
}

#[test]
fn forty_column_logits_are_rejected() {
    let (_, test) = dataset::split_stratified(&standard(), 0.8, 42).unwrap();
    let f = logits_file(&test, 40);
    match dataset::read_logits(f.path(), &test) {
        Err(DatasetError::WrongCount { line: 1, count: 40, .. }) => {}
        other => panic!("expected a wrong-count error, got {other:?}"),
    }
}

#[test]
fn overhead_on_test_split() {
    let (_, test) = dataset::split_stratified(&standard(), 0.8, 42).unwrap();
    let schema = canonical_schema();
    let pairs: Vec<_> = test
        .records
        .iter()
        .map(|r| (r.scenario, Assessment::from_label_vector(&r.label_vector(), &schema).unwrap()))
        .collect();
    for (s, a) in &pairs {
        assert_eq!(wire::encode(a, s).unwrap().len(), WIRE_LEN);
    }
    let summary = message::summarize_overhead(pairs.iter().map(|(s, a)| (s, a))).unwrap();
    assert_eq!(summary.samples, 1000);
    assert_eq!(summary.wire_bytes, 16);
    assert!(summary.mean_text_to_wire > 15.0, "{summary:?}");
}
