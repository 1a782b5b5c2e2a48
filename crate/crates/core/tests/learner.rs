use handover_core::learner::{self, gradient_check, Encoding, EpochMetrics, FeatureStats, MlpModel, Reduction, TrainConfig};
use handover_core::{dataset, GenConfig, LabelVector, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn standard_train() -> Vec<(Scenario, LabelVector)> {
    let ds = dataset::Dataset::generate(&GenConfig::with_seed_count(42, 5000)).unwrap();
    dataset::split_stratified(&ds, 0.8, 42).unwrap().0.pairs()
}

fn small(seed: u64, n: usize) -> Vec<(Scenario, LabelVector)> {
    handover_core::scenario::generate_dataset(&GenConfig::with_seed_count(seed, n)).unwrap()
}

fn losses<T: handover_core::Scalar>(
    data: &[(Scenario, LabelVector)],
    cfg: &TrainConfig<T>,
) -> (MlpModel<T>, Vec<f64>) {
    let mut log = Vec::new();
    let m = learner::train(data, None, cfg, |e: &EpochMetrics| log.push(e.train_loss)).unwrap();
    (m, log)
}

#[test]
fn memorizes_one_sample() {
    let data = small(3, 1);
    let (_, log) = losses(&data, &TrainConfig::<f64> { epochs: 500, ..TrainConfig::default() });
    let last = *log.last().unwrap();
    assert!(last < 0.01, "final loss {last}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let data = small(5, 300);
    let cfg = TrainConfig::<f64> { epochs: 4, seed: 9, ..TrainConfig::default() };
    let a = learner::train(&data, None, &cfg, |_| {}).unwrap().to_bytes();
    let b = learner::train(&data, None, &cfg, |_| {}).unwrap().to_bytes();
    assert_eq!(a, b);
    let other = TrainConfig { seed: 10, ..cfg };
    assert_ne!(a, learner::train(&data, None, &other, |_| {}).unwrap().to_bytes());
}

#[test]
fn loss_decreases_on_standard_split() {
    let data = standard_train();
    assert_eq!(data.len(), 4000);
    let (_, log) = losses(&data, &TrainConfig::<f64> { epochs: 8, ..TrainConfig::default() });
    assert!(log.last().unwrap() < log.first().unwrap(), "{log:?}");
}

#[test]
fn validation_metrics_are_logged() {
    let data = small(6, 200);
    let val = small(7, 40);
    let mut log = Vec::new();
    let cfg = TrainConfig::<f64> { epochs: 3, ..TrainConfig::default() };
    learner::train(&data, Some(&val), &cfg, |e| log.push(e.clone())).unwrap();
    assert_eq!(log.iter().map(|e| e.epoch).collect::<Vec<_>>(), [1, 2, 3]);
    for e in &log {
        assert!(e.val_loss.unwrap().is_finite());
        assert!((0.0..=1.0).contains(&e.val_main_accuracy.unwrap()));
        assert!((0.0..=1.0).contains(&e.val_reason_f1.unwrap()));
    }
    let json = serde_json::to_string(&log[0]).unwrap();
    assert!(json.contains("\"val_overall_f1\""));
}

#[test]
fn gradient_check_on_encoded_scenarios() {
    let data = small(11, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (encoding, hidden) in [(Encoding::Thermometer, vec![64, 64]), (Encoding::Standardized, vec![64])] {
        let stats = FeatureStats::<f64>::fit(data.iter().map(|(s, _)| s));
        let m = MlpModel::init(encoding, &hidden, stats.clone(), &mut rng);
        let batch: Vec<_> = data.iter().map(|(s, y)| (m.featurize(s), *y)).collect();
        for r in [Reduction::Mean, Reduction::Sum] {
            let err = gradient_check(&m, &batch, r, 500, 13);
            assert!(err < 1e-4, "{encoding:?} {r:?}: {err}");
        }
    }
}

#[test]
fn f32_training_runs_and_predicts_finite_logits() {
    let data = small(14, 200);
    let cfg = TrainConfig::<f32> { epochs: 5, ..TrainConfig::default() };
    let (m, log) = losses(&data, &cfg);
    assert!(log.iter().all(|l| l.is_finite()));
    let logits = m.predict_logits(&data[0].0);
    assert_eq!(logits.values().len(), 41);
    assert!(logits.values().iter().all(|v| v.is_finite()));
}

#[test]
fn predictions_are_structurally_valid() {
    let data = small(15, 100);
    let cfg = TrainConfig::<f64> { epochs: 2, ..TrainConfig::default() };
    let m = learner::train(&data, None, &cfg, |_| {}).unwrap();
    let scenarios: Vec<Scenario> = small(16, 300).into_iter().map(|(s, _)| s).collect();
    for v in learner::predict_labels(&m, &scenarios) {
        assert_eq!(handover_core::schema::validate(&v), Ok(()));
    }
}

#[test]
fn model_file_round_trip_preserves_predictions() {
    let data = small(17, 100);
    let cfg = TrainConfig::<f64> { epochs: 2, ..TrainConfig::default() };
    let m = learner::train(&data, None, &cfg, |_| {}).unwrap();
    let back = MlpModel::<f64>::from_bytes(&m.to_bytes()).unwrap();
    for (s, _) in &data {
        assert_eq!(m.predict_logits(s), back.predict_logits(s));
    }
}
