use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use truthlens::argument::{build_tree, judge, undefeated_skeptics, Judgement};
use truthlens::dataset::{load_dataset, MarkedEvaluation};
use truthlens::explainers::exact_linear_explain;
use truthlens::meta::{truthful_meta_explanation, CandidateMap, Provenance};
use truthlens::models::{LinearModel, Link};
use truthlens::{
    evaluate_explanation, feature_stats_from_samples, DataKind, EvalConfig, Explanation,
    FeatureMap, Instance, NoiseLevel, ProbeSet,
};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn config(noise_level: NoiseLevel, delta: f64) -> EvalConfig {
    EvalConfig {
        noise_level,
        delta,
        ..EvalConfig::default()
    }
}

fn uniform_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(lo..hi)).collect())
        .collect()
}

/// Exact linear explanations are fully truthful whenever alterations are not
/// clamped, for every grouping of the raw values.
fn ground_truth(kind: DataKind, map: FeatureMap, clamp: bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let dim = map.raw_dim();
    let map = Arc::new(map);
    let weights: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let model = LinearModel::new(weights, 0.1, Link::Identity);
    let reference = uniform_rows(&mut rng, 100, dim, 0.0, 1.0);
    let stats = feature_stats_from_samples(&reference, "reference").unwrap();
    for (i, values) in uniform_rows(&mut rng, 10, dim, 0.1, 0.9)
        .into_iter()
        .enumerate()
    {
        let x = Instance::new(format!("x{i}"), values, kind, Arc::clone(&map)).unwrap();
        let e = exact_linear_explain(&model, &map, x.id()).unwrap();
        for level in NoiseLevel::ALL {
            let config = EvalConfig {
                clamp_images: clamp,
                clamp_timeseries: clamp,
                ..config(level, 0.0)
            };
            let report = evaluate_explanation(&e, &x, &model, &stats, &config).unwrap();
            assert_eq!(report.untruthful_count, 0, "{kind:?} {level} {}", x.id());
            assert_eq!(report.truthfulness, 1.0);
        }
    }
}

#[test]
fn ground_truth_tabular() {
    ground_truth(DataKind::Tabular, FeatureMap::identity(8), true);
}

#[test]
fn ground_truth_text() {
    ground_truth(DataKind::Text, FeatureMap::identity(8), false);
}

#[test]
fn ground_truth_unclamped_superpixels() {
    let map = FeatureMap::new(9, vec![vec![0, 1, 4], vec![2, 5], vec![3, 6, 7, 8]]).unwrap();
    ground_truth(DataKind::Image, map, false);
}

#[test]
fn ground_truth_sensor_windows() {
    // 3 sensors over 4 timesteps, one feature per sensor
    let groups = (0..3)
        .map(|s| (0..4).map(|t| t * 3 + s).collect())
        .collect();
    let map = FeatureMap::new(12, groups).unwrap();
    ground_truth(DataKind::TimeSeriesPerSensor, map, false);
}

#[test]
fn ground_truth_timesteps() {
    ground_truth(
        DataKind::TimeSeriesPerTimestep,
        FeatureMap::identity(12),
        false,
    );
}

#[test]
fn stub_model_reproduces_the_first_explainer_marks() {
    // weights chosen so the Z0 row is judged truthful, truthful, untruthful,
    // untruthful, truthful
    let model = LinearModel::new(vec![0.0, 1.0, -1.0, 0.0, -1.0], 0.0, Link::Identity);
    let map = Arc::new(FeatureMap::identity(5));
    let x = Instance::new("x_e", vec![0.5; 5], DataKind::Tabular, map).unwrap();
    let reference = vec![vec![0.0; 5], vec![1.0; 5]];
    let stats = feature_stats_from_samples(&reference, "reference").unwrap();
    let z0 = Explanation::new("Z0", "x_e", vec![0.0, 1.0, 0.5, 0.3, -0.2]);

    let report = evaluate_explanation(&z0, &x, &model, &stats, &EvalConfig::default()).unwrap();
    assert_eq!(
        report.truthful_flags(),
        vec![true, true, false, false, true]
    );
    assert_eq!(report.truthfulness, 0.6);

    let tree = build_tree(&report);
    assert_eq!(judge(&tree), Judgement::Unwarranted);
    assert_eq!(undefeated_skeptics(&tree), 2);
}

#[test]
fn marked_fixture_gives_the_worked_meta_explanation() {
    let marked = MarkedEvaluation::load(&fixture("worked_example_marked.json")).unwrap();
    let candidates = CandidateMap::from_marks(&marked.to_explanations(), &marked.marks()).unwrap();
    let meta = truthful_meta_explanation(&candidates, &marked.average_change, "x_e").unwrap();
    assert_eq!(meta.explanation.scores, vec![0.1, 1.0, -0.4, 0.0, -0.2]);
    assert_eq!(meta.provenance[3], Provenance::ZeroFill);
}

#[test]
fn probe_sets_are_shared_between_explanations() {
    let ds = load_dataset(&fixture("mlp_data.json")).unwrap();
    let stats = ds.feature_stats().unwrap();
    let model = truthlens::models::ModelSpec::load(&fixture("mlp_model.json")).unwrap();
    let x = &ds.instances[0];
    let config = EvalConfig::default();
    let probes = ProbeSet::run(x, &model, &stats, &config).unwrap();
    let e = Explanation::new("any", x.id(), vec![0.5, -0.5, 0.1, 0.0, 1.0, -2.0]);
    let shared = probes.evaluate(&e).unwrap();
    let direct = evaluate_explanation(&e, x, &model, &stats, &config).unwrap();
    assert_eq!(shared, direct);
    assert_eq!(shared.verdicts[1].name.as_deref(), Some("income"));
}

#[test]
fn mlp_fixture_loads() {
    let ds = load_dataset(&fixture("mlp_data.json")).unwrap();
    assert_eq!(ds.instances.len(), 20);
    assert_eq!(ds.reference.as_ref().map(Vec::len), Some(200));
    let model = truthlens::models::ModelSpec::load(&fixture("mlp_model.json")).unwrap();
    assert_eq!(model.input_dim(), 6);
}
