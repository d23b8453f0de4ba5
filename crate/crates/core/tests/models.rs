mod common;

use common::{printed_shapes, random_samples, small_spec};
use epsnet::models::{build_model, ArchitectureKind, ArchitectureSpec, Batch, Predictor};
use epsnet::nn::{Checkpoint, Precision};

fn shapes<T: epsnet::nn::Real>(model: &epsnet::models::Model<T>) -> Vec<(String, Vec<usize>)> {
    model
        .params
        .iter()
        .map(|p| (p.name.clone(), p.tensor.shape().to_vec()))
        .collect()
}

#[test]
fn built_shapes_match_the_drawing() {
    for kind in ArchitectureKind::ALL {
        let spec = ArchitectureSpec::for_kind(kind);
        let model = build_model::<f32>(&spec, 0).unwrap();
        let mut built = shapes(&model);
        let mut printed = printed_shapes(kind);
        built.sort();
        printed.sort();
        assert_eq!(built, printed, "{kind}");
        let total: usize = printed.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
        assert_eq!(model.param_count(), total);
        assert_eq!(spec.analytic_param_count(), total);
    }
}

#[test]
fn output_has_one_column_per_sample() {
    for kind in ArchitectureKind::ALL {
        let spec = ArchitectureSpec::for_kind(kind);
        let model = build_model::<f32>(&spec, 1).unwrap();
        let samples = random_samples(&spec, 7, 2);
        let batch = Batch::<f32>::from_samples(&spec, &samples).unwrap();
        let mut g = epsnet::nn::Graph::new();
        let vars = model.params.bind(&mut g, false);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let y = model
            .forward(&mut g, &vars, &batch, epsnet::nn::Mode::Eval, &mut rng)
            .unwrap();
        assert_eq!(g.shape(y), &[7, 1]);
        assert!(g.value(y).iter().all(|v| v.is_finite()));
    }
}

#[test]
fn predictions_do_not_depend_on_batching() {
    for kind in ArchitectureKind::ALL {
        let spec = small_spec(kind);
        let model = build_model::<f64>(&spec, 3).unwrap();
        let samples = random_samples(&spec, 23, 4);
        let refs: Vec<_> = samples.iter().collect();
        let whole = model.predict_chunked(&refs, 1000).unwrap();
        for chunk in [1, 4, 7] {
            let parts = model.predict_chunked(&refs, chunk).unwrap();
            for (a, b) in whole.iter().zip(&parts) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{kind} chunk {chunk}");
            }
        }
    }
}

#[test]
fn identical_inputs_get_identical_predictions() {
    let spec = small_spec(ArchitectureKind::Lstm);
    let model = build_model::<f32>(&spec, 5).unwrap();
    let mut samples = random_samples(&spec, 4, 6);
    samples.push(samples[1].clone());
    let refs: Vec<_> = samples.iter().collect();
    let p = model.predict(&refs).unwrap();
    assert_eq!(p[1].to_bits(), p[4].to_bits());
}

#[test]
fn tcn_is_causal() {
    for seed in 0..20 {
        assert!(common::causality_trial(seed), "trial {seed}");
    }
}

#[test]
fn checkpoint_rejects_other_architecture() {
    let lstm = build_model::<f32>(&small_spec(ArchitectureKind::Lstm), 0).unwrap();
    let mut tcn = build_model::<f32>(&small_spec(ArchitectureKind::Tcn), 0).unwrap();
    let cp = Checkpoint::capture(&lstm.params, &lstm.fingerprint());
    assert_eq!(cp.precision, Precision::F32);
    let fp = tcn.fingerprint();
    assert!(cp.restore(&mut tcn.params, &fp).is_err());
    let mut f64_lstm = build_model::<f64>(&small_spec(ArchitectureKind::Lstm), 0).unwrap();
    assert!(cp.restore(&mut f64_lstm.params, &lstm.fingerprint()).is_err());
}

#[test]
fn checkpoint_round_trips_through_disk() {
    let spec = small_spec(ArchitectureKind::Tcn);
    let model = build_model::<f32>(&spec, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cp.json");
    Checkpoint::capture(&model.params, &spec.fingerprint()).save(&path).unwrap();
    let restored = epsnet::models::AnyModel::from_checkpoint(&spec, &Checkpoint::load(&path).unwrap()).unwrap();
    let samples = random_samples(&spec, 5, 1);
    let refs: Vec<_> = samples.iter().collect();
    assert_eq!(model.predict(&refs).unwrap(), restored.predict(&refs).unwrap());
}

#[test]
fn fingerprints_differ_by_kind() {
    assert_ne!(ArchitectureSpec::lstm().fingerprint(), ArchitectureSpec::tcn().fingerprint());
    assert_eq!(
        ArchitectureSpec::lstm().fingerprint(),
        ArchitectureSpec::lstm().with_dropout(0.1).fingerprint()
    );
}
