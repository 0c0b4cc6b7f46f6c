use switchcode_core::training::{sgd_train, TrainConfig};
use switchcode_core::{gen_gaussian, gen_line_manifold, pairing_report, Activation, Dataset, Error, Matrix, Model, ModelSpec};

fn spec(n: usize, k: usize, act: Activation) -> ModelSpec {
    ModelSpec {
        input_dim: n,
        layers: vec![(k, act)],
        tied: true,
    }
}

#[test]
fn single_unit_solves_line_manifold() {
    let data = gen_line_manifold(1000, 1.0, 0.0, 1).unwrap();
    let model = Model::init(&spec(2, 1, Activation::RectifiedLinear), 0).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.1,
        batch_size: 10,
        epochs: 50,
        ..TrainConfig::default()
    };
    let (_, report) = sgd_train(&model, &data, &cfg).unwrap();
    assert!(report.final_loss < 1e-3, "{}", report.final_loss);
}

#[test]
fn sigmoid_saturates_far_along_the_line() {
    let layer = switchcode_core::Layer::new(Matrix::from_rows(&[[0.5, 0.0]]).unwrap(), vec![0.0], Activation::Sigmoid).unwrap();
    let model = Model::tied(vec![layer]).unwrap();
    let a = model.reconstruct(&[90.0, 0.0]).unwrap();
    let b = model.reconstruct(&[100.0, 0.0]).unwrap();
    let diff = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(diff < 0.01);
}

#[test]
fn gaussian_loss_history_nearly_monotone() {
    let data = gen_gaussian(2000, &[0.0; 3], &Matrix::identity(3), 5).unwrap();
    let model = Model::init(&spec(3, 6, Activation::RectifiedLinear), 1).unwrap();
    let cfg = TrainConfig {
        l1_weight: 0.01,
        epochs: 15,
        seed: 1,
        ..TrainConfig::default()
    };
    let (_, report) = sgd_train(&model, &data, &cfg).unwrap();
    assert_eq!(report.loss_history.len(), 15);
    assert_eq!(report.sparsity_history.len(), 15);
    let mut prev = report.initial_loss;
    for &l in &report.loss_history {
        assert!(l <= prev * 1.05, "{l} after {prev}");
        prev = l;
    }
    assert!(report.final_loss < report.initial_loss);
}

#[test]
fn overcomplete_features_pair_up() {
    let data = gen_gaussian(10_000, &[0.0; 3], &Matrix::identity(3), 42).unwrap();
    let model = Model::init(&spec(3, 6, Activation::RectifiedLinear), 0).unwrap();
    let cfg = TrainConfig {
        l1_weight: 0.01,
        epochs: 20,
        ..TrainConfig::default()
    };
    let (trained, report) = sgd_train(&model, &data, &cfg).unwrap();
    let pairs = pairing_report(&trained).unwrap();
    assert!(pairs.iter().filter(|p| p.cosine < -0.9).count() >= 4);
    let s = *report.sparsity_history.last().unwrap();
    assert!((0.35..=0.65).contains(&s), "{s}");
}

#[test]
fn seeded_runs_are_bit_identical() {
    let data = gen_gaussian(500, &[0.0; 2], &Matrix::identity(2), 3).unwrap();
    for tied in [true, false] {
        let s = ModelSpec {
            input_dim: 2,
            layers: vec![(4, Activation::RectifiedLinear), (3, Activation::Sigmoid)],
            tied,
        };
        let model = Model::init(&s, 9).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            momentum: 0.5,
            learn_output_bias: true,
            seed: 4,
            ..TrainConfig::default()
        };
        let a = sgd_train(&model, &data, &cfg).unwrap();
        let b = sgd_train(&model, &data, &cfg).unwrap();
        assert_eq!(a, b);
        let c = sgd_train(&model, &data, &TrainConfig { seed: 5, ..cfg }).unwrap();
        assert_ne!(a.0, c.0);
    }
}

#[test]
fn zero_epochs_is_identity() {
    let data = gen_gaussian(50, &[0.0; 2], &Matrix::identity(2), 3).unwrap();
    let model = Model::init(&spec(2, 3, Activation::Sigmoid), 2).unwrap();
    let (m, r) = sgd_train(&model, &data, &TrainConfig { epochs: 0, ..TrainConfig::default() }).unwrap();
    assert_eq!(m, model);
    assert!(r.loss_history.is_empty());
    assert_eq!(r.final_loss, r.initial_loss);
}

#[test]
fn divergence_reports_epoch() {
    let data = Dataset::from_rows(&[[1e150, -1e150], [2e150, 1e150]]).unwrap();
    let model = Model::init(&spec(2, 2, Activation::Identity), 1).unwrap();
    let cfg = TrainConfig {
        learning_rate: 10.0,
        epochs: 5,
        ..TrainConfig::default()
    };
    match sgd_train(&model, &data, &cfg) {
        Err(Error::Divergence { epoch, .. }) => assert!(epoch <= 5),
        other => panic!("{other:?}"),
    }
}
