mod common;

use pcarf::data::LabeledDataset;
use pcarf::mlp::{train, MlpModel, TrainParams};
use pcarf::rng::SplitMix64;
use pcarf::Matrix;

use common::{finite_difference_gradient, gaussian_blobs, relative_error};

fn accuracy(model: &MlpModel, ds: &LabeledDataset) -> f64 {
    let hits = ds
        .features()
        .row_iter()
        .zip(ds.labels())
        .filter(|(x, &y)| u8::from(model.forward(x).unwrap() >= 0.5) == y)
        .count();
    hits as f64 / ds.n_samples() as f64
}

#[test]
fn logistic_unit_fits_separable_data() {
    // Label is 1 exactly when x0 + x1 > 0, with a margin.
    let mut rng = SplitMix64::new(3);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    while labels.len() < 100 {
        let (a, b) = (rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
        if (a + b).abs() < 0.3 {
            continue;
        }
        data.extend([a, b]);
        labels.push(u8::from(a + b > 0.0));
    }
    let ds = LabeledDataset::unnamed(Matrix::new(100, 2, data).unwrap(), labels).unwrap();
    let params = TrainParams {
        epochs: 300,
        learning_rate: 0.5,
        batch_size: 10,
    };
    let model = train(&MlpModel::init(&[2, 1], 1).unwrap(), &ds, &params, 2).unwrap();
    assert_eq!(accuracy(&model, &ds), 1.0);
}

#[test]
fn full_batch_loss_never_increases_at_small_step() {
    let ds = gaussian_blobs(80, 3, 1.0, 5);
    let params = TrainParams {
        epochs: 1,
        learning_rate: 0.05,
        batch_size: 80,
    };
    let mut model = MlpModel::init(&[3, 1], 7).unwrap();
    let mut last = model.loss(ds.features(), ds.labels()).unwrap();
    for epoch in 0..50 {
        model = train(&model, &ds, &params, epoch).unwrap();
        let loss = model.loss(ds.features(), ds.labels()).unwrap();
        assert!(loss <= last + 1e-15, "epoch {epoch}: {loss} > {last}");
        last = loss;
    }
}

#[test]
fn hidden_layer_learns_xor() {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..200 {
        let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
        data.extend([a, b]);
        labels.push(u8::from(a != b));
    }
    let ds = LabeledDataset::unnamed(Matrix::new(200, 2, data).unwrap(), labels).unwrap();
    let params = TrainParams {
        epochs: 400,
        learning_rate: 0.1,
        batch_size: 8,
    };
    let model = train(&MlpModel::init(&[2, 16, 1], 4).unwrap(), &ds, &params, 5).unwrap();
    assert_eq!(accuracy(&model, &ds), 1.0);
}

#[test]
fn training_is_deterministic() {
    let ds = gaussian_blobs(50, 4, 1.0, 6);
    let params = TrainParams {
        epochs: 20,
        ..TrainParams::default()
    };
    let init = MlpModel::init(&[4, 8, 1], 1).unwrap();
    let a = train(&init, &ds, &params, 9).unwrap();
    let b = train(&init, &ds, &params, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_text(), b.to_text());
}

#[test]
fn backprop_matches_finite_differences() {
    let mut rng = SplitMix64::new(17);
    for trial in 0..5 {
        let sizes = [3, 4 + trial, 3, 1];
        let model = common::random_network(&sizes, &mut rng);
        let x = Matrix::new(6, 3, (0..18).map(|_| common::normal(&mut rng)).collect()).unwrap();
        let y: Vec<u8> = (0..6).map(|i| (i % 2) as u8).collect();
        let (_, grad) = model.loss_and_gradient(&x, &y).unwrap();
        let fd = finite_difference_gradient(&model, &x, &y, 1e-5);
        for (g, f) in grad.iter().zip(&fd) {
            assert!(relative_error(*g, *f) < 1e-4, "{g} vs {f}");
        }
    }
}
