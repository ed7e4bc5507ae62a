use std::path::Path;

use boltztune::datasets::load_idx;
use boltztune::rbm::{cd_step, init_layer, train_layer};
use boltztune::seeding::rng_from_seed;
use boltztune::stats::{exact_gradient, log_pseudo_likelihood};
use boltztune::{ModelKind, RbmLayer, StackedModel, TrainConfig};
use ndarray::{array, Array1, Array2};
use rand::Rng;

fn patterns() -> Array2<f64> {
    array![
        [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        [1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
    ]
}

fn flatten(w: &Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) -> Vec<f64> {
    w.iter().chain(a).chain(b).copied().collect()
}

fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nx * ny)
}

#[test]
fn mean_cd1_update_points_along_the_exact_gradient() {
    let data = patterns();
    let mut rng = rng_from_seed(7);
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-0.5..0.5)).collect() };
    let layer = RbmLayer::from_parts(
        Array2::from_shape_vec((6, 4), draw(24)).unwrap(),
        Array1::from_vec(draw(6)),
        Array1::from_vec(draw(4)),
    )
    .unwrap();
    let cfg = TrainConfig { learning_rate: 1.0, batch_size: 4, ..TrainConfig::default() };
    let before = flatten(&layer.weights, &layer.visible_bias, &layer.hidden_bias);
    let mut mean = vec![0.0; before.len()];
    let steps = 5000;
    for seed in 0..steps {
        let mut l = layer.clone();
        cd_step(&mut l, data.view(), &cfg, None, &mut rng_from_seed(seed)).unwrap();
        let after = flatten(&l.weights, &l.visible_bias, &l.hidden_bias);
        for (m, (x, y)) in mean.iter_mut().zip(after.iter().zip(&before)) {
            *m += (x - y) / steps as f64;
        }
    }
    let (dw, da, db) = exact_gradient(&layer, data.view()).unwrap();
    let c = cosine(&mean, &flatten(&dw, &da, &db));
    assert!(c >= 0.5, "cosine {c}");
}

#[test]
fn training_raises_pseudo_likelihood() {
    let data = patterns();
    let cfg = TrainConfig { learning_rate: 0.1, epochs: 200, batch_size: 4, ..TrainConfig::default() };
    let mut gains = Vec::new();
    for seed in 0..20 {
        let mut rng = rng_from_seed(seed);
        let untrained = init_layer(6, 4, &mut rng, 0.01).unwrap();
        let mut trained = untrained.clone();
        train_layer(&mut trained, data.view(), &cfg, &mut rng).unwrap();
        // Same flipped bits for both models.
        let before = log_pseudo_likelihood(&untrained, data.view(), &mut rng_from_seed(1000 + seed)).unwrap();
        let after = log_pseudo_likelihood(&trained, data.view(), &mut rng_from_seed(1000 + seed)).unwrap();
        gains.push(after - before);
    }
    gains.sort_by(f64::total_cmp);
    let median = 0.5 * (gains[9] + gains[10]);
    assert!(median > 0.0, "median gain {median}");
}

#[test]
fn two_layer_dbn_first_layer_error_falls_on_mnist() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist/train-sample-idx3-ubyte");
    let all = load_idx(&path).unwrap();
    let images = all.select(&(0..50).collect::<Vec<_>>(), "mnist-50").unwrap();
    let cfg = TrainConfig { learning_rate: 0.1, epochs: 10, batch_size: 10, ..TrainConfig::default() };
    let mut falling = 0;
    for seed in 0..20 {
        let mut rng = rng_from_seed(seed);
        let mut model = StackedModel::init(ModelKind::Dbn, &[784, 64, 32], 0.01, &mut rng).unwrap();
        let traces = model.train_greedy(images.images().view(), &[cfg, cfg], &mut rng).unwrap();
        if traces[0][9] < traces[0][0] {
            falling += 1;
        }
    }
    assert!(falling >= 18, "{falling}/20");
}
