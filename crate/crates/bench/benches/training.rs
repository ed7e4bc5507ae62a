use std::hint::black_box;

use boltztune::rbm::{cd_step, init_layer};
use boltztune::seeding::rng_from_seed;
use boltztune::stats::log_pseudo_likelihood;
use boltztune::{Learner, ModelKind, PcdChains, StackedModel, TrainConfig};
use boltztune_bench::random_binary;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn cd_updates(c: &mut Criterion) {
    let batch = random_binary(20, 784, 1);
    let mut group = c.benchmark_group("cd_step_784x20");
    for hidden in [100, 500] {
        for learner in [Learner::Cd, Learner::Pcd] {
            let cfg = TrainConfig { learner, ..TrainConfig::default() };
            let id = BenchmarkId::new(learner.to_string(), hidden);
            group.bench_with_input(id, &hidden, |b, &hidden| {
                let mut rng = rng_from_seed(2);
                let mut layer = init_layer(784, hidden, &mut rng, 0.01).unwrap();
                let mut chains = PcdChains::from_batch(batch.view());
                b.iter(|| {
                    let chains = (learner == Learner::Pcd).then_some(&mut chains);
                    cd_step(&mut layer, black_box(batch.view()), &cfg, chains, &mut rng).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn reconstruction(c: &mut Criterion) {
    let data = random_binary(200, 784, 3);
    let mut group = c.benchmark_group("reconstruction_mse_200");
    for kind in [ModelKind::Dbn, ModelKind::Dbm] {
        let model = StackedModel::init(kind, &[784, 300, 200], 0.01, &mut rng_from_seed(4)).unwrap();
        group.bench_function(kind.to_string(), |b| {
            b.iter(|| model.reconstruction_mse(black_box(data.view()), 3).unwrap())
        });
    }
    group.finish();
}

fn pseudo_likelihood(c: &mut Criterion) {
    let data = random_binary(200, 784, 5);
    let layer = init_layer(784, 300, &mut rng_from_seed(6), 0.01).unwrap();
    c.bench_function("log_pseudo_likelihood_200", |b| {
        let mut rng = rng_from_seed(7);
        b.iter(|| log_pseudo_likelihood(&layer, black_box(data.view()), &mut rng).unwrap())
    });
}

criterion_group!(benches, cd_updates, reconstruction, pseudo_likelihood);
criterion_main!(benches);
