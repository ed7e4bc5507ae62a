use boltztune::metaheuristics::benchmarks::sphere;
use boltztune::metaheuristics::CobideParams;
use boltztune::{run_optimizer, Algorithm, Optimizer, OptimizerConfig, SearchSpace};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    p.clamp(0.0, 1.0)
}

/// Per-algorithm sphere improvement between iteration 10 and 200.
fn improvement_count(alg: Algorithm) -> usize {
    let space = SearchSpace::uniform_box(5, -5.0, 5.0).unwrap();
    (0..20)
        .filter(|&seed| {
            let cfg = OptimizerConfig::new(alg).with_budget(5, 200);
            let out = run_optimizer(&cfg, &space, seed, false, |c| Ok(sphere(&c.x))).unwrap();
            out.trace[200].best_fitness < out.trace[10].best_fitness
        })
        .count()
}

#[test]
fn ihs_improves_on_the_sphere() {
    assert!(improvement_count(Algorithm::Ihs) >= 19);
}

#[test]
fn aiwpso_improves_on_the_sphere() {
    assert!(improvement_count(Algorithm::Aiwpso) >= 19);
}

#[test]
fn cs_improves_on_the_sphere() {
    assert!(improvement_count(Algorithm::Cs) >= 19);
}

#[test]
fn fa_improves_on_the_sphere() {
    let n = improvement_count(Algorithm::Fa);
    assert!(n >= 19, "{n}/20");
}

#[test]
fn bsa_improves_on_the_sphere() {
    assert!(improvement_count(Algorithm::Bsa) >= 19);
}

#[test]
fn jade_improves_on_the_sphere() {
    assert!(improvement_count(Algorithm::Jade) >= 19);
}

#[test]
fn cobide_improves_on_the_sphere() {
    assert!(improvement_count(Algorithm::Cobide) >= 19);
}

#[test]
fn random_search_improves_on_the_sphere() {
    let n = improvement_count(Algorithm::Rs);
    assert!(n >= 19, "{n}/20");
}

#[test]
fn ihs_reaches_a_small_value_on_the_4d_sphere() {
    let space = SearchSpace::uniform_box(4, -5.0, 5.0).unwrap();
    let finals: Vec<f64> = (0..20)
        .map(|seed| {
            let cfg = OptimizerConfig::new(Algorithm::Ihs).with_budget(5, 50);
            run_optimizer(&cfg, &space, seed, false, |c| Ok(sphere(&c.x)))
                .unwrap()
                .best
                .score()
        })
        .collect();
    let m = median(finals);
    assert!(m < 0.5, "median {m}");
}

#[test]
fn random_search_proposals_are_uniform() {
    let space = SearchSpace::uniform_box(3, -2.0, 6.0).unwrap();
    let cfg = OptimizerConfig::new(Algorithm::Rs).with_budget(100, 99);
    let mut opt = Optimizer::new(cfg, space, 2024).unwrap();
    let mut draws = Vec::new();
    while !opt.is_finished() {
        let mut batch = opt.ask().unwrap();
        for c in &mut batch {
            draws.push((c.x[1] + 2.0) / 8.0);
            c.fitness = Some(sphere(&c.x));
        }
        opt.tell(batch).unwrap();
    }
    assert_eq!(draws.len(), 10_000);
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let d = draws
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - i as f64 / n).abs().max(((i + 1) as f64 / n - u).abs()))
        .fold(0.0, f64::max);
    let p = kolmogorov_p(d, draws.len());
    assert!(p > 0.01, "KS D = {d}, p = {p}");
}

#[test]
fn cobide_without_eigen_crossover_ignores_the_covariance_fraction() {
    let space = SearchSpace::uniform_box(4, -5.0, 5.0).unwrap();
    let run = |ps: f64| {
        let mut cfg = OptimizerConfig::new(Algorithm::Cobide).with_budget(6, 40);
        cfg.params.cobide = CobideParams { pb: 0.0, ps };
        run_optimizer(&cfg, &space, 11, false, |c| Ok(sphere(&c.x))).unwrap()
    };
    let (a, b) = (run(0.2), run(0.9));
    let fitness = |o: &boltztune::OptimizationOutcome| -> Vec<(f64, f64)> {
        o.trace.iter().map(|r| (r.best_fitness, r.mean_fitness)).collect()
    };
    assert_eq!(fitness(&a), fitness(&b));
    assert_eq!(a.best, b.best);
    assert!(a.warnings.is_empty());
}

#[test]
fn evaluation_counts_follow_the_algorithm_family() {
    let space = SearchSpace::uniform_box(3, -1.0, 1.0).unwrap();
    let effective = |alg| {
        let cfg = OptimizerConfig::new(alg).with_budget(5, 10);
        run_optimizer(&cfg, &space, 3, false, |c| Ok(sphere(&c.x)))
            .unwrap()
            .effective_evaluations
    };
    let ihs = effective(Algorithm::Ihs);
    let cs = effective(Algorithm::Cs);
    assert_eq!((ihs, cs), (15, 35));
    for alg in [Algorithm::Aiwpso, Algorithm::Fa, Algorithm::Bsa, Algorithm::Jade, Algorithm::Cobide] {
        assert_eq!(effective(alg), 55, "{alg}");
    }
}
