//! The tuning pipeline: sample data, search hyperparameters with a
//! metaheuristic, retrain the winner and score it on held-out images.

use std::time::Instant;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelConfig, TrainingConfig};
use crate::datasets::{self, BinaryDataset};
use crate::deep::{mean_squared_error, StackedModel};
use crate::error::{Error, Result};
use crate::hyperspace::{Candidate, LayerHyperparams, SearchSpace};
use crate::metaheuristics::{run_optimizer, TraceRow};
use crate::rbm::RbmLayer;
use crate::seeding::{derive_seed, rng_from_seed, role, stream_rng};
use crate::stats::{log_pseudo_likelihood, summarize};

/// Everything `fitness_of` needs besides the candidate.
pub struct FitnessContext<'a> {
    pub space: &'a SearchSpace,
    pub train: ArrayView2<'a, f64>,
    pub model: ModelConfig,
    pub training: TrainingConfig,
}

/// Builds a stack sized `m → n₁ → … → n_L` from decoded hyperparameters and
/// trains it greedily with the generator seeded by `seed`.
pub fn train_model<F>(
    data: ArrayView2<f64>,
    hyper: &[LayerHyperparams],
    model: &ModelConfig,
    training: &TrainingConfig,
    seed: u64,
    on_epoch: F,
) -> Result<StackedModel>
where
    F: FnMut(usize, usize, &RbmLayer, ArrayView2<f64>, f64),
{
    let mut sizes = vec![data.ncols()];
    sizes.extend(hyper.iter().map(|h| h.hidden_units));
    let configs: Vec<_> = hyper
        .iter()
        .map(|h| training.layer_config(h.learning_rate, h.momentum, h.weight_decay))
        .collect();
    let mut rng = rng_from_seed(seed);
    let mut stack = StackedModel::init(model.kind, &sizes, training.init_sigma, &mut rng)?;
    stack.train_greedy_with(data, &configs, &mut rng, on_epoch)?;
    Ok(stack)
}

/// Training-set reconstruction MSE of the model described by `candidate`,
/// trained with `candidate.eval_seed`.
pub fn fitness_of(candidate: &Candidate, ctx: &FitnessContext<'_>) -> Result<f64> {
    let hyper = ctx.space.decode(&candidate.x)?;
    let stack = train_model(
        ctx.train,
        &hyper,
        &ctx.model,
        &ctx.training,
        candidate.eval_seed,
        |_, _, _, _, _| {},
    )?;
    stack.reconstruction_mse(ctx.train, ctx.model.sweeps)
}

/// One point of the per-epoch curve of the retrained first layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochPoint {
    pub epoch: usize,
    pub log_pl: f64,
    /// Reconstruction MSE of the first layer on the training images.
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub best_x: Vec<f64>,
    pub best_hyperparams: Vec<LayerHyperparams>,
    pub best_fitness: f64,
    pub trace: Vec<TraceRow>,
    /// `None` when the run was quarantined.
    pub test_mse: Option<f64>,
    pub epochs: Vec<EpochPoint>,
    pub evaluations: usize,
    /// Evaluations excluding abandoned-nest resamples.
    pub effective_evaluations: usize,
    pub optimizer_seconds: f64,
    pub total_seconds: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub quarantined: usize,
    pub test_mse_mean: Option<f64>,
    /// Sample standard deviation; absent with fewer than two usable runs.
    pub test_mse_std: Option<f64>,
    pub best_fitness_mean: f64,
    pub optimizer_seconds_mean: f64,
    pub evaluations_per_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub aggregate: Aggregate,
}

/// Training and test images for one run.
pub fn run_data(
    cfg: &ExperimentConfig,
    train: &BinaryDataset,
    test: Option<&BinaryDataset>,
    run: usize,
) -> Result<(BinaryDataset, BinaryDataset)> {
    let mut rng = stream_rng(cfg.master_seed, &[run as u64, role::DATA]);
    let d = &cfg.dataset;
    let (pool_train, pool_test) = match test {
        Some(t) => (train.clone(), t.clone()),
        None => datasets::split_train_test(train, d.train_fraction, &mut rng)?,
    };
    let pick = |ds: BinaryDataset, count: Option<usize>, rng: &mut _| match count {
        Some(c) => datasets::subsample(&ds, c, rng),
        None => Ok(ds),
    };
    let tr = pick(pool_train, d.train_count, &mut rng)?;
    let te = pick(pool_test, d.test_count, &mut rng)?;
    if tr.dims() != te.dims() {
        return Err(Error::Dimension(format!(
            "train images have {} pixels, test images {}",
            tr.dims(),
            te.dims()
        )));
    }
    Ok((tr, te))
}

fn load_sets(cfg: &ExperimentConfig) -> Result<(BinaryDataset, Option<BinaryDataset>)> {
    let d = &cfg.dataset;
    let train = datasets::load(d.format, &d.train_path, d.width, d.height, d.threshold)?;
    let test = d
        .test_path
        .as_ref()
        .map(|p| datasets::load(d.format, p, d.width, d.height, d.threshold))
        .transpose()?;
    Ok((train, test))
}

/// Runs the whole experiment, loading the datasets named in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let (train, test) = load_sets(cfg)?;
    run_experiment_on(cfg, &train, test.as_ref())
}

/// Runs the experiment on already loaded data.
pub fn run_experiment_on(
    cfg: &ExperimentConfig,
    train: &BinaryDataset,
    test: Option<&BinaryDataset>,
) -> Result<RunReport> {
    cfg.validate_settings()?;
    let space = cfg.search_space()?;
    let runs = (0..cfg.runs)
        .map(|r| run_once(cfg, &space, train, test, r))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(cfg, &runs);
    Ok(RunReport {
        config: cfg.clone(),
        runs,
        aggregate,
    })
}

fn run_once(
    cfg: &ExperimentConfig,
    space: &SearchSpace,
    train_pool: &BinaryDataset,
    test_pool: Option<&BinaryDataset>,
    run: usize,
) -> Result<RunRecord> {
    let start = Instant::now();
    let (train, test) = run_data(cfg, train_pool, test_pool, run)?;
    let seed = derive_seed(cfg.master_seed, &[run as u64, role::OPTIMIZER]);
    let ctx = FitnessContext {
        space,
        train: train.images().view(),
        model: cfg.model,
        training: cfg.training,
    };
    let outcome = run_optimizer(&cfg.optimizer, space, seed, cfg.parallel, |c| {
        fitness_of(c, &ctx)
    })?;
    let optimizer_seconds = start.elapsed().as_secs_f64();

    let best = &outcome.best;
    let hyper = space.decode(&best.x)?;
    let pl_seed = derive_seed(cfg.master_seed, &[run as u64, role::PSEUDO_LIKELIHOOD]);
    let mut epochs = Vec::new();
    let mut hook_error = None;
    let model = train_model(
        train.images().view(),
        &hyper,
        &cfg.model,
        &cfg.training,
        best.eval_seed,
        |layer_idx, epoch, layer, input, _| {
            if layer_idx != 0 || hook_error.is_some() {
                return;
            }
            let point = (|| -> Result<EpochPoint> {
                let log_pl = log_pseudo_likelihood(layer, input, &mut rng_from_seed(pl_seed))?;
                let recon = layer.visible_probs_batch(layer.hidden_probs_batch(input)?.view())?;
                Ok(EpochPoint {
                    epoch,
                    log_pl,
                    mse: mean_squared_error(input, recon.view()),
                })
            })();
            match point {
                Ok(p) => epochs.push(p),
                Err(e) => hook_error = Some(e),
            }
        },
    )?;
    if let Some(e) = hook_error {
        return Err(e);
    }

    let mut warnings = outcome.warnings;
    let test_mse = match model.reconstruction_mse(test.images().view(), cfg.model.sweeps)? {
        v if v.is_finite() => Some(v),
        v => {
            warnings.push(format!("run {run}: test MSE is {v}; run quarantined"));
            None
        }
    };
    Ok(RunRecord {
        run,
        seed,
        train_size: train.len(),
        test_size: test.len(),
        best_x: best.x.clone(),
        best_hyperparams: hyper,
        best_fitness: best.score(),
        trace: outcome.trace,
        test_mse,
        epochs,
        evaluations: outcome.evaluations,
        effective_evaluations: outcome.effective_evaluations,
        optimizer_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        warnings,
    })
}

fn aggregate(cfg: &ExperimentConfig, runs: &[RunRecord]) -> Aggregate {
    let mses: Vec<f64> = runs.iter().filter_map(|r| r.test_mse).collect();
    let (mean, std) = match mses.len() {
        0 => (None, None),
        1 => (Some(mses[0]), None),
        _ => summarize(&mses)
            .map(|(m, s)| (Some(m), Some(s)))
            .unwrap_or((None, None)),
    };
    let n = runs.len().max(1) as f64;
    Aggregate {
        runs: runs.len(),
        quarantined: runs.len() - mses.len(),
        test_mse_mean: mean,
        test_mse_std: std,
        best_fitness_mean: runs.iter().map(|r| r.best_fitness).sum::<f64>() / n,
        optimizer_seconds_mean: runs.iter().map(|r| r.optimizer_seconds).sum::<f64>() / n,
        evaluations_per_run: cfg.optimizer.evaluation_budget(),
    }
}

impl RunReport {
    /// A copy with every wall-clock field set to zero.
    pub fn canonical(&self) -> RunReport {
        let mut c = self.clone();
        for r in &mut c.runs {
            r.optimizer_seconds = 0.0;
            r.total_seconds = 0.0;
            for row in &mut r.trace {
                row.elapsed_s = 0.0;
            }
        }
        c.aggregate.optimizer_seconds_mean = 0.0;
        c
    }

    /// Pretty JSON of [`RunReport::canonical`]; identical configurations and
    /// seeds give identical bytes.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.canonical())?)
    }

    /// Per-run test MSE, failing if any run was quarantined.
    pub fn test_mses(&self) -> Result<Vec<f64>> {
        self.runs
            .iter()
            .map(|r| {
                r.test_mse
                    .ok_or_else(|| Error::Contract(format!("run {} has no test MSE", r.run)))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deep::ModelKind;
    use crate::hyperspace::LayerBounds;
    use crate::metaheuristics::Algorithm;
    use ndarray::Array2;
    use rand::Rng;

    fn toy(rows: usize, seed: u64) -> BinaryDataset {
        let mut rng = rng_from_seed(seed);
        let images = Array2::from_shape_fn((rows, 16), |(r, c)| {
            if (r + c) % 4 == 0 || rng.random::<f64>() < 0.1 {
                1.0
            } else {
                0.0
            }
        });
        BinaryDataset::new(images, 4, 4, "toy").unwrap()
    }

    fn toy_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.train_path = "unused".into();
        cfg.dataset.train_fraction = 0.5;
        cfg.optimizer = cfg.optimizer.with_budget(3, 2);
        cfg.runs = 2;
        cfg.training.epochs = 3;
        cfg.training.batch_size = 5;
        cfg
    }

    #[test]
    fn fitness_is_deterministic_and_bounded() {
        let space = SearchSpace::for_layers(2, LayerBounds::default()).unwrap();
        let data = toy(20, 1);
        let ctx = FitnessContext {
            space: &space,
            train: data.images().view(),
            model: ModelConfig {
                kind: ModelKind::Dbm,
                layers: 2,
                sweeps: 3,
            },
            training: TrainingConfig {
                epochs: 2,
                batch_size: 5,
                ..TrainingConfig::default()
            },
        };
        let mut c = Candidate::new(vec![10.0, 0.5, 0.001, 0.2, 6.0, 0.3, 0.005, 0.5]);
        c.eval_seed = 77;
        let a = fitness_of(&c, &ctx).unwrap();
        assert_eq!(a.to_bits(), fitness_of(&c, &ctx).unwrap().to_bits());
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn untrained_zero_model_scores_a_quarter() {
        let space = SearchSpace::for_layers(1, LayerBounds::default()).unwrap();
        let data = toy(10, 2);
        let ctx = FitnessContext {
            space: &space,
            train: data.images().view(),
            model: ModelConfig::default(),
            training: TrainingConfig {
                epochs: 0,
                init_sigma: 0.0,
                ..TrainingConfig::default()
            },
        };
        assert_eq!(
            fitness_of(&Candidate::new(vec![20.0, 0.5, 0.001, 0.5]), &ctx).unwrap(),
            0.25
        );
    }

    #[test]
    fn retrained_winner_reproduces_its_fitness() {
        let cfg = toy_config();
        let report = run_experiment_on(&cfg, &toy(40, 3), None).unwrap();
        for r in &report.runs {
            assert_eq!(r.trace.len(), 3);
            assert_eq!(r.trace.last().unwrap().best_fitness, r.best_fitness);
            assert_eq!(r.epochs.len(), 3);
            assert_eq!((r.train_size, r.test_size), (20, 20));
            assert!(r.test_mse.is_some());
        }
        assert!(report.aggregate.test_mse_std.is_some());
    }

    #[test]
    fn reports_are_reproducible() {
        let mut cfg = toy_config();
        cfg.optimizer.algorithm = Algorithm::Bsa;
        let data = toy(30, 4);
        let a = run_experiment_on(&cfg, &data, None)
            .unwrap()
            .canonical_json()
            .unwrap();
        cfg.parallel = true;
        let b = run_experiment_on(&cfg, &data, None)
            .unwrap()
            .canonical_json()
            .unwrap();
        assert_eq!(a, b);
        cfg.master_seed = 1;
        assert_ne!(
            a,
            run_experiment_on(&cfg, &data, None)
                .unwrap()
                .canonical_json()
                .unwrap()
        );
    }

    #[test]
    fn single_run_has_no_spread() {
        let mut cfg = toy_config();
        cfg.runs = 1;
        let report = run_experiment_on(&cfg, &toy(30, 5), None).unwrap();
        assert!(report.aggregate.test_mse_mean.is_some());
        assert_eq!(report.aggregate.test_mse_std, None);
    }
}
