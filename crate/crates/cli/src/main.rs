use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use boltztune::datasets::{self, BinaryDataset};
use boltztune::harness::{self, ExperimentConfig};
use boltztune::hyperspace::LayerHyperparams;
use boltztune::metaheuristics::benchmarks;
use boltztune::{codec, run_optimizer, Algorithm, ErrorClass, OptimizerConfig, SearchSpace};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "boltztune",
    version,
    about = "Tune RBM/DBN/DBM hyperparameters with metaheuristics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full tuning experiment.
    Tune(TuneArgs),
    /// Train one model with fixed hyperparameters.
    Train(TrainArgs),
    /// Reconstruction MSE of a saved model on a dataset.
    Reconstruct(ReconstructArgs),
    /// Pairwise Wilcoxon comparison of report.json files.
    Stats(StatsArgs),
    /// Run the optimizers on analytic test functions.
    Bench(BenchArgs),
}

/// Dataset and model options shared by `tune` and `train`.
#[derive(Args)]
struct CommonArgs {
    /// INI-style config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training images (or the only file when splitting).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Separate test images.
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// idx, semeion or csv.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    train_count: Option<usize>,
    #[arg(long)]
    test_count: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// dbn or dbm.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    /// cd or pcd.
    #[arg(long)]
    learner: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` settings, as in the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    settings: Vec<String>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory for report.json and the CSV traces.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate candidates in parallel.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Hidden units per layer, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    momentum: f64,
    #[arg(long, default_value_t = 0.0)]
    decay: f64,
    /// Write the trained model here.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Model file written by `train --save`.
    #[arg(long)]
    model_file: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "idx")]
    format: String,
    #[arg(long, default_value_t = 28)]
    width: usize,
    #[arg(long, default_value_t = 28)]
    height: usize,
    /// Only use the first N images.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = boltztune::deep::DEFAULT_DBM_SWEEPS)]
    sweeps: usize,
}

#[derive(Args)]
struct StatsArgs {
    /// Two or more report.json files.
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    /// Print the full matrix as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// sphere, rastrigin, rosenbrock or ackley.
    #[arg(long, default_value = "sphere")]
    function: String,
    #[arg(long, default_value_t = 5)]
    dims: usize,
    #[arg(long, default_value_t = 5.0)]
    bound: f64,
    #[arg(long, default_value_t = 5)]
    agents: usize,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Restrict to one optimizer.
    #[arg(long)]
    optimizer: Option<String>,
}

fn apply_common(cfg: &mut ExperimentConfig, a: &CommonArgs) -> anyhow::Result<()> {
    let path = |p: &PathBuf| p.display().to_string();
    let pairs: Vec<(&str, Option<String>)> = vec![
        ("dataset.train", a.data.as_ref().map(path)),
        ("dataset.test", a.test_data.as_ref().map(path)),
        ("dataset.format", a.format.clone()),
        ("dataset.width", a.width.map(|v| v.to_string())),
        ("dataset.height", a.height.map(|v| v.to_string())),
        ("dataset.train_count", a.train_count.map(|v| v.to_string())),
        ("dataset.test_count", a.test_count.map(|v| v.to_string())),
        (
            "dataset.train_fraction",
            a.train_fraction.map(|v| v.to_string()),
        ),
        ("model.kind", a.model.clone()),
        ("model.layers", a.layers.map(|v| v.to_string())),
        ("train.learner", a.learner.clone()),
        ("train.epochs", a.epochs.map(|v| v.to_string())),
        ("train.batch_size", a.batch_size.map(|v| v.to_string())),
        ("run.seed", a.seed.map(|v| v.to_string())),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    for s in &a.settings {
        let (k, v) = s.split_once('=').ok_or_else(|| {
            boltztune::Error::Config(format!("--set expects KEY=VALUE, got `{s}`"))
        })?;
        cfg.set(k, v)?;
    }
    Ok(())
}

fn base_config(a: &CommonArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_ini_file(p)?,
        None => ExperimentConfig::default(),
    };
    apply_common(&mut cfg, a)?;
    Ok(cfg)
}

fn tune(args: TuneArgs) -> anyhow::Result<()> {
    let mut cfg = base_config(&args.common)?;
    for (key, value) in [
        ("opt.algorithm", args.optimizer.clone()),
        ("opt.agents", args.agents.map(|v| v.to_string())),
        ("opt.iterations", args.iters.map(|v| v.to_string())),
        ("run.runs", args.runs.map(|v| v.to_string())),
    ] {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if let Some(out) = args.out {
        cfg.out_dir = Some(out);
    }
    cfg.parallel |= args.parallel;
    let report = harness::run_experiment(&cfg)?;
    for r in &report.runs {
        let units: Vec<String> = r
            .best_hyperparams
            .iter()
            .map(|h| h.hidden_units.to_string())
            .collect();
        let mse = r
            .test_mse
            .map_or("quarantined".to_string(), |m| format!("{m:.5}"));
        println!(
            "run {:>2}: train {:.5}  test {}  hidden [{}]  {} evals ({} effective)  {:.1}s",
            r.run,
            r.best_fitness,
            mse,
            units.join(","),
            r.evaluations,
            r.effective_evaluations,
            r.optimizer_seconds
        );
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    let agg = &report.aggregate;
    match (agg.test_mse_mean, agg.test_mse_std) {
        (Some(m), Some(s)) => println!(
            "test MSE {m:.5} ± {s:.5} over {} runs",
            agg.runs - agg.quarantined
        ),
        (Some(m), None) => println!("test MSE {m:.5}"),
        _ => println!("no usable runs"),
    }
    if let Some(dir) = &cfg.out_dir {
        let paths = harness::emit_outputs(&report, dir)?;
        println!("wrote {}", paths.report.display());
    }
    Ok(())
}

fn train(args: TrainArgs) -> anyhow::Result<()> {
    let mut cfg = base_config(&args.common)?;
    cfg.model.layers = args.hidden.len();
    cfg.validate()?;
    let hyper: Vec<LayerHyperparams> = args
        .hidden
        .iter()
        .map(|&n| LayerHyperparams {
            hidden_units: n,
            learning_rate: args.lr,
            momentum: args.momentum,
            weight_decay: args.decay,
        })
        .collect();
    let d = &cfg.dataset;
    let pool = datasets::load(d.format, &d.train_path, d.width, d.height, d.threshold)?;
    let test_pool = d
        .test_path
        .as_ref()
        .map(|p| datasets::load(d.format, p, d.width, d.height, d.threshold))
        .transpose()?;
    let (train, test) = harness::experiment::run_data(&cfg, &pool, test_pool.as_ref(), 0)?;
    let start = Instant::now();
    let model = harness::train_model(
        train.images().view(),
        &hyper,
        &cfg.model,
        &cfg.training,
        cfg.master_seed,
        |l, e, _, _, err| {
            println!("layer {l} epoch {e:>3}: reconstruction error {err:.5}");
        },
    )?;
    println!(
        "trained on {} images in {:.2}s",
        train.len(),
        start.elapsed().as_secs_f64()
    );
    println!(
        "train MSE {:.5}",
        model.reconstruction_mse(train.images().view(), cfg.model.sweeps)?
    );
    println!(
        "test MSE  {:.5}",
        model.reconstruction_mse(test.images().view(), cfg.model.sweeps)?
    );
    if let Some(path) = args.save {
        codec::save_model(&model, &path)?;
        println!("saved {}", path.display());
    }
    Ok(())
}

fn first_rows(ds: BinaryDataset, count: Option<usize>) -> anyhow::Result<BinaryDataset> {
    match count {
        Some(c) if c < ds.len() => {
            let idx: Vec<usize> = (0..c).collect();
            Ok(ds.select(&idx, ds.name().to_string())?)
        }
        _ => Ok(ds),
    }
}

fn reconstruct(args: ReconstructArgs) -> anyhow::Result<()> {
    let model = codec::load_model(&args.model_file)?;
    let ds = datasets::load(
        args.format.parse()?,
        &args.data,
        args.width,
        args.height,
        datasets::DEFAULT_THRESHOLD,
    )?;
    let ds = first_rows(ds, args.count)?;
    let mse = model.reconstruction_mse(ds.images().view(), args.sweeps)?;
    println!(
        "{} images, {} model with {} layers: MSE {mse:.6}",
        ds.len(),
        model.kind(),
        model.depth()
    );
    Ok(())
}

fn stats(args: StatsArgs) -> anyhow::Result<()> {
    let reports = args
        .reports
        .iter()
        .map(|p| harness::load_report(p))
        .collect::<boltztune::Result<Vec<_>>>()?;
    let refs: Vec<_> = reports.iter().collect();
    let matrix = harness::compare_reports(&refs)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&matrix)?);
    } else {
        print!("{}", matrix.render());
    }
    Ok(())
}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let f: fn(&[f64]) -> f64 = match args.function.as_str() {
        "sphere" => benchmarks::sphere,
        "rastrigin" => benchmarks::rastrigin,
        "rosenbrock" => benchmarks::rosenbrock,
        "ackley" => benchmarks::ackley,
        other => bail!(boltztune::Error::Config(format!(
            "unknown function `{other}`"
        ))),
    };
    let algorithms: Vec<Algorithm> = match &args.optimizer {
        Some(name) => vec![name.parse()?],
        None => Algorithm::ALL.to_vec(),
    };
    let space = SearchSpace::uniform_box(args.dims, -args.bound, args.bound)?;
    println!(
        "{:<8} {:>14} {:>14} {:>8} {:>10}",
        "optimizer", "median best", "worst best", "evals", "seconds"
    );
    for alg in algorithms {
        let cfg = OptimizerConfig::new(alg).with_budget(args.agents, args.iters);
        let start = Instant::now();
        let mut finals = Vec::new();
        let mut evals = 0;
        for seed in 0..args.seeds {
            let out = run_optimizer(&cfg, &space, seed, false, |c| Ok(f(&c.x)))?;
            finals.push(out.best.score());
            evals = out.evaluations;
        }
        finals.sort_by(f64::total_cmp);
        let median = finals[finals.len() / 2];
        println!(
            "{:<8} {:>14.6e} {:>14.6e} {:>8} {:>10.3}",
            alg.name(),
            median,
            finals.last().copied().unwrap_or(f64::NAN),
            evals,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err
        .downcast_ref::<boltztune::Error>()
        .map(boltztune::Error::class)
    {
        Some(ErrorClass::Config) => 2,
        Some(ErrorClass::Data) => 3,
        Some(ErrorClass::Internal) | None => 4,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Tune(a) => tune(a),
        Command::Train(a) => train(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Stats(a) => stats(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).context("boltztune failed") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
