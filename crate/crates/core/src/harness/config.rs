//! Experiment configuration and its INI-style `key = value` form.
//!
//! Keys are dotted paths such as `dataset.train`, `model.layers` or
//! `opt.jade.c`. In an INI file the part before the last dot may also be
//! given as a section header, so `[opt.jade]` followed by `c = 0.1` is the
//! same as `opt.jade.c = 0.1`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datasets::{DataFormat, DEFAULT_THRESHOLD};
use crate::deep::{ModelKind, DEFAULT_DBM_SWEEPS};
use crate::error::{Error, Result};
use crate::hyperspace::{LayerBounds, SearchSpace};
use crate::metaheuristics::{Algorithm, AlgorithmParams, OptimizerConfig, Schedule};
use crate::rbm::{Learner, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub format: DataFormat,
    pub train_path: PathBuf,
    /// Separate test file; without it the training file is split.
    pub test_path: Option<PathBuf>,
    /// Image size, used by the CSV format only.
    pub width: usize,
    pub height: usize,
    pub threshold: u8,
    /// Images drawn (without replacement) for training and testing.
    pub train_count: Option<usize>,
    pub test_count: Option<usize>,
    /// Fraction of a single file used for training when splitting.
    pub train_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            format: DataFormat::Idx,
            train_path: PathBuf::new(),
            test_path: None,
            width: 28,
            height: 28,
            threshold: DEFAULT_THRESHOLD,
            train_count: None,
            test_count: None,
            train_fraction: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub layers: usize,
    /// Mean-field sweeps used by DBM reconstruction.
    pub sweeps: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Dbn,
            layers: 1,
            sweeps: DEFAULT_DBM_SWEEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learner: Learner,
    pub epochs: usize,
    pub batch_size: usize,
    pub gibbs_steps: usize,
    /// Standard deviation of the initial weights.
    pub init_sigma: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learner: Learner::Cd,
            epochs: 10,
            batch_size: 20,
            gibbs_steps: 1,
            init_sigma: 0.01,
        }
    }
}

impl TrainingConfig {
    /// Per-layer training configuration with the given searched values.
    pub fn layer_config(
        &self,
        learning_rate: f64,
        momentum: f64,
        weight_decay: f64,
    ) -> TrainConfig {
        TrainConfig {
            learning_rate,
            weight_decay,
            momentum,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learner: self.learner,
            gibbs_steps: self.gibbs_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub training: TrainingConfig,
    pub optimizer: OptimizerConfig,
    pub bounds: LayerBounds,
    pub runs: usize,
    pub master_seed: u64,
    /// Evaluate the candidates of one iteration on the rayon pool. Results
    /// do not depend on it, so it is not part of the report.
    #[serde(skip)]
    pub parallel: bool,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            model: ModelConfig::default(),
            training: TrainingConfig::default(),
            optimizer: OptimizerConfig::new(Algorithm::Ihs),
            bounds: LayerBounds::default(),
            runs: 20,
            master_seed: 0,
            parallel: false,
            out_dir: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_optional_count(key: &str, value: &str) -> Result<Option<usize>> {
    match value.trim() {
        "" | "all" | "none" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected a boolean, got `{value}`"
        ))),
    }
}

impl ExperimentConfig {
    /// Parses an INI document on top of the defaults.
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_ini(text)?;
        Ok(cfg)
    }

    pub fn from_ini_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ini_str(&text)
    }

    /// Applies every key of an INI document, in file order.
    pub fn apply_ini(&mut self, text: &str) -> Result<()> {
        let ini = ini::Ini::load_from_str_noescape(text)
            .map_err(|e| Error::Config(format!("config file: {e}")))?;
        for (section, props) in &ini {
            for (key, value) in props.iter() {
                let full = match section {
                    Some(s) => format!("{s}.{key}"),
                    None => key.to_string(),
                };
                self.set(&full, value)?;
            }
        }
        Ok(())
    }

    /// Sets one dotted key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().to_ascii_lowercase();
        let v = value.trim();
        let d = &mut self.dataset;
        let b = &mut self.bounds;
        let p: &mut AlgorithmParams = &mut self.optimizer.params;
        match k.as_str() {
            "dataset.format" => d.format = v.parse()?,
            "dataset.train" | "dataset.path" => d.train_path = PathBuf::from(v),
            "dataset.test" => {
                d.test_path = if v.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "dataset.width" => d.width = parse(&k, v)?,
            "dataset.height" => d.height = parse(&k, v)?,
            "dataset.threshold" => d.threshold = parse(&k, v)?,
            "dataset.train_count" => d.train_count = parse_optional_count(&k, v)?,
            "dataset.test_count" => d.test_count = parse_optional_count(&k, v)?,
            "dataset.train_fraction" => d.train_fraction = parse(&k, v)?,

            "model.kind" => self.model.kind = v.parse()?,
            "model.layers" => self.model.layers = parse(&k, v)?,
            "model.sweeps" => self.model.sweeps = parse(&k, v)?,

            "train.learner" => self.training.learner = v.parse()?,
            "train.epochs" => self.training.epochs = parse(&k, v)?,
            "train.batch_size" => self.training.batch_size = parse(&k, v)?,
            "train.gibbs_steps" => self.training.gibbs_steps = parse(&k, v)?,
            "train.init_sigma" => self.training.init_sigma = parse(&k, v)?,

            "opt.algorithm" | "opt.name" => self.optimizer.algorithm = v.parse()?,
            "opt.agents" => self.optimizer.agents = parse(&k, v)?,
            "opt.iterations" => self.optimizer.iterations = parse(&k, v)?,

            "opt.ihs.hmcr" => p.ihs.hmcr = parse(&k, v)?,
            "opt.ihs.par_min" => p.ihs.par_min = parse(&k, v)?,
            "opt.ihs.par_max" => p.ihs.par_max = parse(&k, v)?,
            "opt.ihs.bw_min" | "opt.ihs.rho_min" => p.ihs.bw_min = parse(&k, v)?,
            "opt.ihs.bw_max" | "opt.ihs.rho_max" => p.ihs.bw_max = parse(&k, v)?,
            "opt.aiwpso.c1" => p.aiwpso.c1 = parse(&k, v)?,
            "opt.aiwpso.c2" => p.aiwpso.c2 = parse(&k, v)?,
            "opt.aiwpso.w" => p.aiwpso.w = parse(&k, v)?,
            "opt.aiwpso.w_min" => p.aiwpso.w_min = parse(&k, v)?,
            "opt.aiwpso.w_max" => p.aiwpso.w_max = parse(&k, v)?,
            "opt.cs.tau" | "opt.cs.alpha" => p.cs.tau = parse(&k, v)?,
            "opt.cs.tau_min" => p.cs.tau_min = parse(&k, v)?,
            "opt.cs.tau_max" => p.cs.tau_max = parse(&k, v)?,
            "opt.cs.p" => p.cs.p = parse(&k, v)?,
            "opt.cs.p_min" => p.cs.p_min = parse(&k, v)?,
            "opt.cs.p_max" => p.cs.p_max = parse(&k, v)?,
            "opt.cs.schedule" => {
                p.cs.schedule = match v.to_ascii_lowercase().as_str() {
                    "fixed" => Schedule::Fixed,
                    "linear" => Schedule::Linear,
                    _ => {
                        return Err(Error::Config(format!(
                            "{k}: expected fixed or linear, got `{v}`"
                        )))
                    }
                }
            }
            "opt.fa.gamma" => p.fa.gamma = parse(&k, v)?,
            "opt.fa.beta" => p.fa.beta = parse(&k, v)?,
            "opt.fa.alpha" => p.fa.alpha = parse(&k, v)?,
            "opt.bsa.mix_rate" => p.bsa.mix_rate = parse(&k, v)?,
            "opt.bsa.f" => p.bsa.f = parse(&k, v)?,
            "opt.jade.c" => p.jade.c = parse(&k, v)?,
            "opt.jade.g" | "opt.jade.p" => p.jade.g = parse(&k, v)?,
            "opt.cobide.pb" => p.cobide.pb = parse(&k, v)?,
            "opt.cobide.ps" => p.cobide.ps = parse(&k, v)?,

            "space.n_min" => b.hidden_units.lo = parse(&k, v)?,
            "space.n_max" => b.hidden_units.hi = parse(&k, v)?,
            "space.eta_min" => b.learning_rate.lo = parse(&k, v)?,
            "space.eta_max" => b.learning_rate.hi = parse(&k, v)?,
            "space.phi_min" => b.momentum.lo = parse(&k, v)?,
            "space.phi_max" => b.momentum.hi = parse(&k, v)?,
            "space.lambda_min" => b.weight_decay.lo = parse(&k, v)?,
            "space.lambda_max" => b.weight_decay.hi = parse(&k, v)?,

            "run.runs" | "runs" => self.runs = parse(&k, v)?,
            "run.seed" | "seed" => self.master_seed = parse(&k, v)?,
            "run.parallel" | "parallel" => self.parallel = parse_bool(&k, v)?,
            "run.out" | "out" => self.out_dir = Some(PathBuf::from(v)),
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Full check for an experiment that loads its data from `dataset.*`.
    pub fn validate(&self) -> Result<()> {
        if self.dataset.train_path.as_os_str().is_empty() {
            return Err(Error::Config("dataset.train is required".into()));
        }
        if self.dataset.test_path.is_none()
            && !(self.dataset.train_fraction > 0.0 && self.dataset.train_fraction < 1.0)
        {
            return Err(Error::Config(format!(
                "dataset.train_fraction {} must lie in (0, 1)",
                self.dataset.train_fraction
            )));
        }
        self.validate_settings()
    }

    /// Everything except the dataset source.
    pub fn validate_settings(&self) -> Result<()> {
        if !(1..=3).contains(&self.model.layers) {
            return Err(Error::Config(format!(
                "model.layers must be 1, 2 or 3, got {}",
                self.model.layers
            )));
        }
        if self.runs == 0 {
            return Err(Error::Config("run.runs must be at least 1".into()));
        }
        if self.dataset.train_count == Some(0) || self.dataset.test_count == Some(0) {
            return Err(Error::Config("dataset counts must be at least 1".into()));
        }
        if self.training.init_sigma.is_nan() || self.training.init_sigma < 0.0 {
            return Err(Error::Config(
                "train.init_sigma must be non-negative".into(),
            ));
        }
        self.training.layer_config(0.1, 0.0, 0.0).validate()?;
        self.optimizer.validate()?;
        self.search_space().map(|_| ())
    }

    pub fn search_space(&self) -> Result<SearchSpace> {
        let space = SearchSpace::for_layers(self.model.layers, self.bounds)?;
        if self.bounds.hidden_units.lo < 1.0
            || self.bounds.hidden_units.lo.ceil() > self.bounds.hidden_units.hi.floor()
        {
            return Err(Error::Config(
                "space.n_min/n_max must enclose at least one positive integer".into(),
            ));
        }
        Ok(space)
    }
}
