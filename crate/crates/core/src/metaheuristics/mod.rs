//! Population-based black-box minimizers behind one ask/tell interface.
//!
//! Every strategy sees the same protocol: the first `ask` returns the
//! uniformly sampled initial population, each later `ask` returns that
//! iteration's proposals, and `tell` hands back the same candidates with
//! fitness filled in, in proposal order. Proposals are clamped to the search
//! box. All randomness comes from streams keyed by `(seed, iteration, role,
//! index)`, so results do not depend on how evaluations are scheduled.

pub mod aiwpso;
pub mod benchmarks;
pub mod bsa;
pub mod cobide;
pub mod cs;
pub mod fa;
pub mod ihs;
pub mod jade;
pub mod random;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperspace::{Candidate, SearchSpace};
use crate::seeding::{derive_seed, role, stream_rng, StreamRng};

/// Index used for population-level (rather than per-agent) random streams.
pub const SHARED_STREAM: u64 = u64::MAX;

/// Fitness assigned to candidates whose evaluation produced NaN.
pub const QUARANTINE_FITNESS: f64 = f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ihs,
    Aiwpso,
    Cs,
    Fa,
    Bsa,
    Jade,
    Cobide,
    Rs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Ihs,
        Algorithm::Aiwpso,
        Algorithm::Cs,
        Algorithm::Fa,
        Algorithm::Bsa,
        Algorithm::Jade,
        Algorithm::Cobide,
        Algorithm::Rs,
    ];

    /// The seven metaheuristics, without random search.
    pub const METAHEURISTICS: [Algorithm; 7] = [
        Algorithm::Ihs,
        Algorithm::Aiwpso,
        Algorithm::Cs,
        Algorithm::Fa,
        Algorithm::Bsa,
        Algorithm::Jade,
        Algorithm::Cobide,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ihs => "ihs",
            Algorithm::Aiwpso => "aiwpso",
            Algorithm::Cs => "cs",
            Algorithm::Fa => "fa",
            Algorithm::Bsa => "bsa",
            Algorithm::Jade => "jade",
            Algorithm::Cobide => "cobide",
            Algorithm::Rs => "rs",
        }
    }

    fn min_agents(self) -> usize {
        match self {
            Algorithm::Ihs | Algorithm::Rs => 1,
            Algorithm::Jade | Algorithm::Cobide => 4,
            _ => 2,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower || (lower == "random" && *a == Algorithm::Rs))
            .ok_or_else(|| Error::Config(format!("unknown optimizer `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IhsParams {
    pub hmcr: f64,
    pub par_min: f64,
    pub par_max: f64,
    /// Pitch bandwidth as a percentage of each dimension's width.
    pub bw_min: f64,
    pub bw_max: f64,
}

impl Default for IhsParams {
    fn default() -> Self {
        Self {
            hmcr: 0.7,
            par_min: 0.1,
            par_max: 0.7,
            bw_min: 1.0,
            bw_max: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiwpsoParams {
    pub c1: f64,
    pub c2: f64,
    /// Inertia used before the first adaptation.
    pub w: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl Default for AiwpsoParams {
    fn default() -> Self {
        Self {
            c1: 1.7,
            c2: 1.7,
            w: 0.7,
            w_min: 0.5,
            w_max: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Constant `tau` and `p`.
    Fixed,
    /// `tau` falls from `tau_max` to `tau_min` and `p` from `p_max` to `p_min`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsParams {
    pub tau: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub p: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub schedule: Schedule,
}

impl Default for CsParams {
    fn default() -> Self {
        Self {
            tau: 0.1,
            tau_min: 0.5,
            tau_max: 1.0,
            p: 0.25,
            p_min: 0.05,
            p_max: 0.5,
            schedule: Schedule::Fixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaParams {
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl Default for FaParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            beta: 1.0,
            alpha: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsaParams {
    pub mix_rate: f64,
    pub f: f64,
}

impl Default for BsaParams {
    fn default() -> Self {
        Self {
            mix_rate: 1.0,
            f: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JadeParams {
    /// Adaptation rate of `μ_F` and `μ_CR`.
    pub c: f64,
    /// Greediness: fraction of the population eligible as p-best.
    pub g: f64,
}

impl Default for JadeParams {
    fn default() -> Self {
        Self { c: 0.1, g: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CobideParams {
    /// Probability of crossing over in the covariance eigenbasis.
    pub pb: f64,
    /// Fraction of the best individuals used for the covariance matrix.
    pub ps: f64,
}

impl Default for CobideParams {
    fn default() -> Self {
        Self { pb: 0.4, ps: 0.5 }
    }
}

/// Parameters for every algorithm; only the selected one is read.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AlgorithmParams {
    pub ihs: IhsParams,
    pub aiwpso: AiwpsoParams,
    pub cs: CsParams,
    pub fa: FaParams,
    pub bsa: BsaParams,
    pub jade: JadeParams,
    pub cobide: CobideParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub agents: usize,
    /// Iterations after the initial population is evaluated.
    pub iterations: usize,
    pub params: AlgorithmParams,
}

impl OptimizerConfig {
    /// 5 agents, 50 iterations, default parameters.
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            agents: 5,
            iterations: 50,
            params: AlgorithmParams::default(),
        }
    }

    pub fn with_budget(mut self, agents: usize, iterations: usize) -> Self {
        self.agents = agents;
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let min = self.algorithm.min_agents();
        if self.agents < min {
            let msg = format!(
                "{} needs at least {min} agents, got {}",
                self.algorithm, self.agents
            );
            return Err(if min == 4 {
                Error::Contract(msg)
            } else {
                Error::Config(msg)
            });
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        let p = &self.params;
        let probabilities = [
            ("opt.ihs.hmcr", p.ihs.hmcr),
            ("opt.ihs.par_min", p.ihs.par_min),
            ("opt.ihs.par_max", p.ihs.par_max),
            ("opt.cs.p", p.cs.p),
            ("opt.cs.p_min", p.cs.p_min),
            ("opt.cs.p_max", p.cs.p_max),
            ("opt.bsa.mix_rate", p.bsa.mix_rate),
            ("opt.jade.c", p.jade.c),
            ("opt.jade.g", p.jade.g),
            ("opt.cobide.pb", p.cobide.pb),
            ("opt.cobide.ps", p.cobide.ps),
        ];
        if let Some((key, value)) = probabilities.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config(format!(
                "{key} = {value} is not a probability"
            )));
        }
        let positive = [
            ("opt.ihs.bw_min", p.ihs.bw_min),
            ("opt.ihs.bw_max", p.ihs.bw_max),
            ("opt.aiwpso.w_min", p.aiwpso.w_min),
            ("opt.aiwpso.w_max", p.aiwpso.w_max),
            ("opt.fa.gamma", p.fa.gamma),
            ("opt.fa.beta", p.fa.beta),
            ("opt.fa.alpha", p.fa.alpha),
            ("opt.cs.tau", p.cs.tau),
        ];
        if let Some((key, value)) = positive.iter().find(|(_, v)| v.is_nan() || *v < 0.0) {
            return Err(Error::Config(format!(
                "{key} = {value} must be non-negative"
            )));
        }
        Ok(())
    }

    /// Fitness evaluations requested by one iteration (after initialization).
    pub fn evaluations_per_iteration(&self) -> usize {
        match self.algorithm {
            Algorithm::Ihs => 1,
            _ => self.agents,
        }
    }

    /// Upper bound on evaluations for a whole run, initialization included.
    pub fn evaluation_budget(&self) -> usize {
        self.agents + self.iterations * self.evaluations_per_iteration()
    }
}

/// Read-only view handed to strategies for one iteration.
pub struct StepContext<'a> {
    pub space: &'a SearchSpace,
    pub iteration: usize,
    pub iterations: usize,
    seed: u64,
}

impl StepContext<'_> {
    /// The stream for `(seed, iteration, role, index)`.
    pub fn rng(&self, role: u64, index: u64) -> StreamRng {
        stream_rng(self.seed, &[self.iteration as u64, role, index])
    }

    /// 0 at the first iteration, 1 at the last.
    pub fn progress(&self) -> f64 {
        if self.iterations <= 1 {
            0.0
        } else {
            (self.iteration.saturating_sub(1)) as f64 / (self.iterations - 1) as f64
        }
    }
}

/// Per-iteration behaviour of one algorithm.
pub(crate) trait Strategy: Send {
    fn initialize(&mut self, _ctx: &StepContext<'_>, _population: &[Candidate]) {}

    fn propose(
        &mut self,
        ctx: &StepContext<'_>,
        population: &[Candidate],
        best: &Candidate,
    ) -> Vec<Vec<f64>>;

    fn accept(
        &mut self,
        ctx: &StepContext<'_>,
        population: &mut Vec<Candidate>,
        trials: Vec<Candidate>,
    );

    fn diagnostics(&self) -> Vec<String> {
        Vec::new()
    }

    /// How many proposals of the last `propose` were resamples rather than
    /// search moves.
    fn replacements(&self) -> usize {
        0
    }
}

fn make_strategy(cfg: &OptimizerConfig) -> Box<dyn Strategy> {
    let p = cfg.params;
    match cfg.algorithm {
        Algorithm::Ihs => Box::new(ihs::Ihs::new(p.ihs)),
        Algorithm::Aiwpso => Box::new(aiwpso::Aiwpso::new(p.aiwpso)),
        Algorithm::Cs => Box::new(cs::CuckooSearch::new(p.cs)),
        Algorithm::Fa => Box::new(fa::Firefly::new(p.fa)),
        Algorithm::Bsa => Box::new(bsa::Backtracking::new(p.bsa)),
        Algorithm::Jade => Box::new(jade::Jade::new(p.jade)),
        Algorithm::Cobide => Box::new(cobide::Cobide::new(p.cobide)),
        Algorithm::Rs => Box::new(random::RandomSearch),
    }
}

/// Ask/tell driver holding one algorithm's state.
pub struct Optimizer {
    cfg: OptimizerConfig,
    space: SearchSpace,
    seed: u64,
    iteration: usize,
    population: Vec<Candidate>,
    best: Option<Candidate>,
    strategy: Box<dyn Strategy>,
    pending: Option<Vec<Candidate>>,
    evaluations: usize,
    effective_evaluations: usize,
    warnings: Vec<String>,
}

impl Optimizer {
    pub fn new(cfg: OptimizerConfig, space: SearchSpace, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            strategy: make_strategy(&cfg),
            cfg,
            space,
            seed,
            iteration: 0,
            population: Vec::new(),
            best: None,
            pending: None,
            evaluations: 0,
            effective_evaluations: 0,
            warnings: Vec::new(),
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    /// Completed ask/tell rounds, the initial population included.
    pub fn rounds(&self) -> usize {
        self.iteration
    }

    pub fn is_finished(&self) -> bool {
        self.iteration > self.cfg.iterations
    }

    pub fn population(&self) -> &[Candidate] {
        &self.population
    }

    /// Best candidate over everything told so far.
    pub fn best(&self) -> Option<&Candidate> {
        self.best.as_ref()
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Evaluations of search moves: all evaluations except the nests that
    /// cuckoo search abandons and resamples.
    pub fn effective_evaluations(&self) -> usize {
        self.effective_evaluations
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Proposals for the current round.
    pub fn ask(&mut self) -> Result<Vec<Candidate>> {
        if self.pending.is_some() {
            return Err(Error::Contract("ask called twice without tell".into()));
        }
        let ctx = StepContext {
            space: &self.space,
            iteration: self.iteration,
            iterations: self.cfg.iterations,
            seed: self.seed,
        };
        let raw = if self.iteration == 0 {
            (0..self.cfg.agents)
                .map(|i| {
                    self.space
                        .sample_uniform(&mut ctx.rng(role::PROPOSE, i as u64))
                        .x
                })
                .collect()
        } else {
            let best = self
                .best
                .as_ref()
                .expect("initialized after the first tell");
            self.strategy.propose(&ctx, &self.population, best)
        };
        let proposals: Vec<Candidate> = raw
            .into_iter()
            .enumerate()
            .map(|(i, x)| Candidate {
                x: self.space.clamp(&x),
                fitness: None,
                eval_seed: derive_seed(
                    self.seed,
                    &[self.iteration as u64, role::EVALUATE, i as u64],
                ),
            })
            .collect();
        self.pending = Some(proposals.clone());
        Ok(proposals)
    }

    /// Accepts the evaluated proposals of the last `ask`, in order.
    pub fn tell(&mut self, mut evaluated: Vec<Candidate>) -> Result<()> {
        let pending = self
            .pending
            .as_ref()
            .ok_or_else(|| Error::Contract("tell called without a pending ask".into()))?;
        if evaluated.len() != pending.len()
            || evaluated
                .iter()
                .zip(pending)
                .any(|(e, p)| e.x != p.x || e.eval_seed != p.eval_seed)
        {
            return Err(Error::Contract(
                "told candidates do not match the last ask".into(),
            ));
        }
        for (i, c) in evaluated.iter_mut().enumerate() {
            match c.fitness {
                None => return Err(Error::Contract(format!("candidate {i} has no fitness"))),
                Some(f) if f.is_nan() => {
                    self.warnings.push(format!(
                        "iteration {}: candidate {i} returned NaN; quarantined",
                        self.iteration
                    ));
                    c.fitness = Some(QUARANTINE_FITNESS);
                }
                Some(_) => {}
            }
        }
        self.pending = None;
        self.evaluations += evaluated.len();
        self.effective_evaluations += evaluated.len()
            - if self.iteration == 0 {
                0
            } else {
                self.strategy.replacements()
            };
        for c in &evaluated {
            if self.best.as_ref().is_none_or(|b| c.score() < b.score()) {
                self.best = Some(c.clone());
            }
        }
        let ctx = StepContext {
            space: &self.space,
            iteration: self.iteration,
            iterations: self.cfg.iterations,
            seed: self.seed,
        };
        if self.iteration == 0 {
            self.population = evaluated;
            self.strategy.initialize(&ctx, &self.population);
        } else {
            self.strategy.accept(&ctx, &mut self.population, evaluated);
        }
        self.iteration += 1;
        Ok(())
    }

    /// Strategy-specific notes (e.g. fallbacks taken).
    pub fn diagnostics(&self) -> Vec<String> {
        self.strategy.diagnostics()
    }
}

/// One row of the convergence trace; iteration 0 is the initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub evaluations: usize,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationOutcome {
    pub best: Candidate,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
    /// See [`Optimizer::effective_evaluations`].
    pub effective_evaluations: usize,
    pub warnings: Vec<String>,
}

/// Runs a full optimization: initial population plus `cfg.iterations` rounds.
///
/// With `parallel` set, the candidates of one round are evaluated on the rayon
/// pool; results are identical either way.
pub fn run_optimizer<F>(
    cfg: &OptimizerConfig,
    space: &SearchSpace,
    seed: u64,
    parallel: bool,
    fitness: F,
) -> Result<OptimizationOutcome>
where
    F: Fn(&Candidate) -> Result<f64> + Sync,
{
    let start = Instant::now();
    let mut opt = Optimizer::new(*cfg, space.clone(), seed)?;
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    while !opt.is_finished() {
        let mut proposals = opt.ask()?;
        let scores: Vec<Result<f64>> = if parallel {
            proposals.par_iter().map(&fitness).collect()
        } else {
            proposals.iter().map(&fitness).collect()
        };
        for (c, s) in proposals.iter_mut().zip(scores) {
            c.fitness = Some(s?);
        }
        let mean = proposals
            .iter()
            .map(|c| sanitize(c.score()) / proposals.len() as f64)
            .sum();
        let iteration = opt.rounds();
        opt.tell(proposals)?;
        trace.push(TraceRow {
            iteration,
            best_fitness: opt.best().expect("told at least once").score(),
            mean_fitness: mean,
            evaluations: opt.evaluations(),
            elapsed_s: start.elapsed().as_secs_f64(),
        });
    }
    if opt.evaluations() > cfg.evaluation_budget() {
        return Err(Error::Contract(format!(
            "{} evaluations exceed the budget of {}",
            opt.evaluations(),
            cfg.evaluation_budget()
        )));
    }
    let mut warnings = opt.warnings().to_vec();
    warnings.extend(opt.diagnostics());
    Ok(OptimizationOutcome {
        best: opt.best().expect("ran").clone(),
        trace,
        evaluations: opt.evaluations(),
        effective_evaluations: opt.effective_evaluations(),
        warnings,
    })
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        QUARANTINE_FITNESS
    } else {
        f
    }
}

/// Indices sorted from best to worst fitness (stable for ties).
pub(crate) fn ranked(population: &[Candidate]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..population.len()).collect();
    idx.sort_by(|&a, &b| population[a].score().total_cmp(&population[b].score()));
    idx
}

/// Greedy one-to-one replacement.
pub(crate) fn greedy_replace(population: &mut [Candidate], trials: Vec<Candidate>) -> Vec<bool> {
    population
        .iter_mut()
        .zip(trials)
        .map(|(parent, trial)| {
            let better = trial.score() < parent.score();
            if better {
                *parent = trial;
            }
            better
        })
        .collect()
}

/// Distinct random indices in `0..n` avoiding everything in `exclude`.
pub(crate) fn distinct_indices<R: rand::Rng + ?Sized>(
    n: usize,
    count: usize,
    exclude: &[usize],
    rng: &mut R,
) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::with_capacity(count);
    while picked.len() < count {
        let k = rng.random_range(0..n);
        if !exclude.contains(&k) && !picked.contains(&k) {
            picked.push(k);
        }
    }
    picked
}
