//! Cuckoo search. Every iteration the worst `⌈p·N⌉` nests (never the best)
//! are abandoned and rebuilt at uniform random positions; every other nest
//! lays an egg by a Lévy flight relative to the best nest and keeps it if it
//! is better.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::gamma;

use super::{CsParams, Schedule, StepContext, Strategy};
use crate::hyperspace::Candidate;
use crate::seeding::role;

/// Lévy exponent.
pub const LEVY_BETA: f64 = 1.5;

/// Mantegna's σ_u for exponent `beta`.
pub fn mantegna_sigma(beta: f64) -> f64 {
    let num = gamma(1.0 + beta) * (std::f64::consts::PI * beta / 2.0).sin();
    let den = gamma((1.0 + beta) / 2.0) * beta * 2f64.powf((beta - 1.0) / 2.0);
    (num / den).powf(1.0 / beta)
}

/// One Lévy-distributed step via Mantegna's algorithm.
pub fn levy_step<R: Rng + ?Sized>(beta: f64, sigma_u: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample::<f64, _>(StandardNormal) * sigma_u;
    let v: f64 = StandardNormal.sample(rng);
    u / v.abs().powf(1.0 / beta)
}

/// Nests abandoned per iteration: `⌈p·N⌉`, never the whole population.
pub fn abandon_count(p: f64, agents: usize) -> usize {
    ((p * agents as f64).ceil() as usize).min(agents.saturating_sub(1))
}

/// Step scale and discovery rate at `progress ∈ [0, 1]`.
pub fn schedule(params: &CsParams, progress: f64) -> (f64, f64) {
    match params.schedule {
        Schedule::Fixed => (params.tau, params.p),
        Schedule::Linear => (
            params.tau_max * (1.0 - progress) + params.tau_min * progress,
            params.p_max * (1.0 - progress) + params.p_min * progress,
        ),
    }
}

pub struct CuckooSearch {
    params: CsParams,
    sigma_u: f64,
    abandoned: Vec<usize>,
}

impl CuckooSearch {
    pub fn new(params: CsParams) -> Self {
        Self {
            params,
            sigma_u: mantegna_sigma(LEVY_BETA),
            abandoned: Vec::new(),
        }
    }
}

impl Strategy for CuckooSearch {
    fn propose(
        &mut self,
        ctx: &StepContext<'_>,
        population: &[Candidate],
        best: &Candidate,
    ) -> Vec<Vec<f64>> {
        let (tau, p) = schedule(&self.params, ctx.progress());
        let ranked = super::ranked(population);
        self.abandoned = ranked
            .iter()
            .rev()
            .copied()
            .take(abandon_count(p, population.len()))
            .collect();
        population
            .iter()
            .enumerate()
            .map(|(i, nest)| {
                let mut rng = ctx.rng(role::PROPOSE, i as u64);
                if self.abandoned.contains(&i) {
                    ctx.space.sample_uniform(&mut rng).x
                } else {
                    nest.x
                        .iter()
                        .zip(&best.x)
                        .map(|(&x, &g)| {
                            x + tau * levy_step(LEVY_BETA, self.sigma_u, &mut rng) * (x - g)
                        })
                        .collect()
                }
            })
            .collect()
    }

    fn accept(
        &mut self,
        _ctx: &StepContext<'_>,
        population: &mut Vec<Candidate>,
        trials: Vec<Candidate>,
    ) {
        for (i, trial) in trials.into_iter().enumerate() {
            if self.abandoned.contains(&i) || trial.score() < population[i].score() {
                population[i] = trial;
            }
        }
    }

    fn replacements(&self) -> usize {
        self.abandoned.len()
    }
}
