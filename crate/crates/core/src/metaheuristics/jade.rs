//! JADE: DE/current-to-pbest/1 with an external archive of replaced parents
//! and self-adapting means for the mutation factor and crossover rate.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal};

use super::{JadeParams, StepContext, Strategy};
use crate::hyperspace::Candidate;
use crate::seeding::role;

/// Running means `μ_F` and `μ_CR`, both starting at 0.5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptation {
    pub mu_f: f64,
    pub mu_cr: f64,
}

impl Default for Adaptation {
    fn default() -> Self {
        Self {
            mu_f: 0.5,
            mu_cr: 0.5,
        }
    }
}

impl Adaptation {
    /// Moves the means towards the successful `(F, CR)` pairs. No-op when
    /// nothing succeeded.
    pub fn update(&mut self, c: f64, successes: &[(f64, f64)]) {
        if successes.is_empty() {
            return;
        }
        let f: Vec<f64> = successes.iter().map(|s| s.0).collect();
        let cr = successes.iter().map(|s| s.1).sum::<f64>() / successes.len() as f64;
        self.mu_f = (1.0 - c) * self.mu_f + c * lehmer_mean(&f);
        self.mu_cr = (1.0 - c) * self.mu_cr + c * cr;
    }
}

/// `Σx² / Σx`.
pub fn lehmer_mean(values: &[f64]) -> f64 {
    let s: f64 = values.iter().sum();
    if s == 0.0 {
        0.0
    } else {
        values.iter().map(|v| v * v).sum::<f64>() / s
    }
}

/// Cauchy(`mu`, 0.1), redrawn while non-positive and capped at 1.
pub fn sample_f<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    let dist = Cauchy::new(mu, 0.1).expect("positive scale");
    loop {
        let f: f64 = dist.sample(rng);
        if f > 0.0 {
            return f.min(1.0);
        }
    }
}

/// Normal(`mu`, 0.1) clipped to `[0, 1]`.
pub fn sample_cr<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    Normal::new(mu, 0.1)
        .expect("positive sd")
        .sample(rng)
        .clamp(0.0, 1.0)
}

pub struct Jade {
    params: JadeParams,
    adaptation: Adaptation,
    archive: Vec<Vec<f64>>,
    drawn: Vec<(f64, f64)>,
}

impl Jade {
    pub fn new(params: JadeParams) -> Self {
        Self {
            params,
            adaptation: Adaptation::default(),
            archive: Vec::new(),
            drawn: Vec::new(),
        }
    }

    pub fn adaptation(&self) -> Adaptation {
        self.adaptation
    }

    pub fn archive_len(&self) -> usize {
        self.archive.len()
    }
}

/// Size of the p-best pool: `max(1, ⌈g·N⌉)`.
pub fn pbest_pool(g: f64, agents: usize) -> usize {
    ((g * agents as f64).ceil() as usize).clamp(1, agents)
}

impl Strategy for Jade {
    fn propose(
        &mut self,
        ctx: &StepContext<'_>,
        population: &[Candidate],
        _best: &Candidate,
    ) -> Vec<Vec<f64>> {
        let n = population.len();
        let ranked = super::ranked(population);
        let pool = pbest_pool(self.params.g, n);
        self.drawn.clear();
        (0..n)
            .map(|i| {
                let mut rng = ctx.rng(role::PROPOSE, i as u64);
                let f = sample_f(self.adaptation.mu_f, &mut rng);
                let cr = sample_cr(self.adaptation.mu_cr, &mut rng);
                self.drawn.push((f, cr));
                let pbest = &population[ranked[rng.random_range(0..pool)]].x;
                let r1 = super::distinct_indices(n, 1, &[i], &mut rng)[0];
                let r2 = super::distinct_indices(n + self.archive.len(), 1, &[i, r1], &mut rng)[0];
                let x2 = if r2 < n {
                    &population[r2].x
                } else {
                    &self.archive[r2 - n]
                };
                let x = &population[i].x;
                let j_rand = rng.random_range(0..x.len());
                (0..x.len())
                    .map(|d| {
                        if d == j_rand || rng.random::<f64>() < cr {
                            x[d] + f * (pbest[d] - x[d]) + f * (population[r1].x[d] - x2[d])
                        } else {
                            x[d]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn accept(
        &mut self,
        ctx: &StepContext<'_>,
        population: &mut Vec<Candidate>,
        trials: Vec<Candidate>,
    ) {
        let mut successes = Vec::new();
        for (i, trial) in trials.into_iter().enumerate() {
            if trial.score() <= population[i].score() {
                if trial.score() < population[i].score() {
                    successes.push(self.drawn[i]);
                }
                let parent = std::mem::replace(&mut population[i], trial);
                self.archive.push(parent.x);
            }
        }
        let mut rng = ctx.rng(role::ACCEPT, super::SHARED_STREAM);
        while self.archive.len() > population.len() {
            let k = rng.random_range(0..self.archive.len());
            self.archive.swap_remove(k);
        }
        self.adaptation.update(self.params.c, &successes);
    }
}
