//! Backtracking search: mutation is driven by a historical population that
//! is occasionally refreshed from the current one and shuffled.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{BsaParams, StepContext, Strategy};
use crate::hyperspace::Candidate;
use crate::seeding::role;

pub struct Backtracking {
    params: BsaParams,
    historical: Vec<Vec<f64>>,
}

impl Backtracking {
    pub fn new(params: BsaParams) -> Self {
        Self {
            params,
            historical: Vec::new(),
        }
    }
}

/// Which dimensions of one individual mutate. With `whole` set, up to
/// `⌈mix_rate·rand·D⌉` random dimensions; otherwise one random dimension.
/// At least one dimension always mutates.
pub fn mutation_map<R: Rng + ?Sized>(
    dims: usize,
    mix_rate: f64,
    whole: bool,
    rng: &mut R,
) -> Vec<bool> {
    let mut map = vec![false; dims];
    if whole {
        let count = ((mix_rate * rng.random::<f64>() * dims as f64).ceil() as usize).clamp(1, dims);
        let mut order: Vec<usize> = (0..dims).collect();
        order.shuffle(rng);
        for &d in &order[..count] {
            map[d] = true;
        }
    } else {
        map[rng.random_range(0..dims)] = true;
    }
    map
}

/// `x + amplitude·(old − x)` on the dimensions selected by `map`.
pub fn trial_vector(x: &[f64], old: &[f64], map: &[bool], amplitude: f64) -> Vec<f64> {
    x.iter()
        .zip(old)
        .zip(map)
        .map(|((&xi, &oi), &m)| if m { xi + amplitude * (oi - xi) } else { xi })
        .collect()
}

impl Strategy for Backtracking {
    fn initialize(&mut self, ctx: &StepContext<'_>, population: &[Candidate]) {
        self.historical = (0..population.len())
            .map(|i| {
                ctx.space
                    .sample_uniform(&mut ctx.rng(role::HISTORY, i as u64))
                    .x
            })
            .collect();
    }

    fn propose(
        &mut self,
        ctx: &StepContext<'_>,
        population: &[Candidate],
        _best: &Candidate,
    ) -> Vec<Vec<f64>> {
        let mut shared = ctx.rng(role::PROPOSE, super::SHARED_STREAM);
        if shared.random::<f64>() < 0.5 {
            self.historical = population.iter().map(|c| c.x.clone()).collect();
        }
        self.historical.shuffle(&mut shared);
        let amplitude = self.params.f * shared.sample::<f64, _>(StandardNormal);
        let whole = shared.random::<f64>() < 0.5;
        population
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut rng = ctx.rng(role::PROPOSE, i as u64);
                let map = mutation_map(c.x.len(), self.params.mix_rate, whole, &mut rng);
                trial_vector(&c.x, &self.historical[i], &map, amplitude)
            })
            .collect()
    }

    fn accept(
        &mut self,
        _ctx: &StepContext<'_>,
        population: &mut Vec<Candidate>,
        trials: Vec<Candidate>,
    ) {
        super::greedy_replace(population, trials);
    }
}
