//! Random search: every iteration is a fresh uniform population.

use super::{StepContext, Strategy};
use crate::hyperspace::Candidate;
use crate::seeding::role;

pub struct RandomSearch;

impl Strategy for RandomSearch {
    fn propose(
        &mut self,
        ctx: &StepContext<'_>,
        population: &[Candidate],
        _best: &Candidate,
    ) -> Vec<Vec<f64>> {
        (0..population.len())
            .map(|i| {
                ctx.space
                    .sample_uniform(&mut ctx.rng(role::PROPOSE, i as u64))
                    .x
            })
            .collect()
    }

    fn accept(
        &mut self,
        _ctx: &StepContext<'_>,
        population: &mut Vec<Candidate>,
        trials: Vec<Candidate>,
    ) {
        *population = trials;
    }
}
