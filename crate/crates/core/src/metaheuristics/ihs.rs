//! Improved Harmony Search: one new harmony per iteration, with the
//! pitch-adjusting rate rising linearly and the bandwidth shrinking
//! exponentially over the run.

use rand::Rng;

use super::{IhsParams, StepContext, Strategy};
use crate::hyperspace::{Candidate, SearchSpace};
use crate::seeding::role;

pub struct Ihs {
    params: IhsParams,
}

impl Ihs {
    pub fn new(params: IhsParams) -> Self {
        Self { params }
    }
}

/// Pitch-adjusting rate at `progress ∈ [0, 1]`.
pub fn pitch_rate(params: &IhsParams, progress: f64) -> f64 {
    params.par_min + (params.par_max - params.par_min) * progress
}

/// Bandwidth (percent of range) at `progress ∈ [0, 1]`.
pub fn bandwidth(params: &IhsParams, progress: f64) -> f64 {
    if params.bw_max <= 0.0 || params.bw_min <= 0.0 {
        return params.bw_min.max(0.0);
    }
    params.bw_max * ((params.bw_min / params.bw_max).ln() * progress).exp()
}

/// Improvises one harmony from `memory`, coordinate by coordinate.
pub fn improvise<R: Rng + ?Sized>(
    memory: &[Vec<f64>],
    space: &SearchSpace,
    hmcr: f64,
    par: f64,
    bandwidth_pct: f64,
    rng: &mut R,
) -> Vec<f64> {
    (0..space.dims())
        .map(|d| {
            let (lo, width) = (space.lower()[d], space.width(d));
            if rng.random::<f64>() < hmcr {
                let mut v = memory[rng.random_range(0..memory.len())][d];
                if rng.random::<f64>() < par {
                    v += (2.0 * rng.random::<f64>() - 1.0) * bandwidth_pct / 100.0 * width;
                }
                v
            } else {
                lo + width * rng.random::<f64>()
            }
        })
        .collect()
}

impl Strategy for Ihs {
    fn propose(
        &mut self,
        ctx: &StepContext<'_>,
        population: &[Candidate],
        _best: &Candidate,
    ) -> Vec<Vec<f64>> {
        let t = ctx.progress();
        let memory: Vec<Vec<f64>> = population.iter().map(|c| c.x.clone()).collect();
        let mut rng = ctx.rng(role::PROPOSE, 0);
        vec![improvise(
            &memory,
            ctx.space,
            self.params.hmcr,
            pitch_rate(&self.params, t),
            bandwidth(&self.params, t),
            &mut rng,
        )]
    }

    fn accept(
        &mut self,
        _ctx: &StepContext<'_>,
        population: &mut Vec<Candidate>,
        trials: Vec<Candidate>,
    ) {
        for trial in trials {
            let worst = super::ranked(population).pop().expect("non-empty memory");
            if trial.score() < population[worst].score() {
                population[worst] = trial;
            }
        }
    }
}
