//! Particle swarm with an inertia weight adapted from the fraction of
//! particles that improved their personal best in the last iteration.

use rand::Rng;

use super::{AiwpsoParams, StepContext, Strategy};
use crate::hyperspace::{Candidate, SearchSpace};
use crate::seeding::role;

pub struct Aiwpso {
    params: AiwpsoParams,
    inertia: f64,
    velocity: Vec<Vec<f64>>,
    personal: Vec<Candidate>,
}

impl Aiwpso {
    pub fn new(params: AiwpsoParams) -> Self {
        Self {
            inertia: params.w,
            params,
            velocity: Vec::new(),
            personal: Vec::new(),
        }
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }
}

/// `w_min + (w_max − w_min) · successes / agents`.
pub fn adaptive_inertia(successes: usize, agents: usize, w_min: f64, w_max: f64) -> f64 {
    w_min + (w_max - w_min) * successes as f64 / agents.max(1) as f64
}

/// Updates `velocity` in place and returns the moved (unclamped) position.
/// Velocities are limited to one box width per dimension.
#[allow(clippy::too_many_arguments)]
pub fn move_particle<R: Rng + ?Sized>(
    x: &[f64],
    velocity: &mut [f64],
    personal_best: &[f64],
    global_best: &[f64],
    w: f64,
    c1: f64,
    c2: f64,
    space: &SearchSpace,
    rng: &mut R,
) -> Vec<f64> {
    (0..x.len())
        .map(|d| {
            let (r1, r2) = (rng.random::<f64>(), rng.random::<f64>());
            let vmax = space.width(d);
            let v = w * velocity[d]
                + c1 * r1 * (personal_best[d] - x[d])
                + c2 * r2 * (global_best[d] - x[d]);
            velocity[d] = v.clamp(-vmax, vmax);
            x[d] + velocity[d]
        })
        .collect()
}

impl Strategy for Aiwpso {
    fn initialize(&mut self, ctx: &StepContext<'_>, population: &[Candidate]) {
        self.velocity = vec![vec![0.0; ctx.space.dims()]; population.len()];
        self.personal = population.to_vec();
    }

    fn propose(
        &mut self,
        ctx: &StepContext<'_>,
        population: &[Candidate],
        _best: &Candidate,
    ) -> Vec<Vec<f64>> {
        let g = super::ranked(&self.personal)[0];
        let gbest = self.personal[g].x.clone();
        let p = self.params;
        population
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut rng = ctx.rng(role::PROPOSE, i as u64);
                move_particle(
                    &c.x,
                    &mut self.velocity[i],
                    &self.personal[i].x,
                    &gbest,
                    self.inertia,
                    p.c1,
                    p.c2,
                    ctx.space,
                    &mut rng,
                )
            })
            .collect()
    }

    fn accept(
        &mut self,
        _ctx: &StepContext<'_>,
        population: &mut Vec<Candidate>,
        trials: Vec<Candidate>,
    ) {
        let mut successes = 0;
        for (pb, t) in self.personal.iter_mut().zip(&trials) {
            if t.score() < pb.score() {
                *pb = t.clone();
                successes += 1;
            }
        }
        self.inertia = adaptive_inertia(
            successes,
            trials.len(),
            self.params.w_min,
            self.params.w_max,
        );
        *population = trials;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    #[test]
    fn inertia_endpoints() {
        assert_eq!(adaptive_inertia(0, 5, 0.5, 1.5), 0.5);
        assert_eq!(adaptive_inertia(5, 5, 0.5, 1.5), 1.5);
        assert!((adaptive_inertia(2, 4, 0.5, 1.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn particle_at_both_bests_with_no_velocity_stays_put() {
        let s = SearchSpace::uniform_box(3, -1.0, 1.0).unwrap();
        let x = vec![0.2, -0.3, 0.4];
        let mut v = vec![0.0; 3];
        let moved = move_particle(&x, &mut v, &x, &x, 0.9, 1.7, 1.7, &s, &mut rng_from_seed(1));
        assert_eq!(moved, x);
        assert_eq!(v, vec![0.0; 3]);
    }

    #[test]
    fn velocity_is_limited_to_box_width() {
        let s = SearchSpace::uniform_box(2, 0.0, 1.0).unwrap();
        let mut v = vec![100.0, -100.0];
        move_particle(
            &[0.5, 0.5],
            &mut v,
            &[0.5, 0.5],
            &[0.5, 0.5],
            1.0,
            0.0,
            0.0,
            &s,
            &mut rng_from_seed(2),
        );
        assert_eq!(v, vec![1.0, -1.0]);
    }

    #[test]
    fn inertia_tracks_improvements() {
        let s = SearchSpace::uniform_box(1, 0.0, 1.0).unwrap();
        let ctx = StepContext {
            space: &s,
            iteration: 1,
            iterations: 5,
            seed: 0,
        };
        let mk = |f: f64| Candidate {
            x: vec![f],
            fitness: Some(f),
            eval_seed: 0,
        };
        let mut pso = Aiwpso::new(AiwpsoParams::default());
        let mut pop = vec![mk(0.5), mk(0.5)];
        pso.initialize(&ctx, &pop);
        assert_eq!(pso.inertia(), 0.7);
        pso.accept(&ctx, &mut pop, vec![mk(0.1), mk(0.9)]);
        assert!((pso.inertia() - 1.0).abs() < 1e-12);
        pso.accept(&ctx, &mut pop, vec![mk(0.8), mk(0.9)]);
        assert_eq!(pso.inertia(), 0.5);
    }
}
