//! Firefly algorithm. Each firefly moves towards every brighter one with
//! attractiveness `β·exp(−γ r²)` plus a small random walk; the new swarm
//! replaces the old one unconditionally.

use rand::Rng;

use super::{FaParams, StepContext, Strategy};
use crate::hyperspace::Candidate;
use crate::seeding::role;

pub struct Firefly {
    params: FaParams,
}

impl Firefly {
    pub fn new(params: FaParams) -> Self {
        Self { params }
    }
}

/// Moves the swarm. Firefly `i` is attracted by every `j` with lower
/// fitness, using `j`'s position as already updated in this sweep. A firefly
/// with no brighter neighbour only takes the random walk.
pub fn move_swarm<R: Rng>(
    positions: &[Vec<f64>],
    fitness: &[f64],
    params: &FaParams,
    mut rng_for: impl FnMut(usize) -> R,
) -> Vec<Vec<f64>> {
    let mut x = positions.to_vec();
    for i in 0..x.len() {
        let mut rng = rng_for(i);
        let mut attracted = false;
        for j in 0..x.len() {
            if fitness[j] >= fitness[i] {
                continue;
            }
            attracted = true;
            let r2: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            let beta = if r2 == 0.0 {
                params.beta
            } else {
                params.beta * (-params.gamma * r2).exp()
            };
            let target = x[j].clone();
            for (xi, xj) in x[i].iter_mut().zip(&target) {
                *xi = (1.0 - beta) * *xi + beta * xj + params.alpha * (rng.random::<f64>() - 0.5);
            }
        }
        if !attracted {
            for xi in x[i].iter_mut() {
                *xi += params.alpha * (rng.random::<f64>() - 0.5);
            }
        }
    }
    x
}

impl Strategy for Firefly {
    fn propose(
        &mut self,
        ctx: &StepContext<'_>,
        population: &[Candidate],
        _best: &Candidate,
    ) -> Vec<Vec<f64>> {
        let positions: Vec<Vec<f64>> = population.iter().map(|c| c.x.clone()).collect();
        let fitness: Vec<f64> = population.iter().map(Candidate::score).collect();
        move_swarm(&positions, &fitness, &self.params, |i| {
            ctx.rng(role::PROPOSE, i as u64)
        })
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    #[test]
    fn full_attraction_without_noise_lands_on_brighter_firefly() {
        let p = FaParams {
            gamma: 0.0,
            beta: 1.0,
            alpha: 0.0,
        };
        let out = move_swarm(&[vec![1.0, 1.0], vec![0.0, 0.0]], &[5.0, 1.0], &p, |i| {
            rng_from_seed(i as u64)
        });
        assert_eq!(out[0], vec![0.0, 0.0]);
        assert_eq!(out[1], vec![0.0, 0.0]);
    }

    #[test]
    fn infinite_absorption_leaves_only_the_random_walk() {
        let p = FaParams {
            gamma: f64::INFINITY,
            beta: 1.0,
            alpha: 0.0,
        };
        let start = vec![vec![1.0, 1.0], vec![0.0, 0.0], vec![-1.0, 2.0]];
        let out = move_swarm(&start, &[3.0, 1.0, 2.0], &p, |i| rng_from_seed(i as u64));
        assert_eq!(out, start);
    }

    #[test]
    fn brightest_firefly_walks_by_at_most_half_alpha() {
        let p = FaParams {
            gamma: 1.0,
            beta: 1.0,
            alpha: 0.2,
        };
        let out = move_swarm(&[vec![0.3, 0.3], vec![0.9, 0.9]], &[0.0, 1.0], &p, |i| {
            rng_from_seed(i as u64 + 10)
        });
        assert!(out[0].iter().all(|v| (v - 0.3).abs() <= 0.1));
        assert_ne!(out[0], vec![0.3, 0.3]);
    }

    #[test]
    fn equal_fitness_without_noise_is_stationary() {
        let p = FaParams {
            alpha: 0.0,
            ..FaParams::default()
        };
        let start = vec![vec![1.0, -1.0], vec![0.5, 0.0], vec![-2.0, 2.0]];
        assert_eq!(
            move_swarm(&start, &[1.0; 3], &p, |i| rng_from_seed(i as u64)),
            start
        );
    }
}
