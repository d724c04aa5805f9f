//! Genetic algorithm with uniform crossover.
//!
//! Steady-state variant: each generation breeds one child from two
//! binary-tournament parents and replaces the worst member if strictly
//! better. Elitist variant: every unordered parent pair breeds one child and
//! the fittest `population` of parents ∪ children survive.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::search::{SearchSpace, VectorOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub elitist: bool,
    /// Per-gene mutation probability; `None` means `1 / dim`.
    pub mutation_rate: Option<f64>,
}

impl GaParams {
    pub fn steady_state(population: usize, generations: usize) -> Self {
        Self {
            population,
            generations,
            elitist: false,
            mutation_rate: None,
        }
    }

    pub fn elitist(population: usize, generations: usize) -> Self {
        Self {
            elitist: true,
            ..Self::steady_state(population, generations)
        }
    }

    pub fn offspring_per_generation(&self) -> usize {
        if self.elitist {
            self.population * self.population.saturating_sub(1) / 2
        } else {
            1
        }
    }

    pub fn evaluations(&self) -> u64 {
        (self.population + self.generations * self.offspring_per_generation()) as u64
    }
}

#[derive(Clone)]
struct Individual {
    genes: Vec<u32>,
    fitness: f64,
}

fn sort_desc(pop: &mut [Individual]) {
    pop.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}

fn tournament<'p>(pop: &'p [Individual], rng: &mut SimRng) -> &'p Individual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if b.fitness > a.fitness {
        b
    } else {
        a
    }
}

fn breed(space: &SearchSpace, a: &[u32], b: &[u32], rate: f64, rng: &mut SimRng) -> Vec<u32> {
    let mut child: Vec<u32> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| if rng.random::<bool>() { x } else { y })
        .collect();
    for (i, g) in child.iter_mut().enumerate() {
        if rng.random::<f64>() < rate {
            *g = rng.random_range(0..=space.cap(i));
        }
    }
    space.repair(&mut child, rng);
    child
}

pub fn ga_search<F>(
    space: &SearchSpace,
    params: &GaParams,
    incumbent: Option<Vec<u32>>,
    rng: &mut SimRng,
    mut score: F,
) -> Result<VectorOutcome>
where
    F: FnMut(&[u32]) -> Result<f64>,
{
    if params.population == 0 {
        return Err(Error::InvalidConfig("GA population must be positive".into()));
    }
    let rate = params
        .mutation_rate
        .unwrap_or(1.0 / space.dim().max(1) as f64);
    let mut evaluations = 0u64;
    let mut seed = incumbent;
    let mut pop = Vec::with_capacity(params.population);
    for _ in 0..params.population {
        let genes = seed.take().unwrap_or_else(|| space.sample(rng));
        let fitness = score(&genes)?;
        evaluations += 1;
        pop.push(Individual { genes, fitness });
    }
    sort_desc(&mut pop);
    let mut trace = vec![pop[0].fitness];

    for _ in 0..params.generations {
        if params.elitist {
            let mut children = Vec::with_capacity(params.offspring_per_generation());
            for i in 0..pop.len() {
                for j in i + 1..pop.len() {
                    let genes = breed(space, &pop[i].genes, &pop[j].genes, rate, rng);
                    let fitness = score(&genes)?;
                    evaluations += 1;
                    children.push(Individual { genes, fitness });
                }
            }
            pop.extend(children);
            sort_desc(&mut pop);
            pop.truncate(params.population);
        } else {
            let a = tournament(&pop, rng).genes.clone();
            let b = tournament(&pop, rng).genes.clone();
            let genes = breed(space, &a, &b, rate, rng);
            let fitness = score(&genes)?;
            evaluations += 1;
            if fitness > pop.last().expect("non-empty").fitness {
                pop.pop();
                pop.push(Individual { genes, fitness });
                sort_desc(&mut pop);
            }
        }
        trace.push(pop[0].fitness);
    }
    Ok(VectorOutcome {
        best: pop[0].genes.clone(),
        best_eval: pop[0].fitness,
        trace,
        evaluations,
    })
}
