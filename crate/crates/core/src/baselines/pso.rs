//! Integer particle swarm optimization.
//!
//! Positions and velocities are continuous; each particle is rounded,
//! clamped to the entry caps and repaired before evaluation. Personal and
//! global bests store the repaired integer vectors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::search::{SearchSpace, VectorOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub swarm: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
}

impl PsoParams {
    /// Constriction-equivalent constants `w = 0.7298`, `c1 = c2 = 1.49618`.
    pub fn standard(swarm: usize, iterations: usize) -> Self {
        Self {
            swarm,
            iterations,
            inertia: 0.7298,
            cognitive: 1.49618,
            social: 1.49618,
        }
    }

    pub fn evaluations(&self) -> u64 {
        (self.swarm * (1 + self.iterations)) as u64
    }
}

fn discretize(space: &SearchSpace, x: &[f64], rng: &mut SimRng) -> Vec<u32> {
    let mut v: Vec<u32> = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| xi.round().clamp(0.0, f64::from(space.cap(i))) as u32)
        .collect();
    space.repair(&mut v, rng);
    v
}

pub fn pso_search<F>(
    space: &SearchSpace,
    params: &PsoParams,
    incumbent: Option<Vec<u32>>,
    rng: &mut SimRng,
    mut score: F,
) -> Result<VectorOutcome>
where
    F: FnMut(&[u32]) -> Result<f64>,
{
    if params.swarm == 0 {
        return Err(Error::InvalidConfig("PSO swarm must be positive".into()));
    }
    let dim = space.dim();
    let mut seed = incumbent;
    let mut pos: Vec<Vec<f64>> = Vec::with_capacity(params.swarm);
    let mut pbest: Vec<(Vec<u32>, f64)> = Vec::with_capacity(params.swarm);
    let mut evaluations = 0u64;
    for _ in 0..params.swarm {
        let v = seed.take().unwrap_or_else(|| space.sample(rng));
        let s = score(&v)?;
        evaluations += 1;
        pos.push(v.iter().map(|&b| f64::from(b)).collect());
        pbest.push((v, s));
    }
    let mut vel = vec![vec![0.0; dim]; params.swarm];
    let mut g = 0;
    for (i, p) in pbest.iter().enumerate() {
        if p.1 > pbest[g].1 {
            g = i;
        }
    }
    let mut gbest = pbest[g].clone();
    let mut trace = vec![gbest.1];

    for _ in 0..params.iterations {
        for p in 0..params.swarm {
            for d in 0..dim {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let x = pos[p][d];
                vel[p][d] = params.inertia * vel[p][d]
                    + params.cognitive * r1 * (f64::from(pbest[p].0[d]) - x)
                    + params.social * r2 * (f64::from(gbest.0[d]) - x);
                pos[p][d] = (x + vel[p][d]).clamp(0.0, f64::from(space.cap(d)));
            }
            let v = discretize(space, &pos[p], rng);
            let s = score(&v)?;
            evaluations += 1;
            if s > pbest[p].1 {
                pbest[p] = (v, s);
                if s > gbest.1 {
                    gbest = pbest[p].clone();
                }
            }
        }
        trace.push(gbest.1);
    }
    Ok(VectorOutcome {
        best: gbest.0,
        best_eval: gbest.1,
        trace,
        evaluations,
    })
}
