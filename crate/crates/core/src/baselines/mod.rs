//! Reference allocators: equal split, exhaustive searches and the comparator
//! metaheuristics.

pub mod ga;
pub mod pso;
pub mod sa;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::BitAllocation;
use crate::error::{Error, Result};
use crate::evaluator::{Evaluator, Problem};
use crate::hs::{equal_ap_bits, stage1_space, AllocationOutcome, HierarchicalOutcome, HsParams};
use crate::rng::SimRng;
use crate::search::{stars_and_bars, SearchSpace, VectorOutcome};

pub use ga::{ga_search, GaParams};
pub use pso::{pso_search, PsoParams};
pub use sa::{calibrate_temperature, sa_search, SaParams};

/// `floor(b_max / (M K))` bits on every link.
pub fn equal_allocation(problem: &Problem) -> BitAllocation {
    BitAllocation::from_ap_bits(&equal_ap_bits(problem), problem.num_ues())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveOutcome {
    pub allocation: BitAllocation,
    pub best_eval: f64,
    /// Vectors actually visited.
    pub enumerated: u128,
    /// `C(dims + B, dims)`, equal to `enumerated` when no entry cap binds.
    pub stars_and_bars: u128,
}

fn exhaustive<D>(problem: &Problem, space: &SearchSpace, budget: u32, cap: u128, decode: D) -> Result<ExhaustiveOutcome>
where
    D: Fn(&[u32]) -> BitAllocation + Sync,
{
    let mut candidates = Vec::new();
    let enumerated = space.for_each_feasible(cap, |v| {
        candidates.push(v.to_vec());
        Ok(())
    })?;
    let scores = candidates
        .par_iter()
        .map(|v| problem.report(&decode(v)).map(|r| r.value()))
        .collect::<Result<Vec<f64>>>()?;
    // First maximum in enumeration order.
    let (best_idx, best_eval) = scores
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
    let sb = stars_and_bars(space.dim(), budget);
    debug!("exhaustive search visited {enumerated} vectors (stars-and-bars {sb})");
    Ok(ExhaustiveOutcome {
        allocation: decode(&candidates[best_idx]),
        best_eval,
        enumerated,
        stars_and_bars: sb,
    })
}

/// Best per-AP level vector under `Σ b_m ≤ floor(b_max / K)`.
pub fn ap_exhaustive(problem: &Problem, cap: u128) -> Result<ExhaustiveOutcome> {
    let k = problem.num_ues();
    exhaustive(problem, &stage1_space(problem), problem.stage1_budget(), cap, |v| {
        BitAllocation::from_ap_bits(v, k)
    })
}

/// Global optimum over every feasible `M × K` allocation. Toy sizes only.
pub fn full_exhaustive(problem: &Problem, cap: u128) -> Result<ExhaustiveOutcome> {
    let (m, k) = (problem.num_aps(), problem.num_ues());
    let budget = problem.config.bit_budget;
    let space = SearchSpace::single(m * k, budget, problem.profile.max_bits());
    exhaustive(problem, &space, budget, cap, |v| {
        BitAllocation::from_flat(m, k, v.to_vec()).expect("dimension matches")
    })
}

/// Comparator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metaheuristic {
    Ga,
    GaElitist,
    Pso,
    Pso10,
    Sa,
}

impl Metaheuristic {
    pub fn name(self) -> &'static str {
        match self {
            Metaheuristic::Ga => "ga",
            Metaheuristic::GaElitist => "ga_elitist",
            Metaheuristic::Pso => "pso",
            Metaheuristic::Pso10 => "pso10",
            Metaheuristic::Sa => "sa",
        }
    }
}

/// How comparator effort is sized relative to HS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// Same number of objective evaluations as HS in each stage.
    MatchedEvaluations,
    /// Population / generated / iteration counts exactly as tabulated for
    /// the four-AP reference scenario.
    Tabulated,
}

/// Per-stage comparator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StageParams {
    Ga(GaParams),
    Pso(PsoParams),
    Sa(SaParams),
}

impl StageParams {
    pub fn evaluations(&self) -> u64 {
        match self {
            StageParams::Ga(p) => p.evaluations(),
            StageParams::Pso(p) => p.evaluations(),
            StageParams::Sa(p) => p.evaluations(),
        }
    }
}

fn fit(total: u64, population: usize, per_iter: usize) -> usize {
    (total.saturating_sub(population as u64) / per_iter.max(1) as u64) as usize
}

/// Stage-1 and Stage-2 settings for `kind`.
///
/// The increased-complexity variants (`GaElitist`, `Pso10`) always use their
/// tabulated sizes; the others follow `mode`.
pub fn comparator_params(
    kind: Metaheuristic,
    mode: BudgetMode,
    hs1: &HsParams,
    hs2: &HsParams,
    num_aps: usize,
) -> (StageParams, StageParams) {
    let e1 = hs1.stage1_evaluations();
    let e2 = hs2.stage2_evaluations(num_aps);
    let (p1, p2) = (hs1.hm_size, hs2.hm_size);
    let matched = mode == BudgetMode::MatchedEvaluations;
    match kind {
        Metaheuristic::Ga => {
            let (g1, g2) = if matched { (fit(e1, p1, 1), fit(e2, p2, 1)) } else { (30, 80) };
            (
                StageParams::Ga(GaParams::steady_state(p1, g1)),
                StageParams::Ga(GaParams::steady_state(p2, g2)),
            )
        }
        Metaheuristic::GaElitist => (
            StageParams::Ga(GaParams::elitist(10, 30)),
            StageParams::Ga(GaParams::elitist(5, 80)),
        ),
        Metaheuristic::Pso => {
            let (i1, i2) = if matched { (fit(e1, p1, p1), fit(e2, p2, p2)) } else { (3, 16) };
            (
                StageParams::Pso(PsoParams::standard(p1, i1)),
                StageParams::Pso(PsoParams::standard(p2, i2)),
            )
        }
        Metaheuristic::Pso10 => (
            StageParams::Pso(PsoParams::standard(10, 30)),
            StageParams::Pso(PsoParams::standard(5, 160)),
        ),
        Metaheuristic::Sa => {
            let (i1, i2) = if matched { (fit(e1, 1, 1), fit(e2, 1, 1)) } else { (40, 100) };
            (
                StageParams::Sa(SaParams::geometric(i1)),
                StageParams::Sa(SaParams::geometric(i2)),
            )
        }
    }
}

fn run_stage<F>(
    params: &StageParams,
    space: &SearchSpace,
    incumbent: Vec<u32>,
    rng: &mut SimRng,
    probe: &dyn Fn(&[u32]) -> Result<f64>,
    score: F,
) -> Result<VectorOutcome>
where
    F: FnMut(&[u32]) -> Result<f64>,
{
    match params {
        StageParams::Ga(p) => ga_search(space, p, Some(incumbent), rng, score),
        StageParams::Pso(p) => pso_search(space, p, Some(incumbent), rng, score),
        StageParams::Sa(p) => {
            let t0 = match p.initial_temperature {
                Some(t) => t,
                None => calibrate_temperature(space, &incumbent, p, rng, probe)?,
            };
            sa_search(space, p, t0, incumbent, rng, score)
        }
    }
}

/// Two-stage comparator run mirroring the HS hierarchy: an AP-level search
/// seeded with the equal split, then a search over the full matrix with
/// per-AP budgets `K · b_m`, seeded with the uniform expansion of the Stage-1
/// result. Temperature probes (SA) are not charged to `eval`.
pub fn run_metaheuristic(
    eval: &mut Evaluator,
    stage1: &StageParams,
    stage2: &StageParams,
    rng: &mut SimRng,
) -> Result<HierarchicalOutcome> {
    let problem = *eval.problem();
    let (m, k) = (problem.num_aps(), problem.num_ues());

    let start = eval.evaluations();
    let space1 = stage1_space(&problem);
    let probe1 = |v: &[u32]| problem.report(&BitAllocation::from_ap_bits(v, k)).map(|r| r.value());
    let mut s1 = run_stage(stage1, &space1, equal_ap_bits(&problem), rng, &probe1, |v| {
        eval.evaluate(&BitAllocation::from_ap_bits(v, k))
    })?;
    s1.evaluations = eval.evaluations() - start;

    let start = eval.evaluations();
    let budgets: Vec<u32> = s1.best.iter().map(|&b| k as u32 * b).collect();
    let space2 = SearchSpace::grouped(k, &budgets, problem.profile.max_bits());
    let decode = |v: &[u32]| BitAllocation::from_flat(m, k, v.to_vec()).expect("dimension matches");
    let probe2 = |v: &[u32]| problem.report(&decode(v)).map(|r| r.value());
    let seed = BitAllocation::from_ap_bits(&s1.best, k).as_flat().to_vec();
    let s2 = run_stage(stage2, &space2, seed, rng, &probe2, |v| eval.evaluate(&decode(v)))?;
    if !space2.is_feasible(&s2.best) {
        return Err(Error::Infeasible("comparator returned an infeasible vector".into()));
    }
    Ok(HierarchicalOutcome {
        stage1: s1,
        stage2: AllocationOutcome {
            allocation: decode(&s2.best),
            best_eval: s2.best_eval,
            trace: s2.trace,
            evaluations: eval.evaluations() - start,
        },
    })
}
