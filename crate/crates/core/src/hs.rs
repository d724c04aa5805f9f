//! Hierarchical harmony search.
//!
//! Stage 1 searches per-AP bit levels shared by all UEs of an AP under the
//! relaxed budget `floor(b_max / K)`. Stage 2 then refines, one AP at a time,
//! how that AP's `K · b_m` bits are split across its UEs while the other APs
//! are held at their current best rows.
//!
//! Initial memories are seeded with an incumbent (the equal split for
//! Stage 1, the current row for Stage 2), so the best evaluation never drops
//! below the seed's.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::BitAllocation;
use crate::error::{Error, Result};
use crate::evaluator::{Evaluator, Problem};
use crate::rng::SimRng;
use crate::search::{SearchSpace, VectorOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsParams {
    pub hm_size: usize,
    /// Harmony memory considering rate `D`.
    pub hmcr: f64,
    pub iterations: usize,
    /// Outer sweeps over the APs (Stage 2 only).
    pub outer_cycles: usize,
    /// Put the incumbent into the initial memory.
    pub seed_incumbent: bool,
}

impl HsParams {
    pub fn stage1_default() -> Self {
        Self {
            hm_size: 10,
            hmcr: 0.9,
            iterations: 30,
            outer_cycles: 1,
            seed_incumbent: true,
        }
    }

    pub fn stage2_default() -> Self {
        Self {
            hm_size: 5,
            hmcr: 0.9,
            iterations: 10,
            outer_cycles: 2,
            seed_incumbent: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hm_size == 0 {
            return Err(Error::InvalidConfig("hm_size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.hmcr) {
            return Err(Error::InvalidConfig(format!("hmcr {} outside [0, 1]", self.hmcr)));
        }
        if self.outer_cycles == 0 {
            return Err(Error::InvalidConfig("outer_cycles must be positive".into()));
        }
        Ok(())
    }

    /// Evaluations spent by one Stage-1 run.
    pub fn stage1_evaluations(&self) -> u64 {
        (self.hm_size + self.iterations) as u64
    }

    /// Evaluations spent by one Stage-2 run on `num_aps` APs.
    pub fn stage2_evaluations(&self, num_aps: usize) -> u64 {
        (self.outer_cycles * num_aps * (self.hm_size + self.iterations)) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmony {
    pub variables: Vec<u32>,
    pub evaluation: f64,
}

/// Rows kept sorted by evaluation, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonyMemory {
    rows: Vec<Harmony>,
}

impl HarmonyMemory {
    /// Stable descending sort of the initial rows.
    pub fn from_rows(mut rows: Vec<Harmony>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidConfig("harmony memory needs at least one row".into()));
        }
        rows.sort_by(|a, b| b.evaluation.total_cmp(&a.evaluation));
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Harmony] {
        &self.rows
    }

    pub fn capacity(&self) -> usize {
        self.rows.len()
    }

    pub fn best(&self) -> &Harmony {
        &self.rows[0]
    }

    pub fn worst(&self) -> &Harmony {
        self.rows.last().expect("memory is non-empty")
    }

    /// Replace the worst row if `new` is strictly better; returns whether it
    /// was admitted. Equal-scored incumbents keep their place.
    pub fn update(&mut self, new: Harmony) -> bool {
        if new.evaluation.is_nan() || new.evaluation <= self.worst().evaluation {
            return false;
        }
        self.rows.pop();
        let pos = self
            .rows
            .iter()
            .position(|h| new.evaluation > h.evaluation)
            .unwrap_or(self.rows.len());
        self.rows.insert(pos, new);
        true
    }

    pub fn is_sorted(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].evaluation >= w[1].evaluation)
    }
}

/// Whether an improvisation drew from memory or from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Memory,
    Random,
}

/// New candidate: with probability `hmcr` each entry is copied from an
/// independently, uniformly chosen memory row; otherwise a fresh sample.
/// Either way the result is repaired.
pub fn improvise<R: Rng + ?Sized>(
    memory: &HarmonyMemory,
    space: &SearchSpace,
    hmcr: f64,
    rng: &mut R,
) -> (Vec<u32>, Branch) {
    let r: f64 = rng.random();
    if r < hmcr {
        let n = memory.capacity();
        let mut v: Vec<u32> = (0..space.dim())
            .map(|i| memory.rows[rng.random_range(0..n)].variables[i])
            .collect();
        space.repair(&mut v, rng);
        (v, Branch::Memory)
    } else {
        (space.sample(rng), Branch::Random)
    }
}

fn init_memory<F>(
    space: &SearchSpace,
    params: &HsParams,
    incumbent: Option<Vec<u32>>,
    rng: &mut SimRng,
    mut score: F,
) -> Result<HarmonyMemory>
where
    F: FnMut(&[u32]) -> Result<f64>,
{
    let mut rows = Vec::with_capacity(params.hm_size);
    let mut seed = incumbent.filter(|_| params.seed_incumbent);
    for _ in 0..params.hm_size {
        let variables = match seed.take() {
            Some(v) => v,
            None => space.sample(rng),
        };
        let evaluation = score(&variables)?;
        rows.push(Harmony {
            variables,
            evaluation,
        });
    }
    HarmonyMemory::from_rows(rows)
}

fn improve<F>(
    memory: &mut HarmonyMemory,
    space: &SearchSpace,
    params: &HsParams,
    rng: &mut SimRng,
    trace: &mut Vec<f64>,
    mut score: F,
) -> Result<()>
where
    F: FnMut(&[u32]) -> Result<f64>,
{
    for _ in 0..params.iterations {
        let (variables, _) = improvise(memory, space, params.hmcr, rng);
        let evaluation = score(&variables)?;
        memory.update(Harmony {
            variables,
            evaluation,
        });
        trace.push(memory.best().evaluation);
    }
    Ok(())
}

/// The AP-level search space: `M` entries under `floor(b_max / K)`.
pub fn stage1_space(problem: &Problem) -> SearchSpace {
    SearchSpace::single(problem.num_aps(), problem.stage1_budget(), problem.profile.max_bits())
}

/// The equal per-AP vector used as Stage-1 incumbent.
pub fn equal_ap_bits(problem: &Problem) -> Vec<u32> {
    vec![problem.equal_bits(); problem.num_aps()]
}

/// Initial Stage-1 memory: the equal split (if seeding) plus random rows,
/// each scored after expanding AP bits to every UE.
pub fn init_stage1_memory(
    eval: &mut Evaluator,
    params: &HsParams,
    rng: &mut SimRng,
) -> Result<HarmonyMemory> {
    params.validate()?;
    let problem = *eval.problem();
    let space = stage1_space(&problem);
    let k = problem.num_ues();
    init_memory(&space, params, Some(equal_ap_bits(&problem)), rng, |v| {
        eval.evaluate(&BitAllocation::from_ap_bits(v, k))
    })
}

/// Stage 1: per-AP bit levels.
pub fn run_stage1(eval: &mut Evaluator, params: &HsParams, rng: &mut SimRng) -> Result<VectorOutcome> {
    let start = eval.evaluations();
    let problem = *eval.problem();
    let space = stage1_space(&problem);
    let k = problem.num_ues();
    let mut memory = init_stage1_memory(eval, params, rng)?;
    let mut trace = vec![memory.best().evaluation];
    improve(&mut memory, &space, params, rng, &mut trace, |v| {
        eval.evaluate(&BitAllocation::from_ap_bits(v, k))
    })?;
    let best = memory.best();
    Ok(VectorOutcome {
        best: best.variables.clone(),
        best_eval: best.evaluation,
        trace,
        evaluations: eval.evaluations() - start,
    })
}

/// Refined allocation with its trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationOutcome {
    pub allocation: BitAllocation,
    pub best_eval: f64,
    pub trace: Vec<f64>,
    pub evaluations: u64,
}

/// Stage 2: per-UE split inside each AP, AP rows swept in order for
/// `outer_cycles` rounds. Each (cycle, AP) builds a fresh memory of `K`-vectors
/// under budget `K · ap_bits[m]`, seeded with the AP's current row.
pub fn run_stage2(
    eval: &mut Evaluator,
    params: &HsParams,
    ap_bits: &[u32],
    rng: &mut SimRng,
) -> Result<AllocationOutcome> {
    params.validate()?;
    let start = eval.evaluations();
    let problem = *eval.problem();
    let (m_count, k) = (problem.num_aps(), problem.num_ues());
    if ap_bits.len() != m_count {
        return Err(Error::Infeasible(format!(
            "{} AP levels for {m_count} APs",
            ap_bits.len()
        )));
    }
    if !stage1_space(&problem).is_feasible(ap_bits) {
        return Err(Error::Infeasible(format!(
            "AP levels {ap_bits:?} violate the AP-level budget {}",
            problem.stage1_budget()
        )));
    }
    let max_bits = problem.profile.max_bits();
    let mut current = BitAllocation::from_ap_bits(ap_bits, k);
    let mut trace = Vec::new();
    let mut best_eval = f64::NEG_INFINITY;

    for _ in 0..params.outer_cycles {
        for (m, &level) in ap_bits.iter().enumerate() {
            let space = SearchSpace::single(k, k as u32 * level, max_bits);
            let mut score = |v: &[u32]| {
                let mut candidate = current.clone();
                candidate.set_row(m, v);
                eval.evaluate(&candidate)
            };
            let mut memory = init_memory(&space, params, Some(current.row(m).to_vec()), rng, &mut score)?;
            trace.push(memory.best().evaluation);
            improve(&mut memory, &space, params, rng, &mut trace, &mut score)?;
            current.set_row(m, &memory.best().variables);
            best_eval = memory.best().evaluation;
        }
    }
    if m_count == 0 {
        best_eval = eval.evaluate(&current)?;
    }
    Ok(AllocationOutcome {
        allocation: current,
        best_eval,
        trace,
        evaluations: eval.evaluations() - start,
    })
}

/// Both stages back to back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalOutcome {
    pub stage1: VectorOutcome,
    pub stage2: AllocationOutcome,
}

pub fn run_hierarchical(
    eval: &mut Evaluator,
    stage1: &HsParams,
    stage2: &HsParams,
    rng: &mut SimRng,
) -> Result<HierarchicalOutcome> {
    let s1 = run_stage1(eval, stage1, rng)?;
    let s2 = run_stage2(eval, stage2, &s1.best, rng)?;
    Ok(HierarchicalOutcome { stage1: s1, stage2: s2 })
}
