//! Objective evaluation with memoization and exact request accounting.

use std::collections::HashMap;

use crate::allocation::{BitAllocation, Objective};
use crate::channel::{ChannelStatistics, SystemConfig};
use crate::error::Result;
use crate::quantization::QuantizationProfile;
use crate::sinr::{evaluate_allocation, EvaluationReport};

/// Everything an allocator needs to score a candidate.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub stats: &'a ChannelStatistics,
    pub config: &'a SystemConfig,
    pub profile: &'a QuantizationProfile,
    pub objective: Objective,
}

impl<'a> Problem<'a> {
    pub fn new(
        stats: &'a ChannelStatistics,
        config: &'a SystemConfig,
        profile: &'a QuantizationProfile,
        objective: Objective,
    ) -> Self {
        Self {
            stats,
            config,
            profile,
            objective,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.stats.num_aps()
    }

    pub fn num_ues(&self) -> usize {
        self.stats.num_ues()
    }

    /// Relaxed per-UE budget of the AP-level search, `floor(b_max / K)`.
    pub fn stage1_budget(&self) -> u32 {
        match self.num_ues() {
            0 => 0,
            k => self.config.bit_budget / k as u32,
        }
    }

    /// `floor(b_max / (M K))`, the equal split.
    pub fn equal_bits(&self) -> u32 {
        match self.num_aps() * self.num_ues() {
            0 => 0,
            mk => (self.config.bit_budget / mk as u32).min(self.profile.max_bits()),
        }
    }

    pub fn report(&self, bits: &BitAllocation) -> Result<EvaluationReport> {
        evaluate_allocation(bits, self.stats, self.config, self.profile, self.objective)
    }

    pub fn with_objective(self, objective: Objective) -> Self {
        Self { objective, ..self }
    }
}

/// Memoizing objective oracle.
///
/// Every call to [`Evaluator::evaluate`] counts as one evaluation, cached or
/// not, so that reported counts follow the algorithm description rather than
/// the cache hit rate.
#[derive(Debug)]
pub struct Evaluator<'a> {
    problem: Problem<'a>,
    cache: HashMap<BitAllocation, f64>,
    requests: u64,
    log: Option<Vec<BitAllocation>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: Problem<'a>) -> Self {
        Self {
            problem,
            cache: HashMap::new(),
            requests: 0,
            log: None,
        }
    }

    /// Also remember every requested allocation, in order.
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn problem(&self) -> &Problem<'a> {
        &self.problem
    }

    pub fn evaluate(&mut self, bits: &BitAllocation) -> Result<f64> {
        self.requests += 1;
        if let Some(log) = self.log.as_mut() {
            log.push(bits.clone());
        }
        if let Some(&v) = self.cache.get(bits) {
            return Ok(v);
        }
        let v = self.problem.report(bits)?.value();
        self.cache.insert(bits.clone(), v);
        Ok(v)
    }

    pub fn evaluations(&self) -> u64 {
        self.requests
    }

    pub fn distinct_evaluations(&self) -> usize {
        self.cache.len()
    }

    pub fn log(&self) -> Option<&[BitAllocation]> {
        self.log.as_deref()
    }
}
