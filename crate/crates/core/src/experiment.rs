//! Scenario construction, paired Monte-Carlo trials and result emission.
//!
//! Every trial draws its UE drop and shadowing from the `scenario` substream
//! keyed by the trial id alone, so all methods (and all sweep points) of a
//! trial see the same randomness. Allocator randomness comes from a
//! substream keyed by trial and method label.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{BitAllocation, Objective};
use crate::baselines::{
    ap_exhaustive, comparator_params, equal_allocation, full_exhaustive, run_metaheuristic, BudgetMode,
    Metaheuristic,
};
use crate::channel::{grid_ap_positions, ChannelStatistics, Geometry, SystemConfig, UeArea};
use crate::error::{Error, Result};
use crate::evaluator::{Evaluator, Problem};
use crate::hs::{equal_ap_bits, run_stage1, run_stage2, HsParams};
use crate::quantization::QuantizationProfile;
use crate::rng::substream;
use crate::search::DEFAULT_ENUMERATION_CAP;

/// Default number of UE drops per sweep point.
pub const DEFAULT_TRIALS: usize = 100;

/// Allocator identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Equal,
    Stage1,
    /// Stage 2 alone, starting from the equal per-AP levels.
    Stage2,
    Stage12,
    ApExhaustive,
    FullExhaustive,
    Meta(Metaheuristic),
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Equal,
        Method::Stage1,
        Method::Stage2,
        Method::Stage12,
        Method::ApExhaustive,
        Method::FullExhaustive,
        Method::Meta(Metaheuristic::Ga),
        Method::Meta(Metaheuristic::GaElitist),
        Method::Meta(Metaheuristic::Pso),
        Method::Meta(Metaheuristic::Pso10),
        Method::Meta(Metaheuristic::Sa),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Equal => "equal",
            Method::Stage1 => "stage1",
            Method::Stage2 => "stage2",
            Method::Stage12 => "stage12",
            Method::ApExhaustive => "ap_exhaustive",
            Method::FullExhaustive => "full_exhaustive",
            Method::Meta(m) => m.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "hs" {
            return Ok(Method::Stage12);
        }
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// A method run under a given objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub objective: Objective,
}

impl MethodSpec {
    pub fn new(method: Method, objective: Objective) -> Self {
        Self { method, objective }
    }

    /// `name` for the total-SE objective, `name:maxmin` otherwise.
    pub fn label(&self) -> String {
        match self.objective {
            Objective::Total => self.method.name().to_string(),
            o => format!("{}:{}", self.method.name(), o.name()),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    /// `method` or `method:objective`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((m, o)) => Ok(Self::new(m.parse()?, o.parse()?)),
            None => Ok(Self::new(s.parse()?, Objective::Total)),
        }
    }
}

/// One-dimensional parameter sweep; every point reuses the same trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    Single,
    NumUes(Vec<usize>),
    NumAntennas(Vec<usize>),
    Displacement { direction: [f64; 2], distances: Vec<f64> },
    BitBudget(Vec<u32>),
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::Single => "none",
            Sweep::NumUes(_) => "num_ues",
            Sweep::NumAntennas(_) => "num_antennas",
            Sweep::Displacement { .. } => "displacement",
            Sweep::BitBudget(_) => "bit_budget",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::Single => vec![0.0],
            Sweep::NumUes(v) | Sweep::NumAntennas(v) => v.iter().map(|&x| x as f64).collect(),
            Sweep::Displacement { distances, .. } => distances.clone(),
            Sweep::BitBudget(v) => v.iter().map(|&x| f64::from(x)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub config: SystemConfig,
    /// Side of the square on whose quarter points the APs sit.
    pub ap_area_side: f64,
    pub ue_area: UeArea,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<MethodSpec>,
    pub stage1: HsParams,
    pub stage2: HsParams,
    pub budget_mode: BudgetMode,
    pub max_bits: u32,
    pub enumeration_cap: u128,
    pub keep_allocations: bool,
    pub keep_traces: bool,
    /// Record wall-clock time per method (makes output run-dependent).
    pub timing: bool,
}

impl ExperimentSpec {
    /// Reference scenario: four APs on a 1 km square, `N = 64`.
    pub fn table3() -> Self {
        Self {
            config: SystemConfig::table3(),
            ap_area_side: 1000.0,
            ue_area: UeArea::centered(1000.0),
            sweep: Sweep::Single,
            trials: DEFAULT_TRIALS,
            seed: 0,
            methods: vec![
                MethodSpec::new(Method::Equal, Objective::Total),
                MethodSpec::new(Method::Stage1, Objective::Total),
                MethodSpec::new(Method::Stage12, Objective::Total),
                MethodSpec::new(Method::ApExhaustive, Objective::Total),
            ],
            stage1: HsParams::stage1_default(),
            stage2: HsParams::stage2_default(),
            budget_mode: BudgetMode::MatchedEvaluations,
            max_bits: crate::quantization::DEFAULT_MAX_BITS,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            keep_allocations: false,
            keep_traces: false,
            timing: false,
        }
    }

    /// The reference scenario shrunk to `N = 16` antennas.
    pub fn desk() -> Self {
        let mut s = Self::table3();
        s.config.antennas_per_ap = 16;
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("at least one method is required".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::InvalidConfig("sweep has no points".into()));
        }
        self.stage1.validate()?;
        self.stage2.validate()?;
        QuantizationProfile::with_max_bits(self.max_bits)?;
        for i in 0..self.sweep.len() {
            self.point_config(i)?.validate()?;
        }
        Ok(())
    }

    /// System configuration at sweep point `i`.
    pub fn point_config(&self, i: usize) -> Result<SystemConfig> {
        let mut c = self.config.clone();
        match &self.sweep {
            Sweep::NumUes(v) => c = c.with_num_ues(v[i]),
            Sweep::NumAntennas(v) => c.antennas_per_ap = v[i],
            Sweep::BitBudget(v) => c.bit_budget = v[i],
            Sweep::Single | Sweep::Displacement { .. } => {}
        }
        Ok(c)
    }

    fn point_area(&self, i: usize) -> UeArea {
        match &self.sweep {
            Sweep::Displacement { direction, distances } => {
                UeArea::displaced(self.ue_area.side, *direction, distances[i])
            }
            _ => self.ue_area,
        }
    }

    /// Channel statistics of trial `trial` at sweep point `i`.
    pub fn statistics(&self, i: usize, trial: usize) -> Result<(SystemConfig, ChannelStatistics)> {
        let config = self.point_config(i)?;
        let mut rng = substream(self.seed, "scenario", &[trial as u64]);
        let ues = self.point_area(i).sample(config.num_ues, &mut rng);
        let geometry = Geometry::new(grid_ap_positions(config.num_aps, self.ap_area_side), ues);
        let stats = ChannelStatistics::from_geometry(&geometry, &config, &mut rng)?;
        Ok((config, stats))
    }
}

/// One method's result on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub total_se: Option<f64>,
    pub min_se: Option<f64>,
    pub eval_count: u64,
    pub wall_ms: f64,
    /// Why the method declined to run (e.g. enumeration too large).
    pub refusal: Option<String>,
    pub allocation: Option<Vec<Vec<u32>>>,
    pub trace: Option<Vec<f64>>,
}

/// What a single allocator run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub allocation: BitAllocation,
    pub evaluations: u64,
    pub trace: Vec<f64>,
}

/// Run one allocator on prepared statistics.
pub fn run_method(
    spec: &MethodSpec,
    problem: &Problem,
    stage1: &HsParams,
    stage2: &HsParams,
    budget_mode: BudgetMode,
    enumeration_cap: u128,
    rng: &mut crate::rng::SimRng,
) -> Result<MethodOutcome> {
    let problem = problem.with_objective(spec.objective);
    let mut eval = Evaluator::new(problem);
    Ok(match spec.method {
        Method::Equal => {
            let allocation = equal_allocation(&problem);
            let v = eval.evaluate(&allocation)?;
            MethodOutcome {
                allocation,
                evaluations: eval.evaluations(),
                trace: vec![v],
            }
        }
        Method::Stage1 => {
            let s1 = run_stage1(&mut eval, stage1, rng)?;
            MethodOutcome {
                allocation: BitAllocation::from_ap_bits(&s1.best, problem.num_ues()),
                evaluations: s1.evaluations,
                trace: s1.trace,
            }
        }
        Method::Stage2 => {
            let s2 = run_stage2(&mut eval, stage2, &equal_ap_bits(&problem), rng)?;
            MethodOutcome {
                allocation: s2.allocation,
                evaluations: s2.evaluations,
                trace: s2.trace,
            }
        }
        Method::Stage12 => {
            let s1 = run_stage1(&mut eval, stage1, rng)?;
            let s2 = run_stage2(&mut eval, stage2, &s1.best, rng)?;
            MethodOutcome {
                allocation: s2.allocation,
                evaluations: s1.evaluations + s2.evaluations,
                trace: s1.trace.into_iter().chain(s2.trace).collect(),
            }
        }
        Method::ApExhaustive => {
            let r = ap_exhaustive(&problem, enumeration_cap)?;
            MethodOutcome {
                allocation: r.allocation,
                evaluations: r.enumerated as u64,
                trace: vec![r.best_eval],
            }
        }
        Method::FullExhaustive => {
            let r = full_exhaustive(&problem, enumeration_cap)?;
            MethodOutcome {
                allocation: r.allocation,
                evaluations: r.enumerated as u64,
                trace: vec![r.best_eval],
            }
        }
        Method::Meta(kind) => {
            let (p1, p2) = comparator_params(kind, budget_mode, stage1, stage2, problem.num_aps());
            let out = run_metaheuristic(&mut eval, &p1, &p2, rng)?;
            MethodOutcome {
                allocation: out.stage2.allocation,
                evaluations: out.stage1.evaluations + out.stage2.evaluations,
                trace: out.stage1.trace.into_iter().chain(out.stage2.trace).collect(),
            }
        }
    })
}

fn run_trial(spec: &ExperimentSpec, point: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let (config, stats) = spec.statistics(point, trial)?;
    let profile = QuantizationProfile::with_max_bits(spec.max_bits)?;
    let sweep_value = spec.sweep.values()[point];
    let problem = Problem::new(&stats, &config, &profile, Objective::Total);
    let mut records = Vec::with_capacity(spec.methods.len());
    for m in &spec.methods {
        let label = m.label();
        let mut rng = substream(spec.seed, &format!("allocator/{label}"), &[trial as u64]);
        let start = Instant::now();
        let outcome = run_method(m, &problem, &spec.stage1, &spec.stage2, spec.budget_mode, spec.enumeration_cap, &mut rng);
        let wall_ms = if spec.timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        let mut rec = TrialRecord {
            trial,
            method: label,
            sweep_name: spec.sweep.name().to_string(),
            sweep_value,
            total_se: None,
            min_se: None,
            eval_count: 0,
            wall_ms,
            refusal: None,
            allocation: None,
            trace: None,
        };
        match outcome {
            Ok(out) => {
                let report = problem.report(&out.allocation)?;
                rec.total_se = Some(report.total_se);
                rec.min_se = Some(report.min_se);
                rec.eval_count = out.evaluations;
                rec.allocation = spec.keep_allocations.then(|| out.allocation.to_rows());
                rec.trace = spec.keep_traces.then_some(out.trace);
            }
            Err(e) => rec.refusal = Some(e.to_string()),
        }
        records.push(rec);
    }
    Ok(records)
}

/// Run every (sweep point, trial) pair in parallel; records come back in
/// point-major, trial, method order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.sweep.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    info!(
        "running {} trials x {} points x {} methods",
        spec.trials,
        spec.sweep.len(),
        spec.methods.len()
    );
    let nested = jobs
        .par_iter()
        .map(|&(p, t)| run_trial(spec, p, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown output format `{other}`"))),
        }
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "trial",
    "method",
    "sweep_name",
    "sweep_value",
    "total_se",
    "min_se",
    "eval_count",
    "wall_ms",
];

fn io_err(path: &Path, e: impl fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write `records` to `path`. CSV carries the fixed summary columns (empty
/// SE fields for refusals); JSON carries everything, verbatim.
pub fn emit_results(records: &[TrialRecord], format: OutputFormat, path: &Path) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
            w.write_record(CSV_HEADER).map_err(|e| io_err(path, e))?;
            for r in records {
                w.write_record([
                    r.trial.to_string(),
                    r.method.clone(),
                    r.sweep_name.clone(),
                    r.sweep_value.to_string(),
                    opt(r.total_se),
                    opt(r.min_se),
                    r.eval_count.to_string(),
                    r.wall_ms.to_string(),
                ])
                .map_err(|e| io_err(path, e))?;
            }
            w.flush().map_err(|e| io_err(path, e))
        }
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(records).map_err(|e| Error::Serialization(e.to_string()))?;
            std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
        }
    }
}

pub fn read_json(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))
}

/// Mean SE of one method at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub sweep_value: f64,
    pub trials: usize,
    pub refusals: usize,
    pub mean_total_se: f64,
    pub mean_min_se: f64,
    pub mean_eval_count: f64,
}

/// Group by (sweep value, method) in first-appearance order.
pub fn summarize(records: &[TrialRecord]) -> Vec<MethodSummary> {
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in records {
        if !keys.iter().any(|(v, m)| *v == r.sweep_value && *m == r.method) {
            keys.push((r.sweep_value, r.method.clone()));
        }
    }
    keys.into_iter()
        .map(|(v, m)| {
            let group: Vec<&TrialRecord> = records.iter().filter(|r| r.sweep_value == v && r.method == m).collect();
            let ok: Vec<&&TrialRecord> = group.iter().filter(|r| r.total_se.is_some()).collect();
            let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            MethodSummary {
                method: m,
                sweep_value: v,
                trials: group.len(),
                refusals: group.len() - ok.len(),
                mean_total_se: mean(&|r| r.total_se.unwrap_or(0.0)),
                mean_min_se: mean(&|r| r.min_se.unwrap_or(0.0)),
                mean_eval_count: mean(&|r| r.eval_count as f64),
            }
        })
        .collect()
}

/// Stage-1 convergence on one instance against the AP exhaustive optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub trace: Vec<f64>,
    pub optimum: f64,
    pub enumerated: u128,
    pub ap_bits: Vec<u32>,
    pub optimal_ap_bits: Vec<u32>,
}

pub fn convergence(spec: &ExperimentSpec, objective: Objective, trial: usize) -> Result<ConvergenceReport> {
    spec.validate()?;
    let (config, stats) = spec.statistics(0, trial)?;
    let profile = QuantizationProfile::with_max_bits(spec.max_bits)?;
    let problem = Problem::new(&stats, &config, &profile, objective);
    let mut rng = substream(spec.seed, "allocator/stage1", &[trial as u64]);
    let mut eval = Evaluator::new(problem);
    let s1 = run_stage1(&mut eval, &spec.stage1, &mut rng)?;
    let ex = ap_exhaustive(&problem, spec.enumeration_cap)?;
    Ok(ConvergenceReport {
        trace: s1.trace,
        optimum: ex.best_eval,
        enumerated: ex.enumerated,
        ap_bits: s1.best,
        optimal_ap_bits: ex.allocation.ap_view().unwrap_or_default(),
    })
}
