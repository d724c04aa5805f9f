use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fronthaul_core::baselines::{equal_allocation, BudgetMode};
use fronthaul_core::evaluator::{Evaluator, Problem};
use fronthaul_core::experiment::{
    convergence, emit_results, run_experiment, summarize, ExperimentSpec, MethodSummary, OutputFormat, TrialRecord,
};
use fronthaul_core::hs::run_hierarchical;
use fronthaul_core::oracle::estimate_all_components;
use fronthaul_core::quantization::QuantizationProfile;
use fronthaul_core::rng::{substream, substream_seed};
use fronthaul_core::sinr::{sinr_components, SinrComponents};
use fronthaul_core::Objective;

use crate::config::{parse_budget_mode, parse_config, Overrides};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "fronthaul", version, about = "Fronthaul bit allocation for uplink cell-free massive MIMO")]
pub struct Cli {
    /// More log output (-v info, -vv debug); RUST_LOG also works.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured experiment and write per-trial records.
    Simulate(SimulateArgs),
    /// Stage-1 convergence trace on one instance against the AP exhaustive optimum.
    Convergence(ConvergenceArgs),
    /// Matched-budget comparison of allocators with paired effect sizes.
    Compare(CompareArgs),
    /// Check the closed-form SINR terms against Monte-Carlo estimates.
    Validate(ValidateArgs),
    /// Print reference tables.
    Table(TableArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file (TOML); the reference preset when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Objective for methods given without `:objective` (total | maxmin).
    #[arg(long)]
    pub objective: Option<Objective>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory; receives `results.csv` or `results.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
    /// Record wall-clock time per method (output is then run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trial (UE drop) to analyse.
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
    /// Write the trace as CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated methods; the first is the reference for paired differences.
    #[arg(long, value_delimiter = ',', default_value = "hs,ga,pso,sa")]
    pub methods: Vec<String>,
    #[arg(long, value_parser = parse_budget_mode)]
    pub budget_mode: Option<BudgetMode>,
    /// Output directory; receives `compare.csv` or `compare.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AllocationChoice {
    Equal,
    Hs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
    /// Tolerance in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub sigmas: f64,
    /// Bits under test: the equal split or a hierarchical-search result.
    #[arg(long, value_enum, default_value_t = AllocationChoice::Hs)]
    pub allocation: AllocationChoice,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Quantization distortion per bit count, with provenance.
    #[arg(long)]
    pub quantizer: bool,
    #[arg(long, default_value_t = fronthaul_core::quantization::DEFAULT_MAX_BITS)]
    pub max_bits: u32,
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match &cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Convergence(a) => convergence_cmd(a, out),
        Command::Compare(a) => compare(a, out),
        Command::Validate(a) => validate(a, out),
        Command::Table(a) => table(a, out),
    }
}

fn load(common: &CommonArgs, methods: Option<Vec<String>>, budget_mode: Option<BudgetMode>) -> Result<ExperimentSpec, CliError> {
    let overrides = Overrides {
        seed: common.seed,
        trials: common.trials,
        objective: common.objective,
        methods,
        budget_mode,
    };
    Ok(match &common.config {
        Some(path) => parse_config(path, &overrides)?,
        None => crate::config::parse_config_str("", "<defaults>", &overrides)?,
    })
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

fn print_summary(out: &mut dyn Write, spec: &ExperimentSpec, rows: &[MethodSummary]) -> Result<(), CliError> {
    writeln!(
        out,
        "{:<22} {:>12} {:>7} {:>8} {:>12} {:>12} {:>10}",
        "method",
        spec.sweep.name(),
        "trials",
        "refused",
        "total_se",
        "min_se",
        "evals"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<22} {:>12} {:>7} {:>8} {:>12.4} {:>12.4} {:>10.1}",
            r.method, r.sweep_value, r.trials, r.refusals, r.mean_total_se, r.mean_min_se, r.mean_eval_count
        )?;
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = load(&a.common, None, None)?;
    spec.timing = a.timing;
    prepare_dir(&a.out)?;
    let records = run_experiment(&spec)?;
    let path = a.out.join(format!("results.{}", extension(a.format)));
    emit_results(&records, a.format, &path)?;
    print_summary(out, &spec, &summarize(&records))?;
    writeln!(out, "wrote {} records to {}", records.len(), path.display())?;
    Ok(())
}

fn convergence_cmd(a: &ConvergenceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = load(&a.common, None, None)?;
    let objective = a.common.objective.unwrap_or(Objective::Total);
    let r = convergence(&spec, objective, a.trial)?;
    let mut csv = String::from("iteration,best_eval,optimum,gap_percent\n");
    for (i, v) in r.trace.iter().enumerate() {
        let gap = if r.optimum > 0.0 { 100.0 * (r.optimum - v) / r.optimum } else { 0.0 };
        csv.push_str(&format!("{i},{v},{},{gap}\n", r.optimum));
    }
    match &a.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                prepare_dir(parent)?;
            }
            std::fs::write(path, &csv).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        }
        None => write!(out, "{csv}")?,
    }
    let last = r.trace.last().copied().unwrap_or(f64::NAN);
    writeln!(
        out,
        "stage-1 best {last:.6} ({:?}) vs AP exhaustive {:.6} ({:?}, {} vectors), gap {:.3}%",
        r.ap_bits,
        r.optimum,
        r.optimal_ap_bits,
        r.enumerated,
        if r.optimum > 0.0 { 100.0 * (r.optimum - last) / r.optimum } else { 0.0 }
    )?;
    Ok(())
}

/// Mean and Cohen's d of paired differences.
fn paired_effect(d: &[f64]) -> (f64, f64) {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    if d.len() < 2 {
        return (mean, f64::NAN);
    }
    let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    (mean, if sd > 0.0 { mean / sd } else { 0.0 })
}

fn paired(records: &[TrialRecord], reference: &str, other: &str, objective: Objective) -> Vec<f64> {
    let value = |r: &TrialRecord| match objective {
        Objective::Total => r.total_se,
        Objective::MaxMin => r.min_se,
    };
    records
        .iter()
        .filter(|r| r.method == reference)
        .filter_map(|r| {
            let twin = records
                .iter()
                .find(|x| x.method == other && x.trial == r.trial && x.sweep_value == r.sweep_value)?;
            Some(value(r)? - value(twin)?)
        })
        .collect()
}

fn compare(a: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = load(&a.common, Some(a.methods.clone()), a.budget_mode)?;
    let records = run_experiment(&spec)?;
    if let Some(dir) = &a.out {
        prepare_dir(dir)?;
        let path = dir.join(format!("compare.{}", extension(a.format)));
        emit_results(&records, a.format, &path)?;
        writeln!(out, "wrote {} records to {}", records.len(), path.display())?;
    }
    print_summary(out, &spec, &summarize(&records))?;
    let reference = spec.methods[0];
    let label = reference.label();
    for m in &spec.methods[1..] {
        let d = paired(&records, &label, &m.label(), reference.objective);
        if d.is_empty() {
            continue;
        }
        let (mean, effect) = paired_effect(&d);
        let wins = d.iter().filter(|&&x| x > 0.0).count();
        writeln!(
            out,
            "{label} - {}: mean {:+.4} ({}), d = {effect:.2}, ahead on {wins}/{} trials",
            m.label(),
            mean,
            reference.objective.name(),
            d.len()
        )?;
    }
    Ok(())
}

fn validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = load(&a.common, None, None)?;
    let (config, stats) = spec.statistics(0, a.trial)?;
    let profile = QuantizationProfile::with_max_bits(spec.max_bits)?;
    let problem = Problem::new(&stats, &config, &profile, a.common.objective.unwrap_or(Objective::Total));
    let bits = match a.allocation {
        AllocationChoice::Equal => equal_allocation(&problem),
        AllocationChoice::Hs => {
            let mut rng = substream(spec.seed, "allocator/stage12", &[a.trial as u64]);
            run_hierarchical(&mut Evaluator::new(problem), &spec.stage1, &spec.stage2, &mut rng)?
                .stage2
                .allocation
        }
    };
    let report = problem.report(&bits)?;
    let seed = substream_seed(spec.seed, "oracle", &[a.trial as u64]);
    let estimates = estimate_all_components(&stats, &bits, &report.filters, &config, &profile, a.samples, seed)?;
    writeln!(out, "allocation {bits}")?;
    writeln!(
        out,
        "{:>3} {:<24} {:>14} {:>14} {:>12} {:>7}",
        "ue", "term", "closed_form", "estimate", "std_error", "z"
    )?;
    let (mut total, mut failed) = (0, 0);
    for (k, est) in estimates.iter().enumerate() {
        let closed: SinrComponents = sinr_components(k, &stats, &bits, &report.filters[k], &config, &profile)?;
        for c in est.checks(&closed) {
            let ok = c.within(a.sigmas);
            total += 1;
            failed += usize::from(!ok);
            writeln!(
                out,
                "{k:>3} {:<24} {:>14.6e} {:>14.6e} {:>12.3e} {:>7.2}{}",
                c.name,
                c.closed_form,
                c.estimate,
                c.std_error,
                c.z_score(),
                if ok { "" } else { "  FAIL" }
            )?;
        }
    }
    writeln!(out, "{} of {total} checks within {}σ ({} samples)", total - failed, a.sigmas, a.samples)?;
    if failed > 0 {
        return Err(CliError::Validation(format!("{failed} of {total} checks outside {}σ", a.sigmas)));
    }
    Ok(())
}

fn table(a: &TableArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !a.quantizer {
        return Err(CliError::Usage("nothing to print; pass --quantizer".into()));
    }
    let profile = QuantizationProfile::with_max_bits(a.max_bits)?;
    writeln!(out, "{:>4} {:>22} {:>22}  source", "bits", "rho", "gain")?;
    for (b, rho, gain, source) in profile.rows() {
        writeln!(out, "{b:>4} {rho:>22.15e} {gain:>22.15}  {}", source.describe())?;
    }
    Ok(())
}
