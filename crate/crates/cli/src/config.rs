//! Experiment configuration files.
//!
//! A config is a TOML file of flat `key = value` pairs grouped into the
//! sections `[system]`, `[scenario]`, `[sweep]`, `[stage1]` and `[stage2]`.
//! Every key is optional and an empty file yields the `table3` preset.
//! Powers are given in dBm and converted to watts here; nothing downstream
//! sees logarithmic units.
//!
//! ```toml
//! [system]
//! num_ues = 4
//! antennas_per_ap = 16
//! ue_power_dbm = 15
//!
//! [scenario]
//! trials = 20
//! methods = ["equal", "stage1", "hs:maxmin"]
//!
//! [sweep]
//! kind = "num_ues"
//! values = [4, 6, 8]
//! ```

use std::fmt;
use std::ops::Range;
use std::path::Path;

use fronthaul_core::baselines::BudgetMode;
use fronthaul_core::channel::{dbm_to_watts, thermal_noise_power, UeArea};
use fronthaul_core::experiment::{ExperimentSpec, Method, MethodSpec, Sweep};
use fronthaul_core::hs::HsParams;
use fronthaul_core::quantization::QuantizationProfile;
use fronthaul_core::Objective;
use serde::Deserialize;
use toml::Spanned;

/// A config problem, located by line (1-based) where possible.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io {
        path: String,
        message: String,
    },
    Invalid {
        path: String,
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "cannot read {path}: {message}"),
            ConfigError::Invalid {
                path,
                line,
                key,
                message,
            } => {
                write!(f, "{path}")?;
                if let Some(l) = line {
                    write!(f, ":{l}")?;
                }
                if let Some(k) = key {
                    write!(f, ": `{k}`")?;
                }
                write!(f, ": {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    /// Objective for methods listed without an explicit `:objective`.
    pub objective: Option<Objective>,
    /// Replaces `scenario.methods`.
    pub methods: Option<Vec<String>>,
    pub budget_mode: Option<BudgetMode>,
}

type Field<T> = Option<Spanned<T>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    system: RawSystem,
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    stage1: RawStage1,
    #[serde(default)]
    stage2: RawStage2,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    num_aps: Field<usize>,
    num_ues: Field<usize>,
    antennas_per_ap: Field<usize>,
    bit_budget: Field<u32>,
    pilot_length: Field<usize>,
    ue_power_dbm: Field<f64>,
    pilot_power_dbm: Field<f64>,
    /// Overrides the thermal noise computed from bandwidth, temperature and
    /// noise figure.
    noise_power_dbm: Field<f64>,
    bandwidth_hz: Field<f64>,
    carrier_ghz: Field<f64>,
    noise_figure_db: Field<f64>,
    noise_temperature_k: Field<f64>,
    shadowing_std_db: Field<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    preset: Field<String>,
    trials: Field<usize>,
    seed: Field<u64>,
    methods: Field<Vec<String>>,
    objective: Field<String>,
    ap_area_side: Field<f64>,
    ue_area_side: Field<f64>,
    ue_center: Field<[f64; 2]>,
    max_bits: Field<u32>,
    enumeration_cap: Field<u64>,
    budget_mode: Field<String>,
    keep_allocations: Field<bool>,
    keep_traces: Field<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    kind: Field<String>,
    values: Field<Vec<f64>>,
    direction: Field<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage1 {
    hm_size: Field<usize>,
    hmcr: Field<f64>,
    iterations: Field<usize>,
    seed_incumbent: Field<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage2 {
    hm_size: Field<usize>,
    hmcr: Field<f64>,
    iterations: Field<usize>,
    outer_cycles: Field<usize>,
    seed_incumbent: Field<bool>,
}

struct Ctx<'a> {
    path: &'a str,
    text: &'a str,
}

impl Ctx<'_> {
    fn line_of(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn invalid(&self, key: &str, span: Option<Range<usize>>, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            path: self.path.to_string(),
            line: span.map(|s| self.line_of(&s)),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    /// Value of an optional field after `check`, with failures located at the key.
    fn get<T: Clone>(
        &self,
        key: &str,
        field: &Field<T>,
        check: impl Fn(&T) -> Result<(), String>,
    ) -> Result<Option<T>, ConfigError> {
        match field {
            None => Ok(None),
            Some(s) => {
                check(s.get_ref()).map_err(|m| self.invalid(key, Some(s.span()), m))?;
                Ok(Some(s.get_ref().clone()))
            }
        }
    }

    fn span<T>(field: &Field<T>) -> Option<Range<usize>> {
        field.as_ref().map(Spanned::span)
    }
}

fn any<T>(_: &T) -> Result<(), String> {
    Ok(())
}

fn at_least_one(v: &usize) -> Result<(), String> {
    if *v >= 1 {
        Ok(())
    } else {
        Err("must be >= 1".into())
    }
}

fn finite(v: &f64) -> Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("must be finite, got {v}"))
    }
}

fn positive(v: &f64) -> Result<(), String> {
    if v.is_finite() && *v > 0.0 {
        Ok(())
    } else {
        Err(format!("must be finite and > 0, got {v}"))
    }
}

fn non_negative(v: &f64) -> Result<(), String> {
    if v.is_finite() && *v >= 0.0 {
        Ok(())
    } else {
        Err(format!("must be finite and >= 0, got {v}"))
    }
}

fn unit_interval(v: &f64) -> Result<(), String> {
    if (0.0..=1.0).contains(v) {
        Ok(())
    } else {
        Err(format!("must lie in [0, 1], got {v}"))
    }
}

/// `matched` (or `matched_evaluations`) / `tabulated`.
pub fn parse_budget_mode(s: &str) -> Result<BudgetMode, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "matched" | "matched_evaluations" => Ok(BudgetMode::MatchedEvaluations),
        "tabulated" | "table" => Ok(BudgetMode::Tabulated),
        other => Err(format!("unknown budget mode `{other}` (expected matched or tabulated)")),
    }
}

/// `method` or `method:objective`; a bare method takes `default`.
pub fn parse_method(entry: &str, default: Objective) -> Result<MethodSpec, String> {
    let spec = match entry.split_once(':') {
        Some(_) => entry.parse::<MethodSpec>(),
        None => entry.parse::<Method>().map(|m| MethodSpec::new(m, default)),
    };
    spec.map_err(|e| e.to_string())
}

fn integer_values<T: TryFrom<u64>>(values: &[f64], min: u64) -> Result<Vec<T>, String> {
    values
        .iter()
        .map(|&v| {
            if v.fract() != 0.0 || v < min as f64 || v > u32::MAX as f64 {
                return Err(format!("sweep value {v} must be an integer >= {min}"));
            }
            T::try_from(v as u64).map_err(|_| format!("sweep value {v} out of range"))
        })
        .collect()
}

/// Read and parse a config file.
pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<ExperimentSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_str(&text, &path.display().to_string(), overrides)
}

/// Parse config text; `origin` names the source in error messages.
pub fn parse_config_str(text: &str, origin: &str, overrides: &Overrides) -> Result<ExperimentSpec, ConfigError> {
    let ctx = Ctx { path: origin, text };
    let raw: RawFile = toml::from_str(text).map_err(|e| ConfigError::Invalid {
        path: origin.to_string(),
        line: e.span().map(|s| ctx.line_of(&s)),
        key: None,
        message: e.message().trim().to_string(),
    })?;

    let sc = &raw.scenario;
    let mut spec = match ctx.get("preset", &sc.preset, any)?.as_deref() {
        None | Some("table3") => ExperimentSpec::table3(),
        Some("desk") => ExperimentSpec::desk(),
        Some(other) => {
            return Err(ctx.invalid(
                "preset",
                Ctx::span(&sc.preset),
                format!("unknown preset `{other}` (expected table3 or desk)"),
            ))
        }
    };

    apply_system(&ctx, &raw.system, &mut spec)?;
    apply_scenario(&ctx, sc, overrides, &mut spec)?;
    apply_sweep(&ctx, &raw.sweep, &mut spec)?;
    apply_stage(
        &ctx,
        "stage1",
        &mut spec.stage1,
        (&raw.stage1.hm_size, &raw.stage1.hmcr, &raw.stage1.iterations, &None, &raw.stage1.seed_incumbent),
    )?;
    let s2 = &raw.stage2;
    apply_stage(
        &ctx,
        "stage2",
        &mut spec.stage2,
        (&s2.hm_size, &s2.hmcr, &s2.iterations, &s2.outer_cycles, &s2.seed_incumbent),
    )?;

    spec.validate().map_err(|e| ConfigError::Invalid {
        path: origin.to_string(),
        line: None,
        key: None,
        message: e.to_string(),
    })?;
    Ok(spec)
}

fn apply_system(ctx: &Ctx, s: &RawSystem, spec: &mut ExperimentSpec) -> Result<(), ConfigError> {
    let c = &mut spec.config;
    if let Some(v) = ctx.get("num_aps", &s.num_aps, at_least_one)? {
        c.num_aps = v;
    }
    if let Some(v) = ctx.get("num_ues", &s.num_ues, at_least_one)? {
        *c = c.with_num_ues(v);
    }
    if let Some(v) = ctx.get("antennas_per_ap", &s.antennas_per_ap, at_least_one)? {
        c.antennas_per_ap = v;
    }
    if let Some(v) = ctx.get("bit_budget", &s.bit_budget, any)? {
        c.bit_budget = v;
    }
    let k = c.num_ues;
    if let Some(v) = ctx.get("pilot_length", &s.pilot_length, |&t| {
        if t >= k {
            Ok(())
        } else {
            Err(format!("pilot_length ({t}) must be >= num_ues ({k}) for orthogonal pilots"))
        }
    })? {
        c.pilot_length = v;
    }
    if let Some(v) = ctx.get("ue_power_dbm", &s.ue_power_dbm, finite)? {
        c.uplink_power = dbm_to_watts(v);
    }
    if let Some(v) = ctx.get("pilot_power_dbm", &s.pilot_power_dbm, finite)? {
        c.pilot_power = dbm_to_watts(v);
    }
    if let Some(v) = ctx.get("bandwidth_hz", &s.bandwidth_hz, positive)? {
        c.bandwidth_hz = v;
    }
    if let Some(v) = ctx.get("carrier_ghz", &s.carrier_ghz, positive)? {
        c.carrier_freq_hz = v * 1e9;
    }
    if let Some(v) = ctx.get("noise_figure_db", &s.noise_figure_db, finite)? {
        c.noise_figure_db = v;
    }
    if let Some(v) = ctx.get("noise_temperature_k", &s.noise_temperature_k, positive)? {
        c.noise_temperature_k = v;
    }
    if let Some(v) = ctx.get("shadowing_std_db", &s.shadowing_std_db, non_negative)? {
        c.shadowing_std_db = v;
    }
    c.noise_power = match ctx.get("noise_power_dbm", &s.noise_power_dbm, finite)? {
        Some(dbm) => dbm_to_watts(dbm),
        None => thermal_noise_power(c.bandwidth_hz, c.noise_temperature_k, c.noise_figure_db),
    };
    Ok(())
}

fn apply_scenario(ctx: &Ctx, s: &RawScenario, o: &Overrides, spec: &mut ExperimentSpec) -> Result<(), ConfigError> {
    if let Some(v) = ctx.get("trials", &s.trials, at_least_one)? {
        spec.trials = v;
    }
    if let Some(v) = ctx.get("seed", &s.seed, any)? {
        spec.seed = v;
    }
    let file_objective = ctx.get("objective", &s.objective, |v| {
        v.parse::<Objective>().map(|_| ()).map_err(|e| e.to_string())
    })?;
    let objective = o
        .objective
        .or_else(|| file_objective.map(|v| v.parse().expect("checked above")))
        .unwrap_or(Objective::Total);
    let methods = ctx.get("methods", &s.methods, |v| {
        if v.is_empty() {
            return Err("at least one method is required".into());
        }
        v.iter().try_for_each(|m| parse_method(m, objective).map(|_| ()))
    })?;
    match (&o.methods, methods) {
        (Some(list), _) => {
            if list.is_empty() {
                return Err(ctx.invalid("methods", None, "at least one method is required"));
            }
            spec.methods = list
                .iter()
                .map(|m| parse_method(m, objective))
                .collect::<Result<_, _>>()
                .map_err(|e| ctx.invalid("methods", None, e))?;
        }
        (None, Some(list)) => {
            spec.methods = list.iter().map(|m| parse_method(m, objective).expect("checked above")).collect();
        }
        (None, None) => {
            for m in &mut spec.methods {
                m.objective = objective;
            }
        }
    }
    if let Some(v) = ctx.get("ap_area_side", &s.ap_area_side, positive)? {
        spec.ap_area_side = v;
    }
    if let Some(v) = ctx.get("ue_area_side", &s.ue_area_side, positive)? {
        spec.ue_area.side = v;
    }
    if let Some(v) = ctx.get("ue_center", &s.ue_center, |c| {
        if c.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err("coordinates must be finite".into())
        }
    })? {
        spec.ue_area = UeArea {
            side: spec.ue_area.side,
            center: v,
        };
    }
    if let Some(v) = ctx.get("max_bits", &s.max_bits, |&b| {
        QuantizationProfile::with_max_bits(b).map(|_| ()).map_err(|e| e.to_string())
    })? {
        spec.max_bits = v;
    }
    if let Some(v) = ctx.get("enumeration_cap", &s.enumeration_cap, any)? {
        spec.enumeration_cap = u128::from(v);
    }
    if let Some(v) = ctx.get("budget_mode", &s.budget_mode, |m| parse_budget_mode(m).map(|_| ()))? {
        spec.budget_mode = parse_budget_mode(&v).expect("checked above");
    }
    if let Some(v) = ctx.get("keep_allocations", &s.keep_allocations, any)? {
        spec.keep_allocations = v;
    }
    if let Some(v) = ctx.get("keep_traces", &s.keep_traces, any)? {
        spec.keep_traces = v;
    }
    if let Some(v) = o.seed {
        spec.seed = v;
    }
    if let Some(v) = o.trials {
        if v == 0 {
            return Err(ctx.invalid("trials", None, "must be >= 1"));
        }
        spec.trials = v;
    }
    if let Some(v) = o.budget_mode {
        spec.budget_mode = v;
    }
    Ok(())
}

fn apply_sweep(ctx: &Ctx, s: &RawSweep, spec: &mut ExperimentSpec) -> Result<(), ConfigError> {
    let kind = ctx.get("kind", &s.kind, any)?;
    let values = ctx.get("values", &s.values, |v| {
        if v.is_empty() {
            Err("sweep needs at least one value".into())
        } else {
            Ok(())
        }
    })?;
    let direction = ctx.get("direction", &s.direction, |d| {
        if d.iter().all(|x| x.is_finite()) && (d[0] != 0.0 || d[1] != 0.0) {
            Ok(())
        } else {
            Err("direction must be a finite non-zero vector".into())
        }
    })?;
    let kind_span = Ctx::span(&s.kind);
    let values_span = Ctx::span(&s.values);
    let need_values = |name: &str| {
        values.clone().ok_or_else(|| {
            ctx.invalid("values", kind_span.clone(), format!("sweep kind `{name}` needs `values`"))
        })
    };
    let bad_values = |e: String| ctx.invalid("values", values_span.clone(), e);
    spec.sweep = match kind.as_deref() {
        None | Some("none") | Some("single") => {
            if values.is_some() {
                return Err(ctx.invalid("values", values_span.clone(), "`values` given without a sweep `kind`"));
            }
            Sweep::Single
        }
        Some("num_ues") => Sweep::NumUes(integer_values(&need_values("num_ues")?, 1).map_err(bad_values)?),
        Some("num_antennas") => {
            Sweep::NumAntennas(integer_values(&need_values("num_antennas")?, 1).map_err(bad_values)?)
        }
        Some("bit_budget") => Sweep::BitBudget(integer_values(&need_values("bit_budget")?, 0).map_err(bad_values)?),
        Some("displacement") => {
            let distances = need_values("displacement")?;
            if let Some(d) = distances.iter().find(|d| !d.is_finite()) {
                return Err(bad_values(format!("distance {d} must be finite")));
            }
            Sweep::Displacement {
                direction: direction.unwrap_or([1.0, 0.0]),
                distances,
            }
        }
        Some(other) => {
            return Err(ctx.invalid(
                "kind",
                kind_span,
                format!("unknown sweep kind `{other}` (expected none, num_ues, num_antennas, displacement, bit_budget)"),
            ))
        }
    };
    if direction.is_some() && !matches!(spec.sweep, Sweep::Displacement { .. }) {
        return Err(ctx.invalid(
            "direction",
            Ctx::span(&s.direction),
            "`direction` only applies to the displacement sweep",
        ));
    }
    Ok(())
}

type StageFields<'a> = (
    &'a Field<usize>,
    &'a Field<f64>,
    &'a Field<usize>,
    &'a Field<usize>,
    &'a Field<bool>,
);

fn apply_stage(ctx: &Ctx, section: &str, p: &mut HsParams, f: StageFields) -> Result<(), ConfigError> {
    let key = |k: &str| format!("{section}.{k}");
    if let Some(v) = ctx.get(&key("hm_size"), f.0, at_least_one)? {
        p.hm_size = v;
    }
    if let Some(v) = ctx.get(&key("hmcr"), f.1, unit_interval)? {
        p.hmcr = v;
    }
    if let Some(v) = ctx.get(&key("iterations"), f.2, any)? {
        p.iterations = v;
    }
    if let Some(v) = ctx.get(&key("outer_cycles"), f.3, at_least_one)? {
        p.outer_cycles = v;
    }
    if let Some(v) = ctx.get(&key("seed_incumbent"), f.4, any)? {
        p.seed_incumbent = v;
    }
    Ok(())
}
