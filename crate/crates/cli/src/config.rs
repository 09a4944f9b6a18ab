//! Experiment configuration files.

use gbsde::drivers::CatalogEntry;
use gbsde::riskmeasure::Axiom;
use gbsde::solver::{FixedPointInit, Method};
use gbsde::{AssumptionId, SolverConfig, TerminalSpec};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

/// Numbers that may be written as JSON numbers or as decimal strings.
/// Strings are parsed with correct rounding and keep 64-bit integers exact.
fn flex<'de, D, T>(de: D) -> Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    match Value::deserialize(de)? {
        Value::String(s) => s.trim().parse().map_err(|e| D::Error::custom(format!("invalid decimal string {s:?}: {e}"))),
        Value::Number(n) => n.to_string().parse().map_err(|e| D::Error::custom(format!("invalid number {n}: {e}"))),
        other => Err(D::Error::custom(format!("expected a number or decimal string, found {other}"))),
    }
}

fn flex_opt<'de, D, T>(de: D) -> Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    flex(de).map(Some)
}

fn flex_vec<'de, D>(de: D) -> Result<Vec<f64>, D::Error>
where
    D: Deserializer<'de>,
{
    Vec::<Value>::deserialize(de)?
        .into_iter()
        .map(|v| flex::<_, f64>(v).map_err(D::Error::custom))
        .collect()
}

/// A catalog name such as `"gamma_norm"` (default parameters) or a full entry object.
fn driver_ref<'de, D>(de: D) -> Result<CatalogEntry, D::Error>
where
    D: Deserializer<'de>,
{
    match Value::deserialize(de)? {
        Value::String(name) => CatalogEntry::defaults()
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| D::Error::custom(format!("unknown catalog driver {name:?}"))),
        v => CatalogEntry::deserialize(numeric_strings(v)).map_err(D::Error::custom),
    }
}

/// Driver parameters live in core types that take plain numbers; decimal strings
/// are converted here so a driver object accepts the same spellings as the rest of the config.
fn numeric_strings(v: Value) -> Value {
    match v {
        Value::String(s) => match s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).and_then(serde_json::Number::from_f64) {
            Some(n) => Value::Number(n),
            None => Value::String(s),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(numeric_strings).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, numeric_strings(v))).collect()),
        other => other,
    }
}

/// Solver settings; omitted fields take the library defaults.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default, deserialize_with = "flex_opt")]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub basis_degree: Option<usize>,
    #[serde(default, deserialize_with = "flex_opt")]
    pub positivity_floor: Option<f64>,
    #[serde(default, deserialize_with = "flex_opt")]
    pub damping: Option<f64>,
    #[serde(default, deserialize_with = "flex_opt")]
    pub init_shift: Option<f64>,
}

impl SolverSettings {
    pub fn build(&self, method: Method) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            method,
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            basis_degree: self.basis_degree.unwrap_or(d.basis_degree),
            positivity_floor: self.positivity_floor.unwrap_or(d.positivity_floor),
            damping: self.damping.unwrap_or(d.damping),
            init: self.init_shift.map_or(FixedPointInit::Average, FixedPointInit::Shifted),
        }
    }
}

/// Where a problem is discretized.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Discretization {
    Lattice {
        steps: usize,
    },
    Lsmc {
        steps: usize,
        #[serde(deserialize_with = "flex")]
        paths: usize,
        #[serde(default = "one")]
        dim: usize,
        /// Paths written to the CSV; all paths are used for solving.
        #[serde(default)]
        export_paths: Option<usize>,
    },
}

fn one() -> usize {
    1
}

/// Reference value for convergence tables.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Reference {
    /// `"closed_form"`: the lognormal formula, available for the catalog `z`-only drivers on `exp_wT`.
    Named(String),
    Value(#[serde(deserialize_with = "flex")] f64),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StateScalingSpec {
    pub level: usize,
    pub factor: TerminalSpec,
}

/// Payoffs and parameters for axiom audits.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default)]
    pub payoffs: Vec<TerminalSpec>,
    /// Additional lognormal payoffs `exp(a W + b)` drawn from the config seed.
    #[serde(default)]
    pub random_payoffs: usize,
    #[serde(default)]
    pub pairs: Vec<(TerminalSpec, TerminalSpec)>,
    #[serde(default, deserialize_with = "flex_vec")]
    pub scalars: Vec<f64>,
    #[serde(default)]
    pub state_scalings: Vec<StateScalingSpec>,
    #[serde(default)]
    pub levels: Vec<usize>,
    #[serde(default, deserialize_with = "flex_vec")]
    pub clamp_levels: Vec<f64>,
    #[serde(default, deserialize_with = "flex_opt")]
    pub extra_slack: Option<f64>,
}

/// Moment diagnostic attached to a driver audit.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    pub terminal: TerminalSpec,
    #[serde(deserialize_with = "flex")]
    pub p: f64,
    #[serde(default, deserialize_with = "flex_opt")]
    pub delta: Option<f64>,
    #[serde(deserialize_with = "flex")]
    pub paths: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Solve {
        #[serde(deserialize_with = "driver_ref")]
        driver: CatalogEntry,
        terminal: TerminalSpec,
        discretization: Discretization,
    },
    AuditDriver {
        #[serde(deserialize_with = "driver_ref")]
        driver: CatalogEntry,
        /// Defaults to every assumption that can be sampled pointwise.
        #[serde(default)]
        assumptions: Option<Vec<AssumptionId>>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        moment: Option<MomentSpec>,
    },
    AuditAxioms {
        #[serde(deserialize_with = "driver_ref")]
        driver: CatalogEntry,
        axioms: Vec<Axiom>,
        steps: usize,
        instances: InstanceSpec,
    },
    Convergence {
        #[serde(deserialize_with = "driver_ref")]
        driver: CatalogEntry,
        terminal: TerminalSpec,
        steps: Vec<usize>,
        #[serde(default)]
        reference: Option<Reference>,
    },
    OracleCompare {
        #[serde(deserialize_with = "flex")]
        gamma: f64,
        #[serde(deserialize_with = "flex")]
        ambiguity: f64,
        terminal: TerminalSpec,
        steps: usize,
        #[serde(default = "default_drift_grid")]
        drift_grid: usize,
    },
    Lebesgue {
        #[serde(deserialize_with = "driver_ref")]
        driver: CatalogEntry,
        terminal: TerminalSpec,
        steps: usize,
        #[serde(deserialize_with = "flex_vec")]
        clamp_levels: Vec<f64>,
    },
}

fn default_samples() -> usize {
    1000
}

fn default_drift_grid() -> usize {
    21
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Solve { .. } => "solve",
            Experiment::AuditDriver { .. } => "audit-driver",
            Experiment::AuditAxioms { .. } => "audit-axioms",
            Experiment::Convergence { .. } => "convergence",
            Experiment::OracleCompare { .. } => "oracle-compare",
            Experiment::Lebesgue { .. } => "lebesgue",
        }
    }
}

/// One experiment per file.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub experiment: Experiment,
    #[serde(default = "default_horizon", deserialize_with = "flex")]
    pub horizon: f64,
    #[serde(default, deserialize_with = "flex")]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverSettings,
    /// Relative paths resolve against the output root.
    #[serde(default)]
    pub output_dir: Option<String>,
    /// Audit failures become a non-zero exit status.
    #[serde(default)]
    pub strict: bool,
}

fn default_horizon() -> f64 {
    1.0
}

/// Where a configuration problem sits in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// Line and column (1-based) of the first `"key"` in `source`, or of the first byte.
pub fn locate(source: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    match source.find(&needle) {
        Some(pos) => {
            let before = &source[..pos];
            let line = before.matches('\n').count() + 1;
            let column = pos - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            (line, column)
        }
        None => (1, 1),
    }
}

fn at(source: &str, key: &str, message: impl Into<String>) -> Diagnostic {
    let (line, column) = locate(source, key);
    Diagnostic { line, column, message: message.into() }
}

impl ExperimentConfig {
    /// Parse and validate, reporting problems against lines of `source`.
    pub fn parse(source: &str) -> Result<Self, Vec<Diagnostic>> {
        let cfg: ExperimentConfig = serde_json::from_str(source)
            .map_err(|e| vec![Diagnostic { line: e.line().max(1), column: e.column().max(1), message: e.to_string() }])?;
        let problems = cfg.validate(source);
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(problems)
        }
    }

    fn validate(&self, source: &str) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(at(source, "horizon", format!("horizon must be positive and finite, got {}", self.horizon)));
        }
        if let Err(e) = self.solver.build(Method::Lattice).validate() {
            out.push(at(source, "solver", e.to_string()));
        }
        let steps_ok = |n: usize| (1..=20_000).contains(&n);
        match &self.experiment {
            Experiment::Solve { discretization, .. } => match discretization {
                Discretization::Lattice { steps } if !steps_ok(*steps) => out.push(at(source, "steps", format!("steps must lie in 1..=20000, got {steps}"))),
                Discretization::Lsmc { steps, paths, dim, .. } => {
                    if !steps_ok(*steps) {
                        out.push(at(source, "steps", format!("steps must lie in 1..=20000, got {steps}")));
                    }
                    if *paths < 2 {
                        out.push(at(source, "paths", "paths must be at least 2"));
                    }
                    if *dim == 0 {
                        out.push(at(source, "dim", "dim must be at least 1"));
                    }
                }
                _ => {}
            },
            Experiment::AuditDriver { samples, moment, .. } => {
                if *samples == 0 {
                    out.push(at(source, "samples", "samples must be at least 1"));
                }
                if let Some(m) = moment {
                    if m.paths < 2 {
                        out.push(at(source, "paths", "paths must be at least 2"));
                    }
                }
            }
            Experiment::AuditAxioms { steps, axioms, .. } => {
                if !steps_ok(*steps) {
                    out.push(at(source, "steps", format!("steps must lie in 1..=20000, got {steps}")));
                }
                if axioms.is_empty() {
                    out.push(at(source, "axioms", "list at least one axiom"));
                }
            }
            Experiment::Convergence { steps, reference, .. } => {
                if steps.len() < 2 || steps.iter().any(|n| !steps_ok(*n)) {
                    out.push(at(source, "steps", "convergence needs at least two step counts in 1..=20000"));
                }
                if let Some(Reference::Named(n)) = reference {
                    if n != "closed_form" {
                        out.push(at(source, "reference", format!("unknown reference {n:?}; use \"closed_form\" or a number")));
                    }
                }
            }
            Experiment::OracleCompare { steps, gamma, ambiguity, .. } => {
                if !steps_ok(*steps) {
                    out.push(at(source, "steps", format!("steps must lie in 1..=20000, got {steps}")));
                }
                if !(*gamma > 1.0) {
                    out.push(at(source, "gamma", format!("gamma must exceed 1, got {gamma}")));
                }
                if !(*ambiguity >= 0.0) {
                    out.push(at(source, "ambiguity", format!("ambiguity must be non-negative, got {ambiguity}")));
                }
            }
            Experiment::Lebesgue { steps, clamp_levels, .. } => {
                if !steps_ok(*steps) {
                    out.push(at(source, "steps", format!("steps must lie in 1..=20000, got {steps}")));
                }
                if clamp_levels.is_empty() || clamp_levels.iter().any(|n| !(*n > 1.0)) {
                    out.push(at(source, "clamp_levels", "clamp levels must be non-empty and exceed 1"));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_strings_are_exact() {
        let src = r#"{
  "experiment": {"kind": "solve", "driver": "gamma_norm", "terminal": {"kind": "exp_wT"},
                 "discretization": {"method": "lattice", "steps": 8}},
  "seed": "18446744073709551615",
  "solver": {"tolerance": "1e-13"}
}"#;
        let c = ExperimentConfig::parse(src).unwrap();
        assert_eq!(c.seed, u64::MAX);
        assert_eq!(c.solver.tolerance, Some(1e-13));
        assert!(matches!(c.experiment, Experiment::Solve { driver: CatalogEntry::GammaNorm { gamma }, .. } if gamma == 2.0));
    }

    #[test]
    fn diagnostics_point_at_lines() {
        let src = "{\n  \"experiment\": {\"kind\": \"lebesgue\", \"driver\": \"log_star\",\n    \"terminal\": {\"kind\": \"exp_wT\"},\n    \"steps\": 0, \"clamp_levels\": [2]}\n}";
        let d = ExperimentConfig::parse(src).unwrap_err();
        assert_eq!(d[0].line, 4);
        let typo = "{\n  \"experiment\": {\"kind\": \"solve\"},\n  \"sede\": 1\n}";
        let d = ExperimentConfig::parse(typo).unwrap_err();
        assert_eq!(d.len(), 1);
        assert!(d[0].line >= 2, "{:?}", d[0]);
    }

    #[test]
    fn unknown_driver_name_is_rejected() {
        let src = r#"{"experiment": {"kind": "lebesgue", "driver": "nope", "terminal": {"kind": "exp_wT"}, "steps": 4, "clamp_levels": [2]}}"#;
        let d = ExperimentConfig::parse(src).unwrap_err();
        assert!(d[0].message.contains("unknown catalog driver"));
    }
}
