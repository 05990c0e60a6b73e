//! Run configuration: TOML with nested sections, full validation with
//! all errors collected, dotted-path overrides, and a canonical emitter
//! such that parse(emit(cfg)) == cfg.

use serde::{Deserialize, Serialize};

use pohozaev::problems::{
    GridKind, GridTemplate, NonlinearitySpec, ProblemFamily, ProblemInstance,
};
use pohozaev::SolverOptions;

/// Errors from reading a configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// One entry per violated constraint; parsing collects all of them.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the CLI subcommand when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// "classical", "fractional" or "anisotropic".
    pub family: String,
    pub dimension: usize,
    /// Fractional orders s₁ ≤ … ≤ sₙ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    /// Anisotropic exponents p₁ ≤ … ≤ p_N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    pub nonlinearity: NonlinearityConfig,
}

/// Either a named builtin ("cubic", "power(q)", "cubic-jump(a,h)") or a
/// piecewise-polynomial table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NonlinearityConfig {
    Named(String),
    Table {
        breakpoints: Vec<f64>,
        pieces: Vec<Vec<f64>>,
        tau: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// "radial" or "box".
    pub kind: String,
    pub extent: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub step_initial: f64,
    pub backtrack_factor: f64,
    pub sufficient_decrease: f64,
    pub tol_energy: f64,
    pub tol_el: f64,
    pub tol_k: f64,
    pub symmetrize_every: usize,
    /// Mollification widths for discontinuous nonlinearities.
    pub eps_schedule: Vec<f64>,
    /// Residual tolerance of the differential-inclusion check.
    pub inclusion_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            max_iters: d.max_iters,
            step_initial: d.step_initial,
            backtrack_factor: d.backtrack_factor,
            sufficient_decrease: d.sufficient_decrease,
            tol_energy: d.tol_energy,
            tol_el: d.tol_el,
            tol_k: d.tol_k,
            symmetrize_every: d.symmetrize_every,
            eps_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4],
            inclusion_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    /// Stored profile (grid-function CSV); the plateau guess when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_points")]
    pub points: usize,
}

fn default_t_min() -> f64 {
    1e-2
}
fn default_t_max() -> f64 {
    1e2
}
fn default_t_points() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Dotted path of the swept key, e.g. "problem.s" or "grid.points".
    pub parameter: String,
    pub values: Vec<toml::Value>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_parallelism() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "run".into(),
            formats: vec!["report".into(), "csv".into()],
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut column = 1;
    for (i, c) in text.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    (line, column)
}

/// Parse and fully validate; validation reports every violated range,
/// not just the first.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let offset = e.span().map(|s| s.start).unwrap_or(0);
        let (line, column) = line_column(text, offset);
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let errors = validate(&cfg);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(errors))
    }
}

/// Canonical emitter; `parse_config(emit_config(cfg))` reproduces `cfg`.
pub fn emit_config(cfg: &RunConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}

/// Apply a dotted-path override like `solver.tol_el=1e-8` to a raw TOML
/// document before parsing.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (path, value) = assignment.split_once('=').ok_or_else(|| {
        ConfigError::Validation(vec![format!(
            "override `{assignment}` is not of the form path=value"
        )])
    })?;
    let parsed: toml::Value = format!("v = {value}")
        .parse::<toml::Table>()
        .map_err(|e| {
            ConfigError::Validation(vec![format!(
                "override value `{value}` is not valid TOML: {e}"
            )])
        })?
        .remove("v")
        .expect("just inserted");
    let mut cursor = doc;
    let parts: Vec<&str> = path.trim().split('.').collect();
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                ConfigError::Validation(vec![format!(
                    "override path `{path}` crosses the non-table key `{part}`"
                )])
            })?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

fn validate(cfg: &RunConfig) -> Vec<String> {
    let mut errors = Vec::new();

    if let Some(cmd) = &cfg.command {
        if !matches!(cmd.as_str(), "solve" | "fiber" | "check-hypotheses" | "sweep") {
            errors.push(format!("unknown command `{cmd}`"));
        }
    }
    match cfg.problem.family.as_str() {
        "classical" => {}
        "fractional" => {
            if cfg.problem.s.is_none() {
                errors.push("fractional problems need problem.s".into());
            }
        }
        "anisotropic" => {
            if cfg.problem.p.is_none() {
                errors.push("anisotropic problems need problem.p".into());
            }
        }
        other => errors.push(format!(
            "unknown family `{other}` (expected classical, fractional or anisotropic)"
        )),
    }
    match cfg.grid.kind.as_str() {
        "radial" | "box" => {}
        other => errors.push(format!("unknown grid kind `{other}`")),
    }
    if !(cfg.grid.extent > 0.0) {
        errors.push(format!("grid.extent = {} must be positive", cfg.grid.extent));
    }
    if cfg.grid.points < 8 {
        errors.push(format!("grid.points = {} must be at least 8", cfg.grid.points));
    }
    let s = &cfg.solver;
    for (name, v) in [
        ("solver.step_initial", s.step_initial),
        ("solver.sufficient_decrease", s.sufficient_decrease),
        ("solver.tol_energy", s.tol_energy),
        ("solver.tol_el", s.tol_el),
        ("solver.tol_k", s.tol_k),
    ] {
        if !(v > 0.0) {
            errors.push(format!("{name} = {v} must be positive"));
        }
    }
    if !(s.backtrack_factor > 0.0 && s.backtrack_factor < 1.0) {
        errors.push(format!(
            "solver.backtrack_factor = {} must lie in (0, 1)",
            s.backtrack_factor
        ));
    }
    if s.symmetrize_every == 0 {
        errors.push("solver.symmetrize_every must be at least 1".into());
    }
    if let Some(sweep) = &cfg.sweep {
        if sweep.values.is_empty() {
            errors.push("sweep.values is empty".into());
        }
        if sweep.parallelism == 0 {
            errors.push("sweep.parallelism must be at least 1".into());
        }
    }

    // deep admissibility through the problem library when shapes are fine
    if errors.is_empty() {
        match build_instance(cfg) {
            Ok(inst) => {
                if let Err(e) = inst.validate() {
                    errors.push(e.to_string());
                }
            }
            Err(msgs) => errors.extend(msgs),
        }
    }
    errors
}

/// Materialize the nonlinearity described by the config.
pub fn build_nonlinearity(cfg: &NonlinearityConfig) -> Result<NonlinearitySpec, Vec<String>> {
    match cfg {
        NonlinearityConfig::Named(name) => parse_named_nonlinearity(name),
        NonlinearityConfig::Table { breakpoints, pieces, tau } => {
            NonlinearitySpec::piecewise_poly(breakpoints.clone(), pieces.clone(), *tau)
                .map_err(|e| vec![e.to_string()])
        }
    }
}

fn parse_named_nonlinearity(name: &str) -> Result<NonlinearitySpec, Vec<String>> {
    let name = name.trim();
    if name == "cubic" {
        return Ok(NonlinearitySpec::cubic());
    }
    if let Some(args) = name.strip_prefix("power(").and_then(|r| r.strip_suffix(')')) {
        let q: f64 = args
            .trim()
            .parse()
            .map_err(|_| vec![format!("power argument `{args}` is not a number")])?;
        if !(q > 1.0) {
            return Err(vec![format!("power exponent q = {q} must exceed 1")]);
        }
        return Ok(NonlinearitySpec::power(q));
    }
    if let Some(args) = name.strip_prefix("cubic-jump(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 2 {
            return Err(vec![format!("cubic-jump needs two arguments, got `{args}`")]);
        }
        let a: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| vec![format!("jump point `{}` is not a number", parts[0])])?;
        let h: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| vec![format!("jump height `{}` is not a number", parts[1])])?;
        if !(a > 0.0 && h > 0.0) {
            return Err(vec![format!(
                "cubic-jump needs a > 0 and h > 0, got a = {a}, h = {h}"
            )]);
        }
        return Ok(NonlinearitySpec::cubic_jump(a, h));
    }
    Err(vec![format!(
        "unknown nonlinearity `{name}` (expected cubic, power(q), cubic-jump(a,h) or a table)"
    )])
}

/// Build the problem instance described by the config.
pub fn build_instance(cfg: &RunConfig) -> Result<ProblemInstance, Vec<String>> {
    let nonlinearity = build_nonlinearity(&cfg.problem.nonlinearity)?;
    let family = match cfg.problem.family.as_str() {
        "classical" => ProblemFamily::Classical { dim: cfg.problem.dimension },
        "fractional" => ProblemFamily::FractionalSum {
            s: cfg.problem.s.clone().unwrap_or_default(),
            dim: cfg.problem.dimension,
        },
        "anisotropic" => ProblemFamily::Anisotropic {
            p: cfg.problem.p.clone().unwrap_or_default(),
            dim: cfg.problem.dimension,
        },
        other => return Err(vec![format!("unknown family `{other}`")]),
    };
    let kind = match cfg.grid.kind.as_str() {
        "radial" => GridKind::Radial,
        "box" => GridKind::Box,
        other => return Err(vec![format!("unknown grid kind `{other}`")]),
    };
    Ok(ProblemInstance {
        family,
        nonlinearity,
        grid: GridTemplate {
            kind,
            extent: cfg.grid.extent,
            points: cfg.grid.points,
        },
    })
}

/// Solver options carried by the config.
pub fn solver_options(cfg: &RunConfig) -> SolverOptions {
    let s = &cfg.solver;
    SolverOptions {
        max_iters: s.max_iters,
        step_initial: s.step_initial,
        backtrack_factor: s.backtrack_factor,
        sufficient_decrease: s.sufficient_decrease,
        max_backtracks: 40,
        tol_energy: s.tol_energy,
        stall_window: 40,
        tol_el: s.tol_el,
        tol_k: s.tol_k,
        symmetrize_every: s.symmetrize_every,
        seed: cfg.seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
command = "solve"

[problem]
family = "fractional"
dimension = 1
s = [0.3, 0.3]
nonlinearity = "power(2.2)"

[grid]
kind = "box"
extent = 20.0
points = 2048
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.solver.max_iters, SolverOptions::default().max_iters);
        assert_eq!(cfg.output.directory, "run");
        build_instance(&cfg).unwrap();
    }

    #[test]
    fn supercritical_fractional_order_is_rejected() {
        let text = MINIMAL.replace("s = [0.3, 0.3]", "s = [0.6]");
        let err = parse_config(&text).unwrap_err();
        match err {
            ConfigError::Validation(msgs) => {
                assert!(
                    msgs.iter().any(|m| m.contains("N > 2 s_n")),
                    "messages: {msgs:?}"
                );
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error_naming_the_key() {
        let text = MINIMAL.replace("extent = 20.0", "extent = 20.0\nwat = 3");
        let err = parse_config(&text).unwrap_err();
        match err {
            ConfigError::Parse { line, message, .. } => {
                assert!(message.contains("wat"), "{message}");
                assert!(line > 1);
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn validation_collects_multiple_errors() {
        let text = MINIMAL
            .replace("extent = 20.0", "extent = -1.0")
            .replace("points = 2048", "points = 2");
        let err = parse_config(&text).unwrap_err();
        match err {
            ConfigError::Validation(msgs) => assert!(msgs.len() >= 2, "{msgs:?}"),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn emit_parse_roundtrip() {
        let cfg = parse_config(MINIMAL).unwrap();
        let emitted = emit_config(&cfg);
        let back = parse_config(&emitted).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn dotted_override_reaches_nested_scalars() {
        let mut doc: toml::Table = MINIMAL.parse().unwrap();
        apply_override(&mut doc, "solver.tol_el=1e-8").unwrap();
        apply_override(&mut doc, "problem.s=[0.2,0.2]").unwrap();
        let cfg = parse_config(&toml::to_string(&doc).unwrap()).unwrap();
        assert_eq!(cfg.solver.tol_el, 1e-8);
        assert_eq!(cfg.problem.s, Some(vec![0.2, 0.2]));
    }

    #[test]
    fn table_nonlinearity_builds() {
        let text = MINIMAL.replace(
            r#"nonlinearity = "power(2.2)""#,
            "[problem.nonlinearity]\nbreakpoints = []\npieces = [[0.0, 0.0, 1.0]]\ntau = 2.0",
        );
        // a quadratic f keeps q = 2 inside (1, 2*_{s_n} − 1)
        let cfg = parse_config(&text).unwrap();
        let inst = build_instance(&cfg).unwrap();
        assert!((inst.nonlinearity.f(2.0) - 4.0).abs() < 1e-12);
    }
}
