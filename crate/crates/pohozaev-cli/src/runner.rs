//! Run orchestration: solve / fiber / check-hypotheses / sweep, with all
//! artifacts written under the output directory. Outputs carry no
//! timestamps, so reruns with the same seed are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pohozaev::grid::{read_grid_function, write_grid_function};
use pohozaev::hypotheses::check_instance;
use pohozaev::solver::{DiscontinuousReport, SolveReport};
use pohozaev::variational::{fiber, DilationAction};
use pohozaev::{
    build_family, initial_guess, minimize, solve_discontinuous, Error as CoreError, GridFunction,
};

use crate::config::{build_instance, emit_config, solver_options, RunConfig};

/// Exit codes, one per error class.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NO_CONVERGENCE: i32 = 3;
    pub const NONADMISSIBLE: i32 = 4;
    pub const HYPOTHESIS_FAILURE: i32 = 5;
    pub const IO: i32 = 6;
    pub const OTHER: i32 = 1;
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("hard hypothesis failure:\n{0}")]
    Hypothesis(String),
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(CoreError::NoConvergence { .. }) => exit_code::NO_CONVERGENCE,
            RunError::Core(CoreError::NonadmissibleExponents { .. }) => exit_code::NONADMISSIBLE,
            RunError::Core(_) => exit_code::OTHER,
            RunError::Io { .. } => exit_code::IO,
            RunError::Hypothesis(_) => exit_code::HYPOTHESIS_FAILURE,
            RunError::Config(_) => exit_code::CONFIG,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Output directory: `output.directory`, or rooted under
/// `POHOZAEV_OUTPUT_ROOT` when that is set and the directory is relative.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    let dir = PathBuf::from(&cfg.output.directory);
    if dir.is_absolute() {
        return dir;
    }
    match std::env::var_os("POHOZAEV_OUTPUT_ROOT") {
        Some(root) => PathBuf::from(root).join(dir),
        None => dir,
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), RunError> {
    let mut buf = Vec::new();
    body(&mut buf).map_err(io_err(path))?;
    fs::write(path, buf).map_err(io_err(path))
}

struct Summary {
    rows: Vec<(String, String)>,
}

impl Summary {
    fn new(cfg: &RunConfig, command: &str) -> Self {
        Self {
            rows: vec![
                ("command".into(), command.into()),
                ("seed".into(), cfg.seed.to_string()),
            ],
        }
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.rows.push((key.into(), value.to_string()));
    }

    fn write(&self, dir: &Path) -> Result<(), RunError> {
        let path = dir.join("summary.csv");
        write_file(&path, |w| {
            writeln!(w, "key,value")?;
            for (k, v) in &self.rows {
                writeln!(w, "{k},{v}")?;
            }
            Ok(())
        })
    }
}

/// The effective configuration, canonically emitted for reproduction.
fn write_effective_config(dir: &Path, cfg: &RunConfig) -> Result<(), RunError> {
    write_file(&dir.join("config.toml"), |w| {
        w.write_all(emit_config(cfg).as_bytes())
    })
}

fn write_solution(dir: &Path, u: &GridFunction) -> Result<(), RunError> {
    let path = dir.join("solution.csv");
    write_file(&path, |w| write_grid_function(u, w))
}

fn write_solve_artifacts(dir: &Path, report: &SolveReport) -> Result<(), RunError> {
    write_file(&dir.join("report.txt"), |w| report.write_report(w))?;
    write_solution(dir, &report.u)?;
    write_file(&dir.join("fiber.csv"), |w| report.write_fiber_csv(w))?;
    write_file(&dir.join("energy_trace.csv"), |w| report.write_trace_csv(w))?;
    Ok(())
}

fn solve_summary(summary: &mut Summary, report: &SolveReport) {
    summary.push("problem", &report.problem);
    summary.push("energy", report.energy);
    summary.push("k_residual", report.k_residual);
    summary.push("el_residual", report.el_residual);
    summary.push("iterations", report.iterations);
    summary.push("converged", report.converged());
    summary.push("termination", report.termination);
}

/// `solve <config>`: ground state with report, solution, fiber and trace
/// CSVs. Discontinuous nonlinearities run the mollification schedule and
/// record per-stage violation measures.
pub fn run_solve(cfg: &RunConfig) -> Result<PathBuf, RunError> {
    let dir = output_dir(cfg);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_effective_config(&dir, cfg)?;
    let inst = build_instance(cfg).map_err(crate::config::ConfigError::Validation)?;
    let opts = solver_options(cfg);
    let mut summary = Summary::new(cfg, "solve");

    if inst.nonlinearity.has_jumps() {
        let DiscontinuousReport { stages, report } = solve_discontinuous(
            &inst,
            &cfg.solver.eps_schedule,
            &opts,
            cfg.solver.inclusion_tol,
        )?;
        write_solve_artifacts(&dir, &report)?;
        write_file(&dir.join("stages.csv"), |w| {
            writeln!(w, "eps,energy,el_residual,violation_measure")?;
            for s in &stages {
                writeln!(w, "{},{},{},{}", s.eps, s.energy, s.el_residual, s.violation_measure)?;
            }
            Ok(())
        })?;
        solve_summary(&mut summary, &report);
        if let Some(last) = stages.last() {
            summary.push("violation_measure", last.violation_measure);
        }
        summary.write(&dir)?;
    } else {
        let fam = build_family(&inst)?;
        let grid = inst.build_grid();
        let u0 = initial_guess(&inst, &grid)?;
        match minimize(&inst, &fam, &u0, &opts) {
            Ok(report) => {
                write_solve_artifacts(&dir, &report)?;
                solve_summary(&mut summary, &report);
                summary.write(&dir)?;
            }
            Err(CoreError::NoConvergence {
                iterations,
                energy,
                k_residual,
                el_residual,
                report,
            }) => {
                // best iterate still goes to disk, flagged as partial
                write_solve_artifacts(&dir, &report)?;
                solve_summary(&mut summary, &report);
                summary.push("partial", true);
                summary.write(&dir)?;
                return Err(CoreError::NoConvergence {
                    iterations,
                    energy,
                    k_residual,
                    el_residual,
                    report,
                }
                .into());
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(dir)
}

/// `fiber <config>`: fiber profile of a stored (or plateau) state, with
/// the t* row marked.
pub fn run_fiber(cfg: &RunConfig) -> Result<PathBuf, RunError> {
    let dir = output_dir(cfg);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_effective_config(&dir, cfg)?;
    let inst = build_instance(cfg).map_err(crate::config::ConfigError::Validation)?;
    let fam = build_family(&inst)?;
    let fiber_cfg = cfg.fiber.clone().unwrap_or(crate::config::FiberConfig {
        profile: None,
        t_min: 1e-2,
        t_max: 1e2,
        points: 201,
    });
    let u = match &fiber_cfg.profile {
        Some(path) => {
            let path = Path::new(path);
            let text = fs::read(path).map_err(io_err(path))?;
            read_grid_function(&text[..])?
        }
        None => initial_guess(&inst, &inst.build_grid())?,
    };
    let t_grid: Vec<f64> = (0..fiber_cfg.points)
        .map(|i| {
            let a = fiber_cfg.t_min.ln();
            let b = fiber_cfg.t_max.ln();
            (a + (b - a) * i as f64 / (fiber_cfg.points - 1) as f64).exp()
        })
        .collect();
    let profile = fiber(&fam, &DilationAction, &u, &t_grid)?;

    write_file(&dir.join("fiber.csv"), |w| {
        writeln!(w, "t,h,k,is_t_star")?;
        for ((t, h), k) in profile
            .t_samples
            .iter()
            .zip(&profile.h_values)
            .zip(&profile.k_values)
        {
            writeln!(w, "{t},{h},{k},0")?;
        }
        writeln!(w, "{},{},{},1", profile.t_star, profile.h_star, profile.k_residual)
    })?;
    let mut summary = Summary::new(cfg, "fiber");
    summary.push("problem", inst.description());
    summary.push("t_star", profile.t_star);
    summary.push("h_star", profile.h_star);
    summary.push("k_residual", profile.k_residual);
    summary.write(&dir)?;
    Ok(dir)
}

/// `check-hypotheses <config>`: the sampled checklist; hard failures are
/// an error (nonzero exit), surrogate entries are reported only.
pub fn run_check(cfg: &RunConfig) -> Result<PathBuf, RunError> {
    let dir = output_dir(cfg);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_effective_config(&dir, cfg)?;
    let inst = build_instance(cfg).map_err(crate::config::ConfigError::Validation)?;
    let samples = cfg.check.as_ref().map(|c| c.samples).unwrap_or(50);
    let report = check_instance(&inst, cfg.seed, samples)?;
    write_file(&dir.join("report.txt"), |w| report.write_text(w))?;
    let mut summary = Summary::new(cfg, "check-hypotheses");
    summary.push("problem", inst.description());
    summary.push("entries", report.entries.len());
    summary.push("hard_failures", report.hard_failures().len());
    summary.write(&dir)?;
    if !report.all_hard_pass() {
        let mut text = String::new();
        for e in report.hard_failures() {
            text.push_str(&format!(
                "{} (margin {:e}{})\n",
                e.name,
                e.worst_margin,
                e.witness
                    .as_deref()
                    .map(|w| format!(", witness: {w}"))
                    .unwrap_or_default()
            ));
        }
        return Err(RunError::Hypothesis(text));
    }
    Ok(dir)
}

/// `sweep <config>`: apply each value of the swept parameter, solve, and
/// write a combined table. Entries run as independent tasks bounded by
/// `sweep.parallelism`.
pub fn run_sweep(cfg: &RunConfig, base_doc: &toml::Table) -> Result<PathBuf, RunError> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| crate::config::ConfigError::Validation(vec!["sweep needs a [sweep] section".into()]))?;
    let dir = output_dir(cfg);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_effective_config(&dir, cfg)?;

    // materialize one config per entry
    let mut entries = Vec::new();
    for (idx, value) in sweep.values.iter().enumerate() {
        let mut doc = base_doc.clone();
        let assignment = format!("{}={}", sweep.parameter, value);
        crate::config::apply_override(&mut doc, &assignment)?;
        crate::config::apply_override(
            &mut doc,
            &format!("output.directory='{}'", dir.join(format!("entry-{idx:03}")).display()),
        )?;
        let text = toml::to_string(&doc).expect("document serializes");
        let entry_cfg = crate::config::parse_config(&text)?;
        entries.push((idx, value.clone(), entry_cfg));
    }

    // bounded parallel execution, results gathered in index order
    type SweepOutcome = (usize, toml::Value, Result<PathBuf, RunError>);
    let mut results: Vec<Option<SweepOutcome>> = (0..entries.len()).map(|_| None).collect();
    for chunk in entries.chunks(sweep.parallelism.max(1)) {
        let outs: Vec<SweepOutcome> = std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|(idx, value, entry_cfg)| {
                        scope.spawn(move || (*idx, value.clone(), run_solve(entry_cfg)))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("sweep task")).collect()
            });
        for out in outs {
            let slot = out.0;
            results[slot] = Some(out);
        }
    }

    write_file(&dir.join("sweep.csv"), |w| {
        writeln!(w, "index,value,status,energy,k_residual,el_residual,iterations")?;
        for slot in results.iter() {
            let (idx, value, res) = slot.as_ref().expect("all entries ran");
            match res {
                Ok(entry_dir) => {
                    // read back the entry summary for the combined table
                    let summary =
                        fs::read_to_string(entry_dir.join("summary.csv")).unwrap_or_default();
                    let field = |key: &str| {
                        summary
                            .lines()
                            .find_map(|l| l.strip_prefix(&format!("{key},")))
                            .unwrap_or("")
                            .to_string()
                    };
                    writeln!(
                        w,
                        "{idx},{},ok,{},{},{},{}",
                        toml_value_compact(value),
                        field("energy"),
                        field("k_residual"),
                        field("el_residual"),
                        field("iterations"),
                    )?;
                }
                Err(e) => {
                    writeln!(w, "{idx},{},error({}),,,,", toml_value_compact(value), e.exit_code())?;
                }
            }
        }
        Ok(())
    })?;

    let mut summary = Summary::new(cfg, "sweep");
    summary.push("parameter", &sweep.parameter);
    summary.push("entries", entries.len());
    summary.push(
        "failures",
        results
            .iter()
            .filter(|r| matches!(r, Some((_, _, Err(_)))))
            .count(),
    );
    summary.write(&dir)?;

    // a failed entry fails the sweep after the table is on disk
    for slot in results {
        if let Some((_, _, Err(e))) = slot {
            return Err(e);
        }
    }
    Ok(dir)
}

fn toml_value_compact(v: &toml::Value) -> String {
    v.to_string().replace([' ', ','], ";")
}
