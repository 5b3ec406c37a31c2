use std::path::{Path, PathBuf};
use std::time::Instant;

use weingarten::selftest::{run_selftest as core_selftest, SelfTestOptions, SuiteResult};
use weingarten::{
    check_c0, check_positivity, continuation_solve, make_homotopy, newton_solve, snapshot_bounds, validate_assumptions,
    AssumptionReport, BoundsSnapshot, C0Check, Error as CoreError, ScalarField, SolveTrace, Validation,
};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{core_exit_code, exit, CliError};
use crate::output::{export_mesh_obj, parse_rho_csv, rho_csv, summary_toml, trace_csv, write_file, Monitors, Summary};

/// Environment variable overriding the configured output directory.
pub const OUT_ENV: &str = "WEINGARTEN_OUT";

/// Command-line flag, then [`OUT_ENV`], then the config value.
pub fn resolve_output_dir(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output.directory.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub rho: ScalarField,
    pub trace: SolveTrace,
    pub residual_sup: f64,
    pub bounds: BoundsSnapshot,
    pub c0: C0Check,
    pub files: Vec<PathBuf>,
}

struct Written {
    files: Vec<PathBuf>,
}

impl Written {
    fn put(
        &mut self,
        cfg: &RunConfig,
        dir: &Path,
        format: OutputFormat,
        name: &str,
        body: impl FnOnce() -> Result<String, CliError>,
    ) -> Result<(), CliError> {
        if cfg.output.formats.contains(&format) {
            let path = dir.join(name);
            write_file(&path, &body()?)?;
            self.files.push(path);
        }
        Ok(())
    }
}

/// Runs the continuation and writes the configured artifacts into `dir`.
/// A stalled run still writes its partial field, trace and summary before
/// the error is returned.
pub fn run_solve(cfg: &RunConfig, dir: &Path) -> Result<SolveReport, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let p = cfg.params();
    let grid = cfg.build_grid();
    let target = make_homotopy(cfg.expression(), p, cfg.problem.r1, cfg.problem.r2)?;
    let validation = if cfg.validation.override_checks {
        Validation::Override
    } else {
        Validation::Required { samples: cfg.validation.samples }
    };
    let mut written = Written { files: Vec::new() };
    let result = continuation_solve(&target, &grid, &cfg.solver, validation);

    let empty = SolveTrace::default();
    let (rho, trace, residual, status, message) = match &result {
        Ok(sol) => (Some(&sol.rho), &sol.trace, sol.residual_sup, "converged", String::new()),
        Err(e @ CoreError::ContinuationStalled(partial)) => {
            let residual = partial.trace.steps.last().map_or(f64::NAN, |s| s.residual_sup);
            (Some(&partial.rho), &partial.trace, residual, "stalled", format!("{e}: {}", partial.reason))
        }
        Err(e) => (None, &empty, f64::NAN, "failed", e.to_string()),
    };

    let (bounds, c0) = match rho {
        Some(r) => {
            let b = snapshot_bounds(r, &grid, &p)?;
            (Some(b), Some(check_c0(&b, cfg.problem.r1, cfg.problem.r2)))
        }
        None => (None, None),
    };
    let summary = Summary {
        status: status.into(),
        exit_code: result.as_ref().err().map_or(exit::OK, core_exit_code),
        message,
        t_final: trace.steps.last().map_or(0.0, |s| s.t),
        accepted_steps: trace.steps.len(),
        total_newton_iterations: trace.steps.iter().map(|s| s.newton_iters).sum(),
        residual_sup: residual,
        epsilon: target.epsilon,
        monitors: bounds.zip(c0).map(|(b, c)| Monitors {
            c0_pass: c.pass,
            c0_lower_margin: c.lower_margin,
            c0_upper_margin: c.upper_margin,
            positivity_pass: check_positivity(&b),
        }),
        bounds,
    };
    if let Some(r) = rho {
        written.put(cfg, dir, OutputFormat::Rho, "rho.csv", || Ok(rho_csv(r, &grid)))?;
        written.put(cfg, dir, OutputFormat::Mesh, "mesh.obj", || export_mesh_obj(r, &grid))?;
    }
    if !trace.steps.is_empty() {
        written.put(cfg, dir, OutputFormat::Trace, "trace.csv", || Ok(trace_csv(trace)))?;
    }
    written.put(cfg, dir, OutputFormat::Summary, "summary.toml", || Ok(summary_toml(&summary)))?;

    let sol = result?;
    Ok(SolveReport {
        rho: sol.rho,
        trace: sol.trace,
        residual_sup: sol.residual_sup,
        bounds: sol.bounds,
        c0: c0.expect("converged state"),
        files: written.files,
    })
}

pub fn run_validate(cfg: &RunConfig) -> Result<AssumptionReport, CliError> {
    Ok(validate_assumptions(&cfg.expression(), &cfg.params(), cfg.problem.r1, cfg.problem.r2, cfg.validation.samples)?)
}

/// Core property suites, plus a fixed-point check on the configured grid
/// when a config is given.
pub fn run_selftest(cfg: Option<&RunConfig>) -> Result<Vec<SuiteResult>, CliError> {
    let mut results = core_selftest(&SelfTestOptions::default())?;
    if let Some(cfg) = cfg {
        let start = Instant::now();
        let p = cfg.params();
        let grid = cfg.build_grid();
        let outcome = make_homotopy(cfg.expression(), p, cfg.problem.r1, cfg.problem.r2).and_then(|target| {
            let rho0 = weingarten::sample_field(&grid, |t, _| 1.0 + 0.01 * t.cos());
            newton_solve(&rho0, 0.0, &target, &grid, &p, &cfg.solver)
        });
        let (passed, detail) = match outcome {
            Ok((rho, iters)) => {
                let err = rho.values().iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
                (err <= 1e-8, format!("{iters} iterations, error {err:.1e}"))
            }
            Err(e) => (false, e.to_string()),
        };
        results.push(SuiteResult { name: "configured-fixed-point", passed, detail, seconds: start.elapsed().as_secs_f64() });
    }
    Ok(results)
}

pub fn load_rho(cfg: &RunConfig, path: &Path) -> Result<ScalarField, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_rho_csv(&text, &cfg.build_grid())
}

/// Writes `mesh.obj` for a stored field.
pub fn run_export(cfg: &RunConfig, rho_path: &Path, dir: &Path) -> Result<PathBuf, CliError> {
    let rho = load_rho(cfg, rho_path)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("mesh.obj");
    write_file(&path, &export_mesh_obj(&rho, &cfg.build_grid())?)?;
    Ok(path)
}

/// Bounds and monitor verdicts of a stored field.
pub fn run_geometry(cfg: &RunConfig, rho_path: &Path) -> Result<(BoundsSnapshot, C0Check, bool), CliError> {
    let rho = load_rho(cfg, rho_path)?;
    let b = snapshot_bounds(&rho, &cfg.build_grid(), &cfg.params())?;
    Ok((b, check_c0(&b, cfg.problem.r1, cfg.problem.r2), check_positivity(&b)))
}
