//! Run configuration, read from TOML.
//!
//! ```toml
//! [problem]
//! n = 3
//! k = 2
//! l = 0
//! f = "12 * rho^(-3) * (1 + 0.2*x1/rho)"
//! r1 = 0.5
//! r2 = 2.0
//!
//! [grid]
//! mode = "axisym"     # or "s2" (requires n = 2)
//! nodes = 129         # axisym
//! n_theta = 32        # s2
//! n_phi = 64          # s2
//!
//! [solver]            # any SolverConfig field
//! dt_init = 0.1
//!
//! [validation]
//! samples = 1000
//! override = false
//!
//! [output]
//! directory = "out"
//! formats = ["rho", "trace", "summary"]
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Spanned;
use weingarten::{parse_f, FExpr, Grid, QuotientParams, SolverConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    Axisym,
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Rho,
    Trace,
    Summary,
    Mesh,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemConfig {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub f: String,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub mode: GridMode,
    pub nodes: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationConfig {
    pub samples: usize,
    #[serde(rename = "override")]
    pub override_checks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub validation: ValidationConfig,
    pub output: OutputConfig,
}

pub const DEFAULT_AXISYM_NODES: usize = 129;
pub const DEFAULT_S2: (usize, usize) = (32, 64);
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Spanned<RawProblem>,
    #[serde(default)]
    grid: Option<Spanned<RawGrid>>,
    #[serde(default)]
    solver: Option<Spanned<toml::Table>>,
    #[serde(default)]
    validation: Option<RawValidation>,
    #[serde(default)]
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    n: Spanned<usize>,
    k: Spanned<usize>,
    l: Spanned<usize>,
    f: Spanned<String>,
    r1: Spanned<f64>,
    r2: Spanned<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    mode: Option<GridMode>,
    nodes: Option<usize>,
    n_theta: Option<usize>,
    n_phi: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidation {
    samples: Option<usize>,
    #[serde(rename = "override")]
    override_checks: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    formats: Option<Vec<OutputFormat>>,
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, key: &str, span: Range<usize>, msg: impl Into<String>) -> CliError {
        CliError::Config { key: key.into(), line: Some(line_of(self.text, span)), msg: msg.into() }
    }
}

/// Parses configuration text and fills in defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config {
        key: String::new(),
        line: e.span().map(|s| line_of(text, s)),
        msg: e.message().to_string(),
    })?;
    let ctx = Ctx { text };

    let prob = raw.problem.get_ref();
    let (n, k, l) = (*prob.n.get_ref(), *prob.k.get_ref(), *prob.l.get_ref());
    if let Err(e) = QuotientParams::new(n, k, l) {
        let (key, span) = if n < 2 || k > n {
            ("problem.n", prob.n.span())
        } else if k < 2 {
            ("problem.k", prob.k.span())
        } else {
            ("problem.l", prob.l.span())
        };
        return Err(ctx.err(key, span, e.to_string()));
    }
    let (r1, r2) = (*prob.r1.get_ref(), *prob.r2.get_ref());
    if !(r1 > 0.0 && r1 < 1.0) {
        return Err(ctx.err("problem.r1", prob.r1.span(), format!("need 0 < r1 < 1, got {r1}")));
    }
    if !(r2 > 1.0 && r2.is_finite()) {
        return Err(ctx.err("problem.r2", prob.r2.span(), format!("need r2 > 1, got {r2}")));
    }
    let f = prob.f.get_ref().clone();
    if let Err(e) = parse_f(&f, n + 1) {
        return Err(ctx.err("problem.f", prob.f.span(), e.to_string()));
    }
    let problem = ProblemConfig { n, k, l, f, r1, r2 };

    let grid = match &raw.grid {
        None => GridConfig {
            mode: GridMode::Axisym,
            nodes: DEFAULT_AXISYM_NODES,
            n_theta: DEFAULT_S2.0,
            n_phi: DEFAULT_S2.1,
        },
        Some(g) => {
            let r = g.get_ref();
            let cfg = GridConfig {
                mode: r.mode.unwrap_or(GridMode::Axisym),
                nodes: r.nodes.unwrap_or(DEFAULT_AXISYM_NODES),
                n_theta: r.n_theta.unwrap_or(DEFAULT_S2.0),
                n_phi: r.n_phi.unwrap_or(DEFAULT_S2.1),
            };
            if cfg.mode == GridMode::S2 && n != 2 {
                return Err(ctx.err("grid.mode", g.span(), format!("s2 grids represent S^2, but n = {n}")));
            }
            cfg
        }
    };
    if let Err(e) = build_grid_from(&grid, n) {
        let span = raw.grid.as_ref().map_or(0..0, |g| g.span());
        return Err(ctx.err("grid", span, e.to_string()));
    }

    let base = match grid.mode {
        GridMode::Axisym => SolverConfig::default(),
        GridMode::S2 => SolverConfig { newton_tol: 1e-8, ..SolverConfig::default() },
    };
    let solver = match &raw.solver {
        None => base,
        Some(table) => {
            let mut merged = toml::Table::try_from(&base).expect("solver defaults serialize");
            for (key, value) in table.get_ref() {
                merged.insert(key.clone(), value.clone());
            }
            let solver: SolverConfig = merged
                .try_into()
                .map_err(|e: toml::de::Error| ctx.err("solver", table.span(), e.message().to_string()))?;
            solver.validate().map_err(|e| ctx.err("solver", table.span(), e.to_string()))?;
            solver
        }
    };

    let validation = ValidationConfig {
        samples: raw.validation.as_ref().and_then(|v| v.samples).unwrap_or(DEFAULT_SAMPLES),
        override_checks: raw.validation.as_ref().and_then(|v| v.override_checks).unwrap_or(false),
    };
    if validation.samples < 100 {
        return Err(CliError::Config {
            key: "validation.samples".into(),
            line: None,
            msg: format!("at least 100 samples required, got {}", validation.samples),
        });
    }
    let output = OutputConfig {
        directory: raw.output.as_ref().and_then(|o| o.directory.clone()).unwrap_or_else(|| PathBuf::from("out")),
        formats: raw
            .output
            .as_ref()
            .and_then(|o| o.formats.clone())
            .unwrap_or_else(|| vec![OutputFormat::Rho, OutputFormat::Trace, OutputFormat::Summary]),
    };
    Ok(RunConfig { problem, grid, solver, validation, output })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config { key, line, msg } => CliError::Config { key, line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    })
}

impl RunConfig {
    pub fn params(&self) -> QuotientParams {
        QuotientParams::new(self.problem.n, self.problem.k, self.problem.l).expect("checked at load")
    }

    pub fn expression(&self) -> FExpr {
        parse_f(&self.problem.f, self.problem.n + 1).expect("checked at load")
    }

    pub fn build_grid(&self) -> Grid {
        build_grid_from(&self.grid, self.problem.n).expect("checked at load")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn build_grid_from(g: &GridConfig, n: usize) -> weingarten::Result<Grid> {
    match g.mode {
        GridMode::Axisym => Grid::axisym(g.nodes, n),
        GridMode::S2 => Grid::s2(g.n_theta, g.n_phi),
    }
}
