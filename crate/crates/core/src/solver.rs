//! Damped Newton corrector and homotopy continuation in `t` for the
//! discretized equation
//!
//! ```text
//! log σ_k(λ(η)) - log σ_l(λ(η)) - log f^t(X, ν) = 0   at every node,
//! ```
//!
//! starting from the unit sphere at `t = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::fspec::{validate_assumptions, HomotopyTarget, Prescription};
use crate::geometry::{assemble_point_geometry, residual_at_point};
use crate::grid::{Grid, ScalarField};
use crate::monitor::{check_c0, check_positivity, snapshot_bounds, BoundsSnapshot};
use crate::symfun::{normalized_cone_margin, QuotientParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Sup norm of the log residual accepted as converged.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Growth factor for `Δt` after a cheap corrector.
    pub dt_grow: f64,
    /// Corrector iterations at or below which `Δt` grows.
    pub fast_iterations: usize,
    /// Finite-difference step; `None` means `sqrt(ε_mach) · max|ρ| · Δ`
    /// with `Δ` the smallest node spacing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    pub backtrack: f64,
    pub max_halvings: usize,
    /// Minimum normalized cone margin of an accepted iterate.
    pub cone_margin: f64,
    pub sufficient_decrease: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-10,
            max_newton: 30,
            dt_init: 0.1,
            dt_min: 1e-4,
            dt_max: 0.25,
            dt_grow: 1.5,
            fast_iterations: 4,
            fd_step: None,
            backtrack: 0.5,
            max_halvings: 20,
            cone_margin: 1e-12,
            sufficient_decrease: 1e-4,
        }
    }
}

impl SolverConfig {
    /// Defaults for a grid layout (`newton_tol` is looser on S²).
    pub fn for_grid(grid: &Grid) -> Self {
        match grid {
            Grid::Axisym { .. } => SolverConfig::default(),
            Grid::S2(_) => SolverConfig { newton_tol: 1e-8, ..SolverConfig::default() },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("newton_tol", self.newton_tol),
            ("dt_init", self.dt_init),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("cone_margin", self.cone_margin),
            ("sufficient_decrease", self.sufficient_decrease),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("solver.{name} = {v} must be positive")));
            }
        }
        if self.max_newton == 0 {
            return Err(Error::InvalidParams("solver.max_newton must be positive".into()));
        }
        if !(self.dt_min <= self.dt_init && self.dt_init <= 1.0 && self.dt_init <= self.dt_max) {
            return Err(Error::InvalidParams(format!(
                "need dt_min <= dt_init <= min(dt_max, 1), got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParams("solver.backtrack must lie in (0, 1)".into()));
        }
        if !(self.dt_grow >= 1.0) {
            return Err(Error::InvalidParams("solver.dt_grow must be at least 1".into()));
        }
        if let Some(h) = self.fd_step {
            if !(h > 0.0) {
                return Err(Error::InvalidParams("solver.fd_step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One accepted continuation step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub t: f64,
    pub newton_iters: usize,
    pub residual_sup: f64,
    pub bounds: BoundsSnapshot,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveTrace {
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone)]
pub struct SolutionField {
    pub rho: ScalarField,
    pub grid: Grid,
    pub residual_sup: f64,
    pub bounds: BoundsSnapshot,
    pub trace: SolveTrace,
}

/// State handed back when continuation cannot reach `t = 1`.
#[derive(Debug, Clone)]
pub struct PartialSolution {
    /// Last accepted `t`.
    pub t: f64,
    pub rho: ScalarField,
    pub trace: SolveTrace,
    pub reason: String,
}

/// Whether [`continuation_solve`] checks the structural conditions on `f`
/// first. With `Required`, a run that leaves `r1 < ρ < r2` is aborted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validation {
    Required { samples: usize },
    Override,
}

struct NodeEval {
    residual: f64,
    margin: f64,
}

fn eval_node<F: Prescription>(
    rho: &ScalarField,
    grid: &Grid,
    node: usize,
    target: &HomotopyTarget<F>,
    t: f64,
    p: &QuotientParams,
) -> Result<NodeEval> {
    let jet = grid.jet_at(rho, node);
    let geom = assemble_point_geometry(&jet, p.n)?;
    let (x, nu) = grid.frame(node).embed(jet.rho, &geom);
    let fval = target.eval(t, &x, &nu)?;
    let residual = residual_at_point(&geom, p, fval).map_err(|e| match e {
        Error::ConeViolation { margin, .. } => Error::ConeViolation { node: Some(node), margin },
        other => other,
    })?;
    Ok(NodeEval { residual, margin: normalized_cone_margin(&geom.eta, p.k) })
}

fn check_grid(grid: &Grid, p: &QuotientParams, rho: &ScalarField) -> Result<()> {
    if grid.dim() != p.n {
        return Err(Error::InvalidParams(format!("grid represents S^{} but n = {}", grid.dim(), p.n)));
    }
    if rho.len() != grid.len() {
        return Err(Error::SizeMismatch { expected: grid.len(), got: rho.len() });
    }
    rho.check_radial()
}

fn eval_rows<F: Prescription>(
    rho: &ScalarField,
    grid: &Grid,
    rows: &[usize],
    target: &HomotopyTarget<F>,
    t: f64,
    p: &QuotientParams,
) -> Result<Vec<NodeEval>> {
    rows.par_iter().map(|&m| eval_node(rho, grid, m, target, t, p)).collect()
}

/// Per-node log residual at parameter `t`.
pub fn residual_vector<F: Prescription>(
    rho: &ScalarField,
    grid: &Grid,
    target: &HomotopyTarget<F>,
    t: f64,
    p: &QuotientParams,
) -> Result<ScalarField> {
    check_grid(grid, p, rho)?;
    let rows: Vec<usize> = (0..grid.len()).collect();
    Ok(ScalarField(eval_rows(rho, grid, &rows, target, t, p)?.into_iter().map(|e| e.residual).collect()))
}

/// Sparsity of the discrete operator and a column coloring in which no two
/// columns of one color touch a common row.
#[derive(Debug, Clone)]
pub struct JacobianPattern {
    /// Columns each row depends on.
    pub rows: Vec<Vec<usize>>,
    /// Rows each column influences.
    pub cols: Vec<Vec<usize>>,
    pub colors: Vec<Vec<usize>>,
    pub lower: usize,
    pub upper: usize,
}

impl JacobianPattern {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let rows: Vec<Vec<usize>> = (0..n).map(|m| grid.stencil(m)).collect();
        let mut cols = vec![Vec::new(); n];
        let (mut lower, mut upper) = (0, 0);
        for (r, deps) in rows.iter().enumerate() {
            for &c in deps {
                cols[c].push(r);
                lower = lower.max(r.saturating_sub(c));
                upper = upper.max(c.saturating_sub(r));
            }
        }
        let mut color_of = vec![usize::MAX; n];
        let mut colors: Vec<Vec<usize>> = Vec::new();
        let mut forbidden = Vec::new();
        for c in 0..n {
            forbidden.clear();
            for &r in &cols[c] {
                for &other in &rows[r] {
                    if color_of[other] != usize::MAX {
                        forbidden.push(color_of[other]);
                    }
                }
            }
            let color = (0..).find(|k| !forbidden.contains(k)).expect("unbounded");
            color_of[c] = color;
            if color == colors.len() {
                colors.push(Vec::new());
            }
            colors[color].push(c);
        }
        JacobianPattern { rows, cols, colors, lower, upper }
    }
}

/// Default step of the one-sided differences. Second differences make the
/// residual curvature grow like `Δ^{-4}` against a slope of `Δ^{-2}`, so the
/// usual `sqrt(ε_mach)` step is scaled by the grid spacing.
pub fn fd_step(rho: &ScalarField, grid: &Grid, cfg: &SolverConfig) -> f64 {
    cfg.fd_step.unwrap_or_else(|| {
        let scale = rho.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        f64::EPSILON.sqrt() * scale.max(f64::MIN_POSITIVE) * grid.min_spacing()
    })
}

fn assemble_with_pattern<F: Prescription>(
    rho: &ScalarField,
    base: &[f64],
    grid: &Grid,
    pattern: &JacobianPattern,
    target: &HomotopyTarget<F>,
    t: f64,
    p: &QuotientParams,
    cfg: &SolverConfig,
) -> Result<BandMatrix> {
    let n = grid.len();
    let h = fd_step(rho, grid, cfg);
    let mut jac = BandMatrix::zeros(n, pattern.lower, pattern.upper);
    let mut owner = vec![usize::MAX; n];
    for group in &pattern.colors {
        let mut shifted = rho.clone();
        let mut touched = Vec::new();
        for &c in group {
            shifted.0[c] += h;
            for &r in &pattern.cols[c] {
                owner[r] = c;
                touched.push(r);
            }
        }
        touched.sort_unstable();
        let evals = eval_rows(&shifted, grid, &touched, target, t, p)?;
        for (&r, e) in touched.iter().zip(&evals) {
            jac.set(r, owner[r], (e.residual - base[r]) / h);
        }
    }
    Ok(jac)
}

/// Finite-difference Jacobian `∂ residual_i / ∂ ρ_j`, one residual sweep
/// per column color.
pub fn assemble_jacobian<F: Prescription>(
    rho: &ScalarField,
    grid: &Grid,
    target: &HomotopyTarget<F>,
    t: f64,
    p: &QuotientParams,
    cfg: &SolverConfig,
) -> Result<BandMatrix> {
    let base = residual_vector(rho, grid, target, t, p)?;
    let pattern = JacobianPattern::new(grid);
    assemble_with_pattern(rho, base.values(), grid, &pattern, target, t, p, cfg)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Residual sup norm of an admissible state, or `None`.
fn admissible_residual<F: Prescription>(
    rho: &ScalarField,
    grid: &Grid,
    target: &HomotopyTarget<F>,
    t: f64,
    p: &QuotientParams,
    cfg: &SolverConfig,
) -> Option<Vec<f64>> {
    if rho.check_radial().is_err() {
        return None;
    }
    let rows: Vec<usize> = (0..grid.len()).collect();
    let evals = eval_rows(rho, grid, &rows, target, t, p).ok()?;
    if evals.iter().any(|e| !(e.margin >= cfg.cone_margin) || !e.residual.is_finite()) {
        return None;
    }
    Some(evals.into_iter().map(|e| e.residual).collect())
}

struct Corrector<'a, F> {
    grid: &'a Grid,
    target: &'a HomotopyTarget<F>,
    p: &'a QuotientParams,
    cfg: &'a SolverConfig,
    pattern: JacobianPattern,
}

impl<F: Prescription> Corrector<'_, F> {
    fn solve(&self, rho0: &ScalarField, t: f64) -> Result<(ScalarField, usize, f64)> {
        let (grid, target, p, cfg) = (self.grid, self.target, self.p, self.cfg);
        check_grid(grid, p, rho0)?;
        let rows: Vec<usize> = (0..grid.len()).collect();
        let evals = eval_rows(rho0, grid, &rows, target, t, p)?;
        if let Some((node, e)) = evals.iter().enumerate().find(|(_, e)| !(e.margin >= cfg.cone_margin)) {
            return Err(Error::ConeViolation { node: Some(node), margin: e.margin });
        }
        let mut rho = rho0.clone();
        let mut res: Vec<f64> = evals.into_iter().map(|e| e.residual).collect();
        let mut norm = sup(&res);

        for iter in 0..cfg.max_newton {
            if norm <= cfg.newton_tol {
                return Ok((rho, iter, norm));
            }
            let jac = assemble_with_pattern(&rho, &res, grid, &self.pattern, target, t, p, cfg)?;
            let neg: Vec<f64> = res.iter().map(|r| -r).collect();
            let step = jac.factorize()?.solve(&neg);

            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..=cfg.max_halvings {
                let trial = ScalarField(rho.values().iter().zip(&step).map(|(r, d)| r + alpha * d).collect());
                if let Some(trial_res) = admissible_residual(&trial, grid, target, t, p, cfg) {
                    let trial_norm = sup(&trial_res);
                    if trial_norm <= (1.0 - cfg.sufficient_decrease * alpha) * norm {
                        accepted = Some((trial, trial_res, trial_norm));
                        break;
                    }
                }
                alpha *= cfg.backtrack;
            }
            match accepted {
                Some((r, rr, nn)) => {
                    rho = r;
                    res = rr;
                    norm = nn;
                }
                None => return Err(Error::NoConvergence { iterations: iter + 1, residual: norm }),
            }
        }
        if norm <= cfg.newton_tol {
            Ok((rho, cfg.max_newton, norm))
        } else {
            Err(Error::NoConvergence { iterations: cfg.max_newton, residual: norm })
        }
    }
}

/// Damped Newton at fixed `t`. Returns the converged field and the number
/// of Newton steps taken.
pub fn newton_solve<F: Prescription>(
    rho0: &ScalarField,
    t: f64,
    target: &HomotopyTarget<F>,
    grid: &Grid,
    p: &QuotientParams,
    cfg: &SolverConfig,
) -> Result<(ScalarField, usize)> {
    cfg.validate()?;
    let corrector = Corrector { grid, target, p, cfg, pattern: JacobianPattern::new(grid) };
    corrector.solve(rho0, t).map(|(rho, iters, _)| (rho, iters))
}

/// Follows the homotopy from the unit sphere at `t = 0` to `t = 1`.
pub fn continuation_solve<F: Prescription>(
    target: &HomotopyTarget<F>,
    grid: &Grid,
    cfg: &SolverConfig,
    validation: Validation,
) -> Result<SolutionField> {
    continuation_from(target, grid, cfg, validation, None)
}

/// [`continuation_solve`] with an optional warm start for `t = 0`.
pub fn continuation_from<F: Prescription>(
    target: &HomotopyTarget<F>,
    grid: &Grid,
    cfg: &SolverConfig,
    validation: Validation,
    warm_start: Option<&ScalarField>,
) -> Result<SolutionField> {
    cfg.validate()?;
    let p = &target.params;
    let enforce_c0 = match validation {
        Validation::Required { samples } => {
            let report = validate_assumptions(&target.base, p, target.r1, target.r2, samples)?;
            if !report.all_pass() {
                return Err(Error::ValidationFailed(Box::new(report)));
            }
            true
        }
        Validation::Override => false,
    };
    if !(target.r1 < 1.0 && 1.0 < target.r2) {
        return Err(Error::BadAnnulus { r1: target.r1, r2: target.r2 });
    }

    let corrector = Corrector { grid, target, p, cfg, pattern: JacobianPattern::new(grid) };
    let start = warm_start.cloned().unwrap_or_else(|| ScalarField::constant(1.0, grid.len()));
    let (mut rho, iters, mut residual) = corrector.solve(&start, 0.0)?;
    let mut trace = SolveTrace::default();

    let record = |rho: &ScalarField, t: f64, iters: usize, residual: f64, trace: &mut SolveTrace| -> Result<BoundsSnapshot> {
        let bounds = snapshot_bounds(rho, grid, p)?;
        if !check_positivity(&bounds) {
            return Err(Error::BoundsViolation {
                t,
                detail: format!("u_min = {:e}, cone margin = {:e}", bounds.u_min, bounds.cone_margin_min),
            });
        }
        if enforce_c0 {
            let c0 = check_c0(&bounds, target.r1, target.r2);
            if !c0.pass {
                return Err(Error::BoundsViolation {
                    t,
                    detail: format!("rho in [{}, {}] leaves ({}, {})", bounds.rho_min, bounds.rho_max, target.r1, target.r2),
                });
            }
        }
        trace.steps.push(TraceStep { t, newton_iters: iters, residual_sup: residual, bounds });
        Ok(bounds)
    };

    let mut bounds = record(&rho, 0.0, iters, residual, &mut trace)?;
    let mut t = 0.0;
    let mut dt = cfg.dt_init;
    while t < 1.0 {
        let t_next = if t + dt >= 1.0 { 1.0 } else { t + dt };
        match corrector.solve(&rho, t_next) {
            Ok((next, iters, res)) => {
                bounds = record(&next, t_next, iters, res, &mut trace)?;
                rho = next;
                residual = res;
                t = t_next;
                if iters <= cfg.fast_iterations {
                    dt = (dt * cfg.dt_grow).min(cfg.dt_max);
                }
            }
            Err(e @ (Error::NoConvergence { .. } | Error::SingularJacobian(_))) => {
                dt *= 0.5;
                if dt < cfg.dt_min {
                    return Err(Error::ContinuationStalled(Box::new(PartialSolution {
                        t,
                        rho,
                        trace,
                        reason: e.to_string(),
                    })));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SolutionField { rho, grid: grid.clone(), residual_sup: residual, bounds, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_f;
    use crate::fspec::make_homotopy;
    use crate::grid::sample_field;
    use approx::assert_relative_eq;

    fn p320() -> QuotientParams {
        QuotientParams::new(3, 2, 0).unwrap()
    }

    fn radial_target(src: &str, p: QuotientParams) -> HomotopyTarget<crate::expr::FExpr> {
        make_homotopy(parse_f(src, p.n + 1).unwrap(), p, 0.5, 2.0).unwrap()
    }

    #[test]
    fn unit_sphere_is_root_at_t0() {
        let p = p320();
        let grid = Grid::axisym(33, 3).unwrap();
        let h = radial_target("1", p);
        let r = residual_vector(&ScalarField::constant(1.0, 33), &grid, &h, 0.0, &p).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn constant_radius_residual_closed_form() {
        // log(C((n-1)/r)^m) - log(C(n-1)^m (r^{-m}(1+ε) - ε)) = -log(1 + ε - ε r^m)
        let p = p320();
        let grid = Grid::axisym(33, 3).unwrap();
        let h = radial_target("1", p);
        for &r in &[0.8, 1.3] {
            let res = residual_vector(&ScalarField::constant(r, 33), &grid, &h, 0.0, &p).unwrap();
            let want = -(1.0 + h.epsilon - h.epsilon * r * r).ln();
            for v in res.values() {
                assert_relative_eq!(*v, want, max_relative = 1e-12);
            }
            assert_eq!(want.signum(), (r - 1.0).signum());
        }
    }

    #[test]
    fn t1_consistency() {
        let p = p320();
        let grid = Grid::axisym(33, 3).unwrap();
        let h = radial_target("12", p);
        let r = residual_vector(&ScalarField::constant(1.0, 33), &grid, &h, 1.0, &p).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn radial_jacobian_direction() {
        let p = p320();
        let grid = Grid::axisym(33, 3).unwrap();
        let h = radial_target("1", p);
        let cfg = SolverConfig::default();
        let jac = assemble_jacobian(&ScalarField::constant(1.0, 33), &grid, &h, 0.0, &p, &cfg).unwrap();
        let out = jac.matvec(&[1.0; 33]);
        // d/dr of -log(1 + ε - ε r²) at r = 1 is 2ε; one-sided differences
        // are accurate relative to the entries, not to their cancelling sum
        for (r, v) in out.iter().enumerate() {
            let row: f64 = (r.saturating_sub(1)..(r + 2).min(33)).map(|c| jac.get(r, c).abs()).sum();
            assert!((v - 2.0 * h.epsilon).abs() <= 1e-7 * row * row, "{v} vs {}", 2.0 * h.epsilon);
        }
    }

    #[test]
    fn jacobian_matches_directional_derivative() {
        let p = p320();
        for grid in [Grid::axisym(33, 3).unwrap(), Grid::s2(16, 32).unwrap()] {
            let p = if grid.dim() == 2 { QuotientParams::new(2, 2, 0).unwrap() } else { p };
            let h = make_homotopy(parse_f("2 * rho^(-3) * (1 + 0.1*nu1)", p.n + 1).unwrap(), p, 0.5, 2.0).unwrap();
            let rho = sample_field(&grid, |t, ph| 1.0 + 0.03 * t.cos() + 0.02 * (2.0 * t).sin() * ph.cos());
            let cfg = SolverConfig::default();
            let jac = assemble_jacobian(&rho, &grid, &h, 0.6, &p, &cfg).unwrap();
            let w = sample_field(&grid, |t, ph| (3.0 * t).cos() + 0.5 * ph.sin() * t.sin());
            let jw = jac.matvec(w.values());
            let step = 1e-6;
            let shift = |s: f64| {
                let moved = ScalarField(rho.values().iter().zip(w.values()).map(|(r, d)| r + s * d).collect());
                residual_vector(&moved, &grid, &h, 0.6, &p).unwrap()
            };
            let (moved, base) = (shift(step), shift(-step));
            // per-entry error model of one-sided differences: truncation
            // h·J_rc² plus rounding ε·ρ·|J_rc|/h
            let h_fd = fd_step(&rho, &grid, &cfg);
            let (kl, ku) = jac.bandwidths();
            for (r, ((a, b), j)) in moved.values().iter().zip(base.values()).zip(&jw).enumerate() {
                let bound: f64 = (r.saturating_sub(kl)..(r + ku + 1).min(grid.len()))
                    .map(|c| {
                        let e = jac.get(r, c).abs();
                        (h_fd * e * e + f64::EPSILON * e / h_fd) * w.values()[c].abs()
                    })
                    .sum();
                let fd = (a - b) / (2.0 * step);
                assert!((fd - j).abs() <= 10.0 * bound + 1e-8 * fd.abs(), "{fd} {j} {bound}");
            }
        }
    }

    #[test]
    fn coloring_is_valid() {
        for grid in [Grid::axisym(40, 3).unwrap(), Grid::s2(16, 32).unwrap()] {
            let pat = JacobianPattern::new(&grid);
            for group in &pat.colors {
                let mut seen = std::collections::HashSet::new();
                for &c in group {
                    for &r in &pat.cols[c] {
                        assert!(seen.insert(r), "row {r} hit twice");
                    }
                }
            }
            if matches!(grid, Grid::Axisym { .. }) {
                assert_eq!(pat.colors.len(), 3);
                assert!(pat.lower <= 2 && pat.upper <= 2);
            }
        }
    }

    #[test]
    fn newton_at_root_takes_no_steps() {
        let p = p320();
        let grid = Grid::axisym(33, 3).unwrap();
        let h = radial_target("1", p);
        let (rho, iters) =
            newton_solve(&ScalarField::constant(1.0, 33), 0.0, &h, &grid, &p, &SolverConfig::default()).unwrap();
        assert!(iters <= 1);
        assert!(rho.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn newton_recovers_unit_sphere() {
        let p = p320();
        let grid = Grid::axisym(65, 3).unwrap();
        let h = radial_target("1", p);
        let rho0 = sample_field(&grid, |t, _| 1.0 + 0.01 * (t.cos() + 0.5 * (3.0 * t).cos() - 0.3 * (2.0 * t).cos()));
        let (rho, iters) = newton_solve(&rho0, 0.0, &h, &grid, &p, &SolverConfig::default()).unwrap();
        assert!(iters <= 10);
        assert!(rho.values().iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn inadmissible_start_rejected() {
        let p = p320();
        let grid = Grid::axisym(65, 3).unwrap();
        let h = radial_target("1", p);
        let wild = sample_field(&grid, |t, _| 1.0 + 0.3 * (20.0 * t).cos());
        let err = newton_solve(&wild, 0.0, &h, &grid, &p, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::ConeViolation { node: Some(_), .. }), "{err}");
    }

    #[test]
    fn t_independent_problem_stays_on_sphere() {
        let p = p320();
        let grid = Grid::axisym(33, 3).unwrap();
        let h = radial_target("1", p);
        let eps = h.epsilon;
        let src = format!("12 * (rho^(-2) + {eps:?} * (rho^(-2) - 1))");
        let h = radial_target(&src, p);
        let sol = continuation_solve(&h, &grid, &SolverConfig::default(), Validation::Override).unwrap();
        assert_eq!(sol.trace.steps.last().unwrap().t, 1.0);
        assert!(sol.rho.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn radial_decreasing_problem_converges_to_sphere() {
        let p = p320();
        let grid = Grid::axisym(33, 3).unwrap();
        let h = radial_target("12 * rho^(-3)", p);
        let sol = continuation_solve(&h, &grid, &SolverConfig::default(), Validation::Required { samples: 100 }).unwrap();
        assert!(sol.rho.values().iter().all(|v| (v - 1.0).abs() < 1e-8));
        let ts: Vec<f64> = sol.trace.steps.iter().map(|s| s.t).collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert!(sol.trace.steps.iter().all(|s| s.residual_sup <= 1e-10));
    }

    #[test]
    fn validation_failure_propagates() {
        let p = p320();
        let grid = Grid::axisym(33, 3).unwrap();
        let h = radial_target("3", p);
        let err = continuation_solve(&h, &grid, &SolverConfig::default(), Validation::Required { samples: 100 });
        assert!(matches!(err, Err(Error::ValidationFailed(_))));
    }

    #[test]
    fn stall_reports_partial_state() {
        let p = p320();
        let grid = Grid::axisym(33, 3).unwrap();
        // no admissible root near the path: f blows up towards t = 1
        let h = radial_target("1e-9", p);
        let cfg = SolverConfig { max_newton: 2, dt_min: 0.02, ..SolverConfig::default() };
        match continuation_solve(&h, &grid, &cfg, Validation::Override) {
            Err(Error::ContinuationStalled(partial)) => {
                assert!(partial.t < 1.0);
                assert_eq!(partial.trace.steps.last().unwrap().t, partial.t);
                assert_eq!(partial.rho.len(), 33);
            }
            other => panic!("{:?}", other.map(|s| s.residual_sup)),
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { dt_init: 2.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { dt_min: 0.5, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { newton_tol: 0.0, ..Default::default() }.validate().is_err());
        assert_eq!(SolverConfig::for_grid(&Grid::s2(16, 32).unwrap()).newton_tol, 1e-8);
    }
}
