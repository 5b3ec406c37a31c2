//! Shared fixtures for the solver benchmarks.

use weingarten::{make_homotopy, parse_f, FExpr, Grid, HomotopyTarget, QuotientParams, ScalarField, sample_field};

/// `(3,2,0)` problem with a mildly anisotropic right-hand side.
pub fn axisym_problem(nodes: usize) -> (HomotopyTarget<FExpr>, Grid) {
    let p = QuotientParams::new(3, 2, 0).expect("admissible");
    let f = parse_f("12 * rho^(-3) * (1 + 0.2 * x1 / rho)", 4).expect("valid expression");
    (make_homotopy(f, p, 0.5, 2.0).expect("annulus"), Grid::axisym(nodes, 3).expect("grid"))
}

pub fn s2_problem(n_theta: usize, n_phi: usize) -> (HomotopyTarget<FExpr>, Grid) {
    let p = QuotientParams::new(2, 2, 0).expect("admissible");
    let f = parse_f("rho^(-3) * (1 + 0.1 * x3 / rho)", 3).expect("valid expression");
    (make_homotopy(f, p, 0.5, 2.0).expect("annulus"), Grid::s2(n_theta, n_phi).expect("grid"))
}

/// Smooth restriction of `1 + 0.02 x1 + 0.01 x3` to the grid.
pub fn perturbed_sphere(grid: &Grid) -> ScalarField {
    sample_field(grid, |theta, phi| 1.0 + 0.02 * theta.cos() + 0.01 * theta.sin() * phi.sin())
}
