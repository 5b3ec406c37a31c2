//! Numerical solver for closed star-shaped hypersurfaces in `R^{n+1}` with
//! prescribed Hessian-quotient curvature
//!
//! ```text
//! σ_k(λ(η)) / σ_l(λ(η)) = f(X, ν),    λ_i(η) = H - κ_i,
//! ```
//!
//! written as radial graphs `X = ρ(x) x` over the unit sphere and reached by
//! homotopy continuation from the unit sphere.

pub mod banded;
pub mod error;
pub mod expr;
pub mod fspec;
pub mod geometry;
pub mod grid;
pub mod monitor;
pub mod selftest;
pub mod solver;
pub mod symfun;

pub use error::{Error, Result};
pub use expr::{parse_f, FExpr};
pub use fspec::{
    eval_f, eval_homotopy, make_homotopy, validate_assumptions, AssumptionReport, FnPrescription, HomotopyTarget,
    Prescription,
};
pub use geometry::{assemble_point_geometry, residual_at_point, sphere_closed_form, PointGeometry, PointJet};
pub use grid::{
    axisym_jets, build_axisym_grid, build_s2_grid, field_norms, s2_jets, sample_field, AxisymGrid, Grid, ScalarField,
    SphereGrid2D,
};
pub use monitor::{check_c0, check_positivity, snapshot_bounds, BoundsSnapshot, C0Check};
pub use solver::{
    assemble_jacobian, continuation_solve, newton_solve, residual_vector, PartialSolution, SolutionField, SolveTrace,
    SolverConfig, TraceStep, Validation,
};
pub use symfun::{
    elementary_symmetric, elementary_symmetric_excluding, f_tensor, grad_g, in_gamma_k, newton_maclaurin_slack,
    offdiag_second_g, quotient_g, sample_gamma_k, ConeReport, QuotientParams, Spectrum,
};
