//! Runtime monitors for the quantities controlled by the a priori
//! estimates: radial bounds, support function, gradient and curvature
//! maxima, and the cone margin.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::assemble_point_geometry;
use crate::grid::{Grid, ScalarField};
use crate::symfun::{sigmas_upto, QuotientParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsSnapshot {
    pub rho_min: f64,
    pub rho_max: f64,
    pub u_min: f64,
    pub grad_sup: f64,
    pub kappa_sup: f64,
    /// `min_x min_{j<=k} σ_j(λ(η))`.
    pub cone_margin_min: f64,
    /// `min_{x,i} λ_i(η)`.
    pub eta_min: f64,
}

struct NodeBounds {
    rho: f64,
    u: f64,
    grad: f64,
    kappa: f64,
    margin: f64,
    eta_min: f64,
}

pub fn snapshot_bounds(rho: &ScalarField, grid: &Grid, p: &QuotientParams) -> Result<BoundsSnapshot> {
    let jets = grid.jets(rho)?;
    let n = grid.dim();
    let nodes = jets
        .par_iter()
        .map(|jet| {
            let g = assemble_point_geometry(jet, n)?;
            let sig = sigmas_upto(g.eta.values(), p.k);
            Ok(NodeBounds {
                rho: jet.rho,
                u: g.u,
                grad: jet.grad.norm(),
                kappa: g.kappa.iter().fold(0.0_f64, |m, k| m.max(k.abs())),
                margin: sig[1..].iter().copied().fold(f64::INFINITY, f64::min),
                eta_min: g.eta.values()[0],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut s = BoundsSnapshot {
        rho_min: f64::INFINITY,
        rho_max: f64::NEG_INFINITY,
        u_min: f64::INFINITY,
        grad_sup: 0.0,
        kappa_sup: 0.0,
        cone_margin_min: f64::INFINITY,
        eta_min: f64::INFINITY,
    };
    for b in &nodes {
        s.rho_min = s.rho_min.min(b.rho);
        s.rho_max = s.rho_max.max(b.rho);
        s.u_min = s.u_min.min(b.u);
        s.grad_sup = s.grad_sup.max(b.grad);
        s.kappa_sup = s.kappa_sup.max(b.kappa);
        s.cone_margin_min = s.cone_margin_min.min(b.margin);
        s.eta_min = s.eta_min.min(b.eta_min);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C0Check {
    pub pass: bool,
    /// `rho_min - r1`.
    pub lower_margin: f64,
    /// `r2 - rho_max`.
    pub upper_margin: f64,
}

/// Strict inclusion `r1 < ρ < r2`.
pub fn check_c0(s: &BoundsSnapshot, r1: f64, r2: f64) -> C0Check {
    let lower_margin = s.rho_min - r1;
    let upper_margin = r2 - s.rho_max;
    C0Check { pass: lower_margin > 0.0 && upper_margin > 0.0, lower_margin, upper_margin }
}

/// Star-shapedness (`u > 0`) and admissibility (`λ(η) ∈ Γ_k`) everywhere.
pub fn check_positivity(s: &BoundsSnapshot) -> bool {
    s.u_min > 0.0 && s.cone_margin_min > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample_field;
    use approx::assert_relative_eq;

    #[test]
    fn round_sphere_snapshot() {
        let p = QuotientParams::new(3, 2, 0).unwrap();
        let grid = Grid::axisym(33, 3).unwrap();
        let r = 1.4;
        let s = snapshot_bounds(&ScalarField::constant(r, 33), &grid, &p).unwrap();
        assert_eq!(s.rho_min, r);
        assert_eq!(s.rho_max, r);
        assert_relative_eq!(s.u_min, r, max_relative = 1e-15);
        assert!(s.grad_sup < 1e-12);
        assert_relative_eq!(s.kappa_sup, 1.0 / r, max_relative = 1e-12);
        assert!(s.cone_margin_min > 0.0);
        assert_relative_eq!(s.eta_min, 2.0 / r, max_relative = 1e-12);
        assert!(check_positivity(&s));
        assert!(check_c0(&s, 0.5, 2.0).pass);
    }

    #[test]
    fn perturbed_sphere_snapshot() {
        let p = QuotientParams::new(3, 2, 0).unwrap();
        let grid = Grid::axisym(129, 3).unwrap();
        let f = sample_field(&grid, |t, _| 1.0 + 0.05 * t.cos());
        let s = snapshot_bounds(&f, &grid, &p).unwrap();
        let h = std::f64::consts::PI / 128.0;
        assert!(s.u_min <= 1.05);
        assert!((s.grad_sup - 0.05).abs() < h * h);
        assert!(s.cone_margin_min > 0.0);
        assert!(check_positivity(&s));
        // n · eta_min <= Σ λ_i(η) = (n - 1) H
        assert!(3.0 * s.eta_min <= 2.0 * 3.0 * s.kappa_sup);
    }

    #[test]
    fn c0_is_strict() {
        let mut s = BoundsSnapshot {
            rho_min: 1.0,
            rho_max: 2.0,
            u_min: 1.0,
            grad_sup: 0.0,
            kappa_sup: 1.0,
            cone_margin_min: 1.0,
            eta_min: 1.0,
        };
        let c = check_c0(&s, 0.5, 2.0);
        assert!(!c.pass);
        assert_eq!(c.upper_margin, 0.0);
        s.rho_max = 1.999;
        assert!(check_c0(&s, 0.5, 2.0).pass);
        s.u_min = 0.0;
        assert!(!check_positivity(&s));
    }
}
