//! Sphere discretizations and finite-difference jets.
//!
//! Two layouts are supported:
//!
//! * [`AxisymGrid`]: fields depending only on the polar angle `θ` of `S^n`,
//!   uniform nodes on `[0, π]` including both poles. Second-order central
//!   differences with even reflection across the poles.
//! * [`SphereGrid2D`]: a latitude-longitude grid on `S²` with rings offset
//!   half a spacing from the poles. Fourth-order central differences;
//!   stencils that run past a pole continue on the antipodal meridian.
//!
//! The polar axis is the first ambient coordinate in both layouts, so a
//! zonal field depends on `x1 / |X|` only.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{PointGeometry, PointJet};

pub const MIN_AXISYM_NODES: usize = 16;
pub const MIN_S2_THETA: usize = 16;
pub const MIN_S2_PHI: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct AxisymGrid {
    pub node_count: usize,
    pub theta: Vec<f64>,
    pub spacing: f64,
}

pub fn build_axisym_grid(node_count: usize) -> Result<AxisymGrid> {
    if node_count < MIN_AXISYM_NODES {
        return Err(Error::TooCoarse(format!(
            "axisymmetric grid needs at least {MIN_AXISYM_NODES} nodes, got {node_count}"
        )));
    }
    let spacing = PI / (node_count - 1) as f64;
    let mut theta: Vec<f64> = (0..node_count).map(|m| m as f64 * spacing).collect();
    theta[node_count - 1] = PI;
    Ok(AxisymGrid { node_count, theta, spacing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid2D {
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub dtheta: f64,
    pub dphi: f64,
}

pub fn build_s2_grid(n_theta: usize, n_phi: usize) -> Result<SphereGrid2D> {
    if n_theta < MIN_S2_THETA || n_phi < MIN_S2_PHI || !n_phi.is_multiple_of(2) {
        return Err(Error::TooCoarse(format!(
            "S² grid needs n_theta >= {MIN_S2_THETA} and even n_phi >= {MIN_S2_PHI}, got ({n_theta}, {n_phi})"
        )));
    }
    let dtheta = PI / n_theta as f64;
    let dphi = 2.0 * PI / n_phi as f64;
    Ok(SphereGrid2D {
        n_theta,
        n_phi,
        theta: (0..n_theta).map(|i| (i as f64 + 0.5) * dtheta).collect(),
        phi: (0..n_phi).map(|j| j as f64 * dphi).collect(),
        dtheta,
        dphi,
    })
}

impl SphereGrid2D {
    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    /// Node index of ring `i`, meridian `j`, for `i` up to two rings past
    /// either pole and any `j`.
    pub fn wrapped_index(&self, i: isize, j: isize) -> usize {
        let nt = self.n_theta as isize;
        let np = self.n_phi as isize;
        let (i, j) = if i < 0 {
            (-1 - i, j + np / 2)
        } else if i >= nt {
            (2 * nt - 1 - i, j + np / 2)
        } else {
            (i, j)
        };
        debug_assert!((0..nt).contains(&i));
        self.index(i as usize, j.rem_euclid(np) as usize)
    }
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn constant(value: f64, len: usize) -> Self {
        ScalarField(vec![value; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks the invariants of a radial function: finite and positive.
    pub fn check_radial(&self) -> Result<()> {
        match self.0.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            Some(i) => Err(Error::DegenerateJet(format!("rho = {} at node {i}", self.0[i]))),
            None => Ok(()),
        }
    }
}

/// Base point `x` and orthonormal tangent frame `e_1..e_n` in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFrame {
    pub x: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
}

impl NodeFrame {
    /// Ambient position `X = ρ x` and outward normal from local components.
    pub fn embed(&self, rho: f64, geom: &PointGeometry) -> (Vec<f64>, Vec<f64>) {
        let pos: Vec<f64> = self.x.iter().map(|c| rho * c).collect();
        let mut nu: Vec<f64> = self.x.iter().map(|c| geom.nu[0] * c).collect();
        for (a, e) in self.tangents.iter().enumerate() {
            for (out, c) in nu.iter_mut().zip(e) {
                *out += geom.nu[a + 1] * c;
            }
        }
        (pos, nu)
    }
}

/// Discretization used by the solver: either layout plus the sphere
/// dimension it represents.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Axisym { grid: AxisymGrid, n: usize },
    S2(SphereGrid2D),
}

impl Grid {
    pub fn axisym(node_count: usize, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("sphere dimension {n} below 2")));
        }
        Ok(Grid::Axisym { grid: build_axisym_grid(node_count)?, n })
    }

    pub fn s2(n_theta: usize, n_phi: usize) -> Result<Self> {
        Ok(Grid::S2(build_s2_grid(n_theta, n_phi)?))
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Axisym { grid, .. } => grid.node_count,
            Grid::S2(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension `n` of the sphere `S^n`.
    pub fn dim(&self) -> usize {
        match self {
            Grid::Axisym { n, .. } => *n,
            Grid::S2(_) => 2,
        }
    }

    fn check_size(&self, field: &ScalarField) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), got: field.len() });
        }
        Ok(())
    }

    /// Polar (and azimuthal, on S²) angles of a node.
    pub fn angles(&self, node: usize) -> (f64, Option<f64>) {
        match self {
            Grid::Axisym { grid, .. } => (grid.theta[node], None),
            Grid::S2(g) => (g.theta[node / g.n_phi], Some(g.phi[node % g.n_phi])),
        }
    }

    pub fn frame(&self, node: usize) -> NodeFrame {
        let n = self.dim();
        let (theta, phi) = self.angles(node);
        let (st, ct) = theta.sin_cos();
        match phi {
            None => {
                let mut x = vec![0.0; n + 1];
                x[0] = ct;
                x[1] = st;
                let mut tangents = Vec::with_capacity(n);
                let mut e1 = vec![0.0; n + 1];
                e1[0] = -st;
                e1[1] = ct;
                tangents.push(e1);
                for a in 2..=n {
                    let mut e = vec![0.0; n + 1];
                    e[a] = 1.0;
                    tangents.push(e);
                }
                NodeFrame { x, tangents }
            }
            Some(phi) => {
                let (sp, cp) = phi.sin_cos();
                NodeFrame {
                    x: vec![ct, st * cp, st * sp],
                    tangents: vec![vec![-st, ct * cp, ct * sp], vec![0.0, -sp, cp]],
                }
            }
        }
    }

    /// Jet of `field` at one node.
    pub fn jet_at(&self, field: &ScalarField, node: usize) -> PointJet {
        match self {
            Grid::Axisym { grid, n } => axisym_jet_at(field.values(), grid, *n, node),
            Grid::S2(g) => s2_jet_at(field.values(), g, node),
        }
    }

    pub fn jets(&self, field: &ScalarField) -> Result<Vec<PointJet>> {
        self.check_size(field)?;
        Ok((0..self.len()).into_par_iter().map(|m| self.jet_at(field, m)).collect())
    }

    /// Nodes whose values enter the jet at `node`, sorted.
    pub fn stencil(&self, node: usize) -> Vec<usize> {
        let mut deps = match self {
            Grid::Axisym { grid, .. } => {
                let last = grid.node_count - 1;
                (node.saturating_sub(1)..=(node + 1).min(last)).collect()
            }
            Grid::S2(g) => {
                let i = (node / g.n_phi) as isize;
                let j = (node % g.n_phi) as isize;
                let mut v = Vec::with_capacity(25);
                for di in -2..=2 {
                    for dj in -2..=2 {
                        v.push(g.wrapped_index(i + di, j + dj));
                    }
                }
                v
            }
        };
        deps.sort_unstable();
        deps.dedup();
        deps
    }

    /// Smallest geodesic distance between neighbouring nodes.
    pub fn min_spacing(&self) -> f64 {
        match self {
            Grid::Axisym { grid, .. } => grid.spacing,
            Grid::S2(g) => g.dtheta.min(g.theta[0].sin() * g.dphi),
        }
    }

    /// Surface-measure quadrature weights on `S^n`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        match self {
            Grid::Axisym { grid, n } => {
                let area = sphere_area(*n - 1);
                let last = grid.node_count - 1;
                grid.theta
                    .iter()
                    .enumerate()
                    .map(|(m, t)| {
                        let end = if m == 0 || m == last { 0.5 } else { 1.0 };
                        end * area * t.sin().powi(*n as i32 - 1) * grid.spacing
                    })
                    .collect()
            }
            Grid::S2(g) => (0..g.len())
                .map(|m| g.theta[m / g.n_phi].sin() * g.dtheta * g.dphi)
                .collect(),
        }
    }
}

/// Area of the unit sphere `S^d ⊂ R^{d+1}`.
pub fn sphere_area(d: usize) -> f64 {
    // |S^0| = 2, |S^1| = 2π, |S^d| = 2π/(d-1) |S^{d-2}|
    match d {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 1.0) * sphere_area(d - 2),
    }
}

fn axisym_jet_at(rho: &[f64], grid: &AxisymGrid, n: usize, m: usize) -> PointJet {
    let h = grid.spacing;
    let last = grid.node_count - 1;
    let value = |i: isize| -> f64 {
        // even reflection across both poles
        let i = if i < 0 {
            -i
        } else if i as usize > last {
            2 * last as isize - i
        } else {
            i
        };
        rho[i as usize]
    };
    let m_i = m as isize;
    let (prev, here, next) = (value(m_i - 1), rho[m], value(m_i + 1));
    let d1 = (next - prev) / (2.0 * h);
    let d2 = (next - 2.0 * here + prev) / (h * h);
    let tangential = if m == 0 || m == last {
        d2
    } else {
        let theta = grid.theta[m];
        theta.cos() / theta.sin() * d1
    };
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    if m != 0 && m != last {
        grad[0] = d1;
    }
    hess[(0, 0)] = d2;
    for a in 1..n {
        hess[(a, a)] = tangential;
    }
    PointJet { rho: here, grad, hess }
}

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

fn s2_jet_at(rho: &[f64], g: &SphereGrid2D, node: usize) -> PointJet {
    let i = (node / g.n_phi) as isize;
    let j = (node % g.n_phi) as isize;
    let at = |di: isize, dj: isize| rho[g.wrapped_index(i + di, j + dj)];

    let (mut r_t, mut r_p, mut r_tt, mut r_pp, mut r_tp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for a in 0..5 {
        let da = a as isize - 2;
        r_t += D1[a] * at(da, 0);
        r_p += D1[a] * at(0, da);
        r_tt += D2[a] * at(da, 0);
        r_pp += D2[a] * at(0, da);
        for b in 0..5 {
            if D1[a] != 0.0 && D1[b] != 0.0 {
                r_tp += D1[a] * D1[b] * at(da, b as isize - 2);
            }
        }
    }
    let (ht, hp) = (g.dtheta, g.dphi);
    r_t /= ht;
    r_p /= hp;
    r_tt /= ht * ht;
    r_pp /= hp * hp;
    r_tp /= ht * hp;

    let theta = g.theta[i as usize];
    let (s, c) = theta.sin_cos();
    let cot = c / s;
    let grad = DVector::from_vec(vec![r_t, r_p / s]);
    let off = (r_tp - cot * r_p) / s;
    let hess = DMatrix::from_row_slice(2, 2, &[r_tt, off, off, r_pp / (s * s) + cot * r_t]);
    PointJet { rho: rho[node], grad, hess }
}

pub fn axisym_jets(field: &ScalarField, grid: &AxisymGrid, n: usize) -> Result<Vec<PointJet>> {
    if field.len() != grid.node_count {
        return Err(Error::SizeMismatch { expected: grid.node_count, got: field.len() });
    }
    Ok((0..grid.node_count).map(|m| axisym_jet_at(field.values(), grid, n, m)).collect())
}

pub fn s2_jets(field: &ScalarField, grid: &SphereGrid2D) -> Result<Vec<PointJet>> {
    if field.len() != grid.len() {
        return Err(Error::SizeMismatch { expected: grid.len(), got: field.len() });
    }
    Ok((0..grid.len()).map(|m| s2_jet_at(field.values(), grid, m)).collect())
}

/// Sup norm and quadrature-weighted L² norm of a field.
pub fn field_norms(field: &ScalarField, grid: &Grid) -> Result<(f64, f64)> {
    grid.check_size(field)?;
    let sup = field.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let l2 = field
        .values()
        .iter()
        .zip(grid.quadrature_weights())
        .map(|(v, w)| w * v * v)
        .sum::<f64>()
        .sqrt();
    Ok((sup, l2))
}

/// Samples `f(θ, φ)` at every node (`φ = 0` on the axisymmetric grid).
pub fn sample_field(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> ScalarField {
    ScalarField(
        (0..grid.len())
            .map(|m| {
                let (t, p) = grid.angles(m);
                f(t, p.unwrap_or(0.0))
            })
            .collect(),
    )
}
