//! Pointwise geometry of a radial graph `X(x) = ρ(x) x` over the unit
//! sphere.
//!
//! All quantities are expressed in an orthonormal frame `{e_1, .., e_n}` of
//! the round metric at the base point, so the round metric is the identity.
//! Vectors in `R^{n+1}` are written in the local basis `{e_ρ, e_1, .., e_n}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::symfun::{sigmas_upto, QuotientParams, Spectrum};

/// `(ρ, Dρ, D²ρ)` at one point of the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct PointJet {
    pub rho: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl PointJet {
    pub fn new(rho: f64, grad: DVector<f64>, hess: DMatrix<f64>) -> Result<Self> {
        let n = grad.len();
        if hess.nrows() != n || hess.ncols() != n {
            return Err(Error::DegenerateJet(format!(
                "hessian is {}x{}, gradient has {} entries",
                hess.nrows(),
                hess.ncols(),
                n
            )));
        }
        let scale = hess.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (hess[(i, j)] - hess[(j, i)]).abs() > 1e-14 * scale {
                    return Err(Error::DegenerateJet(format!("hessian not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(PointJet { rho, grad, hess })
    }

    /// Jet of the constant function `ρ ≡ r` in dimension `n`.
    pub fn constant(r: f64, n: usize) -> Self {
        PointJet { rho: r, grad: DVector::zeros(n), hess: DMatrix::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }
}

/// Geometric state of the hypersurface at one point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    /// `v = sqrt(1 + ρ^{-2} |Dρ|²)`.
    pub v: f64,
    /// Support function `u = <X, ν>`.
    pub u: f64,
    /// Outward unit normal in the basis `{e_ρ, e_1, .., e_n}`.
    pub nu: DVector<f64>,
    /// Mixed shape operator `h^i_j = g^{ik} h_kj`.
    pub shape: DMatrix<f64>,
    /// Mean curvature `H = Σ κ_i`.
    pub mean_curvature: f64,
    /// Principal curvatures, ascending.
    pub kappa: Vec<f64>,
    /// `λ_i(η) = H - κ_i`, sorted ascending.
    pub eta: Spectrum,
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.kappa.len()
    }
}

/// Metric `g_ij = ρ² δ_ij + D_iρ D_jρ`.
pub fn induced_metric(jet: &PointJet) -> DMatrix<f64> {
    let n = jet.dim();
    DMatrix::identity(n, n) * (jet.rho * jet.rho) + &jet.grad * jet.grad.transpose()
}

/// Second fundamental form `h_ij = (1/v)(-D_iD_jρ + ρ δ_ij + (2/ρ) D_iρ D_jρ)`.
pub fn second_fundamental_form(jet: &PointJet, v: f64) -> DMatrix<f64> {
    let n = jet.dim();
    let rho = jet.rho;
    (DMatrix::identity(n, n) * rho - &jet.hess + &jet.grad * jet.grad.transpose() * (2.0 / rho)) / v
}

pub fn assemble_point_geometry(jet: &PointJet, n: usize) -> Result<PointGeometry> {
    if n < 2 {
        return Err(Error::DegenerateJet(format!("dimension {n} below 2")));
    }
    if jet.dim() != n || jet.hess.nrows() != n || jet.hess.ncols() != n {
        return Err(Error::DegenerateJet(format!("jet has dimension {}, expected {n}", jet.dim())));
    }
    let rho = jet.rho;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::DegenerateJet(format!("rho = {rho}")));
    }
    if jet.grad.iter().chain(jet.hess.iter()).any(|x| !x.is_finite()) {
        return Err(Error::DegenerateJet("non-finite derivative".into()));
    }
    let grad_sq = jet.grad.norm_squared();
    let v = (1.0 + grad_sq / (rho * rho)).sqrt();
    if !v.is_finite() {
        return Err(Error::DegenerateJet(format!("v not finite (|Dρ|² = {grad_sq})")));
    }

    let h = second_fundamental_form(jet, v);
    let id = DMatrix::<f64>::identity(n, n);
    let proj = if grad_sq > 0.0 {
        &jet.grad * jet.grad.transpose() / grad_sq
    } else {
        DMatrix::zeros(n, n)
    };

    // g^{-1} = ρ^{-2}(I - DρDρ^T / (ρ² v²)); g^{-1/2} scales the Dρ direction
    // by 1/(ρ v) and its complement by 1/ρ.
    let g_inv = (&id - &jet.grad * jet.grad.transpose() / (rho * rho * v * v)) / (rho * rho);
    let g_inv_sqrt = (&id + &proj * (1.0 / v - 1.0)) / rho;
    let shape = &g_inv * &h;

    let sym = &g_inv_sqrt * &h * &g_inv_sqrt;
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut kappa: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    kappa.sort_by(f64::total_cmp);

    let mean_curvature: f64 = kappa.iter().sum();
    let mut eta: Vec<f64> = kappa.iter().map(|k| mean_curvature - k).collect();
    eta.sort_by(f64::total_cmp);

    let mut nu = DVector::zeros(n + 1);
    nu[0] = 1.0 / v;
    for i in 0..n {
        nu[i + 1] = -jet.grad[i] / (rho * v);
    }

    Ok(PointGeometry {
        v,
        u: rho / v,
        nu,
        shape,
        mean_curvature,
        kappa,
        eta: Spectrum::new(eta)?,
    })
}

/// Closed-form geometry of the round sphere of radius `r`.
pub fn sphere_closed_form(r: f64, n: usize) -> PointGeometry {
    let mut nu = DVector::zeros(n + 1);
    nu[0] = 1.0;
    PointGeometry {
        v: 1.0,
        u: r,
        nu,
        shape: DMatrix::identity(n, n) / r,
        mean_curvature: n as f64 / r,
        kappa: vec![1.0 / r; n],
        eta: Spectrum::new(vec![(n as f64 - 1.0) / r; n]).expect("n >= 2"),
    }
}

/// `log σ_k(λ(η)) - log σ_l(λ(η)) - log f`.
pub fn residual_at_point(geom: &PointGeometry, p: &QuotientParams, fval: f64) -> Result<f64> {
    if !(fval > 0.0) {
        return Err(Error::NonpositiveF(fval));
    }
    let sig = sigmas_upto(geom.eta.values(), p.k);
    let margin = sig[1..].iter().copied().fold(f64::INFINITY, f64::min);
    if !(margin > 0.0) {
        return Err(Error::ConeViolation { node: None, margin });
    }
    Ok(sig[p.k].ln() - sig[p.l].ln() - fval.ln())
}
