//! Prescribed right-hand sides `f(X, ν)`, the homotopy family `f^t` that
//! deforms the round unit sphere into the target problem, and sampled
//! checks of the structural conditions on `f`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::FExpr;
use crate::symfun::QuotientParams;

/// Anything that can be evaluated as `f(X, ν)` with `X, ν ∈ R^{n+1}`.
pub trait Prescription: Send + Sync {
    fn eval(&self, x: &[f64], nu: &[f64]) -> Result<f64>;
}

impl Prescription for FExpr {
    fn eval(&self, x: &[f64], nu: &[f64]) -> Result<f64> {
        FExpr::eval(self, x, nu)
    }
}

/// Adapter turning a closure into a [`Prescription`].
pub struct FnPrescription<F>(pub F);

impl<F> Prescription for FnPrescription<F>
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, x: &[f64], nu: &[f64]) -> Result<f64> {
        Ok((self.0)(x, nu))
    }
}

pub fn eval_f<P: Prescription + ?Sized>(f: &P, x: &[f64], nu: &[f64]) -> Result<f64> {
    let norm: f64 = nu.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Eval { expr: "f".into(), msg: format!("normal has length {norm}") });
    }
    if x.iter().all(|c| *c == 0.0) {
        return Err(Error::Eval { expr: "f".into(), msg: "position at the origin".into() });
    }
    f.eval(x, nu)
}

pub const EPSILON_CAP: f64 = 0.1;
const EPSILON_SAMPLES: usize = 1024;

/// The family `f^t = t f + (1-t)(C_n^k/C_n^l)(n-1)^{k-l}(ρ^{-(k-l)} + ε(ρ^{-(k-l)} - 1))`.
#[derive(Debug, Clone)]
pub struct HomotopyTarget<F> {
    pub base: F,
    pub params: QuotientParams,
    pub r1: f64,
    pub r2: f64,
    pub epsilon: f64,
    /// Lower bound of the radial bracket on `[r1, r2]`.
    pub c0: f64,
}

/// `ρ^{-m} + ε(ρ^{-m} - 1)`.
pub fn radial_bracket(rho: f64, order: usize, epsilon: f64) -> f64 {
    let inv = rho.powi(-(order as i32));
    inv + epsilon * (inv - 1.0)
}

/// Chooses `(ε, c0)`: `c0 = r2^{-m}/2` and `ε = min(0.1, ε*/2)` where `ε*`
/// is the largest value keeping the bracket above `c0` on a 1024-point
/// sample of `[r1, r2]`.
pub fn select_epsilon(order: usize, r1: f64, r2: f64) -> (f64, f64) {
    let c0 = 0.5 * r2.powi(-(order as i32));
    let mut critical = f64::INFINITY;
    for s in 0..EPSILON_SAMPLES {
        let rho = r1 + (r2 - r1) * s as f64 / (EPSILON_SAMPLES - 1) as f64;
        let inv = rho.powi(-(order as i32));
        if inv < 1.0 {
            critical = critical.min((inv - c0) / (1.0 - inv));
        }
    }
    (EPSILON_CAP.min(0.5 * critical), c0)
}

pub fn make_homotopy<F>(base: F, params: QuotientParams, r1: f64, r2: f64) -> Result<HomotopyTarget<F>> {
    if !(r1 > 0.0 && r1 < 1.0 && 1.0 < r2 && r2.is_finite()) {
        return Err(Error::BadAnnulus { r1, r2 });
    }
    let (epsilon, c0) = select_epsilon(params.order(), r1, r2);
    Ok(HomotopyTarget { base, params, r1, r2, epsilon, c0 })
}

impl<F: Prescription> HomotopyTarget<F> {
    /// `(C_n^k / C_n^l)(n-1)^{k-l}`, the quotient of the unit sphere.
    pub fn unit_sphere_value(&self) -> f64 {
        self.params.round_sphere_quotient(1.0)
    }

    /// Radial reference term of the family at `|X| = rho`.
    pub fn reference(&self, rho: f64) -> f64 {
        self.unit_sphere_value() * radial_bracket(rho, self.params.order(), self.epsilon)
    }

    /// `f^t(X, ν)`. The user function is not evaluated at `t = 0`, nor the
    /// reference term at `t = 1`.
    pub fn eval(&self, t: f64, x: &[f64], nu: &[f64]) -> Result<f64> {
        let rho = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let user = if t > 0.0 { t * self.base.eval(x, nu)? } else { 0.0 };
        let reference = if t < 1.0 { (1.0 - t) * self.reference(rho) } else { 0.0 };
        Ok(user + reference)
    }
}

pub fn eval_homotopy<F: Prescription>(target: &HomotopyTarget<F>, t: f64, x: &[f64], nu: &[f64]) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParams(format!("homotopy parameter t = {t} outside [0, 1]")));
    }
    target.eval(t, x, nu)
}

/// Worst case found for one condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub pass: bool,
    /// Smallest normalized margin; negative means violated.
    pub worst_margin: f64,
    pub worst_x: Vec<f64>,
    pub worst_nu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Upper barrier on the outer sphere `|X| = r2`.
    pub outer: ConditionReport,
    /// Lower barrier on the inner sphere `|X| = r1`.
    pub inner: ConditionReport,
    /// Radial monotonicity of `ρ^{k-l} f`.
    pub monotone: ConditionReport,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.outer.pass && self.inner.pass && self.monotone.pass
    }
}

impl std::fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let line = |c: &ConditionReport| if c.pass { "pass" } else { "FAIL" };
        write!(
            f,
            "outer barrier {} ({:.3e}), inner barrier {} ({:.3e}), monotonicity {} ({:.3e})",
            line(&self.outer),
            self.outer.worst_margin,
            line(&self.inner),
            self.inner.worst_margin,
            line(&self.monotone),
            self.monotone.worst_margin
        )
    }
}

/// Relative tolerance for the two barrier conditions.
pub const BARRIER_TOL: f64 = 1e-12;
/// Tolerance for the monotonicity derivative, relative to `ρ^{k-l} f / ρ`.
pub const MONOTONE_TOL: f64 = 1e-8;
const RADIAL_LEVELS: usize = 9;
const NORMAL_SAMPLES: usize = 12;
const FD_REL_STEP: f64 = 1e-5;

/// Quasi-uniform unit vectors in `R^{ambient}`: a Fibonacci lattice on
/// `S²`, seeded normalized Gaussians otherwise.
pub fn quasi_uniform_directions(ambient: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if ambient == 3 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        return (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * i as f64;
                vec![z, r * a.cos(), r * a.sin()]
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..ambient).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-8 {
                break v.iter().map(|c| c / norm).collect();
            }
        })
        .collect()
}

struct Worst {
    margin: f64,
    x: Vec<f64>,
    nu: Vec<f64>,
}

fn fold_worst(items: Vec<Worst>, tol: f64) -> ConditionReport {
    // index order keeps ties deterministic
    let mut best: Option<Worst> = None;
    for w in items {
        if best.as_ref().is_none_or(|b| w.margin < b.margin) {
            best = Some(w);
        }
    }
    let w = best.expect("at least one sample");
    ConditionReport { pass: w.margin >= -tol, worst_margin: w.margin, worst_x: w.x, worst_nu: w.nu }
}

pub fn validate_assumptions<F: Prescription + ?Sized>(
    base: &F,
    p: &QuotientParams,
    r1: f64,
    r2: f64,
    samples: usize,
) -> Result<AssumptionReport> {
    if samples < 100 {
        return Err(Error::InvalidParams(format!("need at least 100 samples, got {samples}")));
    }
    if !(0.0 < r1 && r1 < r2) {
        return Err(Error::BadAnnulus { r1, r2 });
    }
    let ambient = p.n + 1;
    let m = p.order() as i32;
    let dirs = quasi_uniform_directions(ambient, samples, 0x5eed);
    let normals = quasi_uniform_directions(ambient, NORMAL_SAMPLES, 0xa11);

    let barrier = |radius: f64, upper: bool| -> Result<ConditionReport> {
        let bound = p.round_sphere_quotient(radius);
        let items = dirs
            .par_iter()
            .map(|d| {
                let x: Vec<f64> = d.iter().map(|c| radius * c).collect();
                let fv = base.eval(&x, d)?;
                let margin = if upper { (bound - fv) / bound } else { (fv - bound) / bound };
                Ok(Worst { margin, x, nu: d.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(fold_worst(items, BARRIER_TOL))
    };
    let outer = barrier(r2, true)?;
    let inner = barrier(r1, false)?;

    let weighted = |rho: f64, d: &[f64], nu: &[f64]| -> Result<f64> {
        let x: Vec<f64> = d.iter().map(|c| rho * c).collect();
        Ok(rho.powi(m) * base.eval(&x, nu)?)
    };
    let monotone_items = dirs
        .par_iter()
        .map(|d| {
            let mut local = Vec::with_capacity(RADIAL_LEVELS * (NORMAL_SAMPLES + 1));
            for level in 0..RADIAL_LEVELS {
                let rho = r1 + (r2 - r1) * level as f64 / (RADIAL_LEVELS - 1) as f64;
                let h = FD_REL_STEP * rho;
                for nu in std::iter::once(d).chain(normals.iter()) {
                    let centre = weighted(rho, d, nu)?;
                    let deriv = (weighted(rho + h, d, nu)? - weighted(rho - h, d, nu)?) / (2.0 * h);
                    let scale = (centre.abs() / rho).max(f64::MIN_POSITIVE);
                    local.push(Worst {
                        margin: -deriv / scale,
                        x: d.iter().map(|c| rho * c).collect(),
                        nu: nu.clone(),
                    });
                }
            }
            Ok(local)
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = fold_worst(monotone_items.into_iter().flatten().collect(), MONOTONE_TOL);

    Ok(AssumptionReport { outer, inner, monotone })
}
