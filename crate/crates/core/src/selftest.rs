//! Built-in property suites, runnable from a release binary.

use std::time::Instant;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::expr::parse_f;
use crate::fspec::make_homotopy;
use crate::geometry::{assemble_point_geometry, PointJet};
use crate::grid::{sample_field, Grid, ScalarField};
use crate::solver::{newton_solve, SolverConfig};
use crate::symfun::{
    grad_g, newton_maclaurin_slack, offdiag_second_g, sample_gamma_k, sigmas_upto, QuotientParams,
};

/// Computes `σ_0 ..= σ_upto` of a slice.
pub type SigmaFn = fn(&[f64], usize) -> Vec<f64>;

#[derive(Debug, Clone)]
pub struct SelfTestOptions {
    pub seed: u64,
    pub samples: usize,
    /// Implementation under test for the recurrence suite.
    pub sigma: SigmaFn,
}

impl Default for SelfTestOptions {
    fn default() -> Self {
        SelfTestOptions { seed: 7, samples: 2000, sigma: sigmas_upto }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn subset_sigma(values: &[f64], j: usize) -> f64 {
    let n = values.len();
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == j)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| values[i]).product::<f64>())
        .sum()
}

/// Compares the supplied σ routine with subset enumeration and checks the
/// one-entry expansion `σ_j = σ_j(λ|i) + λ_i σ_{j-1}(λ|i)`.
pub fn recurrence_suite(sigma: SigmaFn, seed: u64, samples: usize) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let n = rng.random_range(1..=7);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let got = sigma(&v, n);
        if got.len() != n + 1 {
            return Err(format!("expected {} values, got {}", n + 1, got.len()));
        }
        for (j, g) in got.iter().enumerate() {
            let want = subset_sigma(&v, j);
            let err = (g - want).abs() / want.abs().max(1.0);
            worst = worst.max(err);
            if err > 1e-12 {
                return Err(format!("σ_{j} of {v:?}: {g} vs {want}"));
            }
        }
        let i = rng.random_range(0..n);
        let rest: Vec<f64> = v.iter().enumerate().filter(|(a, _)| *a != i).map(|(_, x)| *x).collect();
        let partial = sigma(&rest, n - 1);
        for j in 1..=n {
            let tail = if j < n { partial[j] } else { 0.0 };
            let expanded = tail + v[i] * partial[j - 1];
            if (expanded - got[j]).abs() > 1e-12 * got[j].abs().max(1.0) {
                return Err(format!("expansion fails for σ_{j} removing entry {i}"));
            }
        }
    }
    Ok(format!("worst relative error {worst:.1e}"))
}

fn cone_suite(seed: u64, samples: usize) -> std::result::Result<String, String> {
    for &(n, k, l) in &[(3, 2, 0), (4, 3, 1), (5, 4, 2)] {
        let p = QuotientParams::new(n, k, l).map_err(|e| e.to_string())?;
        let set = sample_gamma_k(&p, seed, samples).map_err(|e| e.to_string())?;
        let floor = p.binomial_ratio().powf(1.0 / p.order() as f64);
        for lam in &set {
            let (a, b) = newton_maclaurin_slack(lam, &p).map_err(|e| e.to_string())?;
            if a < -1e-10 || b < -1e-10 {
                return Err(format!("Newton-Maclaurin slack ({a:e}, {b:e}) at {:?}", lam.values()));
            }
            let g = grad_g(lam, &p).map_err(|e| e.to_string())?;
            if g.iter().any(|x| !(*x > 0.0)) {
                return Err(format!("non-positive G^ii at {:?}", lam.values()));
            }
            let total: f64 = g.iter().sum();
            if total < floor - 1e-10 {
                return Err(format!("Σ G^ii = {total} below {floor}"));
            }
        }
    }
    Ok("ellipticity and Newton-Maclaurin hold on all samples".into())
}

fn derivative_suite(seed: u64) -> std::result::Result<String, String> {
    let p = QuotientParams::new(4, 3, 1).map_err(|e| e.to_string())?;
    let set = sample_gamma_k(&p, seed ^ 0x5eed, 100).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for lam in &set {
        let g = grad_g(lam, &p).map_err(|e| e.to_string())?;
        let v = lam.values();
        for (i, gi) in g.iter().enumerate() {
            let exact = complex_step_partial(v, &p, i);
            worst = worst.max((exact - gi).abs() / gi.abs());
        }
        for i in 1..v.len() {
            let off = offdiag_second_g(lam, &p, i).map_err(|e| e.to_string())?;
            if off > 1e-14 * g[0].abs() {
                return Err(format!("positive mixed second derivative {off:e}"));
            }
        }
    }
    if worst > 1e-6 {
        return Err(format!("gradient disagrees with finite differences by {worst:e}"));
    }
    Ok(format!("worst gradient error {worst:.1e}"))
}

/// `∂G/∂λ_i` by the complex step `Im G(λ + i h e_i) / h`, free of
/// cancellation error.
fn complex_step_partial(values: &[f64], p: &QuotientParams, i: usize) -> f64 {
    let h = 1e-30;
    let mut e = vec![Complex::new(0.0, 0.0); p.k + 1];
    e[0] = Complex::new(1.0, 0.0);
    for (a, &x) in values.iter().enumerate() {
        let z = Complex::new(x, if a == i { h } else { 0.0 });
        for j in (1..=p.k).rev() {
            e[j] = e[j] + z * e[j - 1];
        }
    }
    let q = e[p.k] / e[p.l];
    q.powf(1.0 / p.order() as f64).im / h
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

/// The curvature spectrum must not depend on the orthonormal frame.
fn covariance_suite(seed: u64) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for n in 2..=5 {
        for _ in 0..50 {
            let rho = rng.random_range(0.5..2.0);
            let grad = DVector::from_fn(n, |_, _| rng.random_range(-0.3..0.3));
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.3..0.3));
            let hess = (&a + a.transpose()) * 0.5;
            let q = random_orthogonal(n, &mut rng);
            let jet = PointJet::new(rho, grad.clone(), hess.clone()).map_err(|e| e.to_string())?;
            let rotated_hess = &q * &hess * q.transpose();
            let sym = (&rotated_hess + rotated_hess.transpose()) * 0.5;
            let turned = PointJet::new(rho, &q * &grad, sym).map_err(|e| e.to_string())?;
            let g1 = assemble_point_geometry(&jet, n).map_err(|e| e.to_string())?;
            let g2 = assemble_point_geometry(&turned, n).map_err(|e| e.to_string())?;
            for (a, b) in g1.kappa.iter().zip(&g2.kappa) {
                worst = worst.max((a - b).abs());
            }
            worst = worst.max((g1.u - g2.u).abs());
        }
    }
    if worst > 1e-12 {
        return Err(format!("frame rotation changes curvatures by {worst:e}"));
    }
    Ok(format!("worst frame discrepancy {worst:.1e}"))
}

fn jet_errors(grid: &Grid, field: impl Fn(f64, f64) -> f64, exact: impl Fn(f64) -> (f64, f64)) -> f64 {
    let rho = sample_field(grid, field);
    let jets = grid.jets(&rho).expect("matching size");
    jets.iter()
        .enumerate()
        .map(|(m, j)| {
            let (d1, d2) = exact(grid.angles(m).0);
            (j.grad[0] - d1).abs().max((j.hess[(0, 0)] - d2).abs())
        })
        .fold(0.0, f64::max)
}

fn jet_convergence_suite() -> std::result::Result<String, String> {
    let field = |t: f64, _| 1.0 + 0.05 * (2.0 * t).cos();
    let exact = |t: f64| (-0.1 * (2.0 * t).sin(), -0.2 * (2.0 * t).cos());
    let errs: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| jet_errors(&Grid::axisym(n, 3).expect("valid grid"), field, exact))
        .collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    if ratios.iter().any(|r| *r < 3.5) {
        return Err(format!("jet error ratios {ratios:?}"));
    }
    Ok(format!("jet error ratios {:.2?}", ratios))
}

fn fixed_point_suite() -> std::result::Result<String, String> {
    let p = QuotientParams::new(3, 2, 0).map_err(|e| e.to_string())?;
    let grid = Grid::axisym(65, 3).map_err(|e| e.to_string())?;
    let f = parse_f("1", 4).map_err(|e| e.to_string())?;
    let target = make_homotopy(f, p, 0.5, 2.0).map_err(|e| e.to_string())?;
    let start = sample_field(&grid, |t, _| 1.0 + 0.01 * t.cos());
    let (rho, iters) =
        newton_solve(&start, 0.0, &target, &grid, &p, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let err = sup_distance(&rho, 1.0);
    if err > 1e-8 || iters > 10 {
        return Err(format!("unit sphere not recovered: error {err:e} after {iters} iterations"));
    }
    Ok(format!("{iters} iterations, error {err:.1e}"))
}

fn sup_distance(rho: &ScalarField, value: f64) -> f64 {
    rho.values().iter().map(|r| (r - value).abs()).fold(0.0, f64::max)
}

/// Runs every suite and reports each outcome.
pub fn run_selftest(opts: &SelfTestOptions) -> Result<Vec<SuiteResult>> {
    type Suite<'a> = (&'static str, Box<dyn Fn() -> std::result::Result<String, String> + 'a>);
    let suites: Vec<Suite> = vec![
        ("recurrence", Box::new(|| recurrence_suite(opts.sigma, opts.seed, opts.samples))),
        ("cone", Box::new(|| cone_suite(opts.seed, opts.samples))),
        ("derivatives", Box::new(|| derivative_suite(opts.seed))),
        ("covariance", Box::new(|| covariance_suite(opts.seed))),
        ("jet-convergence", Box::new(jet_convergence_suite)),
        ("fixed-point", Box::new(fixed_point_suite)),
    ];
    Ok(suites
        .into_iter()
        .map(|(name, run)| {
            let start = Instant::now();
            let outcome = run();
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok(detail) => SuiteResult { name, passed: true, detail, seconds },
                Err(detail) => SuiteResult { name, passed: false, detail, seconds },
            }
        })
        .collect())
}
