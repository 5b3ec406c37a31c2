use weingarten::{
    check_c0, continuation_solve, elementary_symmetric, make_homotopy, parse_f, residual_vector, snapshot_bounds,
    residual_at_point, sphere_closed_form, FnPrescription, Grid, QuotientParams, ScalarField, SolverConfig, Spectrum, Validation,
};

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

// On a sphere of radius r every λ_i equals (n-1)/r, so f = c ρ^{-3} with
// (n,k,l) = (3,2,0) is solved by r = c / 12.
#[test]
fn radial_prescription_gives_sphere_of_predicted_radius() {
    let p = QuotientParams::new(3, 2, 0).unwrap();
    let radius = 1.2;
    let c = binomial(3, 2) * 4.0 * radius;
    let f = parse_f(&format!("{c} * rho^(-3)"), 4).unwrap();
    let target = make_homotopy(f, p, 0.5, 2.0).unwrap();
    let grid = Grid::axisym(33, 3).unwrap();
    let cfg = SolverConfig::for_grid(&grid);
    let sol = continuation_solve(&target, &grid, &cfg, Validation::Required { samples: 200 }).unwrap();
    for r in sol.rho.values() {
        assert!((r - radius).abs() < 1e-9, "{r}");
    }
    assert_eq!(sol.trace.steps.last().unwrap().t, 1.0);
    assert!(check_c0(&sol.bounds, 0.5, 2.0).pass);
}

#[test]
fn closed_form_sphere_matches_symmetric_function() {
    let p = QuotientParams::new(4, 3, 1).unwrap();
    let geom = sphere_closed_form(2.0, 4);
    let lam = Spectrum::new(vec![1.5; 4]).unwrap();
    let want = elementary_symmetric(&lam, 3) / elementary_symmetric(&lam, 1);
    assert!((want - 1.5 * 1.5).abs() < 1e-12);
    assert!(residual_at_point(&geom, &p, want).unwrap().abs() < 1e-12);
}

#[test]
fn s2_grid_with_closure_prescription() {
    let p = QuotientParams::new(2, 2, 0).unwrap();
    // σ_2 on the unit 2-sphere is 1; small tilt along x2
    let f = FnPrescription(|x: &[f64], _nu: &[f64]| {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        r.powi(-3) * (1.0 + 0.05 * x[1] / r)
    });
    let target = make_homotopy(f, p, 0.5, 2.0).unwrap();
    let grid = Grid::s2(16, 32).unwrap();
    let cfg = SolverConfig::for_grid(&grid);
    let sol = continuation_solve(&target, &grid, &cfg, Validation::Override).unwrap();
    let res = residual_vector(&sol.rho, &grid, &target, 1.0, &p).unwrap();
    assert!(res.values().iter().all(|r| r.abs() <= cfg.newton_tol));
    let b = snapshot_bounds(&sol.rho, &grid, &p).unwrap();
    assert!(b.rho_max - b.rho_min > 1e-3);
    assert!(b.cone_margin_min > 0.0);
}

#[test]
fn size_mismatch_is_rejected() {
    let p = QuotientParams::new(3, 2, 0).unwrap();
    let target = make_homotopy(parse_f("rho^(-3)", 4).unwrap(), p, 0.5, 2.0).unwrap();
    let grid = Grid::axisym(17, 3).unwrap();
    assert!(residual_vector(&ScalarField::constant(1.0, 5), &grid, &target, 0.0, &p).is_err());
}
