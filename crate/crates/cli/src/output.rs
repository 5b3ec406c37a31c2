//! Files written by the CLI.
//!
//! * `rho.csv`: `theta,rho` (axisym) or `theta,phi,rho` (s2), one row per node.
//! * `trace.csv`: `t,newton_iters,residual_sup,rho_min,rho_max,u_min,grad_sup,kappa_sup,cone_margin_min`.
//! * `summary.toml`: outcome, final residual, bounds and monitor verdicts.
//! * `mesh.obj`: vertices `X = ρ x` with quad faces and triangle fans at the poles.
//!
//! Numbers are printed in shortest round-trip form, so files are
//! byte-identical across runs with identical input.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use weingarten::{BoundsSnapshot, Grid, ScalarField, SolveTrace};

use crate::error::CliError;

pub const TRACE_HEADER: &str = "t,newton_iters,residual_sup,rho_min,rho_max,u_min,grad_sup,kappa_sup,cone_margin_min";

/// Azimuthal samples used when revolving an axisymmetric profile.
pub const REVOLVE_SAMPLES: usize = 128;

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn rho_csv(rho: &ScalarField, grid: &Grid) -> String {
    let mut out = String::new();
    out.push_str(match grid {
        Grid::Axisym { .. } => "theta,rho\n",
        Grid::S2(_) => "theta,phi,rho\n",
    });
    for (m, r) in rho.values().iter().enumerate() {
        match grid.angles(m) {
            (t, None) => writeln!(out, "{t},{r}"),
            (t, Some(p)) => writeln!(out, "{t},{p},{r}"),
        }
        .expect("write to string");
    }
    out
}

/// Reads a `rho.csv` written for `grid`, checking the node angles.
pub fn parse_rho_csv(text: &str, grid: &Grid) -> Result<ScalarField, CliError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().trim();
    let expected = match grid {
        Grid::Axisym { .. } => "theta,rho",
        Grid::S2(_) => "theta,phi,rho",
    };
    if header != expected {
        return Err(CliError::Data(format!("expected header `{expected}`, found `{header}`")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let fields: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let fields = fields.map_err(|e| CliError::Data(format!("row {}: {e}", row + 2)))?;
        if fields.len() != expected.split(',').count() {
            return Err(CliError::Data(format!("row {}: expected {} columns", row + 2, expected.split(',').count())));
        }
        if row >= grid.len() {
            return Err(CliError::Data(format!("more than {} rows", grid.len())));
        }
        let (t, p) = grid.angles(row);
        let angle_ok = (fields[0] - t).abs() <= 1e-9 && p.is_none_or(|p| (fields[1] - p).abs() <= 1e-9);
        if !angle_ok {
            return Err(CliError::Data(format!("row {}: node angles do not match the configured grid", row + 2)));
        }
        values.push(*fields.last().expect("nonempty"));
    }
    if values.len() != grid.len() {
        return Err(CliError::Data(format!("{} rows for a grid of {} nodes", values.len(), grid.len())));
    }
    let field = ScalarField(values);
    field.check_radial()?;
    Ok(field)
}

pub fn trace_csv(trace: &SolveTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for s in &trace.steps {
        let b = &s.bounds;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.t, s.newton_iters, s.residual_sup, b.rho_min, b.rho_max, b.u_min, b.grad_sup, b.kappa_sup, b.cone_margin_min
        )
        .expect("write to string");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Monitors {
    pub c0_pass: bool,
    pub c0_lower_margin: f64,
    pub c0_upper_margin: f64,
    pub positivity_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub status: String,
    pub exit_code: i32,
    pub message: String,
    pub t_final: f64,
    pub accepted_steps: usize,
    pub total_newton_iterations: usize,
    pub residual_sup: f64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monitors: Option<Monitors>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSnapshot>,
}

pub fn summary_toml(s: &Summary) -> String {
    toml::to_string(s).expect("summary serializes")
}

struct Mesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
}

fn point(r: f64, theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [r * ct, r * st * cp, r * st * sp]
}

/// Rings of vertices between two pole vertices; `rings[i][j]` are indices.
fn close_rings(mesh: &mut Mesh, north: usize, south: usize, rings: &[Vec<usize>]) {
    let width = rings[0].len();
    for j in 0..width {
        let jn = (j + 1) % width;
        mesh.faces.push(vec![north, rings[0][j], rings[0][jn]]);
        for w in rings.windows(2) {
            mesh.faces.push(vec![w[0][j], w[1][j], w[1][jn], w[0][jn]]);
        }
        let last = &rings[rings.len() - 1];
        mesh.faces.push(vec![south, last[jn], last[j]]);
    }
}

fn build_mesh(rho: &ScalarField, grid: &Grid) -> Result<Mesh, CliError> {
    let v = rho.values();
    let mut mesh = Mesh { vertices: Vec::new(), faces: Vec::new() };
    match grid {
        Grid::S2(g) => {
            let mut rings = Vec::with_capacity(g.n_theta);
            for i in 0..g.n_theta {
                let mut ring = Vec::with_capacity(g.n_phi);
                for j in 0..g.n_phi {
                    ring.push(mesh.vertices.len());
                    mesh.vertices.push(point(v[g.index(i, j)], g.theta[i], g.phi[j]));
                }
                rings.push(ring);
            }
            let mean = |i: usize| (0..g.n_phi).map(|j| v[g.index(i, j)]).sum::<f64>() / g.n_phi as f64;
            let north = mesh.vertices.len();
            mesh.vertices.push(point(mean(0), 0.0, 0.0));
            let south = mesh.vertices.len();
            mesh.vertices.push(point(mean(g.n_theta - 1), std::f64::consts::PI, 0.0));
            close_rings(&mut mesh, north, south, &rings);
        }
        Grid::Axisym { grid: g, .. } => {
            let last = g.node_count - 1;
            let north = 0;
            mesh.vertices.push(point(v[0], 0.0, 0.0));
            let mut rings = Vec::with_capacity(last - 1);
            for m in 1..last {
                let mut ring = Vec::with_capacity(REVOLVE_SAMPLES);
                for j in 0..REVOLVE_SAMPLES {
                    let phi = 2.0 * std::f64::consts::PI * j as f64 / REVOLVE_SAMPLES as f64;
                    ring.push(mesh.vertices.len());
                    mesh.vertices.push(point(v[m], g.theta[m], phi));
                }
                rings.push(ring);
            }
            let south = mesh.vertices.len();
            mesh.vertices.push(point(v[last], std::f64::consts::PI, 0.0));
            close_rings(&mut mesh, north, south, &rings);
        }
    }
    Ok(mesh)
}

/// Wavefront OBJ text of the surface `X = ρ x`. Axisymmetric profiles are
/// revolved about the polar axis in `R^3`.
pub fn export_mesh_obj(rho: &ScalarField, grid: &Grid) -> Result<String, CliError> {
    if rho.len() != grid.len() {
        return Err(CliError::Core(weingarten::Error::SizeMismatch { expected: grid.len(), got: rho.len() }));
    }
    let mesh = build_mesh(rho, grid)?;
    let mut out = String::new();
    for p in &mesh.vertices {
        writeln!(out, "v {} {} {}", p[0], p[1], p[2]).expect("write to string");
    }
    for f in &mesh.faces {
        out.push('f');
        for i in f {
            write!(out, " {}", i + 1).expect("write to string");
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn parse_obj(text: &str) -> (Vec<[f64; 3]>, Vec<Vec<usize>>) {
        let mut v = Vec::new();
        let mut f = Vec::new();
        for line in text.lines() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let c: Vec<f64> = it.map(|s| s.parse().unwrap()).collect();
                    v.push([c[0], c[1], c[2]]);
                }
                Some("f") => f.push(it.map(|s| s.parse::<usize>().unwrap() - 1).collect()),
                _ => {}
            }
        }
        (v, f)
    }

    fn assert_watertight(faces: &[Vec<usize>]) {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for f in faces {
            for a in 0..f.len() {
                *directed.entry((f[a], f[(a + 1) % f.len()])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            assert_eq!(count, 1, "edge {a}->{b} used {count} times");
            assert_eq!(directed.get(&(b, a)), Some(&1), "edge {a}->{b} has no twin");
        }
    }

    fn signed_volume(v: &[[f64; 3]], faces: &[Vec<usize>]) -> f64 {
        let mut vol = 0.0;
        for f in faces {
            for a in 1..f.len() - 1 {
                let (p, q, r) = (v[f[0]], v[f[a]], v[f[a + 1]]);
                vol += p[0] * (q[1] * r[2] - q[2] * r[1]) - p[1] * (q[0] * r[2] - q[2] * r[0])
                    + p[2] * (q[0] * r[1] - q[1] * r[0]);
            }
        }
        vol / 6.0
    }

    #[test]
    fn unit_sphere_on_s2() {
        let grid = Grid::s2(16, 32).unwrap();
        let text = export_mesh_obj(&ScalarField::constant(1.0, 512), &grid).unwrap();
        let (v, f) = parse_obj(&text);
        assert_eq!(v.len(), 16 * 32 + 2);
        for p in &v {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert_watertight(&f);
        let vol = signed_volume(&v, &f);
        // inscribed polyhedron: slightly below the ball volume
        let ball = 4.0 / 3.0 * std::f64::consts::PI;
        assert!(vol < ball && vol > 0.97 * ball, "{vol}");
    }

    #[test]
    fn revolved_profile() {
        let grid = Grid::axisym(33, 3).unwrap();
        let rho = weingarten::sample_field(&grid, |t, _| 1.0 + 0.1 * t.cos());
        let (v, f) = parse_obj(&export_mesh_obj(&rho, &grid).unwrap());
        assert_eq!(v.len(), 31 * REVOLVE_SAMPLES + 2);
        assert_watertight(&f);
        for ring in 0..31 {
            let radii: Vec<f64> = (0..REVOLVE_SAMPLES)
                .map(|j| {
                    let p = v[1 + ring * REVOLVE_SAMPLES + j];
                    (p[1] * p[1] + p[2] * p[2]).sqrt()
                })
                .collect();
            let x: Vec<f64> = (0..REVOLVE_SAMPLES).map(|j| v[1 + ring * REVOLVE_SAMPLES + j][0]).collect();
            assert!(radii.iter().all(|r| (r - radii[0]).abs() < 1e-15));
            assert!(x.iter().all(|c| *c == x[0]));
        }
        assert!(signed_volume(&v, &f) > 0.0);
    }

    #[test]
    fn rho_csv_round_trip() {
        for grid in [Grid::axisym(17, 4).unwrap(), Grid::s2(16, 32).unwrap()] {
            let rho = weingarten::sample_field(&grid, |t, p| 1.0 + 0.1 * t.sin() * p.cos() + 1e-17 * t);
            let text = rho_csv(&rho, &grid);
            let back = parse_rho_csv(&text, &grid).unwrap();
            assert_eq!(back, rho);
        }
    }

    #[test]
    fn rho_csv_rejects_mismatch() {
        let grid = Grid::axisym(17, 3).unwrap();
        let text = rho_csv(&ScalarField::constant(1.0, 17), &grid);
        assert!(parse_rho_csv(&text, &Grid::axisym(18, 3).unwrap()).is_err());
        assert!(parse_rho_csv(&text.replace("theta,rho", "t,r"), &grid).is_err());
        assert!(parse_rho_csv(&text.replacen(",1\n", ",-1\n", 1), &grid).is_err());
    }
}
