//! Closed-form and semi-analytic references: rectangle spectra and the sine-sinh series that
//! solves the eigenproblem inside a rectangular branch.

pub mod reference;

pub use reference::reference_eigenvalues;

use crate::analysis::{CoordinateKind, DecayProfile, ProfileKind};
use crate::eigen::EigenPair;
use crate::geometry::{BranchAxis, Curve, DomainSpec, Point};
use crate::mesh::Mesh;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("branch is not a straight rectangle: {0}")]
    NotRectangular(String),
    #[error("eigenvalue {lambda} is not below the first transverse eigenvalue {limit}")]
    NotApplicable { lambda: f64, limit: f64 },
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleMode {
    pub lambda: f64,
    pub m: usize,
    pub n: usize,
}

/// The `k` lowest Dirichlet eigenvalues `pi^2 (m^2/width^2 + n^2/height^2)`; equal values keep
/// `(m, n)` lexicographic order.
pub fn rectangle_spectrum(width: f64, height: f64, k: usize) -> Result<Vec<RectangleMode>, OracleError> {
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(OracleError::Invalid("rectangle sides must be positive".into()));
    }
    let mut modes: Vec<RectangleMode> = (1..=k)
        .flat_map(|m| (1..=k).map(move |n| (m, n)))
        .map(|(m, n)| RectangleMode {
            lambda: PI * PI * ((m * m) as f64 / (width * width) + (n * n) as f64 / (height * height)),
            m,
            n,
        })
        .collect();
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    modes.truncate(k);
    Ok(modes)
}

/// `order`-th Dirichlet eigenvalue of an interval of length `width`.
pub fn transverse_eigenvalue(width: f64, order: usize) -> f64 {
    (PI * order as f64 / width).powi(2)
}

/// `u(x, t) = sum_n c_n sinh(g_n (a - x)) sin(pi n t / b)` in branch coordinates: `x` along the
/// axis from the junction, `t` across from the junction's first endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSolution {
    pub mode: usize,
    pub lambda: f64,
    pub width: f64,
    pub length: f64,
    /// `c_n`; may underflow to zero for large `n`, evaluation uses `trace_coeffs`.
    pub coeffs: Vec<f64>,
    /// Sine coefficients of the junction trace, `c_n sinh(g_n a)`.
    pub trace_coeffs: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Share of `sum n d_n^2` carried by the upper half of the retained terms.
    pub tail_fraction: f64,
    origin: Point,
    along: Point,
    across: Point,
}

impl SeriesSolution {
    /// `sinh(g (a - x)) / sinh(g a)` without overflow.
    fn damping(g: f64, a: f64, x: f64) -> f64 {
        (-g * x).exp() * (-2.0 * g * (a - x)).exp_m1() / (-2.0 * g * a).exp_m1()
    }

    pub fn branch_coordinates(&self, p: Point) -> (f64, f64) {
        let d = p - self.origin;
        (d.dot(self.along), d.dot(self.across))
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        if !(0.0..=self.length).contains(&x) || !(0.0..=self.width).contains(&t) {
            return 0.0;
        }
        self.trace_coeffs
            .iter()
            .zip(&self.gammas)
            .enumerate()
            .map(|(k, (d, g))| d * Self::damping(*g, self.length, x) * (PI * (k + 1) as f64 * t / self.width).sin())
            .sum()
    }

    pub fn value_at(&self, p: Point) -> f64 {
        let (x, t) = self.branch_coordinates(p);
        self.value(x, t)
    }
}

/// `int_{t0}^{t1} f sin(k t) dt` for `f` linear between `f0` and `f1`.
fn linear_sine_integral(t0: f64, t1: f64, f0: f64, f1: f64, k: f64) -> f64 {
    let slope = (f1 - f0) / (t1 - t0);
    let prim = |t: f64, f: f64| -f * (k * t).cos() / k + slope * (k * t).sin() / (k * k);
    prim(t1, f1) - prim(t0, f0)
}

struct RectBranch {
    origin: Point,
    along: Point,
    across: Point,
    width: f64,
    length: f64,
}

fn rectangular_branch(spec: &DomainSpec) -> Result<RectBranch, OracleError> {
    let BranchAxis::Cartesian { .. } = spec.axis else {
        return Err(OracleError::NotRectangular("curvilinear axis".into()));
    };
    let [junction] = spec.junction.as_slice() else {
        return Err(OracleError::NotRectangular(format!("{} junction segments", spec.junction.len())));
    };
    let br = &spec.branch;
    if br.vertices.len() != 4 || br.curves.iter().any(|c| !matches!(c, Curve::Straight)) {
        return Err(OracleError::NotRectangular("branch is not a quadrilateral".into()));
    }
    let width = junction.a.dist(junction.b);
    let length = spec.axis.length();
    if (br.area() - width * length).abs() > 1e-12 * (width * length) {
        return Err(OracleError::NotRectangular("branch area differs from width times length".into()));
    }
    let along = spec.axis.tangent_at_coordinate(0.0).normalized();
    let across = (junction.b - junction.a).normalized();
    if along.dot(across).abs() > 1e-12 {
        return Err(OracleError::NotRectangular("junction is not perpendicular to the axis".into()));
    }
    Ok(RectBranch { origin: junction.a, along, across, width, length })
}

/// Sine-sinh series matching the eigenfunction's trace on the junction. The trace is the FEM
/// function restricted to the junction line, so its sine transform is taken exactly over the
/// piecewise-linear trace. `n_terms` defaults to `min(32, trace nodes)`.
pub fn fit_series(mesh: &Mesh, pair: &EigenPair, spec: &DomainSpec, n_terms: Option<usize>) -> Result<SeriesSolution, OracleError> {
    let rb = rectangular_branch(spec)?;
    if pair.vector.len() != mesh.num_nodes() {
        return Err(OracleError::MeshMismatch("eigenvector length differs from node count".into()));
    }
    let limit = transverse_eigenvalue(rb.width, 1);
    if pair.lambda >= limit {
        return Err(OracleError::NotApplicable { lambda: pair.lambda, limit });
    }
    let eps = 1e-9 * rb.width;
    let mut trace: Vec<(f64, f64)> = mesh
        .nodes
        .iter()
        .zip(&pair.vector)
        .filter_map(|(p, u)| {
            let d = *p - rb.origin;
            let (x, t) = (d.dot(rb.along), d.dot(rb.across));
            (x.abs() <= eps && t >= -eps && t <= rb.width + eps).then_some((t.clamp(0.0, rb.width), *u))
        })
        .collect();
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    trace.dedup_by(|a, b| (a.0 - b.0).abs() <= eps);
    if trace.len() < 2 || trace[0].0 > eps || trace[trace.len() - 1].0 < rb.width - eps {
        return Err(OracleError::MeshMismatch("junction is not resolved by mesh nodes".into()));
    }
    let n = n_terms.unwrap_or(32.min(trace.len())).max(1);
    let mut trace_coeffs = Vec::with_capacity(n);
    let mut gammas = Vec::with_capacity(n);
    for j in 1..=n {
        let k = PI * j as f64 / rb.width;
        let s: f64 = trace.windows(2).map(|w| linear_sine_integral(w[0].0, w[1].0, w[0].1, w[1].1, k)).sum();
        trace_coeffs.push(2.0 / rb.width * s);
        gammas.push((k * k - pair.lambda).sqrt());
    }
    let coeffs = trace_coeffs.iter().zip(&gammas).map(|(d, g)| d / (g * rb.length).sinh()).collect();
    let weight = |r: std::ops::Range<usize>| r.map(|j| (j + 1) as f64 * trace_coeffs[j].powi(2)).sum::<f64>();
    let total = weight(0..n);
    let tail_fraction = if total > 0.0 { weight(n / 2..n) / total } else { 0.0 };
    Ok(SeriesSolution {
        mode: pair.index,
        lambda: pair.lambda,
        width: rb.width,
        length: rb.length,
        coeffs,
        trace_coeffs,
        gammas,
        tail_fraction,
        origin: rb.origin,
        along: rb.along,
        across: rb.across,
    })
}

/// Relative `L2` difference between the series and the FEM eigenfunction over the branch
/// triangles, by the edge-midpoint rule.
pub fn series_l2_error(mesh: &Mesh, pair: &EigenPair, sol: &SeriesSolution) -> Result<f64, OracleError> {
    if pair.vector.len() != mesh.num_nodes() {
        return Err(OracleError::MeshMismatch("eigenvector length differs from node count".into()));
    }
    let (mut diff, mut norm) = (0.0, 0.0);
    for (tri, _) in mesh.triangles.iter().zip(&mesh.in_branch).filter(|(_, b)| **b) {
        let [a, b, c] = tri.map(|i| mesh.nodes[i]);
        let area = 0.5 * (b - a).cross(c - a).abs();
        for (i, j) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
            let mid = mesh.nodes[i].lerp(mesh.nodes[j], 0.5);
            let fem = 0.5 * (pair.vector[i] + pair.vector[j]);
            diff += area / 3.0 * (sol.value_at(mid) - fem).powi(2);
            norm += area / 3.0 * fem * fem;
        }
    }
    if norm <= 0.0 {
        return Err(OracleError::Invalid("eigenfunction vanishes on the branch".into()));
    }
    Ok((diff / norm).sqrt())
}

/// Exact `J(x0)` of the series: the sines are orthogonal, so each term contributes
/// `d_n^2 (b/2) int_{x0}^a (sinh(g (a-x)) / sinh(g a))^2 dx`.
pub fn series_decay_curve(sol: &SeriesSolution, grid: &[f64]) -> DecayProfile {
    let a = sol.length;
    let values = grid
        .iter()
        .map(|&x0| {
            let x0 = x0.clamp(0.0, a);
            let l = a - x0;
            sol.trace_coeffs
                .iter()
                .zip(&sol.gammas)
                .map(|(d, &g)| {
                    let e = (-2.0 * g * a).exp();
                    let num = (-2.0 * g * x0).exp() * -(-4.0 * g * l).exp_m1() / (2.0 * g) - 2.0 * l * e;
                    d * d * 0.5 * sol.width * num / (1.0 - e).powi(2)
                })
                .sum::<f64>()
                .max(0.0)
        })
        .collect();
    DecayProfile {
        mode: sol.mode,
        lambda: sol.lambda,
        x0: grid.to_vec(),
        values,
        kind: ProfileKind::Subregion,
        coordinate: CoordinateKind::Cartesian,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_catalog_domain, CatalogParams, ShapeId};
    use crate::mesh::mesh_at_level;

    #[test]
    fn square_and_strip_spectra() {
        let s = rectangle_spectrum(1.0, 1.0, 3).unwrap();
        let l: Vec<f64> = s.iter().map(|m| m.lambda / (PI * PI)).collect();
        assert_eq!(l, vec![2.0, 5.0, 5.0]);
        assert_eq!((s[1].m, s[1].n, s[2].m, s[2].n), (1, 2, 2, 1));
        assert!((transverse_eigenvalue(0.25, 1) - 157.91).abs() < 5e-3);
        assert!((transverse_eigenvalue(0.25 / 2f64.sqrt(), 1) - 315.83).abs() < 5e-3);
        assert!(rectangle_spectrum(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn sine_integral_matches_quadrature() {
        let (t0, t1, f0, f1, k) = (0.1, 0.35, -0.4, 1.3, 7.0);
        let n = 20000;
        let h = (t1 - t0) / n as f64;
        let mid: f64 = (0..n)
            .map(|i| {
                let t = t0 + (i as f64 + 0.5) * h;
                (f0 + (f1 - f0) * (t - t0) / (t1 - t0)) * (k * t).sin() * h
            })
            .sum();
        assert!((linear_sine_integral(t0, t1, f0, f1, k) - mid).abs() < 1e-9);
    }

    fn synthetic_pair(mesh: &Mesh, sol_like: impl Fn(Point) -> f64, lambda: f64) -> EigenPair {
        EigenPair {
            index: 1,
            lambda,
            vector: mesh.nodes.iter().map(|p| sol_like(*p)).collect(),
            residual_norm: 0.0,
            cluster: None,
        }
    }

    #[test]
    fn single_sine_trace_gives_one_term() {
        let spec = build_catalog_domain(ShapeId::A, &CatalogParams::default()).unwrap();
        let mesh = mesh_at_level(&spec, 0.3, 4).unwrap();
        let (lambda, b, a) = (40.0, 0.25, 1.0);
        let g = (PI * PI / (b * b) - lambda).sqrt();
        let y0 = spec.junction[0].a.y.min(spec.junction[0].b.y);
        // The trace of sin(pi t / b) sinh(g a) is piecewise linear on the mesh, so c_1 is
        // close to 1 up to the interpolation error of a sine on the junction nodes.
        let pair = synthetic_pair(&mesh, |p| (g * (a - (p.x - 1.0))).sinh() * (PI * (p.y - y0) / b).sin(), lambda);
        let sol = fit_series(&mesh, &pair, &spec, None).unwrap();
        assert!((sol.coeffs[0].abs() - 1.0).abs() < 2e-3, "{}", sol.coeffs[0]);
        assert!(sol.coeffs[1..].iter().all(|c| c.abs() < 1e-3 * sol.coeffs[0].abs()));
        let j = series_decay_curve(&sol, &[0.0, 0.5, 1.0]);
        assert_eq!(j.values[2], 0.0);
    }

    #[test]
    fn decay_curve_of_one_term_is_closed_form() {
        let g: f64 = 3.0;
        let sol = SeriesSolution {
            mode: 1,
            lambda: 0.0,
            width: 0.5,
            length: 1.0,
            coeffs: vec![1.0 / g.sinh()],
            trace_coeffs: vec![1.0],
            gammas: vec![g],
            tail_fraction: 0.0,
            origin: Point::new(0.0, 0.0),
            along: Point::new(1.0, 0.0),
            across: Point::new(0.0, 1.0),
        };
        let j = series_decay_curve(&sol, &[0.0, 0.3, 0.8, 1.0]);
        for (x0, v) in j.x0.iter().zip(&j.values) {
            let l = 1.0 - x0;
            let exact = 0.25 * ((2.0 * g * l).sinh() / (4.0 * g) - l / 2.0) / g.sinh().powi(2);
            assert!((v - exact).abs() < 1e-14 * exact.max(1e-300) + 1e-300, "{x0} {v} {exact}");
        }
        // Large rates do not overflow.
        let big = SeriesSolution { gammas: vec![900.0], ..sol };
        let j = series_decay_curve(&big, &[0.0, 0.01]);
        assert!(j.values.iter().all(|v| v.is_finite()) && (j.values[1] / j.values[0] - (-18.0f64).exp()).abs() < 1e-12);
        assert!((big.value(0.5, 0.25) - (-450.0f64).exp()).abs() < 1e-200);
    }

    #[test]
    fn rejects_other_branches_and_high_modes() {
        let h = build_catalog_domain(ShapeId::H, &CatalogParams::default()).unwrap();
        let mesh = mesh_at_level(&h, 0.3, 0).unwrap();
        let pair = synthetic_pair(&mesh, |_| 0.0, 1.0);
        assert!(matches!(fit_series(&mesh, &pair, &h, None), Err(OracleError::NotRectangular(_))));
        let a = build_catalog_domain(ShapeId::A, &CatalogParams::default()).unwrap();
        let mesh = mesh_at_level(&a, 0.3, 0).unwrap();
        let pair = synthetic_pair(&mesh, |_| 0.0, 200.0);
        assert!(matches!(fit_series(&mesh, &pair, &a, None), Err(OracleError::NotApplicable { .. })));
    }
}
