//! Branch mass beyond a section, `J(x0)`, and mass on the section, `I(x0)`.

use super::{AnalysisError, CoordinateKind, DecayProfile, ProfileKind};
use crate::eigen::EigenPair;
use crate::geometry::{DomainSpec, HalfPlane, Point};
use crate::mesh::Mesh;
use serde::{Deserialize, Serialize};

/// How `J` integrates `u^2` over triangles cut by the section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Exact integral of the squared piecewise-linear field over the clipped part. Gives
    /// `J(0)` equal to the branch part of `u^T M u` and `J' = -I` exactly.
    #[default]
    Exact,
    /// Clipped area fraction times `S/3` times the sum of squared vertex values.
    ClippedVertex,
    /// Whole triangles with centroid beyond the section, `S/3` times the vertex sum.
    WholeTriangle,
}

/// `n + 1` equally spaced points covering the branch coordinate range.
pub fn uniform_grid(spec: &DomainSpec, n: usize) -> Vec<f64> {
    let a = spec.axis.length();
    let n = n.max(1);
    (0..=n).map(|i| if i == n { a } else { a * i as f64 / n as f64 }).collect()
}

struct BranchTriangle {
    p: [Point; 3],
    u: [f64; 3],
    area: f64,
    lo: f64,
    hi: f64,
}

/// Integral of the square of a linear function over a triangle with vertex values `u`.
fn square_integral(area: f64, u: [f64; 3]) -> f64 {
    let [a, b, c] = u;
    area / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a)
}

fn tri_area(p: [Point; 3]) -> f64 {
    0.5 * (p[1] - p[0]).cross(p[2] - p[0])
}

/// Coordinates within this distance of a triangle's far end count as past it.
const END_TOL: f64 = 1e-12;

fn prepare(mesh: &Mesh, pair: &EigenPair, spec: &DomainSpec, grid: &[f64]) -> Result<Vec<BranchTriangle>, AnalysisError> {
    if pair.vector.len() != mesh.num_nodes() {
        return Err(AnalysisError::MeshMismatch(format!(
            "eigenvector has {} entries, mesh has {} nodes",
            pair.vector.len(),
            mesh.num_nodes()
        )));
    }
    let a = spec.axis.length();
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AnalysisError::Grid("grid must be strictly ascending and nonempty".into()));
    }
    if grid[0] < -1e-12 || grid[grid.len() - 1] > a + 1e-12 {
        return Err(AnalysisError::Grid(format!("grid leaves the branch range [0, {a}]")));
    }
    Ok((0..mesh.num_triangles())
        .filter(|&t| mesh.in_branch[t])
        .map(|t| {
            let tri = mesh.triangles[t];
            let p = mesh.corners(t);
            let s = p.map(|q| spec.axis.coordinate(q));
            BranchTriangle {
                p,
                u: tri.map(|i| pair.vector[i]),
                area: tri_area(p),
                lo: s.iter().copied().fold(f64::INFINITY, f64::min),
                hi: s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect())
}

/// Part of the triangle on the positive side of `hp` as a fan of sub-triangles with
/// interpolated values.
fn clip(t: &BranchTriangle, hp: &HalfPlane) -> Vec<([Point; 3], [f64; 3])> {
    let d = t.p.map(|q| hp.signed_distance(q));
    let mut poly: Vec<(Point, f64)> = Vec::with_capacity(4);
    for i in 0..3 {
        let j = (i + 1) % 3;
        if d[i] >= 0.0 {
            poly.push((t.p[i], t.u[i]));
        }
        if (d[i] > 0.0 && d[j] < 0.0) || (d[i] < 0.0 && d[j] > 0.0) {
            let s = d[i] / (d[i] - d[j]);
            poly.push((t.p[i].lerp(t.p[j], s), t.u[i] + s * (t.u[j] - t.u[i])));
        }
    }
    (1..poly.len().saturating_sub(1))
        .map(|k| ([poly[0].0, poly[k].0, poly[k + 1].0], [poly[0].1, poly[k].1, poly[k + 1].1]))
        .collect()
}

fn coordinate_kind(spec: &DomainSpec) -> CoordinateKind {
    if spec.axis.is_curvilinear() {
        CoordinateKind::ArcLength
    } else {
        CoordinateKind::Cartesian
    }
}

pub fn profile_j(mesh: &Mesh, pair: &EigenPair, spec: &DomainSpec, grid: &[f64]) -> Result<DecayProfile, AnalysisError> {
    profile_j_with(mesh, pair, spec, grid, Quadrature::Exact)
}

pub fn profile_j_with(
    mesh: &Mesh,
    pair: &EigenPair,
    spec: &DomainSpec,
    grid: &[f64],
    quad: Quadrature,
) -> Result<DecayProfile, AnalysisError> {
    let tris = prepare(mesh, pair, spec, grid)?;
    let g = grid.len();
    // Whole-triangle contributions go through a difference array over grid indices.
    let mut diff = vec![0.0; g + 1];
    let mut partial = vec![0.0; g];
    for t in &tris {
        let vertex_sum = t.area / 3.0 * t.u.iter().map(|v| v * v).sum::<f64>();
        let full = match quad {
            Quadrature::Exact => square_integral(t.area, t.u),
            _ => vertex_sum,
        };
        if quad == Quadrature::WholeTriangle {
            let c = (t.p[0] + t.p[1] + t.p[2]) * (1.0 / 3.0);
            let s = spec.axis.coordinate(c);
            let upto = grid.partition_point(|&x| x < s);
            diff[0] += full;
            diff[upto] -= full;
            continue;
        }
        // Grid points at or before the triangle take it whole.
        let whole = grid.partition_point(|&x| x <= t.lo);
        diff[0] += full;
        diff[whole] -= full;
        let end = grid.partition_point(|&x| x < t.hi - END_TOL);
        for k in whole..end {
            let hp = spec.axis.beyond(grid[k]);
            let pieces = clip(t, &hp);
            partial[k] += match quad {
                Quadrature::Exact => pieces.iter().map(|(p, u)| square_integral(tri_area(*p), *u)).sum(),
                _ => vertex_sum * pieces.iter().map(|(p, _)| tri_area(*p)).sum::<f64>() / t.area,
            };
        }
    }
    let mut values = Vec::with_capacity(g);
    let mut acc = 0.0;
    for k in 0..g {
        acc += diff[k];
        values.push((acc + partial[k]).max(0.0));
    }
    Ok(DecayProfile {
        mode: pair.index,
        lambda: pair.lambda,
        x0: grid.to_vec(),
        values,
        kind: ProfileKind::Subregion,
        coordinate: coordinate_kind(spec),
    })
}

/// Exact line integral of `u^2` over the section at each grid point. A triangle counts when
/// the section meets it at or after its near end and before its far end, so an edge lying on
/// the section is counted once and `I` vanishes at the branch end.
pub fn profile_i(mesh: &Mesh, pair: &EigenPair, spec: &DomainSpec, grid: &[f64]) -> Result<DecayProfile, AnalysisError> {
    let tris = prepare(mesh, pair, spec, grid)?;
    let mut values = vec![0.0; grid.len()];
    for t in &tris {
        let first = grid.partition_point(|&x| x < t.lo - END_TOL);
        let end = grid.partition_point(|&x| x < t.hi - END_TOL);
        for k in first..end {
            let hp = spec.axis.beyond(grid[k]);
            let d = t.p.map(|q| hp.signed_distance(q));
            let scale = t.p.iter().map(|q| q.norm()).fold(1.0, f64::max) * 1e-14;
            let mut pts: Vec<(Point, f64)> = Vec::with_capacity(2);
            for i in 0..3 {
                if d[i].abs() <= scale {
                    pts.push((t.p[i], t.u[i]));
                }
            }
            for i in 0..3 {
                let j = (i + 1) % 3;
                if (d[i] > scale && d[j] < -scale) || (d[i] < -scale && d[j] > scale) {
                    let s = d[i] / (d[i] - d[j]);
                    pts.push((t.p[i].lerp(t.p[j], s), t.u[i] + s * (t.u[j] - t.u[i])));
                }
            }
            if pts.len() == 2 {
                let len = pts[0].0.dist(pts[1].0);
                let (a, b) = (pts[0].1, pts[1].1);
                values[k] += len / 3.0 * (a * a + a * b + b * b);
            }
        }
    }
    Ok(DecayProfile {
        mode: pair.index,
        lambda: pair.lambda,
        x0: grid.to_vec(),
        values,
        kind: ProfileKind::CrossSection,
        coordinate: coordinate_kind(spec),
    })
}
