//! Conforming P1 triangle meshes of a domain and their uniform refinement.

mod generate;
mod io;
mod refine;

pub use generate::generate;
pub use io::MESH_FORMAT_VERSION;
pub use refine::refine;

use crate::geometry::{ArcGeom, GeometryError, Marker, Point};
use sha2::{Digest, Sha256};
use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("target edge length must be positive and finite, got {0}")]
    InvalidSize(f64),
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub marker: Marker,
    /// Index into [`Mesh::arcs`] when the edge approximates a circular arc.
    pub arc: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    /// Whether each triangle lies in the branch rather than the basic domain.
    pub in_branch: Vec<bool>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub arcs: Vec<ArcGeom>,
    pub level: u32,
}

/// Base edge length giving about a hundred triangles at level 0 for the catalog shapes.
pub const DEFAULT_BASE_H: f64 = 0.3;

/// Initial mesh with edges at most `base_h`, refined `level` times.
pub fn mesh_at_level(spec: &crate::geometry::DomainSpec, base_h: f64, level: u32) -> Result<Mesh, MeshError> {
    let mut m = generate(spec, base_h)?;
    for _ in 0..level {
        m = refine(&m);
    }
    Ok(m)
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [i, j, k] = self.triangles[t];
        [self.nodes[i], self.nodes[j], self.nodes[k]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn branch_area(&self) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.in_branch[t])
            .map(|t| self.signed_area(t))
            .sum()
    }

    /// Number of triangles using each undirected edge.
    pub fn edge_counts(&self) -> HashMap<(usize, usize), u32> {
        let mut counts = HashMap::with_capacity(self.triangles.len() * 2);
        for t in &self.triangles {
            for e in 0..3 {
                *counts.entry(edge_key(t[e], t[(e + 1) % 3])).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |e| (t[e], t[(e + 1) % 3])))
            .map(|(a, b)| self.nodes[a].dist(self.nodes[b]))
            .fold(0.0, f64::max)
    }

    /// Nodes touching a boundary edge whose marker satisfies `pick`.
    pub fn boundary_nodes(&self, mut pick: impl FnMut(Marker) -> bool) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| pick(e.marker))
            .flat_map(|e| e.nodes)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn markers(&self) -> Vec<Marker> {
        let mut m: Vec<Marker> = self.boundary_edges.iter().map(|e| e.marker).collect();
        m.sort();
        m.dedup();
        m
    }

    /// Structured mesh of `[x0, x1] x [y0, y1]` with `nx * ny` cells, each cut along its
    /// rising diagonal. `markers` label the bottom, right, top and left sides.
    pub fn rectangle(
        (x0, y0): (f64, f64),
        (x1, y1): (f64, f64),
        nx: usize,
        ny: usize,
        markers: [Marker; 4],
    ) -> Mesh {
        assert!(nx > 0 && ny > 0 && x1 > x0 && y1 > y0);
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
                let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
                nodes.push(Point::new(x, y));
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
        let mut side = |a: usize, b: usize, m: Marker| {
            boundary_edges.push(BoundaryEdge { nodes: [a, b], marker: m, arc: None })
        };
        for i in 0..nx {
            side(id(i, 0), id(i + 1, 0), markers[0]);
        }
        for j in 0..ny {
            side(id(nx, j), id(nx, j + 1), markers[1]);
        }
        for i in (0..nx).rev() {
            side(id(i + 1, ny), id(i, ny), markers[2]);
        }
        for j in (0..ny).rev() {
            side(id(0, j + 1), id(0, j), markers[3]);
        }
        Mesh {
            in_branch: vec![false; triangles.len()],
            nodes,
            triangles,
            boundary_edges,
            arcs: Vec::new(),
            level: 0,
        }
    }

    /// Triangles for which `keep` holds, with unused nodes dropped. Edges that become open
    /// keep their marker when they were boundary edges before and get `cut_marker` otherwise.
    pub fn submesh(&self, mut keep: impl FnMut(usize) -> bool, cut_marker: Marker) -> Mesh {
        let kept: Vec<usize> = (0..self.triangles.len()).filter(|&t| keep(t)).collect();
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for &t in &kept {
            for &i in &self.triangles[t] {
                if new_id[i] == usize::MAX {
                    new_id[i] = nodes.len();
                    nodes.push(self.nodes[i]);
                }
            }
        }
        let triangles: Vec<[usize; 3]> = kept.iter().map(|&t| self.triangles[t].map(|i| new_id[i])).collect();
        let old: HashMap<(usize, usize), &BoundaryEdge> = self
            .boundary_edges
            .iter()
            .map(|e| (edge_key(e.nodes[0], e.nodes[1]), e))
            .collect();
        let mut counts: HashMap<(usize, usize), u32> = HashMap::new();
        for &t in &kept {
            let tri = self.triangles[t];
            for e in 0..3 {
                *counts.entry(edge_key(tri[e], tri[(e + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut boundary_edges = Vec::new();
        for &t in &kept {
            let tri = self.triangles[t];
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                if counts[&edge_key(a, b)] != 1 {
                    continue;
                }
                let (marker, arc) = match old.get(&edge_key(a, b)) {
                    Some(be) => (be.marker, be.arc),
                    None => (cut_marker, None),
                };
                boundary_edges.push(BoundaryEdge { nodes: [new_id[a], new_id[b]], marker, arc });
            }
        }
        Mesh {
            nodes,
            triangles,
            in_branch: kept.iter().map(|&t| self.in_branch[t]).collect(),
            boundary_edges,
            arcs: self.arcs.clone(),
            level: self.level,
        }
    }

    /// Checks orientation, conformity and the boundary edge list.
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.in_branch.len() != self.triangles.len() {
            return Err(MeshError::Invalid("region flags do not match triangles".into()));
        }
        let n = self.nodes.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(MeshError::Invalid(format!("triangle {t} references a missing node")));
            }
            if !(self.signed_area(t) > 0.0) {
                return Err(MeshError::Invalid(format!("triangle {t} is not counter-clockwise")));
            }
        }
        let counts = self.edge_counts();
        if let Some((e, c)) = counts.iter().find(|(_, &c)| c > 2) {
            return Err(MeshError::Invalid(format!("edge {e:?} shared by {c} triangles")));
        }
        let mut declared = HashMap::with_capacity(self.boundary_edges.len());
        for be in &self.boundary_edges {
            if be.arc.is_some_and(|a| a >= self.arcs.len()) {
                return Err(MeshError::Invalid("boundary edge references a missing arc".into()));
            }
            let key = edge_key(be.nodes[0], be.nodes[1]);
            if declared.insert(key, ()).is_some() {
                return Err(MeshError::Invalid(format!("boundary edge {key:?} listed twice")));
            }
            if counts.get(&key) != Some(&1) {
                return Err(MeshError::Invalid(format!(
                    "boundary edge {key:?} is not on exactly one triangle"
                )));
            }
        }
        // A hanging node would leave an undeclared edge with a single triangle.
        let open = counts.values().filter(|&&c| c == 1).count();
        if open != declared.len() {
            return Err(MeshError::Invalid(format!(
                "{open} single-triangle edges but {} boundary edges",
                declared.len()
            )));
        }
        Ok(())
    }

    /// Hash of the node coordinates and connectivity, used to tie eigenvectors to their mesh.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.level.to_le_bytes());
        h.update((self.nodes.len() as u64).to_le_bytes());
        for p in &self.nodes {
            h.update(p.x.to_bits().to_le_bytes());
            h.update(p.y.to_bits().to_le_bytes());
        }
        h.update((self.triangles.len() as u64).to_le_bytes());
        for (t, f) in self.triangles.iter().zip(&self.in_branch) {
            for i in t {
                h.update((*i as u64).to_le_bytes());
            }
            h.update([*f as u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
