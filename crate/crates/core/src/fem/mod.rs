//! P1 stiffness and mass matrices with Dirichlet nodes eliminated.

mod sparse;

pub use sparse::SparseSymmetric;

use crate::geometry::{Marker, MirrorLine};
use crate::mesh::Mesh;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FemError {
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("every node is constrained; nothing to solve")]
    NoFreeNodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Boundary condition per edge marker, with a fallback for markers not listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub default: BcKind,
    #[serde(default)]
    pub overrides: BTreeMap<Marker, BcKind>,
    /// Nodes on this line are held at zero, selecting modes odd about it.
    #[serde(default)]
    pub symmetry_plane: Option<MirrorLine>,
}

impl BoundaryCondition {
    pub fn dirichlet() -> Self {
        BoundaryCondition { default: BcKind::Dirichlet, overrides: BTreeMap::new(), symmetry_plane: None }
    }

    pub fn neumann() -> Self {
        BoundaryCondition { default: BcKind::Neumann, ..Self::dirichlet() }
    }

    pub fn with(mut self, marker: Marker, kind: BcKind) -> Self {
        self.overrides.insert(marker, kind);
        self
    }

    pub fn kind(&self, marker: Marker) -> BcKind {
        self.overrides.get(&marker).copied().unwrap_or(self.default)
    }

    pub fn has_dirichlet(&self, mesh: &Mesh) -> bool {
        self.symmetry_plane.is_some()
            || mesh.boundary_edges.iter().any(|e| self.kind(e.marker) == BcKind::Dirichlet)
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |k: BcKind| match k {
            BcKind::Dirichlet => "dirichlet",
            BcKind::Neumann => "neumann",
        };
        write!(f, "{}", name(self.default))?;
        for (m, k) in &self.overrides {
            write!(f, ",{}={}", m.0, name(*k))?;
        }
        if let Some(s) = &self.symmetry_plane {
            write!(f, ",odd@({},{})+t({},{})", s.point.x, s.point.y, s.direction.x, s.direction.y)?;
        }
        Ok(())
    }
}

/// Numbering of the unconstrained nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeMap {
    /// Reduced index of each mesh node, `None` for Dirichlet nodes.
    pub to_reduced: Vec<Option<usize>>,
    /// Mesh node of each reduced index.
    pub to_full: Vec<usize>,
}

impl FreeMap {
    pub fn num_free(&self) -> usize {
        self.to_full.len()
    }

    /// Nodal vector with zeros on the constrained nodes.
    pub fn extend(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.to_reduced.len()];
        for (r, &node) in self.to_full.iter().enumerate() {
            full[node] = reduced[r];
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.to_full.iter().map(|&n| full[n]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub stiffness: SparseSymmetric,
    pub mass: SparseSymmetric,
    pub free: FreeMap,
}

/// Element stiffness `(b_i b_j + c_i c_j) / (4 S)` and consistent mass `S / 12 (1 + delta_ij)`.
pub fn element_matrices(p: [crate::geometry::Point; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3], f64) {
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = p[j].y - p[k].y;
        c[i] = p[k].x - p[j].x;
    }
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            me[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (ke, me, area)
}

pub fn dirichlet_nodes(mesh: &Mesh, bc: &BoundaryCondition) -> Vec<bool> {
    let mut fixed = vec![false; mesh.nodes.len()];
    for e in &mesh.boundary_edges {
        if bc.kind(e.marker) == BcKind::Dirichlet {
            fixed[e.nodes[0]] = true;
            fixed[e.nodes[1]] = true;
        }
    }
    if let Some(line) = &bc.symmetry_plane {
        for (i, p) in mesh.nodes.iter().enumerate() {
            if line.distance(*p) <= 1e-12 {
                fixed[i] = true;
            }
        }
    }
    fixed
}

/// Assembles on free nodes only; contributions are summed in element order.
pub fn assemble(mesh: &Mesh, bc: &BoundaryCondition) -> Result<Assembly, FemError> {
    mesh.validate().map_err(|e| FemError::Mesh(e.to_string()))?;
    let fixed = dirichlet_nodes(mesh, bc);
    let mut to_reduced = vec![None; mesh.nodes.len()];
    let mut to_full = Vec::new();
    for (i, f) in fixed.iter().enumerate() {
        if !f {
            to_reduced[i] = Some(to_full.len());
            to_full.push(i);
        }
    }
    if to_full.is_empty() {
        return Err(FemError::NoFreeNodes);
    }
    let n = to_full.len();
    let mut kt = Vec::with_capacity(mesh.triangles.len() * 9);
    let mut mt = Vec::with_capacity(mesh.triangles.len() * 9);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (ke, me, _) = element_matrices(mesh.corners(t));
        for a in 0..3 {
            let Some(i) = to_reduced[tri[a]] else { continue };
            for b in 0..3 {
                let Some(j) = to_reduced[tri[b]] else { continue };
                kt.push((i, j, ke[a][b]));
                mt.push((i, j, me[a][b]));
            }
        }
    }
    Ok(Assembly {
        stiffness: SparseSymmetric::from_triplets(n, kt),
        mass: SparseSymmetric::from_triplets(n, mt),
        free: FreeMap { to_reduced, to_full },
    })
}
