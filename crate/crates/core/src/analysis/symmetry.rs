use super::AnalysisError;
use crate::eigen::EigenPair;
use crate::fem::{assemble, BoundaryCondition};
use crate::geometry::MirrorLine;
use crate::mesh::Mesh;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryClass {
    Symmetric,
    Antisymmetric,
    /// A cluster whose span holds both kinds.
    Mixed,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub modes: Vec<usize>,
    pub class: SymmetryClass,
    /// `|u o R - u|_M`, worst over the span directions judged symmetric (single modes: the mode).
    pub symmetric_score: f64,
    /// `|u o R + u|_M`, likewise.
    pub antisymmetric_score: f64,
    /// Eigenvalues of the reflection restricted to the span (+1 symmetric, -1 antisymmetric).
    pub parities: Vec<f64>,
}

/// Score below which a mode counts as (anti)symmetric.
pub const SYMMETRY_THRESHOLD: f64 = 1e-3;

/// Node permutation induced by reflecting about `line`; fails unless every node has an image.
pub fn mirror_map(mesh: &Mesh, line: &MirrorLine) -> Result<Vec<usize>, AnalysisError> {
    let mut order: Vec<usize> = (0..mesh.num_nodes()).collect();
    let key = |i: &usize| (mesh.nodes[*i].x, mesh.nodes[*i].y);
    order.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    let xs: Vec<f64> = order.iter().map(|&i| mesh.nodes[i].x).collect();
    let mut map = Vec::with_capacity(mesh.num_nodes());
    for p in &mesh.nodes {
        let q = line.reflect(*p);
        let lo = xs.partition_point(|&x| x < q.x - 1e-9);
        let found = order[lo..]
            .iter()
            .take_while(|&&j| mesh.nodes[j].x <= q.x + 1e-9)
            .find(|&&j| mesh.nodes[j].dist(q) <= 1e-9);
        match found {
            Some(&j) => map.push(j),
            None => {
                return Err(AnalysisError::NotSymmetric(format!("node ({}, {}) has no mirror image", p.x, p.y)))
            }
        }
    }
    Ok(map)
}

pub fn symmetry_classify(mesh: &Mesh, pair: &EigenPair, line: &MirrorLine) -> Result<SymmetryReport, AnalysisError> {
    symmetry_classify_span(mesh, &[pair], line)
}

/// Classifies the span of one or more pairs, e.g. a degenerate cluster, through the
/// reflection operator projected onto that span.
pub fn symmetry_classify_span(mesh: &Mesh, pairs: &[&EigenPair], line: &MirrorLine) -> Result<SymmetryReport, AnalysisError> {
    let map = mirror_map(mesh, line)?;
    if pairs.iter().any(|p| p.vector.len() != mesh.num_nodes()) {
        return Err(AnalysisError::MeshMismatch("eigenvector length differs from node count".into()));
    }
    let mass = assemble(mesh, &BoundaryCondition::neumann())?.mass;
    let k = pairs.len();
    let reflected: Vec<Vec<f64>> = pairs.iter().map(|p| map.iter().map(|&j| p.vector[j]).collect()).collect();
    let mv: Vec<Vec<f64>> = pairs.iter().map(|p| mass.matvec(&p.vector)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let p = Mat::<f64>::from_fn(k, k, |i, j| 0.5 * (dot(&mv[i], &reflected[j]) + dot(&mv[j], &reflected[i])));
    let evd = p.self_adjoint_eigen(Side::Lower).map_err(|_| AnalysisError::NotSymmetric("eigen".into()))?;
    let parities: Vec<f64> = (0..k).map(|i| evd.S()[i]).collect();
    // For M-orthonormal u and an isometric reflection, |Ru -+ u|^2 = 2 -+ 2 <u, Ru>.
    let sym_scores: Vec<f64> = parities.iter().map(|t| (2.0 - 2.0 * t).max(0.0).sqrt()).collect();
    let anti_scores: Vec<f64> = parities.iter().map(|t| (2.0 + 2.0 * t).max(0.0).sqrt()).collect();
    let n_sym = sym_scores.iter().filter(|s| **s < SYMMETRY_THRESHOLD).count();
    let n_anti = anti_scores.iter().filter(|s| **s < SYMMETRY_THRESHOLD).count();
    let class = if n_sym == k {
        SymmetryClass::Symmetric
    } else if n_anti == k {
        SymmetryClass::Antisymmetric
    } else if n_sym + n_anti == k {
        SymmetryClass::Mixed
    } else {
        SymmetryClass::None
    };
    Ok(SymmetryReport {
        modes: pairs.iter().map(|p| p.index).collect(),
        class,
        symmetric_score: sym_scores.iter().copied().fold(f64::INFINITY, f64::min),
        antisymmetric_score: anti_scores.iter().copied().fold(f64::INFINITY, f64::min),
        parities,
    })
}
