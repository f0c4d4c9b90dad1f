use super::{edge_key, BoundaryEdge, Mesh};
use std::collections::HashMap;

/// Splits every triangle into four through its edge midpoints. Midpoints of boundary
/// edges on a circular arc are moved onto the arc.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut nodes = mesh.nodes.clone();
    let arc_of: HashMap<(usize, usize), usize> = mesh
        .boundary_edges
        .iter()
        .filter_map(|e| e.arc.map(|a| (edge_key(e.nodes[0], e.nodes[1]), a)))
        .collect();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(mesh.triangles.len() * 2);
    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<_>| -> usize {
        let key = edge_key(a, b);
        *mid.entry(key).or_insert_with(|| {
            let mut p = (nodes[a] + nodes[b]) * 0.5;
            if let Some(&arc) = arc_of.get(&key) {
                p = mesh.arcs[arc].project(p);
            }
            nodes.push(p);
            nodes.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(mesh.triangles.len() * 4);
    let mut in_branch = Vec::with_capacity(mesh.triangles.len() * 4);
    for (t, &b) in mesh.triangles.iter().zip(&mesh.in_branch) {
        let [i, j, k] = *t;
        let ij = midpoint(i, j, &mut nodes);
        let jk = midpoint(j, k, &mut nodes);
        let ki = midpoint(k, i, &mut nodes);
        triangles.extend([[i, ij, ki], [ij, j, jk], [ki, jk, k], [ij, jk, ki]]);
        in_branch.extend([b; 4]);
    }
    let mut boundary_edges = Vec::with_capacity(mesh.boundary_edges.len() * 2);
    for e in &mesh.boundary_edges {
        let m = mid[&edge_key(e.nodes[0], e.nodes[1])];
        boundary_edges.push(BoundaryEdge { nodes: [e.nodes[0], m], ..*e });
        boundary_edges.push(BoundaryEdge { nodes: [m, e.nodes[1]], ..*e });
    }
    Mesh {
        nodes,
        triangles,
        in_branch,
        boundary_edges,
        arcs: mesh.arcs.clone(),
        level: mesh.level + 1,
    }
}
