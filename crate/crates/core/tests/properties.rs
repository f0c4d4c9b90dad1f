use branchdecay::analysis::{profile_i, profile_j, uniform_grid, DecayProfile};
use branchdecay::eigen::{solve_on_mesh, EigenPair, MeshEigen};
use branchdecay::fem::{assemble, BoundaryCondition};
use branchdecay::geometry::{build_catalog_domain, rotate_to_axis, threshold, CatalogParams, DomainSpec, Marker, Point, ShapeId};
use branchdecay::mesh::{mesh_at_level, refine, Mesh, DEFAULT_BASE_H};
use proptest::prelude::*;
use std::collections::HashSet;
use std::sync::OnceLock;

struct Solved {
    spec: DomainSpec,
    mesh: Mesh,
    eig: MeshEigen,
}

const LEVEL: u32 = 2;
const NEV: usize = 10;

fn solved(shape: ShapeId) -> &'static Solved {
    static CACHE: OnceLock<Vec<Solved>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        ShapeId::ALL
            .iter()
            .map(|&s| {
                let spec = build_catalog_domain(s, &CatalogParams::default()).unwrap();
                let mesh = mesh_at_level(&spec, DEFAULT_BASE_H, LEVEL).unwrap();
                let eig = solve_on_mesh(&mesh, &BoundaryCondition::dirichlet(), NEV).unwrap();
                Solved { spec, mesh, eig }
            })
            .collect()
    });
    &all[ShapeId::ALL.iter().position(|s| *s == shape).unwrap()]
}

fn any_shape() -> impl Strategy<Value = ShapeId> {
    prop::sample::select(ShapeId::ALL.to_vec())
}

fn triangle() -> impl Strategy<Value = [Point; 3]> {
    let p = || (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| Point::new(x, y));
    [p(), p(), p()].prop_filter("non-degenerate", |t| (t[1] - t[0]).cross(t[2] - t[0]).abs() > 1e-2).prop_map(|mut t| {
        if (t[1] - t[0]).cross(t[2] - t[0]) < 0.0 {
            t.swap(1, 2);
        }
        t
    })
}

fn one_triangle(t: [Point; 3]) -> Mesh {
    Mesh {
        nodes: t.to_vec(),
        triangles: vec![[0, 1, 2]],
        in_branch: vec![false],
        boundary_edges: (0..3)
            .map(|i| branchdecay::mesh::BoundaryEdge { nodes: [i, (i + 1) % 3], marker: Marker::BASIC, arc: None })
            .collect(),
        arcs: Vec::new(),
        level: 0,
    }
}

fn edge_count(m: &Mesh) -> usize {
    m.triangles
        .iter()
        .flat_map(|t| (0..3).map(move |i| (t[i].min(t[(i + 1) % 3]), t[i].max(t[(i + 1) % 3]))))
        .collect::<HashSet<_>>()
        .len()
}

/// Rotates the vectors of two eigenpairs by `angle` within their span.
fn mixed(a: &EigenPair, b: &EigenPair, angle: f64) -> (EigenPair, EigenPair) {
    let (s, c) = angle.sin_cos();
    let mut u = a.clone();
    let mut v = b.clone();
    u.vector = a.vector.iter().zip(&b.vector).map(|(x, y)| c * x + s * y).collect();
    v.vector = a.vector.iter().zip(&b.vector).map(|(x, y)| -s * x + c * y).collect();
    (u, v)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn refinement_quadruples_and_stays_conforming(t in triangle(), levels in 1u32..4) {
        let mut m = one_triangle(t);
        let area = m.total_area();
        for _ in 0..levels {
            let (n, e, k) = (m.num_nodes(), edge_count(&m), m.num_triangles());
            m = refine(&m);
            prop_assert_eq!(m.num_triangles(), 4 * k);
            prop_assert_eq!(m.num_nodes(), n + e);
            prop_assert!(m.validate().is_ok());
        }
        prop_assert!((m.total_area() - area).abs() <= 1e-12 * area.max(1.0));
    }

    #[test]
    fn catalog_refinement_quadruples(shape in any_shape()) {
        let spec = build_catalog_domain(shape, &CatalogParams::default()).unwrap();
        let m0 = mesh_at_level(&spec, DEFAULT_BASE_H, 0).unwrap();
        let m1 = refine(&m0);
        prop_assert_eq!(m1.num_triangles(), 4 * m0.num_triangles());
        prop_assert!(m1.edge_counts().values().all(|c| *c <= 2));
    }

    #[test]
    fn free_stiffness_annihilates_constants(shape in any_shape(), level in 0u32..2, c in -5.0..5.0f64) {
        let spec = build_catalog_domain(shape, &CatalogParams::default()).unwrap();
        let mesh = mesh_at_level(&spec, DEFAULT_BASE_H, level).unwrap();
        let asm = assemble(&mesh, &BoundaryCondition::neumann()).unwrap();
        let k1 = asm.stiffness.matvec(&vec![c; asm.stiffness.dim()]);
        let scale = asm.stiffness.row(0).map(|(_, v)| v.abs()).fold(0.0, f64::max);
        prop_assert!(k1.iter().all(|v| v.abs() <= 1e-12 * scale.max(1.0) * c.abs().max(1.0)));
    }

    #[test]
    fn mass_profile_is_monotone_and_exhausted(shape in any_shape(), mode in 1usize..=NEV) {
        let s = solved(shape);
        let grid = uniform_grid(&s.spec, 120);
        let j = profile_j(&s.mesh, &s.eig.pairs[mode - 1], &s.spec, &grid).unwrap();
        prop_assert!(j.values[0] <= 1.0 + 1e-10);
        prop_assert!(j.values.iter().all(|v| *v >= 0.0));
        prop_assert!(j.values.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        prop_assert!(j.values.last().unwrap().abs() <= 1e-14);
    }

    #[test]
    fn section_mass_is_positive_below_threshold(shape in prop::sample::select(vec![ShapeId::A, ShapeId::C, ShapeId::D, ShapeId::G]), mode in 1usize..=NEV) {
        let s = solved(shape);
        let mu = threshold(&s.spec, 201).unwrap().mu;
        let p = &s.eig.pairs[mode - 1];
        prop_assume!(p.lambda < mu);
        let grid = uniform_grid(&s.spec, 120);
        let i = profile_i(&s.mesh, p, &s.spec, &grid).unwrap();
        prop_assert!(i.values[..grid.len() - 1].iter().all(|v| *v > 0.0));
    }

    #[test]
    fn coarse_grid_is_a_restriction(shape in any_shape(), mode in 1usize..=NEV, coarse in 5usize..40, factor in 2usize..5) {
        let s = solved(shape);
        let pair = &s.eig.pairs[mode - 1];
        let fine_grid = uniform_grid(&s.spec, coarse * factor);
        let coarse_grid: Vec<f64> = fine_grid.iter().step_by(factor).copied().collect();
        let fine = profile_j(&s.mesh, pair, &s.spec, &fine_grid).unwrap();
        let sub = profile_j(&s.mesh, pair, &s.spec, &coarse_grid).unwrap();
        for (k, v) in sub.values.iter().enumerate() {
            prop_assert!((v - fine.values[k * factor]).abs() <= 1e-12);
        }
    }

    #[test]
    fn cluster_sum_ignores_the_basis(angle in 0.0..std::f64::consts::TAU) {
        // Modes 2 and 3 of the unit square are degenerate.
        let mesh = Mesh::rectangle((0.0, 0.0), (1.0, 1.0), 12, 12, [Marker::BASIC; 4]);
        let spec = build_catalog_domain(ShapeId::A, &CatalogParams::default()).unwrap();
        let eig = solve_on_mesh(&mesh, &BoundaryCondition::dirichlet(), 3).unwrap();
        let (a, b) = (&eig.pairs[1], &eig.pairs[2]);
        prop_assert_eq!(a.cluster, b.cluster);
        let grid: Vec<f64> = (0..=20).map(|k| 0.8 + 0.01 * k as f64).collect();
        let sum = |p: &EigenPair, q: &EigenPair| {
            DecayProfile::summed(&[profile_j(&mesh, p, &spec, &grid).unwrap(), profile_j(&mesh, q, &spec, &grid).unwrap()]).unwrap()
        };
        let base = sum(a, b);
        let (u, v) = mixed(a, b, angle);
        let rotated = sum(&u, &v);
        let swapped = sum(b, a);
        for k in 0..grid.len() {
            prop_assert!((base.values[k] - rotated.values[k]).abs() <= 1e-10);
            prop_assert!((base.values[k] - swapped.values[k]).abs() <= 1e-10);
        }
    }

    #[test]
    fn threshold_ignores_rigid_motion(shape in any_shape(), angle in -3.0..3.0f64, dx in -2.0..2.0f64, dy in -2.0..2.0f64) {
        let spec = build_catalog_domain(shape, &CatalogParams::default()).unwrap();
        let moved = spec.transformed(angle, Point::new(dx, dy));
        let (t0, t1) = (threshold(&spec, 201).unwrap(), threshold(&moved, 201).unwrap());
        prop_assert!((t0.mu - t1.mu).abs() <= 1e-9 * t0.mu);
    }

    #[test]
    fn rotation_to_an_axis_is_undone_by_its_inverse(shape in prop::sample::select(vec![ShapeId::A, ShapeId::C, ShapeId::E, ShapeId::G]), angle in -3.0..3.0f64) {
        let spec = build_catalog_domain(shape, &CatalogParams::default()).unwrap();
        let d = Point::new(angle.cos(), angle.sin());
        let rotated = rotate_to_axis(&spec, d).unwrap();
        let back = rotated.transformed(d.y.atan2(d.x), Point::new(0.0, 0.0));
        for (p, q) in spec.basic.vertices.iter().chain(&spec.branch.vertices).zip(back.basic.vertices.iter().chain(&back.branch.vertices)) {
            prop_assert!(p.dist(*q) <= 1e-12, "{:?} vs {:?}", p, q);
        }
    }

    #[test]
    fn eigenpairs_are_normalized_and_accurate(w in 0.5..2.0f64, h in 0.5..2.0f64) {
        let mesh = Mesh::rectangle((0.0, 0.0), (w, h), 10, 10, [Marker::BASIC; 4]);
        let bc = BoundaryCondition::dirichlet();
        let eig = solve_on_mesh(&mesh, &bc, 6).unwrap();
        let asm = assemble(&mesh, &bc).unwrap();
        for (i, p) in eig.pairs.iter().enumerate() {
            prop_assert!(p.residual_norm <= 1e-8);
            let u = asm.free.restrict(&p.vector);
            prop_assert!((asm.mass.inner(&u, &u) - 1.0).abs() <= 1e-10);
            for q in &eig.pairs[..i] {
                prop_assert!(q.lambda <= p.lambda);
                prop_assert!(asm.mass.inner(&u, &asm.free.restrict(&q.vector)).abs() <= 1e-8);
            }
        }
    }
}
