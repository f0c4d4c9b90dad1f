use super::{edge_key, BoundaryEdge, Mesh, MeshError};
use crate::geometry::{
    ArcGeom, Curve, DomainSpec, Edge, HalfPlane, Marker, MirrorLine, Point, Region, Segment,
    GEOM_TOL,
};
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};
use std::collections::{HashMap, HashSet};

/// Marker for the cut along a mirror line; never survives into a finished mesh.
const MIRROR_CUT: Marker = Marker(u16::MAX);
const MATCH_TOL: f64 = 1e-9;

/// Constrained Delaunay mesh of `spec` with every edge no longer than `target_h`.
///
/// Domains with a mirror line are meshed on one half and reflected, so the mesh
/// itself is symmetric.
pub fn generate(spec: &DomainSpec, target_h: f64) -> Result<Mesh, MeshError> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(MeshError::InvalidSize(target_h));
    }
    let raw = match &spec.mirror {
        Some(m) => {
            let half = m.left_half();
            let basic = clip(&spec.basic, half)?;
            let branch = clip(&spec.branch, half)?;
            mirror_merge(triangulate(&basic, &branch, &[], target_h)?, m)
        }
        None => {
            let mut raw = triangulate(&spec.basic, &spec.branch, &spec.slits, target_h)?;
            for s in &spec.slits {
                split_slit(&mut raw, s);
            }
            raw
        }
    };
    finish(spec, raw)
}

struct Raw {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    in_branch: Vec<bool>,
    duplicate: Vec<bool>,
}

/// Ordered boundary points of a region after splitting at `breaks` and subdividing to `h`.
struct Boundary {
    points: Vec<Point>,
    constraints: Vec<(usize, usize)>,
    arc_chords: Vec<(usize, usize, ArcGeom)>,
}

fn edge_param(e: &Edge, p: Point) -> f64 {
    match e.arc_params() {
        None => {
            let d = e.b - e.a;
            (p - e.a).dot(d) / d.dot(d)
        }
        Some((c, _, t0, sweep)) => {
            let theta = (p - c).angle();
            let rel = if sweep >= 0.0 {
                (theta - t0).rem_euclid(std::f64::consts::TAU)
            } else {
                (t0 - theta).rem_euclid(std::f64::consts::TAU)
            };
            rel / sweep.abs()
        }
    }
}

fn sub_edge(e: &Edge, a: Point, b: Point) -> Edge {
    Edge { a, b, ..*e }
}

/// Splits `e` at the break points lying on it.
fn split_edge(e: &Edge, breaks: &[Point]) -> Vec<Edge> {
    let mut ts: Vec<(f64, Point)> = breaks
        .iter()
        .filter(|p| {
            e.distance(**p) <= MATCH_TOL && p.dist(e.a) > MATCH_TOL && p.dist(e.b) > MATCH_TOL
        })
        .map(|p| (edge_param(e, *p), *p))
        .collect();
    ts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = Vec::with_capacity(ts.len() + 1);
    let mut prev = e.a;
    for (_, p) in ts {
        out.push(sub_edge(e, prev, p));
        prev = p;
    }
    out.push(sub_edge(e, prev, e.b));
    out
}

/// Points of `e` (endpoints included) spaced so that no chord exceeds `h`. Subdivision runs
/// from the lexicographically smaller endpoint so shared edges produce identical points.
fn subdivide(e: &Edge, h: f64, min_pieces: usize) -> Vec<Point> {
    let forward = (e.a.x, e.a.y) <= (e.b.x, e.b.y);
    let oriented = if forward {
        *e
    } else {
        Edge {
            a: e.b,
            b: e.a,
            curve: match e.curve {
                Curve::Straight => Curve::Straight,
                Curve::Arc { center, clockwise } => Curve::Arc { center, clockwise: !clockwise },
            },
            marker: e.marker,
        }
    };
    let n = ((oriented.length() / h).ceil() as usize).max(min_pieces).max(1);
    let mut pts: Vec<Point> = (0..=n)
        .map(|i| match i {
            0 => oriented.a,
            _ if i == n => oriented.b,
            _ => oriented.point_at(i as f64 / n as f64),
        })
        .collect();
    if !forward {
        pts.reverse();
    }
    pts
}

struct Registry {
    points: Vec<Point>,
}

impl Registry {
    fn index(&mut self, p: Point) -> usize {
        if let Some(i) = self.points.iter().position(|q| q.dist(p) <= MATCH_TOL) {
            return i;
        }
        self.points.push(p);
        self.points.len() - 1
    }
}

fn trace_region(region: &Region, breaks: &[Point], h: f64, reg: &mut Registry) -> Boundary {
    let mut b = Boundary { points: Vec::new(), constraints: Vec::new(), arc_chords: Vec::new() };
    for e in region.edges() {
        for piece in split_edge(&e, breaks) {
            let pts = subdivide(&piece, h, 1);
            let ids: Vec<usize> = pts.iter().map(|p| reg.index(*p)).collect();
            for w in ids.windows(2) {
                b.constraints.push((w[0], w[1]));
                if let Some(g) = piece.arc_geom() {
                    b.arc_chords.push((w[0], w[1], g));
                }
            }
            b.points.extend(pts[..pts.len() - 1].iter().copied());
        }
    }
    b
}

fn triangulate(basic: &Region, branch: &Region, slits: &[Segment], h: f64) -> Result<Raw, MeshError> {
    let breaks: Vec<Point> = basic
        .vertices
        .iter()
        .chain(branch.vertices.iter())
        .copied()
        .chain(slits.iter().flat_map(|s| [s.a, s.b]))
        .collect();
    let mut reg = Registry { points: Vec::new() };
    let basic_b = trace_region(basic, &breaks, h, &mut reg);
    let branch_b = trace_region(branch, &breaks, h, &mut reg);
    let mut constraints: Vec<(usize, usize)> = basic_b
        .constraints
        .iter()
        .chain(branch_b.constraints.iter())
        .copied()
        .collect();
    for s in slits {
        let e = Edge { a: s.a, b: s.b, curve: Curve::Straight, marker: Marker::SLIT };
        for piece in split_edge(&e, &breaks) {
            let ids: Vec<usize> = subdivide(&piece, h, 2).iter().map(|p| reg.index(*p)).collect();
            constraints.extend(ids.windows(2).map(|w| (w[0], w[1])));
        }
    }
    let mut seen = HashSet::new();
    constraints.retain(|&(a, b)| a != b && seen.insert(edge_key(a, b)));
    let (arc_chords, arc_of_chord): (Vec<Segment>, Vec<ArcGeom>) = basic_b
        .arc_chords
        .iter()
        .chain(branch_b.arc_chords.iter())
        .map(|&(i, j, g)| (Segment::new(reg.points[i], reg.points[j]), g))
        .unzip();

    // Classify triangles against the polygons through the boundary points, so triangles
    // hugging an arc are judged by the same polyline the mesh actually follows.
    let basic_poly = Region::polygon(basic_b.points, Marker::BASIC);
    let branch_poly = Region::polygon(branch_b.points, Marker::BRANCH);

    let mut area = 3f64.sqrt() / 4.0 * h * h;
    for _ in 0..40 {
        let raw = run_cdt(&reg.points, &constraints, &arc_chords, &arc_of_chord, area, &basic_poly, &branch_poly)?;
        let longest = raw
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |e| (t[e], t[(e + 1) % 3])))
            .map(|(a, b)| raw.nodes[a].dist(raw.nodes[b]))
            .fold(0.0, f64::max);
        if longest <= h * (1.0 + 1e-12) {
            return Ok(raw);
        }
        area *= 0.8 * (h / longest).powi(2).min(1.0);
    }
    Err(MeshError::Triangulation(format!(
        "could not reach edge length {h} by area refinement"
    )))
}

fn run_cdt(
    points: &[Point],
    constraints: &[(usize, usize)],
    arc_chords: &[Segment],
    arcs: &[ArcGeom],
    max_area: f64,
    basic: &Region,
    branch: &Region,
) -> Result<Raw, MeshError> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut handles = Vec::with_capacity(points.len());
    for p in points {
        let h = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
        handles.push(h);
    }
    for &(a, b) in constraints {
        if !cdt.can_add_constraint(handles[a], handles[b]) {
            return Err(MeshError::Triangulation(format!(
                "boundary segment ({}, {})-({}, {}) crosses another",
                points[a].x, points[a].y, points[b].x, points[b].y
            )));
        }
        cdt.add_constraint(handles[a], handles[b]);
    }
    let total = basic.area() + branch.area();
    let budget = (200.0 * total / max_area) as usize + 100_000;
    let result = cdt.refine(
        RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(20.0))
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices(budget),
    );
    if !result.refinement_complete {
        return Err(MeshError::Triangulation("quality refinement did not terminate".into()));
    }

    let mut nodes: Vec<Point> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            Point::new(p.x, p.y)
        })
        .collect();
    let mut triangles = Vec::new();
    let mut in_branch = Vec::new();
    for f in cdt.inner_faces() {
        let v = f.vertices();
        let t = [v[0].fix().index(), v[1].fix().index(), v[2].fix().index()];
        let c = (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]) * (1.0 / 3.0);
        let br = branch.contains(c);
        if br || basic.contains(c) {
            triangles.push(t);
            in_branch.push(br);
        }
    }
    // After classification, vertices the refinement put on an arc chord are moved onto the arc.
    for p in nodes.iter_mut().skip(points.len()) {
        if let Some(k) = arc_chords.iter().position(|s| s.distance(*p) <= MATCH_TOL) {
            *p = arcs[k].project(*p);
        }
    }
    // Drop vertices not used by a kept triangle.
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut kept = Vec::new();
    for t in triangles.iter_mut() {
        for i in t.iter_mut() {
            if remap[*i] == usize::MAX {
                remap[*i] = kept.len();
                kept.push(nodes[*i]);
            }
            *i = remap[*i];
        }
    }
    nodes = kept;
    for (k, t) in triangles.iter().enumerate() {
        let [a, b, c] = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
        if (b - a).cross(c - a) <= 0.0 {
            return Err(MeshError::Triangulation(format!("triangle {k} inverted")));
        }
    }
    let duplicate = vec![false; nodes.len()];
    Ok(Raw { nodes, triangles, in_branch, duplicate })
}

/// Gives triangles on the right of the slit their own copies of the nodes strictly inside it,
/// turning the slit into two boundary faces. The end points stay shared.
fn split_slit(raw: &mut Raw, s: &Segment) {
    let inner: HashSet<usize> = (0..raw.nodes.len())
        .filter(|&i| {
            let p = raw.nodes[i];
            s.distance(p) <= MATCH_TOL && p.dist(s.a) > MATCH_TOL && p.dist(s.b) > MATCH_TOL
        })
        .collect();
    let mut copies: HashMap<usize, usize> = HashMap::new();
    let d = s.b - s.a;
    for t in raw.triangles.iter_mut() {
        if !t.iter().any(|i| inner.contains(i)) {
            continue;
        }
        let c = (raw.nodes[t[0]] + raw.nodes[t[1]] + raw.nodes[t[2]]) * (1.0 / 3.0);
        if d.cross(c - s.a) >= 0.0 {
            continue;
        }
        for i in t.iter_mut() {
            if inner.contains(i) {
                *i = *copies.entry(*i).or_insert_with(|| {
                    raw.nodes.push(raw.nodes[*i]);
                    raw.duplicate.push(true);
                    raw.nodes.len() - 1
                });
            }
        }
    }
}

/// Sutherland-Hodgman clip of a straight-edged region, keeping edge markers.
fn clip(region: &Region, half: HalfPlane) -> Result<Region, MeshError> {
    let n = region.vertices.len();
    let tol = 1e-12;
    let mut out: Vec<(Point, Marker)> = Vec::new();
    for i in 0..n {
        let (p, q) = (region.vertices[i], region.vertices[(i + 1) % n]);
        let m = region.markers[i];
        let (dp, dq) = (half.signed_distance(p), half.signed_distance(q));
        let (inp, inq) = (dp >= -tol, dq >= -tol);
        if inp {
            out.push((p, m));
        }
        if inp != inq {
            let cut = p + (q - p) * (dp / (dp - dq));
            out.push((cut, if inp { MIRROR_CUT } else { m }));
        }
    }
    // A vertex on the line is emitted twice; the later copy carries the right marker.
    let mut dedup: Vec<(Point, Marker)> = Vec::with_capacity(out.len());
    for (p, m) in out {
        if let Some(last) = dedup.last_mut() {
            if last.0.dist(p) <= GEOM_TOL {
                *last = (p, m);
                continue;
            }
        }
        dedup.push((p, m));
    }
    // The closing duplicate only carries a zero-length edge.
    while dedup.len() > 1 && dedup[0].0.dist(dedup[dedup.len() - 1].0) <= GEOM_TOL {
        dedup.pop();
    }
    if dedup.len() < 3 {
        return Err(MeshError::Triangulation("mirror line leaves an empty half".into()));
    }
    Ok(Region {
        curves: vec![Curve::Straight; dedup.len()],
        markers: dedup.iter().map(|v| v.1).collect(),
        vertices: dedup.into_iter().map(|v| v.0).collect(),
    })
}

fn mirror_merge(half: Raw, m: &MirrorLine) -> Raw {
    let n = half.nodes.len();
    let mut nodes = half.nodes.clone();
    let mut image = vec![0usize; n];
    for (i, p) in half.nodes.iter().enumerate() {
        if m.distance(*p) <= 1e-12 {
            image[i] = i;
        } else {
            image[i] = nodes.len();
            nodes.push(m.reflect(*p));
        }
    }
    let mut triangles = half.triangles.clone();
    let mut in_branch = half.in_branch.clone();
    for (t, b) in half.triangles.iter().zip(&half.in_branch) {
        triangles.push([image[t[0]], image[t[2]], image[t[1]]]);
        in_branch.push(*b);
    }
    let duplicate = vec![false; nodes.len()];
    Raw { nodes, triangles, in_branch, duplicate }
}

/// Boundary pieces of the full domain used to label mesh boundary edges: slits first,
/// then branch edges, then basic edges.
fn label_sources(spec: &DomainSpec) -> Vec<Edge> {
    let mut out: Vec<Edge> = spec
        .slits
        .iter()
        .map(|s| Edge { a: s.a, b: s.b, curve: Curve::Straight, marker: Marker::SLIT })
        .collect();
    out.extend(spec.branch.edges());
    out.extend(spec.basic.edges());
    out
}

fn finish(spec: &DomainSpec, raw: Raw) -> Result<Mesh, MeshError> {
    // Deterministic node order: by coordinates, originals before slit copies.
    let mut order: Vec<usize> = (0..raw.nodes.len()).collect();
    order.sort_by(|&i, &j| {
        let (p, q) = (raw.nodes[i], raw.nodes[j]);
        p.x.total_cmp(&q.x)
            .then(p.y.total_cmp(&q.y))
            .then(raw.duplicate[i].cmp(&raw.duplicate[j]))
    });
    let mut rank = vec![0; order.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let nodes: Vec<Point> = order.iter().map(|&i| raw.nodes[i]).collect();
    let mut tris: Vec<([usize; 3], bool)> = raw
        .triangles
        .iter()
        .zip(&raw.in_branch)
        .map(|(t, &b)| {
            let t = [rank[t[0]], rank[t[1]], rank[t[2]]];
            let k = (0..3).min_by_key(|&k| t[k]).unwrap();
            ([t[k], t[(k + 1) % 3], t[(k + 2) % 3]], b)
        })
        .collect();
    tris.sort();

    let mut mesh = Mesh {
        nodes,
        triangles: tris.iter().map(|x| x.0).collect(),
        in_branch: tris.iter().map(|x| x.1).collect(),
        boundary_edges: Vec::new(),
        arcs: Vec::new(),
        level: 0,
    };

    let sources = label_sources(spec);
    let mut open: Vec<[usize; 2]> = Vec::new();
    let counts = mesh.edge_counts();
    for t in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            if counts[&edge_key(a, b)] == 1 {
                open.push([a, b]);
            }
        }
    }
    open.sort_by_key(|e| edge_key(e[0], e[1]));
    for [a, b] in open {
        let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
        let mid = (p + q) * 0.5;
        let src = sources
            .iter()
            .find(|e| {
                e.distance(p) <= MATCH_TOL
                    && e.distance(q) <= MATCH_TOL
                    && (!e.is_straight() || e.distance(mid) <= MATCH_TOL)
            })
            .ok_or_else(|| {
                MeshError::Triangulation(format!(
                    "open edge ({}, {})-({}, {}) is not on the domain boundary",
                    p.x, p.y, q.x, q.y
                ))
            })?;
        let arc = src.arc_geom().map(|g| {
            match mesh
                .arcs
                .iter()
                .position(|h| h.center.dist(g.center) <= GEOM_TOL && (h.radius - g.radius).abs() <= GEOM_TOL)
            {
                Some(i) => i,
                None => {
                    mesh.arcs.push(g);
                    mesh.arcs.len() - 1
                }
            }
        });
        mesh.boundary_edges.push(BoundaryEdge { nodes: [a, b], marker: src.marker, arc });
    }
    mesh.validate()?;
    Ok(mesh)
}
