use super::{GeometryError, GEOM_TOL};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Point {
        self * (1.0 / self.norm())
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Boundary label carried from the domain description onto mesh edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Marker(pub u16);

impl Marker {
    pub const BASIC: Marker = Marker(1);
    pub const BRANCH: Marker = Marker(2);
    pub const SLIT: Marker = Marker(3);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn point_at(&self, t: f64) -> Point {
        self.a.lerp(self.b, t)
    }

    /// Distance from `p` to the infinite line through the segment.
    pub fn line_distance(&self, p: Point) -> f64 {
        let d = self.b - self.a;
        (p - self.a).cross(d).abs() / d.norm()
    }

    pub fn distance(&self, p: Point) -> f64 {
        let d = self.b - self.a;
        let t = ((p - self.a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        self.point_at(t).dist(p)
    }

    pub fn contains_point(&self, p: Point) -> bool {
        self.distance(p) <= GEOM_TOL
    }

    /// Interior crossing of two segments (touching at endpoints or collinear overlap excluded).
    pub fn properly_intersects(&self, o: &Segment) -> bool {
        let d1 = (self.b - self.a).cross(o.a - self.a);
        let d2 = (self.b - self.a).cross(o.b - self.a);
        let d3 = (o.b - o.a).cross(self.a - o.a);
        let d4 = (o.b - o.a).cross(self.b - o.a);
        let scale = self.length() * o.length();
        let eps = 1e-12 * scale;
        ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
            && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    }
}

/// `normal . p >= offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

impl HalfPlane {
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Full circle carrying an arc edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcGeom {
    pub center: Point,
    pub radius: f64,
}

impl ArcGeom {
    pub fn project(&self, p: Point) -> Point {
        self.center + (p - self.center).normalized() * self.radius
    }
}

/// Shape of the boundary piece from vertex `i` to vertex `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve {
    Straight,
    /// Circular arc about `center`; radius is the distance to the start vertex.
    Arc { center: Point, clockwise: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: Point,
    pub b: Point,
    pub curve: Curve,
    pub marker: Marker,
}

/// Intersection of a boundary edge with a line `p0 + t * dir`.
#[derive(Debug, Clone, PartialEq)]
pub enum LineHit {
    None,
    Points(Vec<f64>),
    Collinear(f64, f64),
}

impl Edge {
    pub fn is_straight(&self) -> bool {
        matches!(self.curve, Curve::Straight)
    }

    pub fn chord(&self) -> Segment {
        Segment::new(self.a, self.b)
    }

    /// `(center, radius, start angle, signed sweep)` for arcs.
    pub fn arc_params(&self) -> Option<(Point, f64, f64, f64)> {
        match self.curve {
            Curve::Straight => None,
            Curve::Arc { center, clockwise } => {
                let r = self.a.dist(center);
                let t0 = (self.a - center).angle();
                let t1 = (self.b - center).angle();
                let sweep = if clockwise {
                    -(t0 - t1).rem_euclid(2.0 * PI)
                } else {
                    (t1 - t0).rem_euclid(2.0 * PI)
                };
                Some((center, r, t0, sweep))
            }
        }
    }

    pub fn arc_geom(&self) -> Option<ArcGeom> {
        self.arc_params()
            .map(|(center, radius, _, _)| ArcGeom { center, radius })
    }

    /// Whether polar angle `theta` lies on the arc (with an angular tolerance).
    fn arc_covers(t0: f64, sweep: f64, theta: f64, tol: f64) -> bool {
        let rel = if sweep >= 0.0 {
            (theta - t0).rem_euclid(2.0 * PI)
        } else {
            (t0 - theta).rem_euclid(2.0 * PI)
        };
        rel <= sweep.abs() + tol || rel >= 2.0 * PI - tol
    }

    pub fn point_at(&self, s: f64) -> Point {
        match self.arc_params() {
            None => self.a.lerp(self.b, s),
            Some((c, r, t0, sweep)) => {
                let t = t0 + sweep * s;
                c + Point::new(t.cos(), t.sin()) * r
            }
        }
    }

    pub fn length(&self) -> f64 {
        match self.arc_params() {
            None => self.a.dist(self.b),
            Some((_, r, _, sweep)) => r * sweep.abs(),
        }
    }

    /// Outward unit normal at parameter `s` for an edge of a counter-clockwise region.
    pub fn outward_normal(&self, s: f64) -> Point {
        match self.arc_params() {
            None => {
                let d = (self.b - self.a).normalized();
                Point::new(d.y, -d.x)
            }
            Some((c, _, _, sweep)) => {
                let radial = (self.point_at(s) - c).normalized();
                // Counter-clockwise traversal about the center has the region inside the circle.
                if sweep > 0.0 {
                    radial
                } else {
                    -radial
                }
            }
        }
    }

    /// Contribution to `2 * signed area` (the integral of `x dy - y dx`).
    fn area_term(&self) -> f64 {
        match self.arc_params() {
            None => self.a.cross(self.b),
            Some((c, r, _, sweep)) => {
                r * r * sweep + c.x * (self.b.y - self.a.y) - c.y * (self.b.x - self.a.x)
            }
        }
    }

    /// Distance from `p` to the edge curve.
    pub fn distance(&self, p: Point) -> f64 {
        match self.arc_params() {
            None => self.chord().distance(p),
            Some((c, r, t0, sweep)) => {
                let theta = (p - c).angle();
                if Edge::arc_covers(t0, sweep, theta, 0.0) {
                    ((p - c).norm() - r).abs()
                } else {
                    p.dist(self.a).min(p.dist(self.b))
                }
            }
        }
    }

    pub fn intersect_line(&self, p0: Point, dir: Point) -> LineHit {
        match self.arc_params() {
            None => {
                let d = self.b - self.a;
                let denom = dir.cross(d);
                let len = d.norm();
                let off_a = (self.a - p0).cross(dir) / dir.norm();
                if denom.abs() <= 1e-14 * len * dir.norm() {
                    let off_b = (self.b - p0).cross(dir) / dir.norm();
                    if off_a.abs() <= GEOM_TOL && off_b.abs() <= GEOM_TOL {
                        let ta = (self.a - p0).dot(dir) / dir.dot(dir);
                        let tb = (self.b - p0).dot(dir) / dir.dot(dir);
                        return LineHit::Collinear(ta.min(tb), ta.max(tb));
                    }
                    return LineHit::None;
                }
                // p0 + t dir = a + s d
                let w = self.a - p0;
                let s = dir.cross(w) / -denom;
                let t = w.cross(d) / -denom;
                let tol = GEOM_TOL / len;
                if s < -tol || s > 1.0 + tol {
                    return LineHit::None;
                }
                let t = if s.abs() <= tol {
                    (self.a - p0).dot(dir) / dir.dot(dir)
                } else if (s - 1.0).abs() <= tol {
                    (self.b - p0).dot(dir) / dir.dot(dir)
                } else {
                    t
                };
                LineHit::Points(vec![t])
            }
            Some((c, r, t0, sweep)) => {
                let dd = dir.dot(dir);
                let w = p0 - c;
                let b = w.dot(dir) / dd;
                let cc = (w.dot(w) - r * r) / dd;
                let disc = b * b - cc;
                let tol_ang = GEOM_TOL / r;
                let mut ts = Vec::new();
                if disc < -1e-14 * (r * r / dd) {
                    return LineHit::None;
                }
                let root = disc.max(0.0).sqrt();
                let cand = if root * dir.norm() <= 1e-9 * r.max(1.0) * 1e-3 {
                    vec![-b]
                } else {
                    vec![-b - root, -b + root]
                };
                for t in cand {
                    let p = p0 + dir * t;
                    let theta = (p - c).angle();
                    if Edge::arc_covers(t0, sweep, theta, tol_ang) {
                        ts.push(t);
                    }
                }
                if ts.is_empty() {
                    LineHit::None
                } else {
                    LineHit::Points(ts)
                }
            }
        }
    }

    /// Extreme values of `p . dir` over the edge.
    pub fn extent_along(&self, dir: Point) -> (f64, f64) {
        let mut lo = self.a.dot(dir).min(self.b.dot(dir));
        let mut hi = self.a.dot(dir).max(self.b.dot(dir));
        if let Some((c, r, t0, sweep)) = self.arc_params() {
            let th = dir.angle();
            for theta in [th, th + PI] {
                if Edge::arc_covers(t0, sweep, theta, 0.0) {
                    let v = (c + Point::new(theta.cos(), theta.sin()) * r).dot(dir);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo, hi)
    }

    /// Points of the arc where `p . dir` is extremal (empty for straight edges).
    pub fn arc_extreme_points(&self, dir: Point) -> Vec<Point> {
        let mut out = Vec::new();
        if let Some((c, r, t0, sweep)) = self.arc_params() {
            let th = dir.angle();
            for theta in [th, th + PI] {
                if Edge::arc_covers(t0, sweep, theta, 0.0) {
                    out.push(c + Point::new(theta.cos(), theta.sin()) * r);
                }
            }
        }
        out
    }

    /// Splits the edge into pieces of length at most `h`; returns the interior break points.
    pub fn subdivide(&self, h: f64) -> Vec<Point> {
        let n = (self.length() / h).ceil().max(1.0) as usize;
        (1..n).map(|i| self.point_at(i as f64 / n as f64)).collect()
    }

    /// True when `p` lies strictly inside the circular segment between chord and arc.
    fn in_segment(&self, p: Point) -> bool {
        match self.arc_params() {
            None => false,
            Some((c, r, _, _)) => {
                if (p - c).norm() >= r {
                    return false;
                }
                let mid = self.point_at(0.5);
                let side_mid = (self.b - self.a).cross(mid - self.a);
                let side_p = (self.b - self.a).cross(p - self.a);
                side_mid * side_p > 0.0
            }
        }
    }
}

/// Closed boundary: edge `i` joins vertex `i` to vertex `i + 1` (cyclically).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub vertices: Vec<Point>,
    pub curves: Vec<Curve>,
    pub markers: Vec<Marker>,
}

impl Region {
    pub fn polygon(vertices: Vec<Point>, marker: Marker) -> Self {
        let n = vertices.len();
        Region {
            vertices,
            curves: vec![Curve::Straight; n],
            markers: vec![marker; n],
        }
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64, marker: Marker) -> Self {
        Region::polygon(
            vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
            marker,
        )
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> Edge {
        let n = self.vertices.len();
        Edge {
            a: self.vertices[i],
            b: self.vertices[(i + 1) % n],
            curve: self.curves[i],
            marker: self.markers[i],
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        (0..self.vertices.len()).map(|i| self.edge(i)).collect()
    }

    pub fn has_arcs(&self) -> bool {
        self.curves.iter().any(|c| !matches!(c, Curve::Straight))
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().iter().map(Edge::area_term).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn into_ccw(self) -> Region {
        if self.signed_area() >= 0.0 {
            return self;
        }
        let n = self.vertices.len();
        let mut vertices = Vec::with_capacity(n);
        let mut curves = Vec::with_capacity(n);
        let mut markers = Vec::with_capacity(n);
        for j in 0..n {
            vertices.push(self.vertices[n - 1 - j]);
            // new edge j runs v[n-1-j] -> v[n-2-j], the reverse of old edge n-2-j
            let old = (2 * n - 2 - j) % n;
            curves.push(match self.curves[old] {
                Curve::Straight => Curve::Straight,
                Curve::Arc { center, clockwise } => Curve::Arc {
                    center,
                    clockwise: !clockwise,
                },
            });
            markers.push(self.markers[old]);
        }
        Region {
            vertices,
            curves,
            markers,
        }
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Region {
        Region {
            vertices: self.vertices.iter().map(|p| f(*p)).collect(),
            curves: self
                .curves
                .iter()
                .map(|c| match c {
                    Curve::Straight => Curve::Straight,
                    Curve::Arc { center, clockwise } => Curve::Arc {
                        center: f(*center),
                        clockwise: *clockwise,
                    },
                })
                .collect(),
            markers: self.markers.clone(),
        }
    }

    /// Strict interior test (points on the boundary may go either way).
    pub fn contains(&self, p: Point) -> bool {
        // On the chord of an arc the parity test below is ambiguous; there the answer is
        // whether the arc bulges out of the chord polygon.
        for e in self.edges().iter().filter(|e| !e.is_straight()) {
            let chord = e.chord();
            if chord.distance(p) <= 1e-12 * chord.length()
                && p.dist(e.a).min(p.dist(e.b)) > GEOM_TOL
            {
                let mid = e.point_at(0.5);
                let outward = (e.b - e.a).cross(mid - e.a) < 0.0;
                return outward == (self.signed_area() > 0.0);
            }
        }
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (vi, vj) = (self.vertices[i], self.vertices[j]);
            if (vi.y > p.y) != (vj.y > p.y) {
                let x = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        for e in self.edges() {
            if e.in_segment(p) {
                inside = !inside;
            }
        }
        inside
    }

    pub fn on_boundary(&self, p: Point, tol: f64) -> bool {
        self.edges().iter().any(|e| e.distance(p) <= tol)
    }

    pub fn extent_along(&self, dir: Point) -> (f64, f64) {
        self.edges()
            .iter()
            .map(|e| e.extent_along(dir))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            })
    }

    pub(crate) fn validate(&self) -> Result<(), GeometryError> {
        let n = self.vertices.len();
        if n < 3 && !self.has_arcs() {
            return Err(GeometryError::Degenerate("fewer than three vertices".into()));
        }
        if self.curves.len() != n || self.markers.len() != n {
            return Err(GeometryError::Invalid(
                "curves and markers must match the vertex count".into(),
            ));
        }
        if self.vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::Invalid("non-finite coordinate".into()));
        }
        for e in self.edges() {
            if e.a.dist(e.b) <= GEOM_TOL {
                return Err(GeometryError::Degenerate("zero-length edge".into()));
            }
            if let Some((c, r, _, sweep)) = e.arc_params() {
                if (e.b.dist(c) - r).abs() > 1e-9 * r.max(1.0) {
                    return Err(GeometryError::Invalid("arc endpoints at different radii".into()));
                }
                if sweep.abs() > PI + 1e-12 {
                    return Err(GeometryError::Invalid("arcs must span at most a half turn".into()));
                }
            }
        }
        if self.area() <= 1e-12 {
            return Err(GeometryError::Degenerate("zero area".into()));
        }
        let edges = self.edges();
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if edges[i].chord().properly_intersects(&edges[j].chord()) {
                    return Err(GeometryError::Degenerate("self-intersecting boundary".into()));
                }
            }
        }
        Ok(())
    }
}
