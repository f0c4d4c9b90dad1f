//! Planar domain descriptions: a basic region, an attached branch, and the
//! coordinate along which the branch is parameterized.

mod catalog;
mod config;
mod primitives;
mod section;

pub use catalog::{build_catalog_domain, CatalogParams, ShapeId};
pub use config::{DomainConfig, DOMAIN_SCHEMA_VERSION};
pub use primitives::{ArcGeom, Curve, Edge, HalfPlane, LineHit, Marker, Point, Region, Segment};
pub use section::{cross_section_at, threshold, CrossSection, Interval, ThresholdReport};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Distance below which two points or an on-line test are considered coincident.
pub const GEOM_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("unknown shape id `{0}`")]
    UnknownShape(String),
    #[error("degenerate polygon: {0}")]
    Degenerate(String),
    #[error("invalid domain: {0}")]
    Invalid(String),
    #[error("coordinate {x0} outside branch range [0, {length}]")]
    OutOfRange { x0: f64, length: f64 },
    #[error("config: {0}")]
    Config(String),
}

/// Coordinate system along the branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchAxis {
    /// Straight axis: `x = (p - origin) . direction`, `0 <= x <= length`.
    Cartesian {
        origin: Point,
        direction: Point,
        length: f64,
    },
    /// Arc-length coordinate `x = radius * phi` where `phi` is the polar angle
    /// about `center` measured from `angle_range[0]` (the junction ray)
    /// towards `angle_range[1]`.
    Curvilinear {
        center: Point,
        radius: f64,
        angle_range: [f64; 2],
    },
}

impl BranchAxis {
    pub fn length(&self) -> f64 {
        match self {
            BranchAxis::Cartesian { length, .. } => *length,
            BranchAxis::Curvilinear {
                radius,
                angle_range,
                ..
            } => radius * (angle_range[1] - angle_range[0]).abs(),
        }
    }

    pub fn is_curvilinear(&self) -> bool {
        matches!(self, BranchAxis::Curvilinear { .. })
    }

    /// Axis coordinate of a point.
    pub fn coordinate(&self, p: Point) -> f64 {
        match self {
            BranchAxis::Cartesian {
                origin, direction, ..
            } => (p - *origin).dot(*direction),
            BranchAxis::Curvilinear {
                center,
                radius,
                angle_range,
            } => {
                let sign = (angle_range[1] - angle_range[0]).signum();
                let theta = (p - *center).angle();
                let mut phi = sign * (theta - angle_range[0]);
                phi = phi.rem_euclid(2.0 * PI);
                if phi > 1.5 * PI {
                    phi -= 2.0 * PI;
                }
                radius * phi
            }
        }
    }

    /// Half-plane of points lying beyond coordinate `x0`.
    pub fn beyond(&self, x0: f64) -> HalfPlane {
        match self {
            BranchAxis::Cartesian {
                origin, direction, ..
            } => HalfPlane {
                normal: *direction,
                offset: direction.dot(*origin) + x0,
            },
            BranchAxis::Curvilinear { center, .. } => {
                let normal = self.tangent_at_coordinate(x0);
                HalfPlane {
                    normal,
                    offset: normal.dot(*center),
                }
            }
        }
    }

    /// The transverse line (Cartesian) or radial ray (curvilinear) at `x0`,
    /// returned as `(start, direction, ray)`.
    pub fn section_line(&self, x0: f64) -> (Point, Point, bool) {
        match self {
            BranchAxis::Cartesian {
                origin, direction, ..
            } => (*origin + *direction * x0, direction.perp(), false),
            BranchAxis::Curvilinear {
                center,
                radius,
                angle_range,
            } => {
                let sign = (angle_range[1] - angle_range[0]).signum();
                let theta = angle_range[0] + sign * x0 / radius;
                (*center, Point::new(theta.cos(), theta.sin()), true)
            }
        }
    }

    /// Unit vector of increasing coordinate at the section `x0`.
    pub fn tangent_at_coordinate(&self, x0: f64) -> Point {
        match self {
            BranchAxis::Cartesian { direction, .. } => *direction,
            BranchAxis::Curvilinear {
                radius,
                angle_range,
                ..
            } => {
                let sign = (angle_range[1] - angle_range[0]).signum();
                let theta = angle_range[0] + sign * x0 / radius;
                Point::new(-theta.sin(), theta.cos()) * sign
            }
        }
    }

    /// Unit vector of increasing coordinate at a point.
    pub fn tangent_at(&self, p: Point) -> Point {
        match self {
            BranchAxis::Cartesian { direction, .. } => *direction,
            BranchAxis::Curvilinear {
                center,
                angle_range,
                ..
            } => {
                let sign = (angle_range[1] - angle_range[0]).signum();
                (p - *center).normalized().perp() * sign
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BranchAxis::Cartesian { .. } => "cartesian",
            BranchAxis::Curvilinear { .. } => "arc_length",
        }
    }
}

/// Line of mirror symmetry of a domain: `point + t * direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorLine {
    pub point: Point,
    pub direction: Point,
}

impl MirrorLine {
    pub fn reflect(&self, p: Point) -> Point {
        let d = self.direction.normalized();
        let r = p - self.point;
        let along = d * r.dot(d);
        self.point + along * 2.0 - r
    }

    pub fn distance(&self, p: Point) -> f64 {
        let d = self.direction.normalized();
        (p - self.point).cross(d).abs()
    }

    /// Half-plane on the left of the line direction.
    pub fn left_half(&self) -> HalfPlane {
        let n = self.direction.normalized().perp();
        HalfPlane {
            normal: n,
            offset: n.dot(self.point),
        }
    }
}

/// A basic domain with one attached branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub name: String,
    pub basic: Region,
    pub branch: Region,
    pub axis: BranchAxis,
    /// Zero-thickness cuts inside the branch (Dirichlet on both faces).
    #[serde(default)]
    pub slits: Vec<Segment>,
    /// Shared boundary between basic domain and branch; filled in by [`DomainSpec::new`].
    #[serde(default)]
    pub junction: Vec<Segment>,
    /// Reflection symmetry of the whole domain, used to build mirrored meshes.
    #[serde(default)]
    pub mirror: Option<MirrorLine>,
}

impl DomainSpec {
    /// Validates the regions, orients them counter-clockwise and computes the junction.
    pub fn new(
        name: impl Into<String>,
        basic: Region,
        branch: Region,
        axis: BranchAxis,
        slits: Vec<Segment>,
    ) -> Result<Self, GeometryError> {
        let mut spec = DomainSpec {
            name: name.into(),
            basic: basic.into_ccw(),
            branch: branch.into_ccw(),
            axis,
            slits,
            junction: Vec::new(),
            mirror: None,
        };
        spec.validate_and_link()?;
        Ok(spec)
    }

    pub fn with_mirror(mut self, mirror: MirrorLine) -> Result<Self, GeometryError> {
        for region in [&self.basic, &self.branch] {
            for v in &region.vertices {
                let image = mirror.reflect(*v);
                let found = self
                    .basic
                    .vertices
                    .iter()
                    .chain(self.branch.vertices.iter())
                    .any(|w| w.dist(image) < 1e-9);
                if !found {
                    return Err(GeometryError::Invalid(format!(
                        "vertex ({}, {}) has no mirror image",
                        v.x, v.y
                    )));
                }
            }
        }
        if self.basic.has_arcs() || self.branch.has_arcs() || !self.slits.is_empty() {
            return Err(GeometryError::Invalid(
                "mirrored meshing supports straight-edged domains without slits".into(),
            ));
        }
        self.mirror = Some(mirror);
        Ok(self)
    }

    fn validate_and_link(&mut self) -> Result<(), GeometryError> {
        for (label, region) in [("basic", &self.basic), ("branch", &self.branch)] {
            region.validate().map_err(|e| match e {
                GeometryError::Degenerate(m) => GeometryError::Degenerate(format!("{label}: {m}")),
                other => other,
            })?;
        }
        // Interiors must be disjoint: no proper edge crossings, no vertex strictly inside the other.
        for ea in self.basic.edges() {
            for eb in self.branch.edges() {
                if ea.chord().properly_intersects(&eb.chord()) {
                    return Err(GeometryError::Invalid(
                        "basic and branch boundaries cross".into(),
                    ));
                }
            }
        }
        // Shared vertices sit on the other boundary, where the parity test is unreliable.
        let strictly_in = |r: &Region, v: &Point| r.contains(*v) && !r.on_boundary(*v, GEOM_TOL);
        if self.branch.vertices.iter().any(|v| strictly_in(&self.basic, v))
            || self.basic.vertices.iter().any(|v| strictly_in(&self.branch, v))
        {
            return Err(GeometryError::Invalid(
                "basic and branch interiors overlap".into(),
            ));
        }
        self.junction = shared_segments(&self.basic, &self.branch);
        if self.junction.is_empty() {
            return Err(GeometryError::Invalid(
                "branch is not attached to the basic domain".into(),
            ));
        }
        for s in &self.slits {
            if s.length() <= GEOM_TOL {
                return Err(GeometryError::Degenerate("zero-length slit".into()));
            }
            let mid = s.point_at(0.5);
            if !self.branch.contains(mid) {
                return Err(GeometryError::Invalid("slit must lie inside the branch".into()));
            }
        }
        match &self.axis {
            BranchAxis::Cartesian {
                direction, length, ..
            } => {
                if (direction.norm() - 1.0).abs() > 1e-12 {
                    return Err(GeometryError::Invalid("axis direction must be a unit vector".into()));
                }
                if *length <= 0.0 {
                    return Err(GeometryError::Degenerate("branch length must be positive".into()));
                }
                let (lo, hi) = self.branch_extent();
                if lo < -1e-9 || hi > length + 1e-9 {
                    return Err(GeometryError::Invalid(format!(
                        "branch spans [{lo}, {hi}] along its axis, outside [0, {length}]"
                    )));
                }
            }
            BranchAxis::Curvilinear {
                radius,
                angle_range,
                ..
            } => {
                let sweep = (angle_range[1] - angle_range[0]).abs();
                if *radius <= 0.0 || sweep <= 0.0 || sweep > PI {
                    return Err(GeometryError::Degenerate(
                        "curvilinear axis needs positive radius and sweep in (0, pi]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Range of the axis coordinate over the branch.
    pub fn branch_extent(&self) -> (f64, f64) {
        match &self.axis {
            BranchAxis::Cartesian {
                origin, direction, ..
            } => {
                let (lo, hi) = self.branch.extent_along(*direction);
                let base = origin.dot(*direction);
                (lo - base, hi - base)
            }
            BranchAxis::Curvilinear { .. } => (0.0, self.axis.length()),
        }
    }

    pub fn area(&self) -> f64 {
        self.basic.area() + self.branch.area()
    }

    /// Applies a rigid motion `p -> rotation(p) + shift` to every coordinate.
    pub fn transformed(&self, angle: f64, shift: Point) -> DomainSpec {
        let f = |p: Point| p.rotated(angle) + shift;
        let axis = match &self.axis {
            BranchAxis::Cartesian {
                origin,
                direction,
                length,
            } => BranchAxis::Cartesian {
                origin: f(*origin),
                direction: direction.rotated(angle),
                length: *length,
            },
            BranchAxis::Curvilinear {
                center,
                radius,
                angle_range,
            } => BranchAxis::Curvilinear {
                center: f(*center),
                radius: *radius,
                angle_range: [angle_range[0] + angle, angle_range[1] + angle],
            },
        };
        DomainSpec {
            name: self.name.clone(),
            basic: self.basic.map(f),
            branch: self.branch.map(f),
            axis,
            slits: self.slits.iter().map(|s| Segment::new(f(s.a), f(s.b))).collect(),
            junction: self.junction.iter().map(|s| Segment::new(f(s.a), f(s.b))).collect(),
            mirror: self.mirror.map(|m| MirrorLine {
                point: f(m.point),
                direction: m.direction.rotated(angle),
            }),
        }
    }

    /// Straight-line boundary pieces of the branch that are not part of the junction.
    pub fn branch_free_edges(&self) -> Vec<Edge> {
        self.branch
            .edges()
            .into_iter()
            .filter(|e| {
                !(e.is_straight()
                    && self
                        .junction
                        .iter()
                        .any(|j| j.contains_point(e.a) && j.contains_point(e.b)))
            })
            .collect()
    }
}

/// Rigidly rotates the domain so that `direction` becomes the +x axis and
/// parameterizes the branch along it.
pub fn rotate_to_axis(spec: &DomainSpec, direction: Point) -> Result<DomainSpec, GeometryError> {
    let norm = direction.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(GeometryError::Invalid("axis direction must be nonzero".into()));
    }
    let d = direction * (1.0 / norm);
    let ex = Point::new(1.0, 0.0);
    if let BranchAxis::Cartesian { direction: cur, .. } = &spec.axis {
        if *cur == ex && d == ex {
            return Ok(spec.clone());
        }
    }
    let angle = -d.y.atan2(d.x);
    let mut out = spec.transformed(angle, Point::new(0.0, 0.0));
    let (lo, hi) = out.branch.extent_along(ex);
    let anchor = match &out.axis {
        BranchAxis::Cartesian { origin, .. } => *origin,
        BranchAxis::Curvilinear { center, .. } => *center,
    };
    out.axis = BranchAxis::Cartesian {
        origin: Point::new(lo, anchor.y),
        direction: ex,
        length: hi - lo,
    };
    out.validate_and_link()?;
    Ok(out)
}

fn shared_segments(a: &Region, b: &Region) -> Vec<Segment> {
    let mut out = Vec::new();
    for ea in a.edges().into_iter().filter(Edge::is_straight) {
        for eb in b.edges().into_iter().filter(Edge::is_straight) {
            let sa = ea.chord();
            let sb = eb.chord();
            if sa.line_distance(sb.a) > GEOM_TOL || sa.line_distance(sb.b) > GEOM_TOL {
                continue;
            }
            let dir = (sa.b - sa.a).normalized();
            let t0 = (sb.a - sa.a).dot(dir);
            let t1 = (sb.b - sa.a).dot(dir);
            let lo = t0.min(t1).max(0.0);
            let hi = t0.max(t1).min(sa.length());
            if hi - lo > GEOM_TOL {
                out.push(Segment::new(sa.a + dir * lo, sa.a + dir * hi));
            }
        }
    }
    out
}
