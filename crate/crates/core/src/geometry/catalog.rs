//! Unit square with the branch shapes used throughout the experiments.

use super::{BranchAxis, DomainSpec, GeometryError, MirrorLine};
use super::primitives::{Curve, Marker, Point, Region, Segment};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeId {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
}

impl ShapeId {
    pub const ALL: [ShapeId; 10] = [
        ShapeId::A,
        ShapeId::B,
        ShapeId::C,
        ShapeId::D,
        ShapeId::E,
        ShapeId::F,
        ShapeId::G,
        ShapeId::H,
        ShapeId::I,
        ShapeId::J,
    ];

    /// Shapes with a column in the reference eigenvalue table.
    pub const TABLE: [ShapeId; 9] = [
        ShapeId::A,
        ShapeId::C,
        ShapeId::D,
        ShapeId::E,
        ShapeId::F,
        ShapeId::G,
        ShapeId::H,
        ShapeId::I,
        ShapeId::J,
    ];

    pub fn letter(self) -> char {
        (b'a' + self as u8) as char
    }

    /// Default vertical offset of the branch center above the middle of the square's right side.
    fn default_shift(self) -> f64 {
        match self {
            ShapeId::C | ShapeId::D | ShapeId::E | ShapeId::F | ShapeId::I | ShapeId::J => 0.125,
            _ => 0.0,
        }
    }

    fn default_length(self) -> f64 {
        match self {
            ShapeId::G => 1.0 / SQRT_2,
            ShapeId::H => 0.625,
            _ => 1.0,
        }
    }
}

impl fmt::Display for ShapeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for ShapeId {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let mut chars = t.chars();
        match (chars.next(), chars.next()) {
            (Some(c @ 'a'..='j'), None) => Ok(ShapeId::ALL[(c as u8 - b'a') as usize]),
            _ => Err(GeometryError::UnknownShape(s.to_string())),
        }
    }
}

/// Named shape parameters; `None` picks the shape's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogParams {
    /// Branch length along its axis (for `h`, the outer radius).
    pub a: Option<f64>,
    /// Branch width.
    pub b: Option<f64>,
    /// Upward offset of the branch center.
    pub shift: Option<f64>,
    /// Length of the cut in shape `f` (default `0.4 a`).
    pub cut: Option<f64>,
    /// Axial width of the broadening in shape `i` (default `b / 2`).
    pub bulge_width: Option<f64>,
    /// Transverse height of the broadening in shape `i` (default `2 b`).
    pub bulge_height: Option<f64>,
    /// Height of the end bar in shape `j` (default 1).
    pub fork_height: Option<f64>,
    /// Axial width of the end bar in shape `j` (default `b`).
    pub fork_width: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<f64, GeometryError> {
    if !v.is_finite() {
        return Err(GeometryError::Invalid(format!("{name} must be finite")));
    }
    if v <= 0.0 {
        return Err(GeometryError::Degenerate(format!("{name} = {v} must be positive")));
    }
    Ok(v)
}

fn cartesian(x0: f64, y: f64, length: f64) -> BranchAxis {
    BranchAxis::Cartesian {
        origin: Point::new(x0, y),
        direction: Point::new(1.0, 0.0),
        length,
    }
}

fn branch_polygon(pts: &[(f64, f64)]) -> Region {
    Region::polygon(
        pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
        Marker::BRANCH,
    )
}

pub fn build_catalog_domain(shape: ShapeId, params: &CatalogParams) -> Result<DomainSpec, GeometryError> {
    let a = positive("a", params.a.unwrap_or(shape.default_length()))?;
    let b = positive("b", params.b.unwrap_or(0.25))?;
    let shift = params.shift.unwrap_or(shape.default_shift());
    if !shift.is_finite() {
        return Err(GeometryError::Invalid("shift must be finite".into()));
    }
    let square = Region::rectangle(0.0, 0.0, 1.0, 1.0, Marker::BASIC);
    let yc = 0.5 + shift;
    let (lo, hi) = (yc - b / 2.0, yc + b / 2.0);
    if lo < -1e-12 || hi > 1.0 + 1e-12 {
        return Err(GeometryError::Invalid(
            "branch must attach within the right side of the square".into(),
        ));
    }
    let name = format!("shape-{}", shape.letter());
    let straight = |x1: f64| branch_polygon(&[(1.0, lo), (x1, lo), (x1, hi), (1.0, hi)]);

    let spec = match shape {
        ShapeId::A => DomainSpec::new(name, square, straight(1.0 + a), cartesian(1.0, yc, a), vec![])?,
        ShapeId::B => {
            // Lower half of shape a, cut along the center line of the branch.
            let half = Region::rectangle(0.0, 0.0, 1.0, yc, Marker::BASIC);
            let branch = branch_polygon(&[(1.0, lo), (1.0 + a, lo), (1.0 + a, yc), (1.0, yc)]);
            DomainSpec::new(name, half, branch, cartesian(1.0, yc, a), vec![])?
        }
        ShapeId::C | ShapeId::D => {
            let (n_lo, n_hi) = (yc - b / 4.0, yc + b / 4.0);
            let m = 1.0 + a / 2.0;
            let e = 1.0 + a;
            let pts: Vec<(f64, f64)> = if shape == ShapeId::C {
                vec![(1.0, n_lo), (m, n_lo), (m, lo), (e, lo), (e, hi), (m, hi), (m, n_hi), (1.0, n_hi)]
            } else {
                vec![(1.0, lo), (m, lo), (m, n_lo), (e, n_lo), (e, n_hi), (m, n_hi), (m, hi), (1.0, hi)]
            };
            DomainSpec::new(name, square, branch_polygon(&pts), cartesian(1.0, yc, a), vec![])?
        }
        ShapeId::E => {
            let pts = [(1.0, yc - b / 4.0), (1.0 + a, lo), (1.0 + a, hi), (1.0, yc + b / 4.0)];
            DomainSpec::new(name, square, branch_polygon(&pts), cartesian(1.0, yc, a), vec![])?
        }
        ShapeId::F => {
            // Cut along the centre line starting at the junction. 0.4 a reproduces the tabulated
            // spectrum; a / 2 misses two modes trapped beyond the cut tip.
            let cut = positive("cut", params.cut.unwrap_or(0.4 * a))?;
            if cut >= a {
                return Err(GeometryError::Invalid("cut must end inside the branch".into()));
            }
            let slit = Segment::new(Point::new(1.0, yc), Point::new(1.0 + cut, yc));
            DomainSpec::new(name, square, straight(1.0 + a), cartesian(1.0, yc, a), vec![slit])?
        }
        ShapeId::G => {
            // Vertical ends of height b, sides along (1, 1); the perpendicular width is b / sqrt 2.
            let pts = [(1.0, lo), (1.0 + a, lo + a), (1.0 + a, hi + a), (1.0, hi)];
            DomainSpec::new(name, square, branch_polygon(&pts), cartesian(1.0, yc, a), vec![])?
        }
        ShapeId::H => {
            // Quarter annulus about the bottom-right corner of the square, from the square's side
            // down to the line y = 0.
            let r_out = a;
            let r_in = a - b;
            if r_in <= 0.0 {
                return Err(GeometryError::Degenerate("inner radius must be positive".into()));
            }
            if (yc - 0.5 * (r_in + r_out)).abs() > 1e-12 {
                return Err(GeometryError::Invalid("the circular branch takes no shift".into()));
            }
            let c = Point::new(1.0, 0.0);
            let branch = Region {
                vertices: vec![
                    Point::new(1.0, r_in),
                    Point::new(1.0 + r_in, 0.0),
                    Point::new(1.0 + r_out, 0.0),
                    Point::new(1.0, r_out),
                ],
                curves: vec![
                    Curve::Arc { center: c, clockwise: true },
                    Curve::Straight,
                    Curve::Arc { center: c, clockwise: false },
                    Curve::Straight,
                ],
                markers: vec![Marker::BRANCH; 4],
            };
            let axis = BranchAxis::Curvilinear {
                center: c,
                radius: r_in,
                angle_range: [FRAC_PI_2, 0.0],
            };
            DomainSpec::new(name, square, branch, axis, vec![])?
        }
        ShapeId::I => {
            let w = positive("bulge_width", params.bulge_width.unwrap_or(b / 2.0))?;
            let h = positive("bulge_height", params.bulge_height.unwrap_or(2.0 * b))?;
            let (x1, x2) = (1.0 + (a - w) / 2.0, 1.0 + (a + w) / 2.0);
            let (b_lo, b_hi) = (yc - h / 2.0, yc + h / 2.0);
            let pts = [
                (1.0, lo),
                (x1, lo),
                (x1, b_lo),
                (x2, b_lo),
                (x2, lo),
                (1.0 + a, lo),
                (1.0 + a, hi),
                (x2, hi),
                (x2, b_hi),
                (x1, b_hi),
                (x1, hi),
                (1.0, hi),
            ];
            DomainSpec::new(name, square, branch_polygon(&pts), cartesian(1.0, yc, a), vec![])?
        }
        ShapeId::J => {
            let h = positive("fork_height", params.fork_height.unwrap_or(1.0))?;
            let w = positive("fork_width", params.fork_width.unwrap_or(b))?;
            let e = 1.0 + a;
            let (f_lo, f_hi) = (yc - h / 2.0, yc + h / 2.0);
            let pts = [
                (1.0, lo),
                (e, lo),
                (e, f_lo),
                (e + w, f_lo),
                (e + w, f_hi),
                (e, f_hi),
                (e, hi),
                (1.0, hi),
            ];
            DomainSpec::new(name, square, branch_polygon(&pts), cartesian(1.0, yc, a + w), vec![])?
        }
    };
    if shape == ShapeId::A {
        return spec.with_mirror(MirrorLine {
            point: Point::new(0.0, 0.5),
            direction: Point::new(1.0, 0.0),
        });
    }
    Ok(spec)
}
