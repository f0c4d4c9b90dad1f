//! Cross-sections of the branch and the threshold below which eigenfunctions decay.

use super::primitives::{LineHit, Point};
use super::{BranchAxis, DomainSpec, GeometryError, GEOM_TOL};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub x0: f64,
    /// Components along the section line, parameterized by distance from its base point.
    pub intervals: Vec<Interval>,
    pub largest_length: f64,
    /// First transverse Dirichlet eigenvalue, `pi^2 / l^2` (infinite for an empty section).
    pub mu1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub mu: f64,
    pub argmin_x: f64,
    pub grid: Vec<CrossSection>,
    pub non_increasing: bool,
    pub eligible_count: usize,
}

impl ThresholdReport {
    /// Records how many of the given eigenvalues fall below the threshold.
    pub fn with_eigenvalues(mut self, lambdas: &[f64]) -> Self {
        self.eligible_count = lambdas.iter().filter(|&&l| l < self.mu).count();
        self
    }
}

pub fn cross_section_at(spec: &DomainSpec, x0: f64) -> Result<CrossSection, GeometryError> {
    let length = spec.axis.length();
    if !x0.is_finite() || x0 < -GEOM_TOL || x0 > length + GEOM_TOL {
        return Err(GeometryError::OutOfRange { x0, length });
    }
    let x0 = x0.clamp(0.0, length);
    let (base, dir, ray) = spec.axis.section_line(x0);
    let dir = dir.normalized();

    let mut cuts: Vec<f64> = Vec::new();
    let mut collinear: Vec<(f64, f64)> = Vec::new();
    for e in spec.branch.edges() {
        match e.intersect_line(base, dir) {
            LineHit::None => {}
            LineHit::Points(ts) => cuts.extend(ts),
            LineHit::Collinear(lo, hi) => {
                cuts.push(lo);
                cuts.push(hi);
                collinear.push((lo, hi));
            }
        }
    }
    // Slits split a component in two.
    let mut splits: Vec<f64> = Vec::new();
    for s in &spec.slits {
        let d = s.b - s.a;
        let denom = dir.cross(d);
        if denom.abs() <= 1e-14 * d.norm() {
            continue;
        }
        let w = s.a - base;
        let u = dir.cross(w) / -denom;
        if (-GEOM_TOL..=1.0 + GEOM_TOL).contains(&u) {
            let t = w.cross(d) / -denom;
            splits.push(t);
            cuts.push(t);
        }
    }
    if ray {
        cuts.retain(|&t| t >= -GEOM_TOL);
        cuts.push(0.0);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|b, a| (*b - *a).abs() <= GEOM_TOL);

    let mut intervals: Vec<Interval> = Vec::new();
    let mut open: Option<Interval> = None;
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        let on_edge = collinear
            .iter()
            .any(|&(lo, hi)| mid >= lo - GEOM_TOL && mid <= hi + GEOM_TOL);
        let inside = on_edge || spec.branch.contains(base + dir * mid);
        let split_here = splits.iter().any(|&s| (s - t0).abs() <= GEOM_TOL);
        match (&mut open, inside) {
            (Some(cur), true) if !split_here && (cur.end - t0).abs() <= GEOM_TOL => cur.end = t1,
            (_, true) => {
                if let Some(cur) = open.take() {
                    intervals.push(cur);
                }
                open = Some(Interval { start: t0, end: t1 });
            }
            (_, false) => {
                if let Some(cur) = open.take() {
                    intervals.push(cur);
                }
            }
        }
    }
    if let Some(cur) = open {
        intervals.push(cur);
    }
    intervals.retain(|i| i.length() > GEOM_TOL);
    let largest_length = intervals.iter().map(Interval::length).fold(0.0, f64::max);
    let mu1 = if largest_length > 0.0 {
        PI * PI / (largest_length * largest_length)
    } else {
        f64::INFINITY
    };
    Ok(CrossSection {
        x0,
        intervals,
        largest_length,
        mu1,
    })
}

/// Axis coordinates where the width can change slope: vertices and arc extremes.
fn breakpoints(spec: &DomainSpec) -> Vec<f64> {
    let mut xs: Vec<f64> = spec
        .branch
        .vertices
        .iter()
        .chain(spec.slits.iter().flat_map(|s| [&s.a, &s.b]))
        .map(|p| spec.axis.coordinate(*p))
        .collect();
    if let BranchAxis::Cartesian { direction, .. } = &spec.axis {
        for e in spec.branch.edges() {
            for p in e
                .arc_extreme_points(*direction)
                .into_iter()
                .chain(e.arc_extreme_points(direction.perp()))
            {
                xs.push(spec.axis.coordinate(p));
            }
        }
    }
    xs
}

pub fn threshold(spec: &DomainSpec, n_samples: usize) -> Result<ThresholdReport, GeometryError> {
    if n_samples < 2 {
        return Err(GeometryError::Invalid("threshold needs at least two samples".into()));
    }
    let a = spec.axis.length();
    let mut xs: Vec<f64> = (0..n_samples)
        .map(|i| a * i as f64 / (n_samples - 1) as f64)
        .collect();
    xs.extend(
        breakpoints(spec)
            .into_iter()
            .filter(|x| *x > -GEOM_TOL && *x < a + GEOM_TOL)
            .map(|x| x.clamp(0.0, a)),
    );
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|b, a| (*b - *a).abs() <= GEOM_TOL);

    let grid = xs
        .iter()
        .map(|&x| cross_section_at(spec, x))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut mu, mut argmin_x) = (f64::INFINITY, 0.0);
    for s in &grid {
        if s.mu1 < mu {
            mu = s.mu1;
            argmin_x = s.x0;
        }
    }
    let monotone = grid
        .windows(2)
        .all(|w| w[1].largest_length <= w[0].largest_length + 1e-12);
    Ok(ThresholdReport {
        mu,
        argmin_x,
        grid,
        non_increasing: monotone && normals_non_increasing(spec),
        eligible_count: 0,
    })
}

/// `(t, n) >= 0` on every free boundary edge of the branch, with `t` the axis direction and
/// `n` the outward normal. Arcs and curved axes are checked on a fixed set of samples.
fn normals_non_increasing(spec: &DomainSpec) -> bool {
    let samples: Vec<f64> = if spec.axis.is_curvilinear() || spec.branch.has_arcs() {
        (0..=16).map(|i| (i as f64 + 0.5) / 17.0).collect()
    } else {
        vec![0.5]
    };
    spec.branch_free_edges().iter().all(|e| {
        samples.iter().all(|&s| {
            let p: Point = e.point_at(s);
            spec.axis.tangent_at(p).dot(e.outward_normal(s)) >= -1e-12
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_catalog_domain, rotate_to_axis, CatalogParams, ShapeId};

    fn shape(s: ShapeId) -> DomainSpec {
        build_catalog_domain(s, &CatalogParams::default()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn rectangular_branch_section() {
        let cs = cross_section_at(&shape(ShapeId::A), 0.5).unwrap();
        assert_eq!(cs.intervals.len(), 1);
        assert!(close(cs.largest_length, 0.25, 1e-14));
        assert!(close(cs.mu1, 157.91367041742973, 1e-12));
        assert!((cs.mu1 * cs.largest_length.powi(2) - PI * PI).abs() < 1e-12 * PI * PI);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            cross_section_at(&shape(ShapeId::A), 1.5),
            Err(GeometryError::OutOfRange { .. })
        ));
    }

    #[test]
    fn trapezoid_starts_at_half_width() {
        let cs = cross_section_at(&shape(ShapeId::E), 0.0).unwrap();
        assert!(close(cs.largest_length, 0.125, 1e-13));
    }

    #[test]
    fn broadening_section() {
        let cs = cross_section_at(&shape(ShapeId::I), 0.5).unwrap();
        assert!(close(cs.largest_length, 0.5, 1e-13));
    }

    #[test]
    fn cut_splits_the_section() {
        let s = shape(ShapeId::F);
        let cs = cross_section_at(&s, 0.25).unwrap();
        assert_eq!(cs.intervals.len(), 2);
        assert!(close(cs.largest_length, 0.125, 1e-13));
        let cs = cross_section_at(&s, 0.75).unwrap();
        assert_eq!(cs.intervals.len(), 1);
        // The cut does not change the threshold.
        assert!(close(threshold(&s, 41).unwrap().mu, PI * PI * 16.0, 1e-12));
    }

    #[test]
    fn thresholds_of_catalog_shapes() {
        let t = threshold(&shape(ShapeId::A), 11).unwrap();
        assert_eq!(t.mu, PI * PI / 0.0625);
        assert!(t.non_increasing);

        let t = threshold(&shape(ShapeId::E), 11).unwrap();
        assert!(close(t.mu, PI * PI * 16.0, 1e-12));
        assert!(close(t.argmin_x, 1.0, 1e-12));
        assert!(!t.non_increasing);

        let t = threshold(&shape(ShapeId::J), 11).unwrap();
        assert!(close(t.mu, PI * PI, 1e-12));
        assert!(!t.non_increasing);

        let t = threshold(&shape(ShapeId::D), 11).unwrap();
        assert!(t.non_increasing);
        assert!(!threshold(&shape(ShapeId::C), 11).unwrap().non_increasing);
        assert!(!threshold(&shape(ShapeId::I), 11).unwrap().non_increasing);
    }

    #[test]
    fn circular_branch_in_both_parameterizations() {
        let h = shape(ShapeId::H);
        let t = threshold(&h, 33).unwrap();
        assert!(close(t.mu, PI * PI * 16.0, 1e-12));
        assert!(t.non_increasing);
        let cs = cross_section_at(&h, 0.3).unwrap();
        assert!(close(cs.largest_length, 0.25, 1e-12));

        let flat = rotate_to_axis(&h, Point::new(1.0, 0.0)).unwrap();
        let t = threshold(&flat, 33).unwrap();
        assert!(close(t.mu, PI * PI * 4.0, 1e-12));
        assert!(close(t.argmin_x, 0.375, 1e-12));
    }

    #[test]
    fn tilted_branch_thresholds() {
        let g = shape(ShapeId::G);
        assert!(close(threshold(&g, 21).unwrap().mu, 157.91367041742973, 1e-12));
        let r = rotate_to_axis(&g, Point::new(1.0, 1.0)).unwrap();
        assert!(close(threshold(&r, 21).unwrap().mu, 315.82734083485946, 1e-12));
    }

    #[test]
    fn identity_rotation_is_a_no_op() {
        let a = shape(ShapeId::A);
        assert_eq!(rotate_to_axis(&a, Point::new(1.0, 0.0)).unwrap(), a);
    }
}
