//! Exact planar geometry for blocking regions.
//!
//! Blocking regions are convex: the Minkowski sum of a link segment with a
//! blocker footprint. Everything here works on counterclockwise convex
//! polygons; intersections stay convex, so union areas reduce to
//! inclusion–exclusion over subset intersections.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Absolute tolerance in meters for vertex deduplication and clipping.
pub const EPS: f64 = 1e-9;

/// Largest polygon count for which [`union_area`] uses exact inclusion–exclusion.
pub const DEFAULT_MAX_EXACT_UNION: usize = 10;

/// Target relative error of the grid fallback in [`union_area_with`].
pub const GRID_REL_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Point at `radius` from the origin in direction `angle`.
    #[inline]
    pub fn polar(radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(radius * c, radius * s)
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, o: Point2) -> f64 {
        (o - self).norm()
    }

    /// Direction angle of the vector from `self` to `o`, in (-π, π].
    #[inline]
    pub fn azimuth_to(self, o: Point2) -> f64 {
        let v = o - self;
        v.y.atan2(v.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

#[inline]
fn near(a: Point2, b: Point2) -> bool {
    (a.x - b.x).abs() <= EPS && (a.y - b.y).abs() <= EPS
}

/// Convex polygon with vertices in counterclockwise order.
///
/// An empty vertex list is the empty region. One or two vertices describe a
/// degenerate (zero-area) point or segment, which arise for zero-size
/// blockers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a polygon from vertices already in counterclockwise convex order.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(invalid("polygon vertex is not finite"));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if n > 1 && near(a, b) {
                return Err(invalid("duplicate consecutive polygon vertices"));
            }
            if n >= 3 {
                let c = vertices[(i + 2) % n];
                let scale = (b - a).norm().max((c - b).norm());
                if (b - a).cross(c - b) < -EPS * scale {
                    return Err(invalid("polygon vertices are not in counterclockwise convex order"));
                }
            }
        }
        Ok(Self { vertices })
    }

    /// Convex hull of an arbitrary point set (Andrew's monotone chain).
    /// Collinear and near-duplicate points are dropped.
    pub fn hull(points: &[Point2]) -> Self {
        let mut pts: Vec<Point2> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup_by(|a, b| near(*a, *b));
        if pts.len() < 3 {
            if pts.len() == 2 && near(pts[0], pts[1]) {
                pts.pop();
            }
            return Self { vertices: pts };
        }
        fn push_convex(hull: &mut Vec<Point2>, floor: usize, p: Point2) {
            while hull.len() >= floor + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if (b - a).cross(p - b) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
        for &p in &pts {
            push_convex(&mut hull, 0, p);
        }
        let floor = hull.len() - 1;
        for &p in pts.iter().rev().skip(1) {
            push_convex(&mut hull, floor, p);
        }
        hull.pop();
        hull.dedup_by(|a, b| near(*a, *b));
        while hull.len() > 1 && near(hull[0], hull[hull.len() - 1]) {
            hull.pop();
        }
        Self { vertices: hull }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    /// Closed membership test with tolerance [`EPS`]. Degenerate polygons
    /// (fewer than three vertices) contain nothing.
    pub fn contains(&self, p: Point2) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = b - a;
            e.cross(p - a) >= -EPS * e.norm()
        })
    }

    /// Horizontal extent of the polygon on the line `y`, if it meets it.
    pub fn x_extent_at(&self, y: f64) -> Option<(f64, f64)> {
        let n = self.vertices.len();
        if n < 3 {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let (ymin, ymax) = if a.y <= b.y { (a.y, b.y) } else { (b.y, a.y) };
            if y < ymin || y > ymax {
                continue;
            }
            if a.y == b.y {
                lo = lo.min(a.x.min(b.x));
                hi = hi.max(a.x.max(b.x));
            } else {
                let t = (y - a.y) / (b.y - a.y);
                let x = a.x + t * (b.x - a.x);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn bounds(&self) -> Option<(Point2, Point2)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (
                Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }
}

/// Region of rectangle centers for which a rectangle of length `l` along
/// direction `theta` and width `w` across it touches the segment `[p0, p1]`.
///
/// This is the Minkowski sum of the segment with the origin-centered
/// rectangle: a hexagon in general, a parallelogram when `w = 0` and the
/// rectangle itself when `p0 = p1`.
pub fn minkowski_segment_rect(
    p0: Point2,
    p1: Point2,
    l: f64,
    w: f64,
    theta: f64,
) -> Result<ConvexPolygon> {
    if !(l >= 0.0 && w >= 0.0) || !l.is_finite() || !w.is_finite() {
        return Err(invalid(format!("rectangle sides must be finite and non-negative, got l={l}, w={w}")));
    }
    if !p0.is_finite() || !p1.is_finite() || !theta.is_finite() {
        return Err(invalid("segment endpoints and orientation must be finite"));
    }
    let along = Point2::polar(0.5 * l, theta);
    let across = Point2::polar(0.5 * w, theta + std::f64::consts::FRAC_PI_2);
    let corners = [along + across, across - along, Point2::ORIGIN - along - across, along - across];
    let mut pts = [Point2::ORIGIN; 8];
    for (i, c) in corners.iter().enumerate() {
        pts[i] = p0 + *c;
        pts[i + 4] = p1 + *c;
    }
    Ok(ConvexPolygon::hull(&pts))
}

/// Intersection of two convex polygons by clipping `a` against every edge of `b`.
///
/// Zero-area inputs yield the empty polygon, since their intersection with
/// anything has zero area.
pub fn convex_intersect(a: &ConvexPolygon, b: &ConvexPolygon) -> ConvexPolygon {
    if a.vertices.len() < 3 || b.vertices.len() < 3 {
        return ConvexPolygon::empty();
    }
    let mut current = a.vertices.clone();
    let mut next = Vec::with_capacity(current.len() + b.vertices.len());
    let m = b.vertices.len();
    for i in 0..m {
        let e0 = b.vertices[i];
        let e1 = b.vertices[(i + 1) % m];
        let edge = e1 - e0;
        let tol = EPS * edge.norm();
        next.clear();
        let n = current.len();
        for j in 0..n {
            let p = current[j];
            let q = current[(j + 1) % n];
            let sp = edge.cross(p - e0);
            let sq = edge.cross(q - e0);
            let p_in = sp >= -tol;
            let q_in = sq >= -tol;
            if p_in {
                next.push(p);
            }
            if p_in != q_in && (sp - sq).abs() > 0.0 {
                let t = sp / (sp - sq);
                next.push(p + (q - p) * t);
            }
        }
        next.dedup_by(|x, y| near(*x, *y));
        while next.len() > 1 && near(next[0], next[next.len() - 1]) {
            next.pop();
        }
        std::mem::swap(&mut current, &mut next);
        if current.len() < 3 {
            return ConvexPolygon::empty();
        }
    }
    let poly = ConvexPolygon { vertices: current };
    if polygon_area(&poly) > 0.0 {
        poly
    } else {
        ConvexPolygon::empty()
    }
}

/// Shoelace area; zero for empty and degenerate polygons.
pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    let v = &p.vertices;
    if v.len() < 3 {
        return 0.0;
    }
    let o = v[0];
    let twice: f64 = v[1..]
        .windows(2)
        .map(|e| (e[0] - o).cross(e[1] - o))
        .sum();
    (0.5 * twice).max(0.0)
}

/// Signed inclusion–exclusion terms of every subset intersection with
/// positive area.
///
/// Built once for a family of up to 32 polygons; afterwards the union area of
/// any sub-family is a filtered sum. Subsets whose intersection is empty are
/// pruned together with all their supersets.
#[derive(Clone, Debug, Default)]
pub struct IntersectionLattice {
    terms: Vec<(u32, f64)>,
}

impl IntersectionLattice {
    pub fn new(polys: &[ConvexPolygon]) -> Self {
        assert!(polys.len() <= 32, "lattice supports at most 32 polygons");
        let mut terms = Vec::new();
        for (i, p) in polys.iter().enumerate() {
            let area = polygon_area(p);
            if area > 0.0 {
                terms.push((1u32 << i, area));
                Self::extend(polys, i + 1, 1u32 << i, p, 1, &mut terms);
            }
        }
        Self { terms }
    }

    fn extend(
        polys: &[ConvexPolygon],
        start: usize,
        mask: u32,
        current: &ConvexPolygon,
        depth: usize,
        terms: &mut Vec<(u32, f64)>,
    ) {
        for (j, p) in polys.iter().enumerate().skip(start) {
            let inter = convex_intersect(current, p);
            let area = polygon_area(&inter);
            if area > 0.0 {
                let sign = if depth % 2 == 0 { 1.0 } else { -1.0 };
                let m = mask | (1u32 << j);
                terms.push((m, sign * area));
                Self::extend(polys, j + 1, m, &inter, depth + 1, terms);
            }
        }
    }

    /// Area of the union of the polygons selected by `mask`.
    pub fn union_area(&self, mask: u32) -> f64 {
        self.terms
            .iter()
            .filter(|(m, _)| m & !mask == 0)
            .map(|(_, a)| a)
            .sum::<f64>()
            .max(0.0)
    }

    /// Area of the intersection of the polygons selected by `mask`
    /// (zero if that intersection was pruned).
    pub fn intersection_area(&self, mask: u32) -> f64 {
        self.terms
            .iter()
            .find(|(m, _)| *m == mask)
            .map_or(0.0, |(_, a)| a.abs())
    }
}

/// Exact union area for up to [`DEFAULT_MAX_EXACT_UNION`] polygons, grid
/// estimate beyond.
pub fn union_area(polys: &[ConvexPolygon]) -> f64 {
    union_area_with(polys, DEFAULT_MAX_EXACT_UNION)
}

/// Union area with a configurable exact-evaluation cap `max_exact`.
pub fn union_area_with(polys: &[ConvexPolygon], max_exact: usize) -> f64 {
    match polys.len() {
        0 => 0.0,
        1 => polygon_area(&polys[0]),
        n if n <= max_exact.min(32) => {
            IntersectionLattice::new(polys).union_area(u32::MAX >> (32 - n))
        }
        _ => scanline_union_area(polys, GRID_REL_TOL),
    }
}

/// Midpoint rule in y over exact row coverage in x, refined by row doubling
/// until two successive estimates agree to `rel_tol`.
fn scanline_union_area(polys: &[ConvexPolygon], rel_tol: f64) -> f64 {
    let solid: Vec<&ConvexPolygon> = polys.iter().filter(|p| polygon_area(p) > 0.0).collect();
    let Some((lo, hi)) = solid
        .iter()
        .filter_map(|p| p.bounds())
        .reduce(|(a0, a1), (b0, b1)| {
            (
                Point2::new(a0.x.min(b0.x), a0.y.min(b0.y)),
                Point2::new(a1.x.max(b1.x), a1.y.max(b1.y)),
            )
        })
    else {
        return 0.0;
    };
    let height = hi.y - lo.y;
    let estimate = |rows: usize| -> f64 {
        let dy = height / rows as f64;
        let mut spans: Vec<(f64, f64)> = Vec::with_capacity(solid.len());
        let mut total = 0.0;
        for r in 0..rows {
            let y = lo.y + (r as f64 + 0.5) * dy;
            spans.clear();
            spans.extend(solid.iter().filter_map(|p| p.x_extent_at(y)));
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut covered = 0.0;
            let mut run: Option<(f64, f64)> = None;
            for &(a, b) in &spans {
                run = match run {
                    Some((s, e)) if a <= e => Some((s, e.max(b))),
                    Some((s, e)) => {
                        covered += e - s;
                        Some((a, b))
                    }
                    None => Some((a, b)),
                };
            }
            if let Some((s, e)) = run {
                covered += e - s;
            }
            total += covered;
        }
        total * dy
    };
    let mut rows = 256;
    let mut prev = estimate(rows);
    while rows < (1 << 22) {
        rows *= 2;
        let cur = estimate(rows);
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return cur;
        }
        prev = cur;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn square(x: f64, y: f64, s: f64) -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Point2::new(x, y),
            Point2::new(x + s, y),
            Point2::new(x + s, y + s),
            Point2::new(x, y + s),
        ])
        .unwrap()
    }

    #[test]
    fn minkowski_along_link() {
        let p = minkowski_segment_rect(Point2::ORIGIN, Point2::new(10.0, 0.0), 2.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(p.area(), 12.0, max_relative = 1e-12);
        assert!(p.vertices().len() <= 6);
    }

    #[test]
    fn minkowski_degenerate_segment_is_footprint() {
        for theta in [0.0, 0.3, 1.2, 2.9] {
            let c = Point2::new(3.0, 3.0);
            let p = minkowski_segment_rect(c, c, 2.0, 1.0, theta).unwrap();
            assert_relative_eq!(p.area(), 2.0, max_relative = 1e-12);
            assert_eq!(p.vertices().len(), 4);
        }
    }

    #[test]
    fn minkowski_line_segment_blocker() {
        let p = minkowski_segment_rect(Point2::ORIGIN, Point2::new(10.0, 0.0), 2.0, 0.0, FRAC_PI_2).unwrap();
        assert_relative_eq!(p.area(), 20.0, max_relative = 1e-12);
        assert_eq!(p.vertices().len(), 4);
    }

    #[test]
    fn minkowski_rejects_negative_sides() {
        assert!(minkowski_segment_rect(Point2::ORIGIN, Point2::new(1.0, 0.0), -1.0, 1.0, 0.0).is_err());
        assert!(minkowski_segment_rect(Point2::ORIGIN, Point2::new(1.0, 0.0), 1.0, -0.5, 0.0).is_err());
    }

    #[test]
    fn minkowski_fully_degenerate_has_zero_area() {
        let p = minkowski_segment_rect(Point2::ORIGIN, Point2::ORIGIN, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(p.area(), 0.0);
        let p = minkowski_segment_rect(Point2::ORIGIN, Point2::new(5.0, 0.0), 0.0, 0.0, 1.0).unwrap();
        assert_eq!(p.area(), 0.0);
        assert_eq!(p.vertices().len(), 2);
    }

    #[test]
    fn intersect_cases() {
        let a = square(0.0, 0.0, 1.0);
        assert_relative_eq!(convex_intersect(&a, &a).area(), 1.0, max_relative = 1e-12);
        assert!(convex_intersect(&a, &square(5.0, 0.0, 1.0)).is_empty());
        assert_relative_eq!(convex_intersect(&a, &square(0.5, 0.0, 1.0)).area(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn intersect_with_degenerate_is_empty() {
        let a = square(0.0, 0.0, 1.0);
        let seg = ConvexPolygon::hull(&[Point2::new(0.2, 0.5), Point2::new(0.8, 0.5)]);
        assert!(convex_intersect(&a, &seg).is_empty());
        assert!(convex_intersect(&seg, &a).is_empty());
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&ConvexPolygon::empty()), 0.0);
        assert_eq!(square(0.0, 0.0, 1.0).area(), 1.0);
        let tri = ConvexPolygon::new(vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 2.0)]).unwrap();
        assert_eq!(tri.area(), 2.0);
    }

    #[test]
    fn rejects_clockwise() {
        let cw = vec![Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), Point2::new(1.0, 1.0), Point2::new(1.0, 0.0)];
        assert!(ConvexPolygon::new(cw).is_err());
    }

    #[test]
    fn unions() {
        let a = square(0.0, 0.0, 1.0);
        assert_relative_eq!(union_area(&[a.clone(), a.clone()]), 1.0, max_relative = 1e-12);
        assert_relative_eq!(union_area(&[a.clone(), square(3.0, 0.0, 1.0)]), 2.0, max_relative = 1e-12);
        assert_relative_eq!(union_area(&[a.clone(), square(0.5, 0.0, 1.0)]), 1.5, max_relative = 1e-12);
        assert_eq!(union_area(&[]), 0.0);
    }

    #[test]
    fn grid_fallback_close_to_exact() {
        let polys: Vec<ConvexPolygon> = (0..12)
            .map(|i| {
                let a = i as f64 * PI / 12.0;
                minkowski_segment_rect(Point2::ORIGIN, Point2::polar(10.0, a), 3.0, 1.0, a * 0.7).unwrap()
            })
            .collect();
        let exact = IntersectionLattice::new(&polys).union_area(u32::MAX >> 20);
        let grid = union_area_with(&polys, 10);
        assert_relative_eq!(grid, exact, max_relative = 2e-3);
    }

    #[test]
    fn lattice_sub_unions() {
        let polys = vec![square(0.0, 0.0, 1.0), square(0.5, 0.0, 1.0), square(0.25, 0.5, 1.0)];
        let lat = IntersectionLattice::new(&polys);
        assert_relative_eq!(lat.union_area(0b011), 1.5, max_relative = 1e-12);
        assert_relative_eq!(lat.union_area(0b001), 1.0, max_relative = 1e-12);
        assert_relative_eq!(lat.intersection_area(0b011), 0.5, max_relative = 1e-12);
        assert_eq!(lat.union_area(0), 0.0);
    }
}
