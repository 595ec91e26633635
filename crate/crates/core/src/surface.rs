//! Patchwise-flat closed surfaces made of parallelogram patches.
//!
//! Every patch is the image of the unit square under the affine map
//! `κ(s, t) = c0 + s (c1 - c0) + t (c3 - c0)`. Corners are ordered
//! counterclockwise when seen from outside, so `(c1 - c0) × (c3 - c0)` points
//! along the outward normal.

use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub id: usize,
    pub corners: [Point; 4],
    pub normal: Point,
    /// Area of the patch, i.e. the constant surface Jacobian of `κ`.
    pub jacobian: f64,
    /// `c1 - c0`, image of the unit `s` direction.
    pub edge_s: Point,
    /// `c3 - c0`, image of the unit `t` direction.
    pub edge_t: Point,
}

impl Patch {
    /// Builds a patch from its four corners, checking that they form a planar
    /// parallelogram.
    pub fn new(id: usize, corners: [Point; 4]) -> Result<Self> {
        let edge_s = corners[1] - corners[0];
        let edge_t = corners[3] - corners[0];
        let cross = edge_s.cross(&edge_t);
        let area = cross.norm();
        let diam = (corners[2] - corners[0])
            .norm()
            .max((corners[3] - corners[1]).norm());
        if area <= GEOM_TOL * diam * diam {
            return Err(Error::InvalidArgument(format!("patch {id} is degenerate")));
        }
        let normal = cross / area;
        let far = corners[0] + edge_s + edge_t;
        if (far - corners[2]).norm() > GEOM_TOL * diam.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "patch {id} is not a parallelogram"
            )));
        }
        if normal.dot(&(corners[2] - corners[0])).abs() > GEOM_TOL * diam {
            return Err(Error::InvalidArgument(format!("patch {id} is not planar")));
        }
        Ok(Self {
            id,
            corners,
            normal,
            jacobian: area,
            edge_s,
            edge_t,
        })
    }

    #[inline]
    pub fn lift(&self, s: f64, t: f64) -> Point {
        self.corners[0] + self.edge_s * s + self.edge_t * t
    }

    pub fn centroid(&self) -> Point {
        self.lift(0.5, 0.5)
    }

    pub fn diameter(&self) -> f64 {
        (self.corners[2] - self.corners[0])
            .norm()
            .max((self.corners[3] - self.corners[1]).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationKind {
    Identical,
    CommonEdge,
    CommonVertex,
    Disjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatchRelation {
    pub kind: RelationKind,
    pub coplanar: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub patch: usize,
    pub s: f64,
    pub t: f64,
}

impl SurfacePoint {
    pub fn new(patch: usize, s: f64, t: f64) -> Self {
        Self { patch, s, t }
    }
}

/// Axis-aligned rectangle `[s0, s1] × [t0, t1]` in the parameter domain of a
/// patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchRect {
    pub patch: usize,
    pub s0: f64,
    pub s1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl PatchRect {
    pub fn new(patch: usize, s0: f64, s1: f64, t0: f64, t1: f64) -> Self {
        Self {
            patch,
            s0,
            s1,
            t0,
            t1,
        }
    }

    pub fn full(patch: usize) -> Self {
        Self::new(patch, 0.0, 1.0, 0.0, 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct Surface {
    name: String,
    patches: Vec<Patch>,
    vertices: Vec<Point>,
    relations: Vec<PatchRelation>,
}

impl Surface {
    /// Assembles a surface and classifies all patch pairs.
    pub fn new(name: impl Into<String>, patches: Vec<Patch>, vertices: Vec<Point>) -> Result<Self> {
        let n = patches.len();
        for (i, p) in patches.iter().enumerate() {
            if p.id != i {
                return Err(Error::InvalidArgument(format!(
                    "patch at position {i} carries id {}",
                    p.id
                )));
            }
        }
        let mut relations = vec![
            PatchRelation {
                kind: RelationKind::Disjoint,
                coplanar: false
            };
            n * n
        ];
        for i in 0..n {
            for j in i..n {
                let rel = if i == j {
                    PatchRelation {
                        kind: RelationKind::Identical,
                        coplanar: true,
                    }
                } else {
                    let rel = classify(&patches[i], &patches[j]);
                    if rel.kind == RelationKind::Identical {
                        return Err(Error::InvalidArgument(format!(
                            "patches {i} and {j} overlap"
                        )));
                    }
                    rel
                };
                relations[i * n + j] = rel;
                relations[j * n + i] = rel;
            }
        }
        Ok(Self {
            name: name.into(),
            patches,
            vertices,
            relations,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn patch(&self, id: usize) -> Result<&Patch> {
        self.patches.get(id).ok_or(Error::PatchIndex {
            index: id,
            count: self.patches.len(),
        })
    }

    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn total_area(&self) -> f64 {
        self.patches.iter().map(|p| p.jacobian).sum()
    }

    pub fn lift(&self, point: SurfacePoint) -> Result<Point> {
        let patch = self.patch(point.patch)?;
        if !(0.0..=1.0).contains(&point.s) || !(0.0..=1.0).contains(&point.t) {
            return Err(Error::InvalidArgument(format!(
                "local coordinates ({}, {}) outside the unit square",
                point.s, point.t
            )));
        }
        Ok(patch.lift(point.s, point.t))
    }

    pub fn patch_relation(&self, i: usize, j: usize) -> Result<PatchRelation> {
        let n = self.patches.len();
        if i >= n || j >= n {
            return Err(Error::PatchIndex {
                index: i.max(j),
                count: n,
            });
        }
        Ok(self.relations[i * n + j])
    }

    /// Unchecked relation lookup for hot loops.
    #[inline]
    pub(crate) fn coplanar(&self, i: usize, j: usize) -> bool {
        self.relations[i * self.patches.len() + j].coplanar
    }

    pub fn rect_corners(&self, r: &PatchRect) -> Result<[Point; 4]> {
        let p = self.patch(r.patch)?;
        Ok([
            p.lift(r.s0, r.t0),
            p.lift(r.s1, r.t0),
            p.lift(r.s1, r.t1),
            p.lift(r.s0, r.t1),
        ])
    }

    /// Euclidean distance between two lifted parameter rectangles.
    pub fn support_distance(&self, a: &PatchRect, b: &PatchRect) -> Result<f64> {
        for r in [a, b] {
            if !(0.0 <= r.s0 && r.s0 <= r.s1 && r.s1 <= 1.0 && 0.0 <= r.t0 && r.t0 <= r.t1 && r.t1 <= 1.0)
            {
                return Err(Error::InvalidArgument(format!(
                    "rectangle {r:?} does not lie in its patch"
                )));
            }
        }
        let pa = self.rect_corners(a)?;
        let pb = self.rect_corners(b)?;
        let na = self.patches[a.patch].normal;
        let nb = self.patches[b.patch].normal;
        Ok(polygon_distance(&pa, &na, &pb, &nb))
    }

    /// Sum over patches of area times normal; zero for a closed surface.
    pub fn oriented_area_sum(&self) -> Point {
        self.patches
            .iter()
            .fold(Point::zeros(), |acc, p| acc + p.normal * p.jacobian)
    }

    /// Checks that every patch edge is covered, without gaps or overlaps, by
    /// edges of other patches. Patches may meet in T-junctions.
    pub fn is_closed(&self) -> bool {
        let edges: Vec<(usize, Point, Point)> = self
            .patches
            .iter()
            .flat_map(|p| (0..4).map(move |k| (p.id, p.corners[k], p.corners[(k + 1) % 4])))
            .collect();
        edges.iter().all(|&(pid, a, b)| {
            let len = (b - a).norm();
            let dir = (b - a) / len;
            // Collect overlaps of other edges on the same supporting line.
            let mut covered = 0.0;
            for &(qid, c, d) in &edges {
                if qid == pid {
                    continue;
                }
                let on_line = |x: Point| {
                    let v = x - a;
                    (v - dir * v.dot(&dir)).norm() <= GEOM_TOL * len.max(1.0)
                };
                if !on_line(c) || !on_line(d) {
                    continue;
                }
                let (u, w) = {
                    let u = (c - a).dot(&dir);
                    let w = (d - a).dot(&dir);
                    (u.min(w), u.max(w))
                };
                let lo = u.max(0.0);
                let hi = w.min(len);
                if hi > lo {
                    covered += hi - lo;
                }
            }
            (covered - len).abs() <= 1e-10 * len.max(1.0)
        })
    }

    /// Plain-text dump: one line per patch with id, the four corners and the
    /// normal.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# surface {} patches {}", self.name, self.patches.len());
        for p in &self.patches {
            let _ = write!(out, "{}", p.id);
            for c in p.corners.iter().chain(std::iter::once(&p.normal)) {
                let _ = write!(out, " {} {} {}", c.x, c.y, c.z);
            }
            out.push('\n');
        }
        out
    }

    /// Looks a built-in surface up by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "fichera" => Ok(make_fichera()),
            "cube" => Ok(make_cube()),
            other => Err(Error::InvalidArgument(format!("unknown surface '{other}'"))),
        }
    }
}

/// Axis-aligned rectangle on the plane `x_axis = value`, with ranges on the
/// two cyclically following axes.
fn axis_patch(
    id: usize,
    axis: usize,
    value: f64,
    outward_positive: bool,
    b_range: (f64, f64),
    c_range: (f64, f64),
) -> Patch {
    let b = (axis + 1) % 3;
    let c = (axis + 2) % 3;
    let point = |vb: f64, vc: f64| {
        let mut p = Point::zeros();
        p[axis] = value;
        p[b] = vb;
        p[c] = vc;
        p
    };
    let c0 = point(b_range.0, c_range.0);
    let (c1, c3) = if outward_positive {
        (point(b_range.1, c_range.0), point(b_range.0, c_range.1))
    } else {
        (point(b_range.0, c_range.1), point(b_range.1, c_range.0))
    };
    let c2 = c1 + c3 - c0;
    Patch::new(id, [c0, c1, c2, c3]).expect("built-in patch is a valid parallelogram")
}

/// Boundary of the Fichera domain `(0,1)^3 \ (0,1/2]^3` as 12 patches.
///
/// Patches 0..3 are the full faces `x=1`, `y=1`, `z=1`; patches 3..9 split the
/// three L-shaped faces on `x=0`, `y=0`, `z=0` into a `1 × 1/2` rectangle and a
/// `1/2 × 1/2` square each; patches 9..12 are the notch faces at `1/2`, which
/// all meet in the reentrant corner `(1/2, 1/2, 1/2)`.
pub fn make_fichera() -> Surface {
    let mut patches = Vec::with_capacity(12);
    for axis in 0..3 {
        patches.push(axis_patch(patches.len(), axis, 1.0, true, (0.0, 1.0), (0.0, 1.0)));
    }
    for axis in 0..3 {
        patches.push(axis_patch(patches.len(), axis, 0.0, false, (0.0, 1.0), (0.5, 1.0)));
        patches.push(axis_patch(patches.len(), axis, 0.0, false, (0.5, 1.0), (0.0, 0.5)));
    }
    for axis in 0..3 {
        patches.push(axis_patch(patches.len(), axis, 0.5, false, (0.0, 0.5), (0.0, 0.5)));
    }
    let mut vertices = Vec::new();
    for &x in &[0.0, 1.0] {
        for &y in &[0.0, 1.0] {
            for &z in &[0.0, 1.0] {
                if x + y + z > 0.0 {
                    vertices.push(Point::new(x, y, z));
                }
            }
        }
    }
    for &x in &[0.0, 0.5] {
        for &y in &[0.0, 0.5] {
            for &z in &[0.0, 0.5] {
                if x + y + z > 0.0 {
                    vertices.push(Point::new(x, y, z));
                }
            }
        }
    }
    Surface::new("fichera", patches, vertices).expect("fichera surface is valid")
}

/// Boundary of the cube `(-1,1)^3`, one patch per face. Order:
/// `x=-1, x=1, y=-1, y=1, z=-1, z=1`.
pub fn make_cube() -> Surface {
    let mut patches = Vec::with_capacity(6);
    for axis in 0..3 {
        for &(value, outward) in &[(-1.0, false), (1.0, true)] {
            patches.push(axis_patch(
                patches.len(),
                axis,
                value,
                outward,
                (-1.0, 1.0),
                (-1.0, 1.0),
            ));
        }
    }
    let mut vertices = Vec::new();
    for &x in &[-1.0, 1.0] {
        for &y in &[-1.0, 1.0] {
            for &z in &[-1.0, 1.0] {
                vertices.push(Point::new(x, y, z));
            }
        }
    }
    Surface::new("cube", patches, vertices).expect("cube surface is valid")
}

fn classify(p: &Patch, q: &Patch) -> PatchRelation {
    let scale = p.diameter().max(q.diameter());
    let tol = 1e-10 * scale;
    let parallel = p.normal.cross(&q.normal).norm() <= 1e-12;
    let coplanar = parallel && p.normal.dot(&(q.corners[0] - p.corners[0])).abs() <= tol;
    if parallel && !coplanar {
        return PatchRelation {
            kind: RelationKind::Disjoint,
            coplanar: false,
        };
    }
    let kind = if coplanar {
        let clipped = clip_polygon(&p.corners, &q.corners, &q.normal, tol);
        if clipped.is_empty() {
            RelationKind::Disjoint
        } else if polygon_area(&clipped, &p.normal) > tol * scale {
            RelationKind::Identical
        } else {
            spread_kind(&clipped, tol)
        }
    } else {
        match plane_line_overlap(p, q, tol) {
            None => RelationKind::Disjoint,
            Some(len) if len > tol => RelationKind::CommonEdge,
            Some(_) => RelationKind::CommonVertex,
        }
    };
    PatchRelation { kind, coplanar }
}

fn spread_kind(points: &[Point], tol: f64) -> RelationKind {
    let mut spread: f64 = 0.0;
    for a in points {
        for b in points {
            spread = spread.max((a - b).norm());
        }
    }
    if spread > tol {
        RelationKind::CommonEdge
    } else {
        RelationKind::CommonVertex
    }
}

/// Length of the intersection of two closed parallelograms in non-parallel
/// planes, if it is non-empty.
fn plane_line_overlap(p: &Patch, q: &Patch, tol: f64) -> Option<f64> {
    let dir = p.normal.cross(&q.normal).normalize();
    // Point on both planes: solve with the line direction as third equation.
    let m = nalgebra::Matrix3::from_rows(&[
        p.normal.transpose(),
        q.normal.transpose(),
        dir.transpose(),
    ]);
    let rhs = Point::new(p.normal.dot(&p.corners[0]), q.normal.dot(&q.corners[0]), 0.0);
    let origin = m.lu().solve(&rhs)?;
    let (a0, a1) = clip_line(&origin, &dir, &p.corners, &p.normal, tol)?;
    let (b0, b1) = clip_line(&origin, &dir, &q.corners, &q.normal, tol)?;
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    if hi < lo - tol {
        None
    } else {
        Some((hi - lo).max(0.0))
    }
}

fn clip_line(origin: &Point, dir: &Point, poly: &[Point; 4], normal: &Point, tol: f64) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for k in 0..4 {
        let a = poly[k];
        let b = poly[(k + 1) % 4];
        let inward = normal.cross(&(b - a)).normalize();
        let c0 = inward.dot(&(origin - a));
        let c1 = inward.dot(dir);
        if c1.abs() < 1e-14 {
            if c0 < -tol {
                return None;
            }
        } else {
            let t = (-tol - c0) / c1;
            if c1 > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Sutherland–Hodgman clipping of `subject` by the convex `clip` polygon,
/// keeping points within `tol` of the clip boundary.
fn clip_polygon(subject: &[Point; 4], clip: &[Point; 4], normal: &Point, tol: f64) -> Vec<Point> {
    let mut output: Vec<Point> = subject.to_vec();
    for k in 0..4 {
        if output.is_empty() {
            break;
        }
        let a = clip[k];
        let b = clip[(k + 1) % 4];
        let inward = normal.cross(&(b - a)).normalize();
        let side = |x: &Point| inward.dot(&(x - a)) + tol;
        let input = std::mem::take(&mut output);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (sc, sp) = (side(&cur), side(&prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    output.push(prev + (cur - prev) * (sp / (sp - sc)));
                }
                output.push(cur);
            } else if sp >= 0.0 {
                output.push(prev + (cur - prev) * (sp / (sp - sc)));
            }
        }
    }
    output
}

fn polygon_area(points: &[Point], normal: &Point) -> f64 {
    let mut acc = Point::zeros();
    for i in 0..points.len() {
        acc += points[i].cross(&points[(i + 1) % points.len()]);
    }
    0.5 * acc.dot(normal).abs()
}

fn segment_distance(p1: &Point, q1: &Point, p2: &Point, q2: &Point) -> f64 {
    // Closest points between two segments, cf. Ericson, Real-Time Collision Detection, 5.1.9.
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-300 && e <= 1e-300 {
        return r.norm();
    }
    if a <= 1e-300 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-300 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-300 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

fn point_polygon_distance(x: &Point, poly: &[Point; 4], normal: &Point) -> f64 {
    let h = normal.dot(&(x - poly[0]));
    let proj = x - normal * h;
    let inside = (0..4).all(|k| {
        let a = poly[k];
        let b = poly[(k + 1) % 4];
        normal.cross(&(b - a)).dot(&(proj - a)) >= 0.0
    });
    if inside {
        return h.abs();
    }
    (0..4)
        .map(|k| segment_distance(x, x, &poly[k], &poly[(k + 1) % 4]))
        .fold(f64::INFINITY, f64::min)
}

/// Distance between two planar convex quadrilaterals that do not cross.
pub(crate) fn polygon_distance(a: &[Point; 4], na: &Point, b: &[Point; 4], nb: &Point) -> f64 {
    let mut best = f64::INFINITY;
    for x in a {
        best = best.min(point_polygon_distance(x, b, nb));
    }
    for x in b {
        best = best.min(point_polygon_distance(x, a, na));
    }
    for i in 0..4 {
        for j in 0..4 {
            best = best.min(segment_distance(&a[i], &a[(i + 1) % 4], &b[j], &b[(j + 1) % 4]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Point, b: &Point) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn fichera_has_twelve_patches_and_area_six() {
        let s = make_fichera();
        assert_eq!(s.num_patches(), 12);
        assert!((s.total_area() - 6.0).abs() < 1e-12);
        assert!(s
            .vertices()
            .iter()
            .any(|v| close(v, &Point::new(0.5, 0.5, 0.5))));
    }

    #[test]
    fn cube_has_six_faces_and_area_24() {
        let s = make_cube();
        assert_eq!(s.num_patches(), 6);
        assert!((s.total_area() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn closed_and_outward() {
        for (s, interior) in [
            (make_fichera(), Point::new(0.75, 0.75, 0.75)),
            (make_cube(), Point::zeros()),
        ] {
            assert!(s.oriented_area_sum().norm() < 1e-12);
            assert!(s.is_closed(), "{} not closed", s.name());
            for p in s.patches() {
                assert!((p.normal.norm() - 1.0).abs() < 1e-14);
                assert!(p.normal.dot(&(p.centroid() - interior)) > 0.0);
            }
        }
    }

    #[test]
    fn lift_examples() {
        let cube = make_cube();
        let top = cube.lift(SurfacePoint::new(5, 0.5, 0.5)).unwrap();
        assert!(close(&top, &Point::new(0.0, 0.0, 1.0)));
        for p in cube.patches() {
            assert!(close(&p.lift(0.0, 0.0), &p.corners[0]));
        }
        let fichera = make_fichera();
        let far = fichera.lift(SurfacePoint::new(9, 1.0, 1.0)).unwrap();
        assert!(close(&far, &Point::new(0.5, 0.5, 0.5)));
        assert!(matches!(
            cube.lift(SurfacePoint::new(6, 0.0, 0.0)),
            Err(Error::PatchIndex { .. })
        ));
    }

    #[test]
    fn relations() {
        let cube = make_cube();
        let r = cube.patch_relation(5, 4).unwrap();
        assert_eq!(r.kind, RelationKind::Disjoint);
        assert!(!r.coplanar);
        let r = cube.patch_relation(2, 2).unwrap();
        assert_eq!(r.kind, RelationKind::Identical);
        assert!(r.coplanar);
        for i in 0..6 {
            for j in 0..6 {
                let r = cube.patch_relation(i, j).unwrap();
                assert_eq!(r, cube.patch_relation(j, i).unwrap());
                if i != j {
                    let opposite = i / 2 == j / 2;
                    let expect = if opposite {
                        RelationKind::Disjoint
                    } else {
                        RelationKind::CommonEdge
                    };
                    assert_eq!(r.kind, expect, "{i} {j}");
                }
            }
        }
        let f = make_fichera();
        // Two halves of the L-shaped face x = 0.
        let r = f.patch_relation(3, 4).unwrap();
        assert_eq!(r.kind, RelationKind::CommonEdge);
        assert!(r.coplanar);
        // Notch faces x=1/2 and y=1/2 share an edge through the corner.
        assert_eq!(f.patch_relation(9, 10).unwrap().kind, RelationKind::CommonEdge);
        // Full face x=1 and notch face x=1/2 are parallel, never coplanar.
        let r = f.patch_relation(0, 9).unwrap();
        assert_eq!(r.kind, RelationKind::Disjoint);
        assert!(!r.coplanar);
    }

    #[test]
    fn support_distance_examples() {
        let cube = make_cube();
        let q = PatchRect::new(5, 0.25, 0.75, 0.25, 0.75);
        assert_eq!(cube.support_distance(&q, &q).unwrap(), 0.0);
        let bottom = PatchRect::new(4, 0.25, 0.75, 0.25, 0.75);
        assert!((cube.support_distance(&q, &bottom).unwrap() - 2.0).abs() < 1e-14);
        let a = Patch::new(
            0,
            [
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(1.0, 1.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
            ],
        )
        .unwrap();
        let b = Patch::new(
            1,
            [
                Point::new(0.0, 0.0, 1.0),
                Point::new(0.0, 1.0, 1.0),
                Point::new(1.0, 1.0, 1.0),
                Point::new(1.0, 0.0, 1.0),
            ],
        )
        .unwrap();
        let d = polygon_distance(&a.corners, &a.normal, &b.corners, &b.normal);
        assert!((d - 1.0).abs() < 1e-14);
        // Adjacent faces touch.
        let side = PatchRect::full(1);
        assert!(cube.support_distance(&PatchRect::full(5), &side).unwrap() < 1e-14);
    }

    #[test]
    fn rejects_non_parallelogram() {
        let bad = Patch::new(
            0,
            [
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(1.0, 2.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
            ],
        );
        assert!(bad.is_err());
    }
}
