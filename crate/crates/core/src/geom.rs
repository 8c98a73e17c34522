//! Planar geometry for oriented rectangular footprints.
//!
//! Everything here works in double precision on an O(1) workspace scale.
//! Comparisons that need a degeneracy tolerance use [`EPS`].

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Degeneracy tolerance for geometric comparisons.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Point2, s: f64) -> Point2 {
        self + (other - self) * s
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = (theta + PI).rem_euclid(two_pi) - PI;
    // rem_euclid can return exactly two_pi for tiny negative inputs
    if t >= PI {
        t -= two_pi;
    }
    t
}

/// Planar object pose; `theta` is kept in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Same position and orientation up to `tol` (orientation compared modulo 2π).
    pub fn approx_eq(&self, other: &Pose2, tol: f64) -> bool {
        (self.x - other.x).abs() <= tol
            && (self.y - other.y).abs() <= tol
            && normalize_angle(self.theta - other.theta).abs() <= tol
    }
}

/// Oriented rectangle: a pose plus strictly positive half-extents along the
/// local x (`half_width`) and local y (`half_height`) axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Pose2,
    pub half_width: f64,
    pub half_height: f64,
}

impl OrientedBox {
    pub fn new(center: Pose2, half_width: f64, half_height: f64) -> Self {
        debug_assert!(half_width > 0.0 && half_height > 0.0);
        Self {
            center,
            half_width,
            half_height,
        }
    }

    /// Unit vectors of the local x and y axes.
    pub fn axes(&self) -> [Point2; 2] {
        let (s, c) = self.center.theta.sin_cos();
        [Point2::new(c, s), Point2::new(-s, c)]
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Point2; 4] {
        let [u, v] = self.axes();
        let c = self.center.position();
        let a = u * self.half_width;
        let b = v * self.half_height;
        [c - a - b, c + a - b, c + a + b, c - a + b]
    }

    fn project(&self, axis: Point2) -> (f64, f64) {
        let [u, v] = self.axes();
        let mid = self.center.position().dot(axis);
        let r = self.half_width * u.dot(axis).abs() + self.half_height * v.dot(axis).abs();
        (mid - r, mid + r)
    }

    /// Closed point membership.
    pub fn contains_point(&self, p: Point2) -> bool {
        let [u, v] = self.axes();
        let d = p - self.center.position();
        d.dot(u).abs() <= self.half_width && d.dot(v).abs() <= self.half_height
    }

    /// The same box grown by `margin` on every side.
    pub fn inflated(&self, margin: f64) -> OrientedBox {
        OrientedBox::new(
            self.center,
            self.half_width + margin,
            self.half_height + margin,
        )
    }

    pub fn translated(&self, d: Point2) -> OrientedBox {
        let c = self.center;
        OrientedBox::new(Pose2::new(c.x + d.x, c.y + d.y, c.theta), self.half_width, self.half_height)
    }
}

/// Closed-rectangle intersection via the separating-axis test over the four
/// face normals. Touching boundaries count as overlapping.
pub fn overlaps(a: &OrientedBox, b: &OrientedBox) -> bool {
    let axes = a.axes().into_iter().chain(b.axes());
    for axis in axes {
        let (amin, amax) = a.project(axis);
        let (bmin, bmax) = b.project(axis);
        if amax < bmin - EPS || bmax < amin - EPS {
            return false;
        }
    }
    true
}

/// Axis-aligned table rectangle `[0, width] × [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub width: f64,
    pub height: f64,
}

impl Default for Workspace {
    fn default() -> Self {
        Self {
            width: 1.0,
            height: 0.6,
        }
    }
}

impl Workspace {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        p.x >= -EPS && p.y >= -EPS && p.x <= self.width + EPS && p.y <= self.height + EPS
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }
}

/// Closed containment: every corner of `b` lies in `w`.
pub fn inside(w: &Workspace, b: &OrientedBox) -> bool {
    b.corners().iter().all(|&p| w.contains_point(p))
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

/// Orientation-test intersection predicate for closed segments.
pub fn segments_intersect(p0: Point2, p1: Point2, q0: Point2, q1: Point2) -> bool {
    let d1 = orient(q0, q1, p0);
    let d2 = orient(q0, q1, p1);
    let d3 = orient(p0, p1, q0);
    let d4 = orient(p0, p1, q1);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
        && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
    {
        return true;
    }
    (d1.abs() <= EPS && on_segment(q0, q1, p0))
        || (d2.abs() <= EPS && on_segment(q0, q1, p1))
        || (d3.abs() <= EPS && on_segment(p0, p1, q0))
        || (d4.abs() <= EPS && on_segment(p0, p1, q1))
}

/// Distance from `p` to the closed segment `a`–`b` (a point when `a == b`).
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= EPS * EPS {
        return p.dist(a);
    }
    let s = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * s)
}

/// Minimum Euclidean distance between two closed segments; zero iff they meet.
pub fn segment_clearance(p0: Point2, p1: Point2, q0: Point2, q1: Point2) -> f64 {
    if segments_intersect(p0, p1, q0, q1) {
        return 0.0;
    }
    point_segment_distance(p0, q0, q1)
        .min(point_segment_distance(p1, q0, q1))
        .min(point_segment_distance(q0, p0, p1))
        .min(point_segment_distance(q1, p0, p1))
}
