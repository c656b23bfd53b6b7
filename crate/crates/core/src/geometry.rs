//! Exact 2-D primitives used by the planner, the simulator and the oracle.
//!
//! All angles are in degrees. Points and vectors reject non-finite
//! coordinates at construction, so every downstream computation can assume
//! finite inputs.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::Error;

/// A position in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    x: f64,
    y: f64,
}

impl Point {
    /// Panics on non-finite coordinates; use [`Point::try_new`] for untrusted input.
    pub fn new(x: f64, y: f64) -> Self {
        assert!(x.is_finite() && y.is_finite(), "non-finite point ({x}, {y})");
        Point { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self, Error> {
        if x.is_finite() && y.is_finite() {
            Ok(Point { x, y })
        } else {
            Err(Error::NonFinite(format!("point ({x}, {y})")))
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    /// Offset from `self` to `other`.
    #[inline]
    pub fn to(&self, other: Point) -> Vector {
        Vector::new(other.x - self.x, other.y - self.y)
    }

    #[inline]
    pub fn translate(&self, v: Vector) -> Point {
        Point::new(self.x + v.vi, self.y + v.vj)
    }

    /// Point at parameter `t` on the line through `self` and `other`.
    #[inline]
    pub fn lerp(&self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    pub fn midpoint(&self, other: Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.x
        } else {
            self.y
        }
    }
}

impl TryFrom<[f64; 2]> for Point {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self, Error> {
        Point::try_new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A velocity in units per timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector {
    vi: f64,
    vj: f64,
}

impl Vector {
    pub const ZERO: Vector = Vector { vi: 0.0, vj: 0.0 };

    pub fn new(vi: f64, vj: f64) -> Self {
        assert!(vi.is_finite() && vj.is_finite(), "non-finite vector ({vi}, {vj})");
        Vector { vi, vj }
    }

    #[inline]
    pub fn vi(&self) -> f64 {
        self.vi
    }

    #[inline]
    pub fn vj(&self) -> f64 {
        self.vj
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.vi.hypot(self.vj)
    }

    #[inline]
    pub fn dot(&self, other: Vector) -> f64 {
        self.vi * other.vi + self.vj * other.vj
    }

    #[inline]
    pub fn cross(&self, other: Vector) -> f64 {
        self.vi * other.vj - self.vj * other.vi
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector::new(self.vi * s, self.vj * s)
    }

    pub fn is_zero(&self) -> bool {
        self.vi == 0.0 && self.vj == 0.0
    }

    /// Vector with the same direction and the given magnitude; zero stays zero.
    pub fn with_norm(&self, magnitude: f64) -> Vector {
        let n = self.norm();
        if n == 0.0 {
            Vector::ZERO
        } else {
            Vector::new(self.vi / n * magnitude, self.vj / n * magnitude)
        }
    }
}

/// Straight-line path between two points. `a == b` is allowed and behaves as a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        distance(self.a, self.b)
    }
}

/// Axis-aligned rectangle with `min <= max` on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RectRepr", into = "RectRepr")]
pub struct Rect {
    min: Point,
    max: Point,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RectRepr {
    min: Point,
    max: Point,
}

impl TryFrom<RectRepr> for Rect {
    type Error = Error;

    fn try_from(r: RectRepr) -> Result<Self, Error> {
        Rect::try_new(r.min, r.max)
    }
}

impl From<Rect> for RectRepr {
    fn from(r: Rect) -> Self {
        RectRepr {
            min: r.min,
            max: r.max,
        }
    }
}

impl Rect {
    /// Panics when `min` exceeds `max` on either axis.
    pub fn new(min: Point, max: Point) -> Self {
        Rect::try_new(min, max).expect("invalid rectangle")
    }

    pub fn try_new(min: Point, max: Point) -> Result<Self, Error> {
        if min.x <= max.x && min.y <= max.y {
            Ok(Rect { min, max })
        } else {
            Err(Error::InvalidRect(format!("min {min} exceeds max {max}")))
        }
    }

    pub fn from_coords(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect::new(Point::new(x0, y0), Point::new(x1, y1))
    }

    #[inline]
    pub fn min(&self) -> Point {
        self.min
    }

    #[inline]
    pub fn max(&self) -> Point {
        self.max
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point {
        self.min.midpoint(self.max)
    }

    /// Grown by `d` on every side (square corners). Negative `d` shrinks,
    /// collapsing to the center line when the rectangle is too small.
    pub fn inflate(&self, d: f64) -> Rect {
        let (x0, x1) = grow_interval(self.min.x, self.max.x, d);
        let (y0, y1) = grow_interval(self.min.y, self.max.y, d);
        Rect::from_coords(x0, y0, x1, y1)
    }

    /// Closed containment.
    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    /// Intersection with `other`, or `None` when disjoint.
    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.min.x.max(other.min.x);
        let y0 = self.min.y.max(other.min.y);
        let x1 = self.max.x.min(other.max.x);
        let y1 = self.max.y.min(other.max.y);
        (x0 <= x1 && y0 <= y1).then(|| Rect::from_coords(x0, y0, x1, y1))
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.min,
            Point::new(self.max.x, self.min.y),
            self.max,
            Point::new(self.min.x, self.max.y),
        ]
    }

    /// Euclidean distance from `p` to the closed rectangle (0 inside).
    pub fn distance_to(&self, p: Point) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }
}

fn grow_interval(lo: f64, hi: f64, d: f64) -> (f64, f64) {
    let (a, b) = (lo - d, hi + d);
    if a <= b {
        (a, b)
    } else {
        let c = (lo + hi) / 2.0;
        (c, c)
    }
}

/// Euclidean distance.
#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    (dx * dx + dy * dy).sqrt()
}

/// Squared Euclidean distance; the ordering key of the spatial index.
#[inline]
pub fn distance_sq(a: Point, b: Point) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    dx * dx + dy * dy
}

/// Clips the segment against the closed rectangle. Returns the parameter
/// interval `[t0, t1] ⊆ [0, 1]` lying inside, if any.
fn clip(s: &Segment, r: &Rect) -> Option<(f64, f64)> {
    let dx = s.b.x - s.a.x;
    let dy = s.b.y - s.a.y;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let edges = [
        (-dx, s.a.x - r.min.x),
        (dx, r.max.x - s.a.x),
        (-dy, s.a.y - r.min.y),
        (dy, r.max.y - s.a.y),
    ];
    for (p, q) in edges {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                if t > t1 {
                    return None;
                }
                t0 = t0.max(t);
            } else {
                if t < t0 {
                    return None;
                }
                t1 = t1.min(t);
            }
        }
    }
    Some((t0, t1))
}

/// True iff `s` touches the closed rectangle `r` grown by `inflate` on all sides.
pub fn segment_intersects_rect(s: &Segment, r: &Rect, inflate: f64) -> bool {
    clip(s, &r.inflate(inflate)).is_some()
}

/// True iff `s` passes through the open interior of `r` grown by `inflate`.
/// Grazing a corner or running along an edge does not count. Used by the
/// visibility-graph oracle, whose shortest paths hug obstacle boundaries.
pub fn segment_crosses_rect_interior(s: &Segment, r: &Rect, inflate: f64) -> bool {
    const EPS: f64 = 1e-9;
    let grown = r.inflate(inflate);
    match clip(s, &grown) {
        None => false,
        Some((t0, t1)) => {
            let m = s.a.lerp(s.b, (t0 + t1) / 2.0);
            m.x > grown.min.x + EPS
                && m.x < grown.max.x - EPS
                && m.y > grown.min.y + EPS
                && m.y < grown.max.y - EPS
        }
    }
}

/// Distance from `p` to the closed segment.
pub fn point_segment_distance(p: Point, s: &Segment) -> f64 {
    let d = s.a.to(s.b);
    let len_sq = d.dot(d);
    if len_sq == 0.0 {
        return distance(p, s.a);
    }
    let t = (s.a.to(p).dot(d) / len_sq).clamp(0.0, 1.0);
    distance(p, s.a.lerp(s.b, t))
}

/// True iff the closed segment comes within `radius` of `center` (contact counts).
pub fn segment_intersects_disk(s: &Segment, center: Point, radius: f64) -> bool {
    point_segment_distance(center, s) <= radius
}

/// Smallest distance between two closed segments; zero when they touch.
pub fn segment_distance(s: &Segment, t: &Segment) -> f64 {
    let side = |a: Point, b: Point, c: Point| a.to(b).cross(a.to(c));
    let (d1, d2) = (side(t.a, t.b, s.a), side(t.a, t.b, s.b));
    let (d3, d4) = (side(s.a, s.b, t.a), side(s.a, s.b, t.b));
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(s.a, t)
        .min(point_segment_distance(s.b, t))
        .min(point_segment_distance(t.a, s))
        .min(point_segment_distance(t.b, s))
}

/// Maps any angle in degrees into `(-180, 180]`.
pub fn normalize_angle(deg: f64) -> f64 {
    let r = deg % 360.0;
    if r > 180.0 {
        r - 360.0
    } else if r <= -180.0 {
        r + 360.0
    } else {
        r
    }
}
