//! Planar primitives: points, validated polygons, skeleton extraction and
//! the scanline rasterizer shared by label generation and evaluation.
//!
//! Coordinates follow image conventions: origin at the top-left corner,
//! `y` grows downward. Pixel `(col, row)` covers `[col, col+1) x [row, row+1)`
//! and its center sits at `(col + 0.5, row + 0.5)`.

pub mod raster;
mod skeleton;

pub use skeleton::{extract_skeleton, resample_chain, Skeleton, DEFAULT_DOT_COUNT};

use crate::error::GeometryError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    #[inline]
    pub fn dist(self, o: Point2D) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    #[inline]
    pub fn dist_sq(self, o: Point2D) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn lerp(self, o: Point2D, t: f64) -> Point2D {
        Point2D::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    #[inline]
    pub fn midpoint(self, o: Point2D) -> Point2D {
        Point2D::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Sub for Point2D {
    type Output = Point2D;
    #[inline]
    fn sub(self, o: Point2D) -> Point2D {
        Point2D::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Add for Point2D {
    type Output = Point2D;
    #[inline]
    fn add(self, o: Point2D) -> Point2D {
        Point2D::new(self.x + o.x, self.y + o.y)
    }
}

#[inline]
fn cross(a: Point2D, b: Point2D) -> f64 {
    a.x * b.y - a.y * b.x
}

#[inline]
fn dot(a: Point2D, b: Point2D) -> f64 {
    a.x * b.x + a.y * b.y
}

/// Axis-aligned bounding box `[min_x, max_x] x [min_y, max_y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn of(points: &[Point2D]) -> BBox {
        let mut b = BBox {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for p in points {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        b
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn intersects(&self, o: &BBox) -> bool {
        self.min_x <= o.max_x && o.min_x <= self.max_x && self.min_y <= o.max_y && o.min_y <= self.max_y
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox {
            min_x: self.min_x.min(o.min_x),
            min_y: self.min_y.min(o.min_y),
            max_x: self.max_x.max(o.max_x),
            max_y: self.max_y.max(o.max_y),
        }
    }
}

/// A simple polygon, closed implicitly (last vertex connects to the first).
///
/// Construction validates: at least 3 finite vertices, no repeated
/// consecutive vertex, non-zero signed area and no self-intersection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon {
    vertices: Vec<Point2D>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2D>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices { min: 3, got: n });
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeometryError::DuplicateVertex((i + 1) % n));
            }
        }
        let collinear = vertices.iter().all(|&p| orient(vertices[0], vertices[1], p) == 0.0);
        if collinear {
            return Err(GeometryError::ZeroArea);
        }
        if let Some((i, j)) = find_self_intersection(&vertices) {
            return Err(GeometryError::SelfIntersecting(i, j));
        }
        if signed_area(&vertices) == 0.0 {
            return Err(GeometryError::ZeroArea);
        }
        Ok(Polygon { vertices })
    }

    /// Convenience constructor from `(x, y)` pairs.
    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self, GeometryError> {
        Self::new(coords.iter().map(|&(x, y)| Point2D::new(x, y)).collect())
    }

    /// Axis-aligned rectangle with corners `(x0, y0)` and `(x1, y1)`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::from_coords(&[(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2D] {
        &self.vertices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area; positive when the vertices run clockwise on screen.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    /// Edges `(v[i], v[i+1])`, wrapping around.
    pub fn edges(&self) -> impl Iterator<Item = (Point2D, Point2D)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: Point2D) -> bool {
        point_in_polygon(p, self)
    }

    /// Applies `f` to every vertex and revalidates.
    pub fn map_points(&self, f: impl Fn(Point2D) -> Point2D) -> Result<Polygon, GeometryError> {
        Polygon::new(self.vertices.iter().map(|&p| f(p)).collect())
    }
}

fn signed_area(v: &[Point2D]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        s += cross(v[i], v[(i + 1) % n]);
    }
    0.5 * s
}

fn orient(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    cross(b - a, c - a)
}

fn on_segment(a: Point2D, b: Point2D, p: Point2D) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, touching included.
pub fn segments_intersect(a: Point2D, b: Point2D, c: Point2D, d: Point2D) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn find_self_intersection(v: &[Point2D]) -> Option<(usize, usize)> {
    let n = v.len();
    let boxes: Vec<BBox> = (0..n).map(|i| BBox::of(&[v[i], v[(i + 1) % n]])).collect();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        // Adjacent edge folding back onto this one.
        let c = v[(i + 2) % n];
        if orient(a, b, c) == 0.0 && dot(a - b, c - b) > 0.0 {
            return Some((i, (i + 1) % n));
        }
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if !boxes[i].intersects(&boxes[j]) {
                continue;
            }
            if segments_intersect(a, b, v[j], v[(j + 1) % n]) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Undirected angle of segment `ab` from the +x axis, in degrees `[0, 180)`.
pub fn segment_angle(a: Point2D, b: Point2D) -> Result<f64, GeometryError> {
    if a == b {
        return Err(GeometryError::CoincidentPoints);
    }
    let deg = (b.y - a.y).atan2(b.x - a.x).to_degrees().rem_euclid(180.0);
    // rem_euclid can round a tiny negative up to exactly 180.
    Ok(if deg >= 180.0 { 0.0 } else { deg })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
    On,
}

/// Sign of `(b - a) x (p - a)`. In image coordinates a point below a
/// left-to-right segment is `Positive`.
pub fn point_side_of_segment(p: Point2D, a: Point2D, b: Point2D) -> Side {
    let ab = b - a;
    let c = cross(ab, p - a);
    let len = ab.x.hypot(ab.y);
    if c.abs() < 1e-9 * len {
        Side::On
    } else if c > 0.0 {
        Side::Positive
    } else {
        Side::Negative
    }
}

/// Distance from `p` to segment `ab` and the clamped projection parameter.
#[inline]
pub fn project_onto_segment(p: Point2D, a: Point2D, b: Point2D) -> (f64, f64) {
    let ab = b - a;
    let len_sq = dot(ab, ab);
    let t = if len_sq > 0.0 {
        (dot(p - a, ab) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.dist(a.lerp(b, t)), t)
}

/// Even-odd membership; points on the boundary count as inside.
pub fn point_in_polygon(p: Point2D, poly: &Polygon) -> bool {
    let mut inside = false;
    for (a, b) in poly.edges() {
        let (d, _) = project_onto_segment(p, a, b);
        if d <= 1e-9 {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}
