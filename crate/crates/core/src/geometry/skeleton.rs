use super::{point_in_polygon, segments_intersect, Point2D, Polygon};
use crate::error::GeometryError;

pub const DEFAULT_DOT_COUNT: usize = 15;

/// Ordered midline dots of a text instance with the distance from each dot
/// to its two paired boundary samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub dots: Vec<Point2D>,
    pub half_heights: Vec<f64>,
}

impl Skeleton {
    pub fn segment_count(&self) -> usize {
        self.dots.len().saturating_sub(1)
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point2D, Point2D)> + '_ {
        self.dots.windows(2).map(|w| (w[0], w[1]))
    }

    /// Rigidly maps every dot; half-heights are untouched.
    pub fn map_points(&self, f: impl Fn(Point2D) -> Point2D) -> Skeleton {
        Skeleton {
            dots: self.dots.iter().map(|&p| f(p)).collect(),
            half_heights: self.half_heights.clone(),
        }
    }
}

/// Resamples a polyline at `k` points equally spaced by arc length. The
/// first and last samples are the chain endpoints, bit for bit.
pub fn resample_chain(points: &[Point2D], k: usize) -> Result<Vec<Point2D>, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::TooFewVertices {
            min: 2,
            got: points.len(),
        });
    }
    if k < 2 {
        return Err(GeometryError::TooFewSamples(k));
    }
    let mut cum = Vec::with_capacity(points.len());
    cum.push(0.0);
    for w in points.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + w[0].dist(w[1]));
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) {
        return Err(GeometryError::DegenerateChain);
    }

    let mut out = Vec::with_capacity(k);
    out.push(points[0]);
    let mut seg = 0;
    for i in 1..k - 1 {
        let target = total * i as f64 / (k - 1) as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        out.push(points[seg].lerp(points[seg + 1], t));
    }
    out.push(*points.last().unwrap());
    Ok(out)
}

fn chain_length(chain: &[Point2D]) -> f64 {
    chain.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Absolute exterior turning angle (radians) at every vertex.
fn turning_angles(v: &[Point2D]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let e_in = v[i] - v[(i + n - 1) % n];
            let e_out = v[(i + 1) % n] - v[i];
            let c = e_in.x * e_out.y - e_in.y * e_out.x;
            let d = e_in.x * e_out.x + e_in.y * e_out.y;
            c.atan2(d).abs()
        })
        .collect()
}

/// Indices of the four corner vertices, ascending.
fn corner_indices(poly: &Polygon) -> [usize; 4] {
    let v = poly.vertices();
    if v.len() == 4 {
        return [0, 1, 2, 3];
    }
    let scores = turning_angles(v);
    let mut order: Vec<usize> = (0..v.len()).collect();
    // Stable sort keeps earlier indices first among equal scores.
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut c = [order[0], order[1], order[2], order[3]];
    c.sort_unstable();
    c
}

/// Vertices from corner `from` to corner `to` inclusive, walking forward.
fn boundary_chain(v: &[Point2D], from: usize, to: usize) -> Vec<Point2D> {
    let n = v.len();
    let mut out = vec![v[from]];
    let mut i = from;
    while i != to {
        i = (i + 1) % n;
        out.push(v[i]);
    }
    out
}

/// Splits the boundary at four corners, drops the short head/tail pair and
/// pairs up samples of the two long sides to obtain the midline.
///
/// Corners are the four vertices with the largest exterior turning angle
/// (earliest index on ties); 4-gons use their own vertices. Of the two
/// opposite chain pairs, the one with the smaller summed length is the
/// head/tail pair.
pub fn extract_skeleton(poly: &Polygon, k_dots: usize) -> Result<Skeleton, GeometryError> {
    let v = poly.vertices();
    if v.len() < 4 {
        return Err(GeometryError::TooFewVertices { min: 4, got: v.len() });
    }
    if k_dots < 2 {
        return Err(GeometryError::TooFewSamples(k_dots));
    }
    let corners = corner_indices(poly);
    let chains: Vec<Vec<Point2D>> = (0..4)
        .map(|j| boundary_chain(v, corners[j], corners[(j + 1) % 4]))
        .collect();
    let lengths: Vec<f64> = chains.iter().map(|c| chain_length(c)).collect();
    let (a, b) = if lengths[0] + lengths[2] >= lengths[1] + lengths[3] {
        (0, 2)
    } else {
        (1, 3)
    };

    let side_a = resample_chain(&chains[a], k_dots)?;
    let mut rev_b = chains[b].clone();
    rev_b.reverse();
    let side_b = resample_chain(&rev_b, k_dots)?;

    let mut dots = Vec::with_capacity(k_dots);
    let mut half_heights = Vec::with_capacity(k_dots);
    for (pa, pb) in side_a.iter().zip(&side_b) {
        dots.push(pa.midpoint(*pb));
        half_heights.push(0.5 * pa.dist(*pb));
    }

    let diag = |what: &str| {
        GeometryError::NoCornerDecomposition(format!("{what} (corners {corners:?}, chain lengths {lengths:.3?})"))
    };
    if half_heights.iter().any(|&h| !(h > 0.0)) {
        return Err(diag("zero half-height"));
    }
    if dots.windows(2).any(|w| w[0] == w[1]) {
        return Err(diag("coincident dots"));
    }
    if let Some(i) = dots.iter().position(|&d| !point_in_polygon(d, poly)) {
        return Err(diag(&format!("dot {i} falls outside the polygon")));
    }
    for i in 0..dots.len() - 1 {
        for j in i + 2..dots.len() - 1 {
            if segments_intersect(dots[i], dots[i + 1], dots[j], dots[j + 1]) {
                return Err(diag(&format!("midline segments {i} and {j} cross")));
            }
        }
    }
    Ok(Skeleton { dots, half_heights })
}
