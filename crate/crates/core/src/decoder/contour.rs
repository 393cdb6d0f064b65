//! Mask to polygon: crack-following of the outer pixel boundary followed by
//! Douglas-Peucker simplification.
//!
//! The traced contour runs along pixel edges, so a lone pixel becomes its
//! unit square and a filled rectangle becomes its exact outline.

use std::collections::HashMap;

use super::components::{connected_components, Connectivity};
use super::PixelSet;
use crate::error::DecodeError;
use crate::geometry::raster::{fill_spans, Lattice};
use crate::geometry::{project_onto_segment, Point2D, Polygon};
use crate::grid::Grid;

/// Minimum share of mask pixels the simplified polygon must cover.
pub const MIN_COVERAGE: f64 = 0.9;

/// Outer boundary of the largest 8-connected component of `mask`,
/// simplified with tolerance `simplify_eps` (pixels).
///
/// If simplification breaks simplicity or drops coverage under
/// [`MIN_COVERAGE`], the tolerance is halved until it holds; the raw
/// boundary is the last resort.
pub fn mask_to_polygon(mask: &PixelSet, simplify_eps: f64) -> Result<Polygon, DecodeError> {
    if mask.is_empty() {
        return Err(DecodeError::EmptyMask);
    }
    let comps = connected_components(&mask.to_mask(), Connectivity::Eight);
    let largest = comps
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
        .map(|(_, c)| c)
        .expect("non-empty mask has a component");
    let w = mask.width();
    let coords: Vec<(usize, usize)> = largest.iter().map(|&i| (i as usize % w, i as usize / w)).collect();
    let outline = trace_outline(&coords);

    let mut eps = simplify_eps;
    while eps >= 0.05 {
        let simplified = simplify_closed(&outline, eps);
        if simplified.len() >= 3 {
            if let Ok(poly) = Polygon::new(simplified) {
                if coverage(&poly, mask) >= MIN_COVERAGE {
                    return Ok(poly);
                }
            }
        }
        eps *= 0.5;
    }
    Ok(Polygon::new(outline)?)
}

/// Fraction of `mask` pixel centers inside `poly`.
pub fn coverage(poly: &Polygon, mask: &PixelSet) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let lat = Lattice::pixels(mask.width(), mask.height());
    let mut inside = 0usize;
    fill_spans(poly, &lat, |row, c0, c1| {
        let lo = (row * mask.width() + c0) as u32;
        let hi = (row * mask.width() + c1) as u32;
        let idx = mask.indices();
        let a = idx.partition_point(|&p| p < lo);
        let b = idx.partition_point(|&p| p < hi);
        inside += b - a;
    });
    inside as f64 / mask.len() as f64
}

/// Crack boundary of an 8-connected pixel set, vertices only at turns.
fn trace_outline(coords: &[(usize, usize)]) -> Vec<Point2D> {
    let min_x = coords.iter().map(|c| c.0).min().unwrap();
    let min_y = coords.iter().map(|c| c.1).min().unwrap();
    let max_x = coords.iter().map(|c| c.0).max().unwrap();
    let max_y = coords.iter().map(|c| c.1).max().unwrap();
    // One pixel of empty padding on every side.
    let lw = max_x - min_x + 3;
    let lh = max_y - min_y + 3;
    let mut g: Grid<bool> = Grid::filled(lw, lh, false);
    for &(x, y) in coords {
        *g.get_mut(x - min_x + 1, y - min_y + 1) = true;
    }
    bridge_diagonals(&mut g);

    let fg =
        |x: i64, y: i64| x >= 0 && y >= 0 && (x as usize) < lw && (y as usize) < lh && *g.get(x as usize, y as usize);
    let mut succ: HashMap<(i64, i64), (i64, i64)> = HashMap::new();
    for y in 0..lh as i64 {
        for x in 0..lw as i64 {
            if !fg(x, y) {
                continue;
            }
            if !fg(x, y - 1) {
                succ.insert((x, y), (x + 1, y));
            }
            if !fg(x + 1, y) {
                succ.insert((x + 1, y), (x + 1, y + 1));
            }
            if !fg(x, y + 1) {
                succ.insert((x + 1, y + 1), (x, y + 1));
            }
            if !fg(x - 1, y) {
                succ.insert((x, y + 1), (x, y));
            }
        }
    }

    let mut starts: Vec<(i64, i64)> = succ.keys().copied().collect();
    starts.sort_unstable();
    let mut visited: HashMap<(i64, i64), bool> = HashMap::with_capacity(succ.len());
    let mut best: Option<(f64, Vec<(i64, i64)>)> = None;
    for s in starts {
        if visited.contains_key(&s) {
            continue;
        }
        let mut cycle = vec![s];
        visited.insert(s, true);
        let mut cur = succ[&s];
        while cur != s {
            visited.insert(cur, true);
            cycle.push(cur);
            cur = succ[&cur];
        }
        let n = cycle.len();
        let area: f64 = (0..n)
            .map(|i| {
                let (a, b) = (cycle[i], cycle[(i + 1) % n]);
                (a.0 * b.1 - b.0 * a.1) as f64
            })
            .sum::<f64>()
            * 0.5;
        if best.as_ref().is_none_or(|(ba, _)| area > *ba) {
            best = Some((area, cycle));
        }
    }
    let cycle = best.expect("foreground pixel has a boundary").1;

    let n = cycle.len();
    let ox = min_x as f64 - 1.0;
    let oy = min_y as f64 - 1.0;
    let mut out = Vec::new();
    for i in 0..n {
        let prev = cycle[(i + n - 1) % n];
        let cur = cycle[i];
        let next = cycle[(i + 1) % n];
        let d_in = (cur.0 - prev.0, cur.1 - prev.1);
        let d_out = (next.0 - cur.0, next.1 - cur.1);
        if d_in != d_out {
            out.push(Point2D::new(cur.0 as f64 + ox, cur.1 as f64 + oy));
        }
    }
    out
}

/// Fills one background pixel of every 2x2 block holding exactly two
/// diagonal foreground pixels, so each lattice vertex has at most one
/// outgoing boundary edge.
fn bridge_diagonals(g: &mut Grid<bool>) {
    let (w, h) = g.dims();
    loop {
        let mut changed = false;
        for y in 0..h - 1 {
            for x in 0..w - 1 {
                let a = *g.get(x, y);
                let b = *g.get(x + 1, y);
                let c = *g.get(x, y + 1);
                let d = *g.get(x + 1, y + 1);
                if a && d && !b && !c {
                    *g.get_mut(x + 1, y) = true;
                    changed = true;
                } else if b && c && !a && !d {
                    *g.get_mut(x, y) = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn douglas_peucker(pts: &[Point2D], eps: f64, keep: &mut Vec<bool>, lo: usize, hi: usize) {
    if hi <= lo + 1 {
        return;
    }
    let (a, b) = (pts[lo], pts[hi]);
    let mut worst = (lo, -1.0);
    for (i, &p) in pts.iter().enumerate().take(hi).skip(lo + 1) {
        let (d, _) = project_onto_segment(p, a, b);
        if d > worst.1 {
            worst = (i, d);
        }
    }
    if worst.1 > eps {
        keep[worst.0] = true;
        douglas_peucker(pts, eps, keep, lo, worst.0);
        douglas_peucker(pts, eps, keep, worst.0, hi);
    }
}

/// Douglas-Peucker on a closed ring, anchored at vertex 0 and the vertex
/// farthest from it.
pub fn simplify_closed(ring: &[Point2D], eps: f64) -> Vec<Point2D> {
    let n = ring.len();
    if n <= 4 || eps <= 0.0 {
        return ring.to_vec();
    }
    let far = (1..n)
        .max_by(|&i, &j| {
            ring[0]
                .dist_sq(ring[i])
                .total_cmp(&ring[0].dist_sq(ring[j]))
                .then(j.cmp(&i))
        })
        .unwrap();
    let mut closed: Vec<Point2D> = ring.to_vec();
    closed.push(ring[0]);
    let mut keep = vec![false; n + 1];
    keep[0] = true;
    keep[far] = true;
    keep[n] = true;
    douglas_peucker(&closed, eps, &mut keep, 0, far);
    douglas_peucker(&closed, eps, &mut keep, far, n);
    (0..n).filter(|&i| keep[i]).map(|i| ring[i]).collect()
}
