//! Even-odd scanline fill over a regular lattice of cell centers.

use super::Polygon;

/// A `cols x rows` lattice whose cell `(c, r)` is centered at
/// `(origin_x + (c + 0.5) * cell, origin_y + (r + 0.5) * cell)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell: f64,
    pub cols: usize,
    pub rows: usize,
}

impl Lattice {
    /// The unit pixel grid of a `width x height` image.
    pub fn pixels(width: usize, height: usize) -> Self {
        Lattice {
            origin_x: 0.0,
            origin_y: 0.0,
            cell: 1.0,
            cols: width,
            rows: height,
        }
    }
}

/// Calls `f(row, col_start, col_end_exclusive)` for every run of lattice
/// cells whose centers lie inside `poly` (even-odd rule). Runs never overlap
/// and are emitted in ascending row order.
pub fn fill_spans(poly: &Polygon, lat: &Lattice, mut f: impl FnMut(usize, usize, usize)) {
    if lat.cols == 0 || lat.rows == 0 {
        return;
    }
    let bb = poly.bbox();
    let to_row = |y: f64| (y - lat.origin_y) / lat.cell - 0.5;
    let r0 = to_row(bb.min_y).ceil().max(0.0);
    let r1 = to_row(bb.max_y).floor().min(lat.rows as f64 - 1.0);
    if r1 < r0 {
        return;
    }
    let (r0, r1) = (r0 as usize, r1 as usize);
    let verts = poly.vertices();
    let n = verts.len();
    let mut xs: Vec<f64> = Vec::with_capacity(16);
    for row in r0..=r1 {
        let yc = lat.origin_y + (row as f64 + 0.5) * lat.cell;
        xs.clear();
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            if (a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y) {
                xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let c0 = ((pair[0] - lat.origin_x) / lat.cell - 0.5).ceil().max(0.0);
            let c1 = ((pair[1] - lat.origin_x) / lat.cell - 0.5).floor();
            if c1 < c0 || c1 < 0.0 {
                continue;
            }
            let c0 = c0 as usize;
            let c1 = (c1 as usize).min(lat.cols - 1);
            if c0 <= c1 {
                f(row, c0, c1 + 1);
            }
        }
    }
}

/// Number of lattice cells covered by `poly`.
pub fn count_cells(poly: &Polygon, lat: &Lattice) -> usize {
    let mut n = 0;
    fill_spans(poly, lat, |_, a, b| n += b - a);
    n
}

/// Boolean coverage mask of `poly` on `lat`, row-major.
pub fn fill_mask(poly: &Polygon, lat: &Lattice) -> Vec<bool> {
    let mut m = vec![false; lat.cols * lat.rows];
    fill_spans(poly, lat, |r, a, b| m[r * lat.cols + a..r * lat.cols + b].fill(true));
    m
}
