//! Independent reference implementations used by the integration tests.
//!
//! Each oracle takes the direct, slow route: plain loops, no shared helpers
//! from the library beyond data types.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textcohesion::decoder::{PixelSet, PredictionMaps};
use textcohesion::geometry::{Point2D, Polygon, Skeleton};
use textcohesion::grid::{Grid, InstanceMap, ScoreMap};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- losses

const EPS: f64 = 1e-7;

#[allow(clippy::manual_clamp)]
fn xent(p: f64, t: f64) -> f64 {
    let q = if p < EPS {
        EPS
    } else if p > 1.0 - EPS {
        1.0 - EPS
    } else {
        p
    };
    -t * q.ln() - (1.0 - t) * (1.0 - q).ln()
}

/// Mean cross entropy of the `3 * positives` hardest negatives; all
/// negatives when there is no positive.
fn hard_negative_sum(pred: &[f64], gt: &[f64], n_pos: usize) -> (f64, usize) {
    let mut idx: Vec<usize> = (0..gt.len()).filter(|&i| gt[i] <= 0.5).collect();
    let k = if n_pos == 0 {
        idx.len()
    } else {
        (3 * n_pos).min(idx.len())
    };
    // Selection by repeated arg-max, lowest index winning ties.
    let mut sum = 0.0;
    for _ in 0..k {
        let mut best = 0;
        for j in 1..idx.len() {
            let (a, b) = (xent(pred[idx[j]], gt[idx[j]]), xent(pred[idx[best]], gt[idx[best]]));
            if a > b || (a == b && idx[j] < idx[best]) {
                best = j;
            }
        }
        sum += xent(pred[idx[best]], gt[idx[best]]);
        idx.remove(best);
    }
    (sum, k)
}

pub fn oracle_loss_ts(pred: &ScoreMap, gt: &ScoreMap, ids: &InstanceMap) -> f64 {
    let mut size: HashMap<u32, f64> = HashMap::new();
    for i in 0..gt.len() {
        if gt[i] > 0.5 {
            *size.entry(ids[i]).or_insert(0.0) += 1.0;
        }
    }
    let b = size.len() as f64;
    let mut pos = 0.0;
    let mut n_pos = 0;
    for i in 0..gt.len() {
        if gt[i] > 0.5 {
            pos += b / size[&ids[i]] * xent(pred[i], gt[i]);
            n_pos += 1;
        }
    }
    let (neg, k) = hard_negative_sum(pred.as_slice(), gt.as_slice(), n_pos);
    pos + if k == 0 { 0.0 } else { neg / k as f64 }
}

pub fn oracle_loss_mined(pred: &ScoreMap, gt: &ScoreMap) -> f64 {
    let mut pos = 0.0;
    let mut n_pos = 0;
    for i in 0..gt.len() {
        if gt[i] > 0.5 {
            pos += xent(pred[i], gt[i]);
            n_pos += 1;
        }
    }
    let (neg, k) = hard_negative_sum(pred.as_slice(), gt.as_slice(), n_pos);
    if n_pos + k == 0 {
        0.0
    } else {
        (pos + neg) / (n_pos + k) as f64
    }
}

pub fn oracle_loss_dpr(pred: [&ScoreMap; 4], gt: [&ScoreMap; 4]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0.0;
    for c in 0..4 {
        for i in 0..gt[c].len() {
            if gt[c][i] > 0.0 {
                let x = (pred[c][i] - gt[c][i]).abs();
                sum += if x < 1.0 { x * x / 2.0 } else { x - 0.5 };
                n += 1.0;
            }
        }
    }
    if n == 0.0 {
        0.0
    } else {
        sum / n
    }
}

/// Random maps with a few rectangular instances, for loss tests.
pub fn random_loss_case(seed: u64, w: usize, h: usize) -> (PredictionMaps, textcohesion::losses::LossTargets) {
    let mut r = rng(seed);
    let mut ids = InstanceMap::new(w, h);
    let mut gt_ts = ScoreMap::new(w, h);
    let mut gt_tr = ScoreMap::new(w, h);
    let n_inst = r.random_range(1..=3);
    for k in 0..n_inst {
        let x0 = r.random_range(0..w - 4);
        let y0 = r.random_range(0..h - 3);
        let x1 = (x0 + r.random_range(3..8)).min(w);
        let y1 = (y0 + r.random_range(2..5)).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let i = y * w + x;
                if ids[i] == 0 {
                    ids[i] = k as u32 + 1;
                    gt_tr[i] = 1.0;
                    if y == (y0 + y1) / 2 {
                        gt_ts[i] = 1.0;
                    }
                }
            }
        }
    }
    let mut dirs: Vec<ScoreMap> = (0..4).map(|_| ScoreMap::new(w, h)).collect();
    for i in 0..w * h {
        if gt_tr[i] > 0.0 && gt_ts[i] == 0.0 {
            let c = r.random_range(0..4);
            dirs[c][i] = 1.0;
            if r.random_bool(0.3) {
                dirs[(c + 1) % 4][i] = 1.0;
            }
        }
    }
    let mut pred = PredictionMaps::zeros(w, h);
    for ch in pred.channels_mut() {
        for v in ch.as_mut_slice() {
            *v = r.random_range(0.02..0.98);
        }
    }
    let targets = textcohesion::losses::LossTargets {
        ts: gt_ts,
        tr: gt_tr,
        up: dirs[0].clone(),
        down: dirs[1].clone(),
        left: dirs[2].clone(),
        right: dirs[3].clone(),
        instance_ids: ids,
    };
    (pred, targets)
}

// -------------------------------------------------------------- geometry

/// Winding number of `poly` around `p`; nonzero means inside for simple
/// polygons.
pub fn winding_number(poly: &Polygon, p: Point2D) -> i32 {
    let v = poly.vertices();
    let n = v.len();
    let mut wn = 0;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let is_left = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && is_left > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && is_left < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Distance from `p` to the polygon boundary.
pub fn boundary_distance(poly: &Polygon, p: Point2D) -> f64 {
    poly.edges()
        .map(|(a, b)| seg_dist(p, a, b).0)
        .fold(f64::INFINITY, f64::min)
}

/// `(distance, t)` from `p` to segment `ab`.
pub fn seg_dist(p: Point2D, a: Point2D, b: Point2D) -> (f64, f64) {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.x + t * dx, a.y + t * dy);
    (((p.x - qx).powi(2) + (p.y - qy).powi(2)).sqrt(), t)
}

/// Band membership by brute force: nearest segment (first on ties),
/// interpolated half-height times `r_frac`, floored at half a pixel.
/// `None` when the pixel sits within `tol` of the band edge.
pub fn oracle_in_band(skel: &Skeleton, p: Point2D, r_frac: f64, tol: f64) -> Option<bool> {
    let mut best = (f64::INFINITY, 0usize, 0.0);
    for j in 0..skel.dots.len() - 1 {
        let (d, t) = seg_dist(p, skel.dots[j], skel.dots[j + 1]);
        if d < best.0 {
            best = (d, j, t);
        }
    }
    let (d, j, t) = best;
    let hh = skel.half_heights[j] + t * (skel.half_heights[j + 1] - skel.half_heights[j]);
    let r = (r_frac * hh).max(0.5);
    if (d - r).abs() < tol {
        None
    } else {
        Some(d < r)
    }
}

/// Direction flags `[up, down, left, right]` of `p` against segment `ab`
/// from the line equation, using undirected angle classes:
/// `[0,30) ∪ (150,180)` horizontal, `(60,120)` vertical, the rest both.
pub fn oracle_directions(p: Point2D, a: Point2D, b: Point2D) -> [bool; 4] {
    let ang = (b.y - a.y).atan2(b.x - a.x).to_degrees().rem_euclid(180.0);
    let horiz = ang <= 60.0 || ang >= 120.0;
    let vert = (30.0..=150.0).contains(&ang);
    let mut m = [false; 4];
    if horiz {
        // Line height at the pixel's x; larger y is further down.
        let y_line = a.y + (b.y - a.y) * (p.x - a.x) / (b.x - a.x);
        if p.y > y_line {
            m[1] = true;
        } else {
            m[0] = true;
        }
    }
    if vert {
        let x_line = a.x + (b.x - a.x) * (p.y - a.y) / (b.y - a.y);
        if p.x <= x_line {
            m[2] = true;
        } else {
            m[3] = true;
        }
    }
    m
}

/// Arc-length position of `q` along the polyline (nearest point).
pub fn arc_position(chain: &[Point2D], q: Point2D) -> f64 {
    let mut acc = 0.0;
    let mut best = (f64::INFINITY, 0.0);
    for w in chain.windows(2) {
        let (d, t) = seg_dist(q, w[0], w[1]);
        let len = w[0].dist(w[1]);
        if d < best.0 - 1e-12 {
            best = (d, acc + t * len);
        }
        acc += len;
    }
    best.1
}

pub fn polyline_distance(chain: &[Point2D], q: Point2D) -> f64 {
    chain
        .windows(2)
        .map(|w| seg_dist(q, w[0], w[1]).0)
        .fold(f64::INFINITY, f64::min)
}

// --------------------------------------------------------------- decoder

/// Diffusion by repeated full sweeps until nothing changes.
pub fn oracle_diffuse(seed: &PixelSet, maps: &PredictionMaps, t_dpr: f64, t_tr: f64) -> Vec<u32> {
    let (w, h) = (maps.width(), maps.height());
    let mut inside = vec![false; w * h];
    for &p in seed.indices() {
        inside[p as usize] = true;
    }
    // Pixel q joins from a neighbour that steps into it in direction d.
    let steps: [(&ScoreMap, isize, isize); 4] = [
        (&maps.up, 0, -1),
        (&maps.down, 0, 1),
        (&maps.left, -1, 0),
        (&maps.right, 1, 0),
    ];
    loop {
        let mut changed = false;
        for y in 0..h as isize {
            for x in 0..w as isize {
                let q = (y as usize) * w + x as usize;
                if inside[q] || maps.tr[q] <= t_tr {
                    continue;
                }
                for (m, dx, dy) in steps {
                    let (sx, sy) = (x - dx, y - dy);
                    if sx < 0 || sy < 0 || sx >= w as isize || sy >= h as isize {
                        continue;
                    }
                    if inside[sy as usize * w + sx as usize] && m[q] > t_dpr {
                        inside[q] = true;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    (0..(w * h) as u32).filter(|&i| inside[i as usize]).collect()
}

/// Owner of each contested pixel by floating-point nearest seed pixel,
/// lowest index on ties. Returns one sorted pixel list per mask.
pub fn oracle_resolve(seeds: &[PixelSet], masks: &[PixelSet]) -> Vec<Vec<u32>> {
    let w = masks[0].width();
    let mut claims: HashMap<u32, Vec<usize>> = HashMap::new();
    for (k, m) in masks.iter().enumerate() {
        for &p in m.indices() {
            claims.entry(p).or_default().push(k);
        }
    }
    let mut out = vec![Vec::new(); masks.len()];
    for (p, ks) in claims {
        let (px, py) = ((p as usize % w) as f64, (p as usize / w) as f64);
        let mut best = (f64::INFINITY, usize::MAX);
        for &k in &ks {
            for &s in seeds[k].indices() {
                let (sx, sy) = ((s as usize % w) as f64, (s as usize / w) as f64);
                let d = ((sx - px).powi(2) + (sy - py).powi(2)).sqrt();
                if d < best.0 || (d == best.0 && k < best.1) {
                    best = (d, k);
                }
            }
        }
        out[best.1].push(p);
    }
    for v in &mut out {
        v.sort_unstable();
    }
    out
}

// ----------------------------------------------------------------- misc

/// Adds clipped Gaussian noise to every channel.
pub fn add_noise(maps: &PredictionMaps, sigma: f64, seed: u64) -> PredictionMaps {
    use rand_distr::{Distribution, Normal};
    let mut r = rng(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut out = maps.clone();
    for ch in out.channels_mut() {
        for v in ch.as_mut_slice() {
            *v = (*v + normal.sample(&mut r)).clamp(0.0, 1.0);
        }
    }
    out
}

pub fn grid_from_fn<T>(w: usize, h: usize, f: impl Fn(usize, usize) -> T) -> Grid<T> {
    let mut v = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            v.push(f(x, y));
        }
    }
    Grid::from_vec(w, h, v)
}
