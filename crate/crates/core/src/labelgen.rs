//! Ground-truth label maps from polygon annotations.
//!
//! Each instance contributes its filled region (TR), a thin band around its
//! midline skeleton (TS), and four directional region maps (up, down, left,
//! right) for the remaining text pixels. A pixel's direction comes from the
//! orientation of its nearest skeleton segment and which side of that
//! segment it lies on; segments within the 30..60 / 120..150 degree bands
//! put the pixel in two maps at once.

use crate::error::LabelError;
use crate::geometry::raster::{fill_spans, Lattice};
use crate::geometry::{
    extract_skeleton, point_side_of_segment, project_onto_segment, segment_angle, Point2D, Polygon, Side, Skeleton,
    DEFAULT_DOT_COUNT,
};
use crate::grid::{InstanceMap, ScoreMap};

/// Smallest skeleton band radius in pixels, so that even a zero-width band
/// keeps the pixels the midline passes through.
pub const MIN_BAND_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelConfig {
    /// Number of skeleton dots per instance.
    pub dot_count: usize,
    /// Skeleton band radius as a fraction of the local half-height.
    pub r_frac: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            dot_count: DEFAULT_DOT_COUNT,
            r_frac: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    /// Unit pixel step in this direction.
    pub fn step(self) -> (isize, isize) {
        match self {
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }
}

/// Orientation classes of a skeleton segment. Never both false.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionSet {
    pub horizontal: bool,
    pub vertical: bool,
}

/// Maps a segment angle in `[0, 180)` to its orientation classes.
///
/// `[0,30)` and `(150,180)` are horizontal, `(60,120)` vertical, and the
/// closed bands `[30,60]`, `[120,150]` are both.
pub fn classify_direction(angle: f64) -> DirectionSet {
    let a = angle.rem_euclid(180.0);
    let both = (30.0..=60.0).contains(&a) || (120.0..=150.0).contains(&a);
    DirectionSet {
        horizontal: both || !(a > 60.0 && a < 120.0),
        vertical: both || (a > 60.0 && a < 120.0),
    }
}

/// The four directional region maps.
#[derive(Debug, Clone, PartialEq)]
pub struct DprMaps {
    pub up: ScoreMap,
    pub down: ScoreMap,
    pub left: ScoreMap,
    pub right: ScoreMap,
}

impl DprMaps {
    pub fn new(width: usize, height: usize) -> Self {
        DprMaps {
            up: ScoreMap::new(width, height),
            down: ScoreMap::new(width, height),
            left: ScoreMap::new(width, height),
            right: ScoreMap::new(width, height),
        }
    }

    pub fn get(&self, d: Direction) -> &ScoreMap {
        match d {
            Direction::Up => &self.up,
            Direction::Down => &self.down,
            Direction::Left => &self.left,
            Direction::Right => &self.right,
        }
    }

    pub fn get_mut(&mut self, d: Direction) -> &mut ScoreMap {
        match d {
            Direction::Up => &mut self.up,
            Direction::Down => &mut self.down,
            Direction::Left => &mut self.left,
            Direction::Right => &mut self.right,
        }
    }

    /// Number of maps with a positive value at pixel index `i`.
    pub fn multiplicity(&self, i: usize) -> usize {
        Direction::ALL.iter().filter(|&&d| self.get(d)[i] > 0.0).count()
    }
}

/// Complete ground truth for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub ts: ScoreMap,
    pub tr: ScoreMap,
    pub dpr: DprMaps,
    pub instance_ids: InstanceMap,
    /// Skeleton of instance `i + 1`.
    pub skeletons: Vec<Skeleton>,
}

fn pixel_center(i: usize, width: usize) -> Point2D {
    Point2D::new((i % width) as f64 + 0.5, (i / width) as f64 + 0.5)
}

/// Nearest skeleton segment to `p`: `(segment index, distance, t)`.
/// Equidistant segments resolve to the lower index.
pub fn nearest_segment(skel: &Skeleton, p: Point2D) -> (usize, f64, f64) {
    let mut best = (0, f64::INFINITY, 0.0);
    for (j, (a, b)) in skel.segments().enumerate() {
        let (d, t) = project_onto_segment(p, a, b);
        if d < best.1 {
            best = (j, d, t);
        }
    }
    best
}

/// Band radius at parameter `t` along segment `seg`.
pub fn band_radius(skel: &Skeleton, seg: usize, t: f64, r_frac: f64) -> f64 {
    let h = skel.half_heights[seg] * (1.0 - t) + skel.half_heights[seg + 1] * t;
    (r_frac * h).max(MIN_BAND_RADIUS)
}

fn in_band(skel: &Skeleton, p: Point2D, r_frac: f64) -> bool {
    let (seg, d, t) = nearest_segment(skel, p);
    d <= band_radius(skel, seg, t, r_frac)
}

/// Fills every polygon at pixel centers. Instance ids are 1-based polygon
/// indices. Two polygons claiming the same pixel is an error.
pub fn rasterize_text_region(
    polys: &[Polygon],
    width: usize,
    height: usize,
) -> Result<(ScoreMap, InstanceMap), LabelError> {
    let mut tr = ScoreMap::new(width, height);
    let mut ids = InstanceMap::new(width, height);
    let lat = Lattice::pixels(width, height);
    for (k, poly) in polys.iter().enumerate() {
        let id = (k + 1) as u32;
        let mut clash = None;
        fill_spans(poly, &lat, |row, c0, c1| {
            for c in c0..c1 {
                let i = row * width + c;
                if ids[i] != 0 && clash.is_none() {
                    clash = Some(ids[i]);
                }
                ids[i] = id;
                tr[i] = 1.0;
            }
        });
        if let Some(other) = clash {
            return Err(LabelError::Overlap(other as usize - 1, k));
        }
    }
    Ok((tr, ids))
}

/// Pixels whose centers lie within the interpolated band radius of the
/// skeleton polyline. With `clip`, only pixels where `clip` is positive can
/// be set.
pub fn rasterize_skeleton_band(
    skel: &Skeleton,
    r_frac: f64,
    width: usize,
    height: usize,
    clip: Option<&ScoreMap>,
) -> ScoreMap {
    let mut out = ScoreMap::new(width, height);
    if width == 0 || height == 0 {
        return out;
    }
    let max_h = skel.half_heights.iter().cloned().fold(0.0, f64::max);
    let reach = (r_frac * max_h).max(MIN_BAND_RADIUS) + 1.0;
    let bb = crate::geometry::BBox::of(&skel.dots);
    let x0 = (bb.min_x - reach).floor().max(0.0);
    let y0 = (bb.min_y - reach).floor().max(0.0);
    let x1 = (bb.max_x + reach).ceil().min(width as f64);
    let y1 = (bb.max_y + reach).ceil().min(height as f64);
    if x1 <= x0 || y1 <= y0 {
        return out;
    }
    for y in y0 as usize..y1 as usize {
        for x in x0 as usize..x1 as usize {
            let i = y * width + x;
            if clip.is_some_and(|c| c[i] <= 0.0) {
                continue;
            }
            if in_band(skel, pixel_center(i, width), r_frac) {
                out[i] = 1.0;
            }
        }
    }
    out
}

/// Directional membership of `p` relative to segment `ab`:
/// `[up, down, left, right]`.
pub fn segment_directions(p: Point2D, a: Point2D, b: Point2D) -> [bool; 4] {
    let mut m = [false; 4];
    let Ok(angle) = segment_angle(a, b) else {
        return m;
    };
    let cls = classify_direction(angle);
    if cls.horizontal {
        let (l, r) = if b.x < a.x { (b, a) } else { (a, b) };
        match point_side_of_segment(p, l, r) {
            Side::Positive => m[1] = true,
            Side::Negative | Side::On => m[0] = true,
        }
    }
    if cls.vertical {
        let (t, bt) = if b.y < a.y { (b, a) } else { (a, b) };
        match point_side_of_segment(p, t, bt) {
            Side::Positive | Side::On => m[2] = true,
            Side::Negative => m[3] = true,
        }
    }
    m
}

fn assign_pixel(skel: &Skeleton, i: usize, width: usize, dpr: &mut DprMaps) {
    let p = pixel_center(i, width);
    let (seg, _, _) = nearest_segment(skel, p);
    let m = segment_directions(p, skel.dots[seg], skel.dots[seg + 1]);
    for (d, on) in Direction::ALL.iter().zip(m) {
        if on {
            dpr.get_mut(*d)[i] = 1.0;
        }
    }
}

/// Directional maps for one instance: every pixel positive in `region` and
/// not in `ts_band` is assigned by its nearest skeleton segment.
pub fn assign_dpr(skel: &Skeleton, region: &ScoreMap, ts_band: &ScoreMap) -> DprMaps {
    let (w, h) = region.dims();
    let mut dpr = DprMaps::new(w, h);
    for i in 0..region.len() {
        if region[i] > 0.0 && ts_band[i] <= 0.0 {
            assign_pixel(skel, i, w, &mut dpr);
        }
    }
    dpr
}

/// Builds the full label set for one image.
pub fn generate_labels(
    polys: &[Polygon],
    width: usize,
    height: usize,
    cfg: &LabelConfig,
) -> Result<LabelSet, LabelError> {
    let (tr, instance_ids) = rasterize_text_region(polys, width, height)?;
    let skeletons = polys
        .iter()
        .enumerate()
        .map(|(index, p)| extract_skeleton(p, cfg.dot_count).map_err(|source| LabelError::Skeleton { index, source }))
        .collect::<Result<Vec<_>, _>>()?;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); polys.len()];
    for (i, &id) in instance_ids.as_slice().iter().enumerate() {
        if id != 0 {
            members[id as usize - 1].push(i);
        }
    }

    let mut ts = ScoreMap::new(width, height);
    let mut dpr = DprMaps::new(width, height);
    for (skel, pixels) in skeletons.iter().zip(&members) {
        for &i in pixels {
            let p = pixel_center(i, width);
            let (seg, d, t) = nearest_segment(skel, p);
            if d <= band_radius(skel, seg, t, cfg.r_frac) {
                ts[i] = 1.0;
            } else {
                let m = segment_directions(p, skel.dots[seg], skel.dots[seg + 1]);
                for (dir, on) in Direction::ALL.iter().zip(m) {
                    if on {
                        dpr.get_mut(*dir)[i] = 1.0;
                    }
                }
            }
        }
    }

    Ok(LabelSet {
        ts,
        tr,
        dpr,
        instance_ids,
        skeletons,
    })
}

impl LabelSet {
    pub fn width(&self) -> usize {
        self.tr.width()
    }

    pub fn height(&self) -> usize {
        self.tr.height()
    }

    pub fn instance_count(&self) -> usize {
        self.skeletons.len()
    }

    /// Checks every structural invariant and returns the violations found.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let dims = self.tr.dims();
        for (name, m) in [
            ("ts", &self.ts),
            ("up", &self.dpr.up),
            ("down", &self.dpr.down),
            ("left", &self.dpr.left),
            ("right", &self.dpr.right),
        ] {
            if m.dims() != dims {
                v.push(format!("{name} dims {:?} != tr dims {:?}", m.dims(), dims));
                return v;
            }
        }
        if self.instance_ids.dims() != dims {
            v.push("instance id dims mismatch".into());
            return v;
        }
        let w = self.width();
        for i in 0..self.tr.len() {
            let tr = self.tr[i] > 0.0;
            let ts = self.ts[i] > 0.0;
            let mult = self.dpr.multiplicity(i);
            let id = self.instance_ids[i];
            if tr != (id != 0) {
                v.push(format!("pixel {i}: tr={tr} but instance id {id}"));
            }
            if ts && !tr {
                v.push(format!("pixel {i}: ts outside tr"));
            }
            if mult > 0 && (!tr || ts) {
                v.push(format!("pixel {i}: dpr outside tr minus ts"));
            }
            if tr && !ts && mult == 0 {
                v.push(format!("pixel {i}: text pixel in neither ts nor any dpr"));
            }
            if mult > 2 {
                v.push(format!("pixel {i}: in {mult} dpr maps"));
            }
            if mult > 0 && id != 0 {
                if let Some(skel) = self.skeletons.get(id as usize - 1) {
                    let (seg, _, _) = nearest_segment(skel, pixel_center(i, w));
                    let a = segment_angle(skel.dots[seg], skel.dots[seg + 1]).unwrap_or(0.0);
                    let c = classify_direction(a);
                    let expect = if c.horizontal && c.vertical { 2 } else { 1 };
                    if mult != expect {
                        v.push(format!("pixel {i}: multiplicity {mult}, segment angle {a:.3}"));
                    }
                } else {
                    v.push(format!("pixel {i}: instance {id} has no skeleton"));
                }
            }
            if v.len() > 20 {
                break;
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::rect(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn direction_classes() {
        let h = DirectionSet {
            horizontal: true,
            vertical: false,
        };
        let v = DirectionSet {
            horizontal: false,
            vertical: true,
        };
        let both = DirectionSet {
            horizontal: true,
            vertical: true,
        };
        assert_eq!(classify_direction(0.0), h);
        assert_eq!(classify_direction(29.999), h);
        assert_eq!(classify_direction(30.0), both);
        assert_eq!(classify_direction(45.0), both);
        assert_eq!(classify_direction(60.0), both);
        assert_eq!(classify_direction(60.001), v);
        assert_eq!(classify_direction(90.0), v);
        assert_eq!(classify_direction(120.0), both);
        assert_eq!(classify_direction(150.0), both);
        assert_eq!(classify_direction(150.5), h);
        assert_eq!(classify_direction(179.9), h);
    }

    #[test]
    fn region_count_and_empty() {
        let (tr, ids) = rasterize_text_region(&[rect(3.0, 5.0, 13.0, 9.0)], 20, 20).unwrap();
        assert_eq!(tr.count_above(0.5), 40);
        assert!(ids.as_slice().iter().all(|&i| i <= 1));
        let (tr, _) = rasterize_text_region(&[], 20, 20).unwrap();
        assert_eq!(tr.count_above(0.0), 0);
    }

    #[test]
    fn overlapping_polygons_rejected() {
        let r = rasterize_text_region(&[rect(0.0, 0.0, 10.0, 10.0), rect(5.0, 5.0, 15.0, 15.0)], 20, 20);
        assert_eq!(r, Err(LabelError::Overlap(0, 1)));
    }

    #[test]
    fn band_outside_image_is_empty() {
        let skel = Skeleton {
            dots: vec![Point2D::new(100.0, 100.0), Point2D::new(150.0, 100.0)],
            half_heights: vec![10.0, 10.0],
        };
        assert_eq!(rasterize_skeleton_band(&skel, 0.2, 32, 32, None).count_above(0.0), 0);
    }

    #[test]
    fn zero_fraction_band_is_half_pixel() {
        let skel = Skeleton {
            dots: vec![Point2D::new(0.0, 10.0), Point2D::new(40.0, 10.0)],
            half_heights: vec![10.0, 10.0],
        };
        let band = rasterize_skeleton_band(&skel, 0.0, 40, 20, None);
        // Centers at y = 9.5 and 10.5 are exactly 0.5 away.
        for y in 0..20 {
            for x in 0..40 {
                assert_eq!(*band.get(x, y) > 0.0, y == 9 || y == 10, "({x},{y})");
            }
        }
    }

    #[test]
    fn horizontal_rectangle_labels() {
        let ls = generate_labels(&[rect(0.0, 0.0, 100.0, 20.0)], 100, 20, &LabelConfig::default()).unwrap();
        assert!(ls.violations().is_empty(), "{:?}", ls.violations());
        for y in 0..20 {
            for x in 0..100 {
                let i = y * 100 + x;
                let band = (8..12).contains(&y);
                assert_eq!(ls.ts[i] > 0.0, band);
                assert_eq!(ls.dpr.up[i] > 0.0, y < 8);
                assert_eq!(ls.dpr.down[i] > 0.0, y >= 12);
                assert_eq!(ls.dpr.left[i], 0.0);
                assert_eq!(ls.dpr.right[i], 0.0);
            }
        }
    }

    #[test]
    fn vertical_rectangle_labels() {
        let ls = generate_labels(&[rect(4.0, 2.0, 24.0, 102.0)], 30, 110, &LabelConfig::default()).unwrap();
        assert!(ls.violations().is_empty());
        assert_eq!(ls.dpr.up.count_above(0.0), 0);
        assert_eq!(ls.dpr.down.count_above(0.0), 0);
        assert!(ls.dpr.left.count_above(0.0) > 0);
        assert!(ls.dpr.right.count_above(0.0) > 0);
        for i in 0..ls.tr.len() {
            if ls.dpr.left[i] > 0.0 {
                assert!(((i % 30) as f64 + 0.5) < 14.0);
            }
        }
    }

    #[test]
    fn two_rectangles_two_ids() {
        let ls = generate_labels(
            &[rect(2.0, 2.0, 40.0, 14.0), rect(2.0, 20.0, 40.0, 34.0)],
            48,
            40,
            &LabelConfig::default(),
        )
        .unwrap();
        let mut ids: Vec<u32> = ls.instance_ids.as_slice().iter().copied().filter(|&i| i != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids, vec![1, 2]);
        assert!(ls.violations().is_empty());
    }

    #[test]
    fn empty_annotation() {
        let ls = generate_labels(&[], 16, 16, &LabelConfig::default()).unwrap();
        for m in [&ls.ts, &ls.tr, &ls.dpr.up, &ls.dpr.down, &ls.dpr.left, &ls.dpr.right] {
            assert_eq!(m.count_above(0.0), 0);
        }
    }
}
