//! Detection scoring: polygon IoU, greedy one-to-one matching and
//! micro-averaged precision / recall / F-measure.

use serde::Serialize;

use crate::geometry::raster::{fill_spans, Lattice};
use crate::geometry::Polygon;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Cells across the smallest bounding-box side.
const MIN_CELLS: f64 = 64.0;
/// Cells per pixel at most coarse.
const CELLS_PER_PIXEL: f64 = 2.0;
const MAX_CELLS_PER_AXIS: f64 = 8192.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPolygon {
    pub score: f64,
    pub polygon: Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub polygon: Polygon,
    /// Ignored instances neither count as misses nor make detections on
    /// them false positives.
    pub ignore: bool,
}

impl GroundTruth {
    pub fn new(polygon: Polygon) -> Self {
        GroundTruth { polygon, ignore: false }
    }
}

fn row_spans(poly: &Polygon, lat: &Lattice) -> Vec<Vec<(usize, usize)>> {
    let mut rows = vec![Vec::new(); lat.rows];
    fill_spans(poly, lat, |r, a, b| rows[r].push((a, b)));
    rows
}

fn overlap(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            n += hi - lo;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    n
}

/// Rasterized intersection over union.
///
/// Both polygons are filled on one lattice over their joint bounding box.
/// The cell size is the finer of half a pixel and 1/64 of the smallest
/// bounding-box side.
pub fn polygon_iou(a: &Polygon, b: &Polygon) -> f64 {
    let (ba, bb) = (a.bbox(), b.bbox());
    if !ba.intersects(&bb) || a.area() == 0.0 || b.area() == 0.0 {
        return 0.0;
    }
    let tight = ba.width().min(ba.height()).min(bb.width()).min(bb.height());
    let u = ba.union(&bb);
    let mut cell = (1.0 / CELLS_PER_PIXEL).min(tight / MIN_CELLS);
    cell = cell.max(u.width().max(u.height()) / MAX_CELLS_PER_AXIS);
    let lat = Lattice {
        origin_x: u.min_x,
        origin_y: u.min_y,
        cell,
        cols: (u.width() / cell).ceil() as usize + 1,
        rows: (u.height() / cell).ceil() as usize + 1,
    };
    let ra = row_spans(a, &lat);
    let rb = row_spans(b, &lat);
    let area = |rows: &[Vec<(usize, usize)>]| -> usize { rows.iter().flatten().map(|(s, e)| e - s).sum() };
    let (na, nb) = (area(&ra), area(&rb));
    let inter: usize = ra.iter().zip(&rb).map(|(x, y)| overlap(x, y)).sum();
    let union = na + nb - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub counts: MatchCounts,
    /// `(detection index, ground-truth index, iou)` for each true positive.
    pub pairs: Vec<(usize, usize, f64)>,
}

/// Greedy one-to-one matching. Detections are visited by descending score
/// (input order on ties); each takes the unmatched ground truth of highest
/// IoU when that IoU reaches `iou_thresh`.
pub fn match_detections(dets: &[ScoredPolygon], gts: &[GroundTruth], iou_thresh: f64) -> MatchResult {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| dets[j].score.total_cmp(&dets[i].score));
    let mut taken = vec![false; gts.len()];
    let mut counts = MatchCounts::default();
    let mut pairs = Vec::new();
    for di in order {
        let det = &dets[di].polygon;
        let mut best: Option<(usize, f64)> = None;
        let mut hits_ignored = false;
        for (gi, gt) in gts.iter().enumerate() {
            if taken[gi] && !gt.ignore {
                continue;
            }
            let iou = polygon_iou(det, &gt.polygon);
            if iou < iou_thresh {
                continue;
            }
            if gt.ignore {
                hits_ignored = true;
            } else if best.is_none_or(|(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        match best {
            Some((gi, iou)) => {
                taken[gi] = true;
                counts.tp += 1;
                pairs.push((di, gi, iou));
            }
            None if hits_ignored => {}
            None => counts.fp += 1,
        }
    }
    counts.fn_ = gts.iter().zip(&taken).filter(|(g, &t)| !g.ignore && !t).count();
    MatchResult { counts, pairs }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageCounts {
    pub image_id: String,
    #[serde(flatten)]
    pub counts: MatchCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub per_image: Vec<ImageCounts>,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro-averaged report: counts are summed over images before dividing.
pub fn report(per_image: Vec<ImageCounts>) -> EvalReport {
    let tp: usize = per_image.iter().map(|c| c.counts.tp).sum();
    let fp: usize = per_image.iter().map(|c| c.counts.fp).sum();
    let fn_: usize = per_image.iter().map(|c| c.counts.fn_).sum();
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    EvalReport {
        precision,
        recall,
        fmeasure: f_measure(precision, recall),
        tp,
        fp,
        fn_,
        per_image,
    }
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "images     {}", self.per_image.len())?;
        writeln!(f, "tp/fp/fn   {}/{}/{}", self.tp, self.fp, self.fn_)?;
        writeln!(f, "precision  {:.4}", self.precision)?;
        writeln!(f, "recall     {:.4}", self.recall)?;
        write!(f, "f-measure  {:.4}", self.fmeasure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: f64, y: f64, s: f64) -> Polygon {
        Polygon::rect(x, y, x + s, y + s).unwrap()
    }

    fn det(p: Polygon, score: f64) -> ScoredPolygon {
        ScoredPolygon { score, polygon: p }
    }

    #[test]
    fn iou_basics() {
        assert_eq!(polygon_iou(&sq(0.0, 0.0, 10.0), &sq(0.0, 0.0, 10.0)), 1.0);
        assert_eq!(polygon_iou(&sq(0.0, 0.0, 10.0), &sq(20.0, 0.0, 10.0)), 0.0);
        let half = polygon_iou(&sq(0.0, 0.0, 1.0), &sq(0.5, 0.0, 1.0));
        assert!((half - 1.0 / 3.0).abs() <= 0.02, "{half}");
    }

    #[test]
    fn matching_cases() {
        let gts: Vec<GroundTruth> = (0..3)
            .map(|i| GroundTruth::new(sq(i as f64 * 20.0, 0.0, 10.0)))
            .collect();
        let perfect: Vec<_> = gts.iter().map(|g| det(g.polygon.clone(), 1.0)).collect();
        assert_eq!(
            match_detections(&perfect, &gts, 0.5).counts,
            MatchCounts { tp: 3, fp: 0, fn_: 0 }
        );
        assert_eq!(
            match_detections(&[], &gts, 0.5).counts,
            MatchCounts { tp: 0, fp: 0, fn_: 3 }
        );
        let dup = vec![det(sq(0.0, 0.0, 10.0), 0.9), det(sq(0.5, 0.0, 10.0), 0.8)];
        assert_eq!(
            match_detections(&dup, &gts[..1], 0.5).counts,
            MatchCounts { tp: 1, fp: 1, fn_: 0 }
        );
    }

    #[test]
    fn higher_score_matches_first() {
        let gts = vec![GroundTruth::new(sq(0.0, 0.0, 10.0))];
        let dets = vec![det(sq(1.0, 0.0, 10.0), 0.5), det(sq(0.0, 0.0, 10.0), 0.9)];
        let m = match_detections(&dets, &gts, 0.5);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].0, 1);
    }

    #[test]
    fn ignored_ground_truth() {
        let mut g = GroundTruth::new(sq(0.0, 0.0, 10.0));
        g.ignore = true;
        let gts = vec![g, GroundTruth::new(sq(30.0, 0.0, 10.0))];
        let dets = vec![det(sq(0.0, 0.0, 10.0), 0.9)];
        assert_eq!(
            match_detections(&dets, &gts, 0.5).counts,
            MatchCounts { tp: 0, fp: 0, fn_: 1 }
        );
    }

    #[test]
    fn empty_report() {
        let r = report(vec![]);
        assert_eq!((r.precision, r.recall, r.fmeasure), (0.0, 0.0, 0.0));
    }

    #[test]
    fn f_measure_rows() {
        assert!((f_measure(0.881, 0.814) - 0.846_175_8).abs() < 1e-7);
        assert!((f_measure(0.880, 0.847) - 0.863_184_7).abs() < 1e-7);
    }
}
