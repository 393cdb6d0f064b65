//! End-to-end helpers: labels from annotations and the label → decode →
//! evaluate round trip.

use serde::Serialize;

use crate::decoder::{decode, DecodeConfig, Detection, PredictionMaps};
use crate::error::Result;
use crate::eval::{match_detections, polygon_iou, MatchCounts, ScoredPolygon};
use crate::io::AnnotationFile;
use crate::labelgen::{generate_labels, LabelConfig, LabelSet};

pub fn labels_for(ann: &AnnotationFile, cfg: &LabelConfig) -> Result<LabelSet> {
    let (w, h) = ann.image_size;
    Ok(generate_labels(&ann.polygons(), w as usize, h as usize, cfg)?)
}

pub fn to_scored(dets: &[Detection]) -> Vec<ScoredPolygon> {
    dets.iter()
        .map(|d| ScoredPolygon {
            score: d.score,
            polygon: d.polygon.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrip {
    pub image_id: String,
    pub gt_count: usize,
    pub det_count: usize,
    /// Best IoU of each ground-truth instance against any detection.
    pub instance_ious: Vec<f64>,
    pub counts: MatchCounts,
}

/// Detections and best-IoU scores for `maps` against the annotation.
pub fn evaluate_maps(
    ann: &AnnotationFile,
    maps: &PredictionMaps,
    decode_cfg: &DecodeConfig,
    iou_thresh: f64,
) -> Result<RoundTrip> {
    let dets = to_scored(&decode(maps, decode_cfg)?);
    let instance_ious = ann
        .instances
        .iter()
        .map(|g| {
            dets.iter()
                .map(|d| polygon_iou(&d.polygon, &g.polygon))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(RoundTrip {
        image_id: ann.image_id.clone(),
        gt_count: ann.instances.len(),
        det_count: dets.len(),
        instance_ious,
        counts: match_detections(&dets, &ann.instances, iou_thresh).counts,
    })
}

/// Treats the generated labels as a perfect prediction and decodes them.
pub fn roundtrip(
    ann: &AnnotationFile,
    label_cfg: &LabelConfig,
    decode_cfg: &DecodeConfig,
    iou_thresh: f64,
) -> Result<RoundTrip> {
    let maps = PredictionMaps::from_labels(&labels_for(ann, label_cfg)?);
    evaluate_maps(ann, &maps, decode_cfg, iou_thresh)
}
