//! Score maps to text instances.
//!
//! 1. Candidates: 8-connected components of pixels with a confident
//!    skeleton score inside the text region.
//! 2. Confidence scoring: a candidate survives only if the mean raw
//!    skeleton score over its pixels exceeds `gamma`.
//! 3. Diffusion: each survivor grows from its skeleton pixels by single
//!    pixel steps up/down/left/right, entering a pixel only when that
//!    direction's map and the text-region map both clear their thresholds.
//! 4. Pixels claimed by several instances go to the nearest seed.
//! 5. Each mask becomes a polygon.

pub mod components;
pub mod contour;
mod pixels;

use std::collections::VecDeque;

use rayon::prelude::*;

pub use contour::mask_to_polygon;
pub use pixels::PixelSet;

use crate::error::DecodeError;
use crate::geometry::Polygon;
use crate::grid::{Grid, ScoreMap};
use crate::labelgen::{Direction, LabelSet};
use components::{connected_components, Connectivity};

/// Predicted maps for one image. All channels share dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMaps {
    pub ts: ScoreMap,
    pub tf: ScoreMap,
    pub tr: ScoreMap,
    pub up: ScoreMap,
    pub down: ScoreMap,
    pub left: ScoreMap,
    pub right: ScoreMap,
}

impl PredictionMaps {
    pub const CHANNEL_NAMES: [&'static str; 7] = ["ts", "tf", "tr", "up", "down", "left", "right"];

    pub fn zeros(width: usize, height: usize) -> Self {
        let z = ScoreMap::new(width, height);
        PredictionMaps {
            ts: z.clone(),
            tf: z.clone(),
            tr: z.clone(),
            up: z.clone(),
            down: z.clone(),
            left: z.clone(),
            right: z,
        }
    }

    /// Ground truth as a perfect prediction; `tf` is a copy of `ts`.
    pub fn from_labels(labels: &LabelSet) -> Self {
        PredictionMaps {
            ts: labels.ts.clone(),
            tf: labels.ts.clone(),
            tr: labels.tr.clone(),
            up: labels.dpr.up.clone(),
            down: labels.dpr.down.clone(),
            left: labels.dpr.left.clone(),
            right: labels.dpr.right.clone(),
        }
    }

    /// Channels in file order: ts, tf, tr, up, down, left, right.
    pub fn channels(&self) -> [&ScoreMap; 7] {
        [
            &self.ts,
            &self.tf,
            &self.tr,
            &self.up,
            &self.down,
            &self.left,
            &self.right,
        ]
    }

    pub fn channels_mut(&mut self) -> [&mut ScoreMap; 7] {
        [
            &mut self.ts,
            &mut self.tf,
            &mut self.tr,
            &mut self.up,
            &mut self.down,
            &mut self.left,
            &mut self.right,
        ]
    }

    pub fn dpr(&self, d: Direction) -> &ScoreMap {
        match d {
            Direction::Up => &self.up,
            Direction::Down => &self.down,
            Direction::Left => &self.left,
            Direction::Right => &self.right,
        }
    }

    pub fn dpr_mut(&mut self, d: Direction) -> &mut ScoreMap {
        match d {
            Direction::Up => &mut self.up,
            Direction::Down => &mut self.down,
            Direction::Left => &mut self.left,
            Direction::Right => &mut self.right,
        }
    }

    pub fn width(&self) -> usize {
        self.ts.width()
    }

    pub fn height(&self) -> usize {
        self.ts.height()
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        let expected = self.ts.dims();
        for (name, ch) in Self::CHANNEL_NAMES.iter().zip(self.channels()) {
            if ch.dims() != expected {
                return Err(DecodeError::DimensionMismatch {
                    channel: name,
                    expected,
                    got: ch.dims(),
                });
            }
            if let Some(index) = ch.as_slice().iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(DecodeError::OutOfRange { channel: name, index });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    /// Mean skeleton score a candidate must exceed.
    pub gamma: f64,
    /// Text-region pixel threshold.
    pub t_tr: f64,
    /// Directional-region pixel threshold.
    pub t_dpr: f64,
    /// Skeleton pixel threshold used to form candidates.
    pub ts_binarize: f64,
    pub min_component_px: usize,
    pub simplify_eps: f64,
    /// When false, every candidate is kept regardless of its mean score.
    pub confidence_scoring: bool,
}

/// Mean skeleton score threshold tuned for curved word-level text.
pub const GAMMA_TOTAL_TEXT: f64 = 0.54;
/// Mean skeleton score threshold tuned for line-level curved text.
pub const GAMMA_CTW1500: f64 = 0.29;

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            gamma: GAMMA_TOTAL_TEXT,
            t_tr: 0.2,
            t_dpr: 0.1,
            ts_binarize: 0.2,
            min_component_px: 5,
            simplify_eps: 1.0,
            confidence_scoring: true,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("t_tr", self.t_tr),
            ("t_dpr", self.t_dpr),
            ("ts_binarize", self.ts_binarize),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(DecodeError::BadConfig(format!("{name}={v} not in [0,1]")));
            }
        }
        if self.min_component_px < 1 {
            return Err(DecodeError::BadConfig("min_component_px must be >= 1".into()));
        }
        if !(self.simplify_eps >= 0.0) {
            return Err(DecodeError::BadConfig("simplify_eps must be >= 0".into()));
        }
        Ok(())
    }
}

/// A connected skeleton component with its mean raw skeleton score.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub seed: PixelSet,
    pub mean_ts_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub mask: PixelSet,
    pub seed: PixelSet,
    pub polygon: Polygon,
    pub score: f64,
}

pub fn find_candidates(maps: &PredictionMaps, cfg: &DecodeConfig) -> Vec<Candidate> {
    let (w, h) = maps.ts.dims();
    let bin: Vec<bool> = maps
        .ts
        .as_slice()
        .iter()
        .zip(maps.tr.as_slice())
        .map(|(&ts, &tr)| ts > cfg.ts_binarize && tr > cfg.t_tr)
        .collect();
    connected_components(&Grid::from_vec(w, h, bin), Connectivity::Eight)
        .into_iter()
        .filter(|c| c.len() >= cfg.min_component_px)
        .map(|c| {
            let sum: f64 = c.iter().map(|&i| maps.ts[i as usize]).sum();
            Candidate {
                mean_ts_score: sum / c.len() as f64,
                seed: PixelSet::from_indices(w, h, c),
            }
        })
        .collect()
}

/// Splits candidates into those whose mean score strictly exceeds `gamma`
/// and the rest.
pub fn confidence_filter(cands: Vec<Candidate>, gamma: f64) -> (Vec<Candidate>, Vec<Candidate>) {
    cands.into_iter().partition(|c| c.mean_ts_score > gamma)
}

/// Grows `cand` through the directional maps until nothing more can join.
pub fn diffuse(cand: &Candidate, maps: &PredictionMaps, cfg: &DecodeConfig) -> PixelSet {
    let (w, h) = maps.ts.dims();
    let mut inside = vec![false; w * h];
    let mut queue: VecDeque<usize> = VecDeque::with_capacity(cand.seed.len() * 4);
    let mut grown: Vec<u32> = Vec::with_capacity(cand.seed.len() * 4);
    for &p in cand.seed.indices() {
        inside[p as usize] = true;
        queue.push_back(p as usize);
        grown.push(p);
    }
    while let Some(p) = queue.pop_front() {
        let (x, y) = ((p % w) as isize, (p / w) as isize);
        for d in Direction::ALL {
            let (dx, dy) = d.step();
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let q = ny as usize * w + nx as usize;
            if !inside[q] && maps.dpr(d)[q] > cfg.t_dpr && maps.tr[q] > cfg.t_tr {
                inside[q] = true;
                queue.push_back(q);
                grown.push(q as u32);
            }
        }
    }
    PixelSet::from_indices(w, h, grown)
}

/// Makes instance masks pairwise disjoint. A pixel claimed by several
/// masks goes to the claimant with the nearest seed pixel (Euclidean),
/// lower index on ties. Seed pixels always stay with their own instance.
pub fn resolve_conflicts(seeds: &[PixelSet], masks: Vec<PixelSet>) -> Vec<PixelSet> {
    assert_eq!(seeds.len(), masks.len());
    let Some(first) = masks.first() else {
        return masks;
    };
    let (w, h) = (first.width(), first.height());
    const NONE: i32 = -1;
    const CONTESTED: i32 = -2;
    let mut owner = vec![NONE; w * h];
    for (k, m) in masks.iter().enumerate() {
        for &p in m.indices() {
            let o = &mut owner[p as usize];
            *o = if *o == NONE { k as i32 } else { CONTESTED };
        }
    }
    if !owner.contains(&CONTESTED) {
        return masks;
    }

    let seed_pts: Vec<Vec<(i64, i64)>> = seeds
        .iter()
        .map(|s| s.coords().map(|(x, y)| (x as i64, y as i64)).collect())
        .collect();
    let mut winner = vec![NONE; w * h];
    for (p, o) in owner.iter().enumerate() {
        if *o != CONTESTED {
            continue;
        }
        let (px, py) = ((p % w) as i64, (p / w) as i64);
        let mut best = (i64::MAX, NONE);
        for (k, m) in masks.iter().enumerate() {
            if !m.contains(p as u32) {
                continue;
            }
            let d = seed_pts[k]
                .iter()
                .map(|&(sx, sy)| (sx - px).pow(2) + (sy - py).pow(2))
                .min()
                .unwrap_or(i64::MAX);
            if d < best.0 {
                best = (d, k as i32);
            }
        }
        winner[p] = best.1;
    }

    masks
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let kept = m
                .indices()
                .iter()
                .copied()
                .filter(|&p| {
                    let o = owner[p as usize];
                    o == k as i32 || (o == CONTESTED && winner[p as usize] == k as i32)
                })
                .collect();
            PixelSet::from_indices(w, h, kept)
        })
        .collect()
}

/// Full decode. Detections come out sorted by score, highest first.
pub fn decode(maps: &PredictionMaps, cfg: &DecodeConfig) -> Result<Vec<Detection>, DecodeError> {
    maps.validate()?;
    cfg.validate()?;
    let cands = find_candidates(maps, cfg);
    let kept = if cfg.confidence_scoring {
        confidence_filter(cands, cfg.gamma).0
    } else {
        cands
    };
    let grown: Vec<PixelSet> = kept.par_iter().map(|c| diffuse(c, maps, cfg)).collect();
    let seeds: Vec<PixelSet> = kept.iter().map(|c| c.seed.clone()).collect();
    let masks = resolve_conflicts(&seeds, grown);

    let mut dets = kept
        .into_par_iter()
        .zip(masks)
        .map(|(c, mask)| {
            let polygon = mask_to_polygon(&mask, cfg.simplify_eps)?;
            Ok(Detection {
                mask,
                seed: c.seed,
                polygon,
                score: c.mean_ts_score,
            })
        })
        .collect::<Result<Vec<_>, DecodeError>>()?;
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(dets)
}
