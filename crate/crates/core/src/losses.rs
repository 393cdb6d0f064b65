//! Training objectives and their analytic gradients.
//!
//! `total = lambda * l_ts + l_dpr + l_tf + l_tr` where
//!
//! * `l_ts` is cross entropy on the skeleton map with every positive pixel
//!   of instance `i` weighted by `B / S_i` (`B` instances in the image,
//!   `S_i` skeleton pixels in instance `i`), so each instance contributes
//!   the same total weight. Background enters as the mean cross entropy of
//!   the `3 * positives` hardest negatives.
//! * `l_dpr` is Smooth L1 over each direction channel's positive support,
//!   divided by the number of counted pixels.
//! * `l_tf` / `l_tr` are cross entropy against the skeleton / region masks
//!   with the same 3:1 hard-negative mining, averaged over kept pixels.
//!
//! Gradients are used only to check the loss math numerically.

use serde::Serialize;

use crate::decoder::components::{connected_components, Connectivity};
use crate::decoder::PredictionMaps;
use crate::error::LossError;
use crate::grid::{Grid, InstanceMap, ScoreMap};
use crate::labelgen::LabelSet;

/// Probability clamp used inside every logarithm.
pub const BCE_EPS: f64 = 1e-7;
pub const DEFAULT_LAMBDA: f64 = 3.0;
/// Hard negatives kept per positive pixel.
pub const NEG_RATIO: usize = 3;

#[inline]
fn clamp_p(p: f64) -> f64 {
    p.clamp(BCE_EPS, 1.0 - BCE_EPS)
}

/// Binary cross entropy with the probability clamped to `[eps, 1 - eps]`.
#[inline]
pub fn bce(pred: f64, target: f64) -> f64 {
    let p = clamp_p(pred);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// `d bce / d pred`, evaluated at the clamped probability.
#[inline]
pub fn bce_grad(pred: f64, target: f64) -> f64 {
    let p = clamp_p(pred);
    -target / p + (1.0 - target) / (1.0 - p)
}

#[inline]
pub fn smooth_l1(x: f64) -> f64 {
    if x.abs() < 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

#[inline]
pub fn smooth_l1_grad(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x
    } else {
        x.signum()
    }
}

/// Ground-truth maps the losses are measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTargets {
    pub ts: ScoreMap,
    pub tr: ScoreMap,
    pub up: ScoreMap,
    pub down: ScoreMap,
    pub left: ScoreMap,
    pub right: ScoreMap,
    pub instance_ids: InstanceMap,
}

impl From<&LabelSet> for LossTargets {
    fn from(l: &LabelSet) -> Self {
        LossTargets {
            ts: l.ts.clone(),
            tr: l.tr.clone(),
            up: l.dpr.up.clone(),
            down: l.dpr.down.clone(),
            left: l.dpr.left.clone(),
            right: l.dpr.right.clone(),
            instance_ids: l.instance_ids.clone(),
        }
    }
}

impl LossTargets {
    /// Targets from ground-truth maps stored as prediction channels. Instance
    /// ids are the 8-connected components of the text-region mask, numbered
    /// in raster order; `tf` is ignored.
    pub fn from_maps(gt: &PredictionMaps) -> Self {
        let (w, h) = gt.tr.dims();
        let mask = Grid::from_vec(w, h, gt.tr.as_slice().iter().map(|&v| v > 0.5).collect());
        let mut ids = InstanceMap::new(w, h);
        for (k, comp) in connected_components(&mask, Connectivity::Eight).iter().enumerate() {
            for &i in comp {
                ids[i as usize] = k as u32 + 1;
            }
        }
        LossTargets {
            ts: gt.ts.clone(),
            tr: gt.tr.clone(),
            up: gt.up.clone(),
            down: gt.down.clone(),
            left: gt.left.clone(),
            right: gt.right.clone(),
            instance_ids: ids,
        }
    }

    fn dpr(&self) -> [&ScoreMap; 4] {
        [&self.up, &self.down, &self.left, &self.right]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub l_ts: f64,
    pub l_dpr: f64,
    pub l_tf: f64,
    pub l_tr: f64,
    pub total: f64,
    pub lambda: f64,
}

impl LossBreakdown {
    pub fn new(l_ts: f64, l_dpr: f64, l_tf: f64, l_tr: f64, lambda: f64) -> Self {
        LossBreakdown {
            l_ts,
            l_dpr,
            l_tf,
            l_tr,
            total: lambda * l_ts + l_dpr + l_tf + l_tr,
            lambda,
        }
    }
}

/// `d total / d prediction` for every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub ts: Grid<f64>,
    pub tf: Grid<f64>,
    pub tr: Grid<f64>,
    pub up: Grid<f64>,
    pub down: Grid<f64>,
    pub left: Grid<f64>,
    pub right: Grid<f64>,
}

impl GradientSet {
    /// Channels in file order: ts, tf, tr, up, down, left, right.
    pub fn channels(&self) -> [&Grid<f64>; 7] {
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
}

fn check_dims(expected: (usize, usize), got: (usize, usize)) -> Result<(), LossError> {
    if expected == got {
        Ok(())
    } else {
        Err(LossError::DimensionMismatch { expected, got })
    }
}

/// Indices of the `k` negatives (target <= 0.5) with the largest cross
/// entropy, lower index first among equal losses. With no positives every
/// negative is kept.
fn mine_negatives(pred: &[f64], target: &[f64], n_pos: usize) -> Vec<usize> {
    let mut neg: Vec<(f64, usize)> = target
        .iter()
        .enumerate()
        .filter(|(_, &t)| t <= 0.5)
        .map(|(i, &t)| (bce(pred[i], t), i))
        .collect();
    let k = if n_pos == 0 {
        neg.len()
    } else {
        (NEG_RATIO * n_pos).min(neg.len())
    };
    neg.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    neg.truncate(k);
    neg.into_iter().map(|(_, i)| i).collect()
}

struct TsWeights {
    /// `(pixel, weight)` for skeleton-positive pixels.
    positives: Vec<(usize, f64)>,
    negatives: Vec<usize>,
}

fn ts_weights(pred: &ScoreMap, gt: &ScoreMap, ids: &InstanceMap) -> Result<TsWeights, LossError> {
    check_dims(gt.dims(), pred.dims())?;
    check_dims(gt.dims(), ids.dims())?;
    let mut sizes: std::collections::BTreeMap<u32, usize> = Default::default();
    let mut pos = Vec::new();
    for i in 0..gt.len() {
        if gt[i] > 0.5 {
            let id = ids[i];
            if id == 0 {
                return Err(LossError::MissingInstance(i));
            }
            *sizes.entry(id).or_default() += 1;
            pos.push(i);
        }
    }
    let b = sizes.len() as f64;
    let positives = pos.iter().map(|&i| (i, b / sizes[&ids[i]] as f64)).collect();
    let negatives = mine_negatives(pred.as_slice(), gt.as_slice(), pos.len());
    Ok(TsWeights { positives, negatives })
}

/// Size-balanced skeleton cross entropy.
pub fn loss_ts(pred: &ScoreMap, gt: &ScoreMap, ids: &InstanceMap) -> Result<f64, LossError> {
    let wts = ts_weights(pred, gt, ids)?;
    let pos: f64 = wts.positives.iter().map(|&(i, w)| w * bce(pred[i], gt[i])).sum();
    let neg = if wts.negatives.is_empty() {
        0.0
    } else {
        wts.negatives.iter().map(|&i| bce(pred[i], gt[i])).sum::<f64>() / wts.negatives.len() as f64
    };
    Ok(pos + neg)
}

/// Positive-pixel part of [`loss_ts`] split by instance id, ascending.
pub fn ts_instance_contributions(
    pred: &ScoreMap,
    gt: &ScoreMap,
    ids: &InstanceMap,
) -> Result<Vec<(u32, f64)>, LossError> {
    let wts = ts_weights(pred, gt, ids)?;
    let mut acc: std::collections::BTreeMap<u32, f64> = Default::default();
    for (i, w) in wts.positives {
        *acc.entry(ids[i]).or_default() += w * bce(pred[i], gt[i]);
    }
    Ok(acc.into_iter().collect())
}

/// Smooth L1 over each direction channel's positive ground-truth support.
pub fn loss_dpr(pred: [&ScoreMap; 4], gt: [&ScoreMap; 4]) -> Result<f64, LossError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, g) in pred.iter().zip(gt) {
        check_dims(g.dims(), p.dims())?;
        for i in 0..g.len() {
            if g[i] > 0.0 {
                sum += smooth_l1(p[i] - g[i]);
                n += 1;
            }
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

fn mined_bce(pred: &ScoreMap, gt: &ScoreMap) -> Result<(f64, Vec<usize>), LossError> {
    check_dims(gt.dims(), pred.dims())?;
    let pos: Vec<usize> = (0..gt.len()).filter(|&i| gt[i] > 0.5).collect();
    let mut kept = mine_negatives(pred.as_slice(), gt.as_slice(), pos.len());
    kept.extend(pos);
    if kept.is_empty() {
        return Ok((0.0, kept));
    }
    let sum: f64 = kept.iter().map(|&i| bce(pred[i], gt[i])).sum();
    Ok((sum / kept.len() as f64, kept))
}

/// Text-confidence cross entropy against the skeleton mask.
pub fn loss_tf(pred_tf: &ScoreMap, gt_ts: &ScoreMap) -> Result<f64, LossError> {
    mined_bce(pred_tf, gt_ts).map(|r| r.0)
}

/// Text-region cross entropy against the region mask.
pub fn loss_tr(pred_tr: &ScoreMap, gt_tr: &ScoreMap) -> Result<f64, LossError> {
    mined_bce(pred_tr, gt_tr).map(|r| r.0)
}

pub fn total_loss(preds: &PredictionMaps, gt: &LossTargets, lambda: f64) -> Result<LossBreakdown, LossError> {
    let l_ts = loss_ts(&preds.ts, &gt.ts, &gt.instance_ids)?;
    let l_dpr = loss_dpr([&preds.up, &preds.down, &preds.left, &preds.right], gt.dpr())?;
    let l_tf = loss_tf(&preds.tf, &gt.ts)?;
    let l_tr = loss_tr(&preds.tr, &gt.tr)?;
    Ok(LossBreakdown::new(l_ts, l_dpr, l_tf, l_tr, lambda))
}

pub fn gradients(preds: &PredictionMaps, gt: &LossTargets, lambda: f64) -> Result<GradientSet, LossError> {
    let (w, h) = gt.ts.dims();
    let zeros = || Grid::<f64>::new(w, h);

    let mut g_ts = zeros();
    let wts = ts_weights(&preds.ts, &gt.ts, &gt.instance_ids)?;
    for &(i, wt) in &wts.positives {
        g_ts[i] = lambda * wt * bce_grad(preds.ts[i], gt.ts[i]);
    }
    let n_neg = wts.negatives.len() as f64;
    for &i in &wts.negatives {
        g_ts[i] = lambda * bce_grad(preds.ts[i], gt.ts[i]) / n_neg;
    }

    let mined_grad = |pred: &ScoreMap, target: &ScoreMap| -> Result<Grid<f64>, LossError> {
        let (_, kept) = mined_bce(pred, target)?;
        let mut g = zeros();
        let n = kept.len() as f64;
        for i in kept {
            g[i] = bce_grad(pred[i], target[i]) / n;
        }
        Ok(g)
    };
    let g_tf = mined_grad(&preds.tf, &gt.ts)?;
    let g_tr = mined_grad(&preds.tr, &gt.tr)?;

    let pred_dpr = [&preds.up, &preds.down, &preds.left, &preds.right];
    let gt_dpr = gt.dpr();
    let mut counted = 0usize;
    for (p, g) in pred_dpr.iter().zip(gt_dpr) {
        check_dims(g.dims(), p.dims())?;
        counted += g.as_slice().iter().filter(|&&v| v > 0.0).count();
    }
    let mut g_dpr: Vec<Grid<f64>> = Vec::with_capacity(4);
    for (p, g) in pred_dpr.iter().zip(gt_dpr) {
        let mut out = zeros();
        for i in 0..g.len() {
            if g[i] > 0.0 {
                out[i] = smooth_l1_grad(p[i] - g[i]) / counted as f64;
            }
        }
        g_dpr.push(out);
    }
    let mut it = g_dpr.into_iter();
    Ok(GradientSet {
        ts: g_ts,
        tf: g_tf,
        tr: g_tr,
        up: it.next().unwrap(),
        down: it.next().unwrap(),
        left: it.next().unwrap(),
        right: it.next().unwrap(),
    })
}

/// One finite-difference probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradProbe {
    /// Index into [`PredictionMaps::CHANNEL_NAMES`].
    pub channel: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Denominator floor for relative gradient error.
pub const GRAD_REL_FLOOR: f64 = 1e-6;

/// Loss of the `k`-th hardest negative other than `skip`, or `None` when
/// every negative is kept regardless.
fn selection_boundary(pred: &ScoreMap, target: &ScoreMap, skip: usize) -> Option<f64> {
    let n_pos = target.as_slice().iter().filter(|&&t| t > 0.5).count();
    let mut others: Vec<f64> = (0..target.len())
        .filter(|&i| i != skip && target[i] <= 0.5)
        .map(|i| bce(pred[i], target[i]))
        .collect();
    if n_pos == 0 || NEG_RATIO * n_pos > others.len() {
        return None;
    }
    others.sort_by(|a, b| b.total_cmp(a));
    Some(others[NEG_RATIO * n_pos - 1])
}

/// Whether `total_loss` is smooth in a `±h` neighbourhood of this pixel:
/// the step must not cross the probability clamp, the Smooth L1 kink or a
/// hard-negative selection boundary.
pub fn probe_is_smooth(preds: &PredictionMaps, gt: &LossTargets, channel: usize, index: usize, h: f64) -> bool {
    let p = preds.channels()[channel][index];
    if channel >= 3 {
        let g = gt.dpr()[channel - 3][index];
        return g <= 0.0 || ((p - g).abs() - 1.0).abs() > 2.0 * h;
    }
    if p - h <= BCE_EPS + h || p + h >= 1.0 - BCE_EPS - h {
        return false;
    }
    let target = if channel == 2 { &gt.tr } else { &gt.ts };
    if target[index] > 0.5 {
        return true;
    }
    let Some(boundary) = selection_boundary(preds.channels()[channel], target, index) else {
        return true;
    };
    let (a, b) = (bce(p - h, target[index]), bce(p + h, target[index]));
    let margin = 1e-9;
    a.min(b) > boundary + margin || a.max(b) < boundary - margin
}

/// Central finite differences of `total_loss` at the given
/// `(channel, index)` pixels, compared with [`gradients`].
pub fn gradient_check(
    preds: &PredictionMaps,
    gt: &LossTargets,
    lambda: f64,
    h: f64,
    probes: &[(usize, usize)],
) -> Result<Vec<GradProbe>, LossError> {
    let analytic = gradients(preds, gt, lambda)?;
    let mut work = preds.clone();
    let mut out = Vec::with_capacity(probes.len());
    for &(channel, index) in probes {
        let orig = work.channels()[channel][index];
        work.channels_mut()[channel][index] = orig + h;
        let up = total_loss(&work, gt, lambda)?.total;
        work.channels_mut()[channel][index] = orig - h;
        let down = total_loss(&work, gt, lambda)?.total;
        work.channels_mut()[channel][index] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic.channels()[channel][index];
        let rel_err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_REL_FLOOR);
        out.push(GradProbe {
            channel,
            index,
            analytic: a,
            numeric,
            rel_err,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_values() {
        assert!((bce(1.0, 1.0) / -(1.0 - BCE_EPS).ln() - 1.0).abs() < 1e-12);
        assert!((bce(0.5, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!((bce(0.0, 1.0) - 16.118_095_650_958_32).abs() < 1e-9);
        assert!((bce_grad(0.5, 1.0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_l1_values() {
        assert_eq!(smooth_l1(0.0), 0.0);
        assert_eq!(smooth_l1(1.0), 0.5);
        assert_eq!(smooth_l1(-2.0), 1.5);
        assert_eq!(smooth_l1_grad(0.0), 0.0);
        assert_eq!(smooth_l1_grad(0.3), 0.3);
        assert_eq!(smooth_l1_grad(-3.0), -1.0);
    }

    #[test]
    fn dpr_single_pixel() {
        let p = ScoreMap::new(1, 1);
        let g = ScoreMap::filled(1, 1, 1.0);
        let z = ScoreMap::new(1, 1);
        assert_eq!(loss_dpr([&p, &z, &z, &z], [&g, &z, &z, &z]).unwrap(), 0.5);
        assert_eq!(loss_dpr([&z, &z, &z, &z], [&z, &z, &z, &z]).unwrap(), 0.0);
    }

    #[test]
    fn tf_saturates_on_all_wrong() {
        let gt = ScoreMap::new(8, 8);
        let pred = ScoreMap::filled(8, 8, 1.0);
        assert!((loss_tf(&pred, &gt).unwrap() + BCE_EPS.ln()).abs() < 1e-9);
    }

    #[test]
    fn tr_inverse_prediction() {
        let gt = Grid::from_vec(4, 1, vec![1.0, 0.0, 0.0, 0.0]);
        let pred = gt.map(|v| 1.0 - v);
        assert!((loss_tr(&pred, &gt).unwrap() - 16.118_095_650_958_32).abs() < 1e-6);
        assert!(loss_tr(&gt, &gt).unwrap() <= 2.0 * BCE_EPS);
    }

    #[test]
    fn orphan_skeleton_pixel_rejected() {
        let gt = ScoreMap::filled(2, 2, 1.0);
        let ids = InstanceMap::new(2, 2);
        assert_eq!(loss_ts(&gt, &gt, &ids), Err(LossError::MissingInstance(0)));
    }

    #[test]
    fn dims_checked() {
        let a = ScoreMap::new(2, 2);
        let b = ScoreMap::new(3, 2);
        assert!(matches!(loss_tr(&a, &b), Err(LossError::DimensionMismatch { .. })));
    }

    #[test]
    fn breakdown_identity() {
        let b = LossBreakdown::new(1.0, 1.0, 1.0, 1.0, 3.0);
        assert_eq!(b.total, 6.0);
    }
}
