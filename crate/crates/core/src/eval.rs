//! Detection evaluation: greedy IoU matching against ground truth,
//! precision–recall curves and average precision.
//!
//! Matching is the standard score-ordered greedy protocol: detections are
//! processed in descending score order (ties broken by input order) and a
//! detection is a true positive when its best-IoU *unmatched* ground-truth
//! box reaches the threshold, consuming that ground truth. Frames are
//! pooled into a single dataset-level curve (micro-averaging), so the AP
//! corresponds to one overall PR curve rather than a mean of per-frame APs.

use crate::annotations::FrameAnnotations;
use crate::geometry::{bev_iou, iou_3d};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Which overlap measure drives the matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IouKind {
    Bev,
    Full3D,
}

impl fmt::Display for IouKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IouKind::Bev => "bev",
            IouKind::Full3D => "full_3d",
        })
    }
}

/// How the PR curve is integrated into a single AP number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ApMode {
    /// Exact area under the max-interpolated precision envelope, over the
    /// achieved recall steps.
    AllPoint,
    /// Mean of the envelope sampled at the 41 recalls 0, 0.025, ..., 1.
    Interpolated41,
}

impl fmt::Display for ApMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApMode::AllPoint => "all_point",
            ApMode::Interpolated41 => "interpolated_41",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalConfig {
    /// Minimum IoU for a detection to claim a ground-truth box; in (0, 1].
    pub iou_threshold: f64,
    pub iou_kind: IouKind,
    pub ap_mode: ApMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { iou_threshold: 0.3, iou_kind: IouKind::Full3D, ap_mode: ApMode::Interpolated41 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !self.iou_threshold.is_finite()
            || self.iou_threshold <= 0.0
            || self.iou_threshold > 1.0
        {
            return Err(EvalError::InvalidThreshold { value: self.iou_threshold });
        }
        Ok(())
    }
}

/// One scored detection with its match outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionLabel {
    pub score: f64,
    pub is_tp: bool,
}

/// One sample of the precision–recall curve, taken at a distinct score
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PRPoint {
    pub score_threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Dataset-level evaluation output.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub ap: f64,
    pub curve: Vec<PRPoint>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("detection {index} in frame {frame_id:?} has no score")]
    MissingScore { frame_id: String, index: usize },
    #[error("no ground truth to evaluate against")]
    NoGroundTruth,
    #[error("detection frame {frame_id:?} has no ground-truth frame")]
    FrameMismatch { frame_id: String },
    #[error("iou_threshold must lie in (0, 1], got {value}")]
    InvalidThreshold { value: f64 },
}

/// Match one frame's detections against its ground truth. Returns one label
/// per detection, aligned with the detection input order.
pub fn match_detections(
    gt: &FrameAnnotations,
    det: &FrameAnnotations,
    config: &EvalConfig,
) -> Result<Vec<DetectionLabel>, EvalError> {
    config.validate()?;
    let mut scores = Vec::with_capacity(det.objects.len());
    for (index, obj) in det.objects.iter().enumerate() {
        match obj.score {
            Some(s) => scores.push(s),
            None => {
                return Err(EvalError::MissingScore { frame_id: det.frame_id.clone(), index })
            }
        }
    }

    // descending score; stable sort keeps ties in input order
    let mut order: Vec<usize> = (0..det.objects.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));

    let overlap = |a: &crate::annotations::Box3D, b: &crate::annotations::Box3D| match config
        .iou_kind
    {
        IouKind::Bev => bev_iou(a, b),
        IouKind::Full3D => iou_3d(a, b),
    };

    let mut gt_taken = vec![false; gt.objects.len()];
    let mut labels = vec![DetectionLabel { score: 0.0, is_tp: false }; det.objects.len()];
    for &i in &order {
        let det_box = &det.objects[i].box3d;
        let mut best_iou = 0.0;
        let mut best_gt = None;
        for (j, gt_obj) in gt.objects.iter().enumerate() {
            if gt_taken[j] {
                continue;
            }
            let iou = overlap(det_box, &gt_obj.box3d);
            if iou > best_iou {
                best_iou = iou;
                best_gt = Some(j);
            }
        }
        let is_tp = match best_gt {
            Some(j) if best_iou >= config.iou_threshold => {
                gt_taken[j] = true;
                true
            }
            _ => false,
        };
        labels[i] = DetectionLabel { score: scores[i], is_tp };
    }
    Ok(labels)
}

/// Build the PR curve by sweeping score thresholds from highest to lowest,
/// one point per distinct score. Recall is 0 when there is no ground truth.
pub fn pr_curve(labels: &[DetectionLabel], gt_count: usize) -> Vec<PRPoint> {
    let mut sorted = labels.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].score;
        while i < sorted.len() && sorted[i].score == threshold {
            if sorted[i].is_tp {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = if gt_count > 0 { tp as f64 / gt_count as f64 } else { 0.0 };
        points.push(PRPoint { score_threshold: threshold, precision, recall });
    }
    points
}

/// Precision envelope: element k is the maximum precision at any curve
/// point with index >= k (i.e. at any recall >= that point's recall).
fn precision_envelope(curve: &[PRPoint]) -> Vec<f64> {
    let mut envelope = vec![0.0; curve.len()];
    let mut best = 0.0f64;
    for k in (0..curve.len()).rev() {
        best = best.max(curve[k].precision);
        envelope[k] = best;
    }
    envelope
}

fn ap_from_curve(curve: &[PRPoint], mode: ApMode) -> f64 {
    let envelope = precision_envelope(curve);
    match mode {
        ApMode::AllPoint => {
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for (point, env) in curve.iter().zip(&envelope) {
                ap += (point.recall - prev_recall) * env;
                prev_recall = point.recall;
            }
            ap
        }
        ApMode::Interpolated41 => {
            let mut sum = 0.0;
            for step in 0..=40 {
                let recall = step as f64 / 40.0;
                // first curve point reaching this recall carries the envelope
                let env = curve
                    .iter()
                    .position(|p| p.recall >= recall)
                    .map(|k| envelope[k])
                    .unwrap_or(0.0);
                sum += env;
            }
            sum / 41.0
        }
    }
}

/// Average precision over a pooled label list. Depends on scores only
/// through their ordering.
pub fn average_precision(
    labels: &[DetectionLabel],
    gt_count: usize,
    config: &EvalConfig,
) -> Result<f64, EvalError> {
    if gt_count == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    Ok(ap_from_curve(&pr_curve(labels, gt_count), config.ap_mode))
}

/// Evaluate detections against ground truth across all frames, pooling the
/// per-detection labels into one dataset-level curve and AP. Ground-truth
/// frames with no detection frame contribute only false negatives; a
/// detection frame without ground truth is an error.
pub fn evaluate(
    gt_frames: &BTreeMap<String, FrameAnnotations>,
    det_frames: &BTreeMap<String, FrameAnnotations>,
    config: &EvalConfig,
) -> Result<EvalResult, EvalError> {
    config.validate()?;
    let mut labels = Vec::new();
    for (frame_id, det) in det_frames {
        let gt = gt_frames
            .get(frame_id)
            .ok_or_else(|| EvalError::FrameMismatch { frame_id: frame_id.clone() })?;
        labels.extend(match_detections(gt, det, config)?);
    }
    let gt_total: usize = gt_frames.values().map(|f| f.objects.len()).sum();
    if gt_total == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    let curve = pr_curve(&labels, gt_total);
    let ap = ap_from_curve(&curve, config.ap_mode);
    let true_positives = labels.iter().filter(|l| l.is_tp).count();
    Ok(EvalResult {
        ap,
        curve,
        true_positives,
        false_positives: labels.len() - true_positives,
        false_negatives: gt_total - true_positives,
    })
}

/// CSV rendering of a PR curve.
pub fn pr_curve_csv(curve: &[PRPoint]) -> String {
    let mut out = String::from("score_threshold,precision,recall\n");
    for p in curve {
        out.push_str(&format!("{},{},{}\n", p.score_threshold, p.precision, p.recall));
    }
    out
}

/// `key=value` summary of a result, echoing the full configuration.
pub fn summary_text(result: &EvalResult, config: &EvalConfig) -> String {
    format!(
        "ap={}\ntp={}\nfp={}\nfn={}\niou_threshold={}\niou_kind={}\nap_mode={}\n",
        result.ap,
        result.true_positives,
        result.false_positives,
        result.false_negatives,
        config.iou_threshold,
        config.iou_kind,
        config.ap_mode,
    )
}
