//! Confusion-matrix scoring, temporal stability, and the strategy harness.

use crate::config::SegConfig;
use crate::error::{CoreError, Result};
use crate::mask::LabelField;
use crate::pipeline::{FramePipeline, Strategy};
use crate::prior::SeedLabel;
use crate::raster::PixelGrid;
use serde::Serialize;

/// Confusion counts and derived rates for one frame or a pooled run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrameMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub error: f64,
    pub recall: f64,
    pub precision: f64,
    pub f_value: f64,
}

impl FrameMetrics {
    fn from_counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        let total = (tp + tn + fp + fn_) as f64;
        let error = (fp + fn_) as f64 / total;
        // Degenerate conventions: an empty positive class scores perfect
        // recall; an empty predicted-positive class scores perfect precision.
        let recall = if tp + fn_ == 0 {
            1.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let precision = if tp + fp == 0 {
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let f_value = if recall + precision == 0.0 {
            0.0
        } else {
            2.0 * recall * precision / (recall + precision)
        };
        FrameMetrics {
            tp,
            tn,
            fp,
            fn_,
            error,
            recall,
            precision,
            f_value,
        }
    }
}

/// Pooled metrics over a clip plus the per-frame breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub error: f64,
    pub recall: f64,
    pub precision: f64,
    pub f_value: f64,
    pub per_frame: Vec<FrameMetrics>,
}

/// Score predicted masks against ground truth, pooling counts over frames.
pub fn score(predicted: &[LabelField], truth: &[LabelField]) -> Result<MetricsReport> {
    if predicted.len() != truth.len() {
        return Err(CoreError::invalid(
            "predicted",
            format!(
                "frame count mismatch: {} predicted vs {} truth",
                predicted.len(),
                truth.len()
            ),
        ));
    }
    if predicted.is_empty() {
        return Err(CoreError::EmptyInput);
    }

    let mut per_frame = Vec::with_capacity(predicted.len());
    let (mut tp, mut tn, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (p, t) in predicted.iter().zip(truth) {
        p.ensure_same_size(t)?;
        let (mut ftp, mut ftn, mut ffp, mut ffn) = (0u64, 0u64, 0u64, 0u64);
        for (&lp, &lt) in p.labels().iter().zip(t.labels()) {
            match (lp, lt) {
                (1, 1) => ftp += 1,
                (0, 0) => ftn += 1,
                (1, 0) => ffp += 1,
                _ => ffn += 1,
            }
        }
        per_frame.push(FrameMetrics::from_counts(ftp, ftn, ffp, ffn));
        tp += ftp;
        tn += ftn;
        fp += ffp;
        fn_ += ffn;
    }

    let pooled = FrameMetrics::from_counts(tp, tn, fp, fn_);
    Ok(MetricsReport {
        tp,
        tn,
        fp,
        fn_,
        error: pooled.error,
        recall: pooled.recall,
        precision: pooled.precision,
        f_value: pooled.f_value,
        per_frame,
    })
}

/// Mean symmetric-difference fraction between consecutive masks; lower is
/// steadier.
pub fn stability(masks: &[LabelField]) -> Result<f64> {
    if masks.len() < 2 {
        return Err(CoreError::invalid("masks", "need at least 2 frames"));
    }
    let mut acc = 0.0;
    for pair in masks.windows(2) {
        pair[0].ensure_same_size(&pair[1])?;
        let differing = pair[0]
            .labels()
            .iter()
            .zip(pair[1].labels())
            .filter(|(a, b)| a != b)
            .count();
        acc += differing as f64 / pair[0].len() as f64;
    }
    Ok(acc / (masks.len() - 1) as f64)
}

/// Run one strategy over a frame sequence.
pub fn run_strategy(
    frames: &[PixelGrid],
    strategy: Strategy,
    cfg: &SegConfig,
    seeds: Option<&[SeedLabel]>,
) -> Result<Vec<LabelField>> {
    if frames.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let mut pipeline = FramePipeline::new(cfg.clone(), strategy, seeds.map(<[_]>::to_vec))?;
    let mut masks = Vec::with_capacity(frames.len());
    for frame in frames {
        let (mask, _) = pipeline.step(frame)?;
        masks.push(mask);
    }
    Ok(masks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_of(w: usize, h: usize, f: impl FnMut(usize, usize) -> bool) -> LabelField {
        LabelField::from_fn(w, h, 0, f)
    }

    #[test]
    fn perfect_prediction() {
        let t = vec![mask_of(4, 4, |x, _| x < 2)];
        let r = score(&t, &t).unwrap();
        assert_eq!(r.error, 0.0);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.f_value, 1.0);
    }

    #[test]
    fn hand_computed_counts() {
        // TP=50, TN=40, FP=5, FN=5 over a 10x10 frame.
        let truth = mask_of(10, 10, |x, y| y * 10 + x < 55);
        let pred = mask_of(10, 10, |x, y| {
            let i = y * 10 + x;
            i < 50 || (55..60).contains(&i)
        });
        let r = score(&[pred], &[truth]).unwrap();
        assert_eq!((r.tp, r.tn, r.fp, r.fn_), (50, 40, 5, 5));
        assert!((r.error - 0.10).abs() < 1e-12);
        assert!((r.recall - 50.0 / 55.0).abs() < 1e-12);
        assert!((r.precision - 50.0 / 55.0).abs() < 1e-12);
        assert!((r.f_value - 50.0 / 55.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_predictor_conventions() {
        let truth = mask_of(10, 10, |x, _| x < 3);
        let pred = mask_of(10, 10, |_, _| false);
        let r = score(&[pred], &[truth]).unwrap();
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.precision, 1.0); // no positive predictions
        assert!((r.error - 0.3).abs() < 1e-12);
        assert_eq!(r.f_value, 0.0);

        // Empty truth: recall 1 by convention.
        let truth = mask_of(4, 4, |_, _| false);
        let pred = mask_of(4, 4, |_, _| false);
        let r = score(&[pred], &[truth]).unwrap();
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.f_value, 1.0);
        assert_eq!(r.error, 0.0);
    }

    #[test]
    fn swapping_roles_permutes_counts() {
        let a = mask_of(8, 8, |x, y| (x * y) % 3 == 0);
        let b = mask_of(8, 8, |x, y| (x + y) % 4 == 0);
        let r_ab = score(&[a.clone()], &[b.clone()]).unwrap();
        let r_ba = score(&[b], &[a]).unwrap();
        assert_eq!(r_ab.tp, r_ba.tp);
        assert_eq!(r_ab.tn, r_ba.tn);
        assert_eq!(r_ab.fp, r_ba.fn_);
        assert_eq!(r_ab.fn_, r_ba.fp);
        // Complementing both predicted and truth swaps TP with TN and FP
        // with FN.
        let a = mask_of(8, 8, |x, y| (x * 3 + y) % 5 < 2);
        let b = mask_of(8, 8, |x, y| (x + 2 * y) % 3 == 1);
        let na = mask_of(8, 8, |x, y| !((x * 3 + y) % 5 < 2));
        let nb = mask_of(8, 8, |x, y| (x + 2 * y) % 3 != 1);
        let r = score(&[a], &[b]).unwrap();
        let rn = score(&[na], &[nb]).unwrap();
        assert_eq!(r.tp, rn.tn);
        assert_eq!(r.tn, rn.tp);
        assert_eq!(r.fp, rn.fn_);
        assert_eq!(r.fn_, rn.fp);
    }

    #[test]
    fn frame_count_mismatch_rejected() {
        let a = vec![mask_of(2, 2, |_, _| true)];
        let b = vec![mask_of(2, 2, |_, _| true), mask_of(2, 2, |_, _| true)];
        assert!(score(&a, &b).is_err());
    }

    #[test]
    fn stability_reference_values() {
        let a = mask_of(10, 10, |x, _| x < 5);
        assert_eq!(stability(&[a.clone(), a.clone(), a.clone()]).unwrap(), 0.0);

        let b = mask_of(10, 10, |x, _| x >= 5);
        assert_eq!(stability(&[a.clone(), b.clone(), a.clone()]).unwrap(), 1.0);

        // Exactly 10% of pixels flip each frame.
        let c = mask_of(10, 10, |x, y| y * 10 + x < 10);
        let d = mask_of(10, 10, |_, _| false);
        assert!((stability(&[c, d]).unwrap() - 0.1).abs() < 1e-12);

        assert!(stability(&[a]).is_err());
    }
}
