//! Accuracy metrics and forward-only training losses.
//!
//! Scalars are accumulated in `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowField;

/// Default weights for levels 6, 5, 4, 3, 2.
pub const LEVEL_WEIGHTS: [f32; 5] = [0.32, 0.08, 0.02, 0.01, 0.005];
pub const DEFAULT_GAMMA: f64 = 0.1;

/// Outlier thresholds: absolute pixels and fraction of ground-truth magnitude.
pub const FL_ABS_THRESHOLD: f64 = 3.0;
pub const FL_REL_THRESHOLD: f64 = 0.05;

fn check_pair(op: &'static str, a: &FlowField, b: &FlowField, mask: Option<&[bool]>) -> Result<()> {
    if (a.height(), a.width()) != (b.height(), b.width()) {
        return Err(Error::shape(
            op,
            format!("{}x{} vs {}x{}", a.height(), a.width(), b.height(), b.width()),
        ));
    }
    if let Some(m) = mask {
        if m.len() != a.height() * a.width() {
            return Err(Error::shape(op, format!("mask has {} entries for {} pixels", m.len(), a.height() * a.width())));
        }
    }
    Ok(())
}

/// A pixel counts when the explicit mask (if any) and the ground-truth
/// validity (if any) both allow it.
fn valid(gt: &FlowField, mask: Option<&[bool]>, i: usize) -> bool {
    mask.map_or(true, |m| m[i]) && gt.is_valid(i)
}

fn endpoint_error(pred: &FlowField, gt: &FlowField, i: usize) -> f64 {
    let du = pred.u()[i] as f64 - gt.u()[i] as f64;
    let dv = pred.v()[i] as f64 - gt.v()[i] as f64;
    (du * du + dv * dv).sqrt()
}

/// Per-pixel end-point errors over valid pixels.
pub fn epe_values(pred: &FlowField, gt: &FlowField, mask: Option<&[bool]>) -> Result<Vec<f64>> {
    check_pair("epe", pred, gt, mask)?;
    Ok((0..pred.height() * pred.width())
        .filter(|&i| valid(gt, mask, i))
        .map(|i| endpoint_error(pred, gt, i))
        .collect())
}

/// Mean end-point error over valid pixels.
pub fn epe(pred: &FlowField, gt: &FlowField, mask: Option<&[bool]>) -> Result<f64> {
    let e = epe_values(pred, gt, mask)?;
    if e.is_empty() {
        return Err(Error::NoValidPixels);
    }
    Ok(e.iter().sum::<f64>() / e.len() as f64)
}

/// Outlier count and valid-pixel count for the KITTI outlier rate.
pub fn fl_counts(pred: &FlowField, gt: &FlowField, mask: Option<&[bool]>) -> Result<(usize, usize)> {
    check_pair("fl_all", pred, gt, mask)?;
    let mut outliers = 0;
    let mut total = 0;
    for i in 0..pred.height() * pred.width() {
        if !valid(gt, mask, i) {
            continue;
        }
        total += 1;
        let err = endpoint_error(pred, gt, i);
        let mag = (gt.u()[i] as f64).hypot(gt.v()[i] as f64);
        if err > FL_ABS_THRESHOLD && err > FL_REL_THRESHOLD * mag {
            outliers += 1;
        }
    }
    Ok((outliers, total))
}

/// Fraction of valid pixels whose error exceeds 3 px and 5% of the
/// ground-truth magnitude.
pub fn fl_all(pred: &FlowField, gt: &FlowField, mask: Option<&[bool]>) -> Result<f64> {
    match fl_counts(pred, gt, mask)? {
        (_, 0) => Err(Error::NoValidPixels),
        (o, n) => Ok(o as f64 / n as f64),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    /// Euclidean distance per pixel.
    #[default]
    L2,
    /// Squared Euclidean distance per pixel.
    SquaredL2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub norm: Norm,
    pub reduction: Reduction,
    /// Ground truth is divided by this before comparison with network flows.
    pub div_flow: f32,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            norm: Norm::L2,
            reduction: Reduction::Sum,
            div_flow: 20.0,
        }
    }
}

fn level_term(pred: &FlowField, target: &FlowField, cfg: &LossConfig) -> f64 {
    let n = pred.height() * pred.width();
    let sum: f64 = (0..n)
        .map(|i| {
            let d = endpoint_error(pred, target, i);
            match cfg.norm {
                Norm::L2 => d,
                Norm::SquaredL2 => d * d,
            }
        })
        .sum();
    match cfg.reduction {
        Reduction::Sum => sum,
        Reduction::Mean => sum / n.max(1) as f64,
    }
}

/// Average-pool `gt` by `2^level` and rescale its values to the network's
/// units at that level.
pub fn downscale_ground_truth(gt: &FlowField, level: usize, div_flow: f32) -> Result<FlowField> {
    let k = 1usize << level;
    let (h, w) = (gt.height(), gt.width());
    if h % k != 0 || w % k != 0 || h < k || w < k {
        return Err(Error::shape(
            "downscale_ground_truth",
            format!("{h}x{w} is not divisible by {k}"),
        ));
    }
    let (oh, ow) = (h / k, w / k);
    let scale = 1.0 / (k as f64 * div_flow as f64 * (k * k) as f64);
    let mut out = crate::tensor::Tensor::zeros(2, oh, ow);
    for c in 0..2 {
        let src = gt.tensor().channel(c);
        let dst = out.channel_mut(c);
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0f64;
                for y in oy * k..(oy + 1) * k {
                    for x in ox * k..(ox + 1) * k {
                        acc += src[y * w + x] as f64;
                    }
                }
                dst[oy * ow + ox] = (acc * scale) as f32;
            }
        }
    }
    FlowField::new(out)
}

fn check_weights(op: &'static str, levels: usize, weights: &[f32]) -> Result<()> {
    if weights.len() != levels {
        return Err(Error::invalid(
            op,
            format!("{} weights for {levels} levels", weights.len()),
        ));
    }
    Ok(())
}

/// Weighted sum over levels of the per-pixel distance between each
/// prediction and the ground truth pooled to its resolution.
/// Returns the total and the weighted per-level terms.
pub fn multiscale_supervision_loss(
    preds: &[(usize, FlowField)],
    gt: &FlowField,
    level_weights: &[f32],
    cfg: &LossConfig,
) -> Result<(f64, Vec<f64>)> {
    check_weights("multiscale_supervision_loss", preds.len(), level_weights)?;
    let mut per_level = Vec::with_capacity(preds.len());
    for ((level, pred), &w) in preds.iter().zip(level_weights) {
        let target = downscale_ground_truth(gt, *level, cfg.div_flow)?;
        check_pair("multiscale_supervision_loss", pred, &target, None)?;
        per_level.push(w as f64 * level_term(pred, &target, cfg));
    }
    Ok((per_level.iter().sum(), per_level))
}

/// Same form as the supervision loss with the teacher's flows as targets.
pub fn distillation_loss(
    student: &[(usize, FlowField)],
    teacher: &[(usize, FlowField)],
    level_weights: &[f32],
    cfg: &LossConfig,
) -> Result<f64> {
    check_weights("distillation_loss", student.len(), level_weights)?;
    let s_levels: Vec<usize> = student.iter().map(|p| p.0).collect();
    let t_levels: Vec<usize> = teacher.iter().map(|p| p.0).collect();
    if s_levels != t_levels {
        return Err(Error::invalid(
            "distillation_loss",
            format!("student levels {s_levels:?} vs teacher levels {t_levels:?}"),
        ));
    }
    let mut total = 0.0;
    for (((_, s), (_, t)), &w) in student.iter().zip(teacher).zip(level_weights) {
        check_pair("distillation_loss", s, t, None)?;
        total += w as f64 * level_term(s, t, cfg);
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub sup: f64,
    pub dist: f64,
    pub gamma: f64,
    pub total: f64,
    pub per_level: Vec<f64>,
}

/// `sup + gamma * dist`.
pub fn total_loss(sup: f64, dist: f64, gamma: f64) -> LossBreakdown {
    LossBreakdown {
        sup,
        dist,
        gamma,
        total: sup + gamma * dist,
        per_level: Vec::new(),
    }
}
