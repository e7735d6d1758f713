//! Object keypoint similarity with permutation-invariant blade tips.

use crate::scene::{Visibility, NUM_KEYPOINTS};

use super::permutation::{optimal_tip_permutation_masked, Point2, TipPermutation};

/// Per-keypoint falloff constant used for every keypoint by default.
pub const DEFAULT_KEYPOINT_CONSTANT: f64 = 0.1;

/// `mean over visible i of exp(-d_i² / (2 s² k_i²))` with `s² = area`.
///
/// `None` when no ground-truth keypoint is visible.
pub fn oks(
    pred: &[Point2; NUM_KEYPOINTS],
    gt: &[Point2; NUM_KEYPOINTS],
    visibility: &[Visibility; NUM_KEYPOINTS],
    area: f64,
    constants: &[f64; NUM_KEYPOINTS],
) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..NUM_KEYPOINTS {
        if !visibility[i].is_visible() {
            continue;
        }
        let dx = pred[i][0] - gt[i][0];
        let dy = pred[i][1] - gt[i][1];
        let denom = 2.0 * area * constants[i] * constants[i];
        sum += (-(dx * dx + dy * dy) / denom).exp();
        n += 1;
    }
    (n > 0).then(|| (sum / n as f64).clamp(0.0, 1.0))
}

/// Reorders the predicted tips by the optimal permutation against the
/// visible ground-truth tips.
pub fn permute_tips(
    pred: &[Point2; NUM_KEYPOINTS],
    gt: &[Point2; NUM_KEYPOINTS],
    visibility: &[Visibility; NUM_KEYPOINTS],
) -> (TipPermutation, [Point2; NUM_KEYPOINTS]) {
    let mask = [0, 1, 2].map(|i| visibility[i].is_visible());
    let (perm, tips) = optimal_tip_permutation_masked(
        &[pred[0], pred[1], pred[2]],
        &[gt[0], gt[1], gt[2]],
        mask,
    );
    let mut out = *pred;
    out[..3].copy_from_slice(&tips);
    (perm, out)
}

/// OKS after the optimal tip permutation.
pub fn pose_oks(
    pred: &[Point2; NUM_KEYPOINTS],
    gt: &[Point2; NUM_KEYPOINTS],
    visibility: &[Visibility; NUM_KEYPOINTS],
    area: f64,
    constants: &[f64; NUM_KEYPOINTS],
) -> Option<f64> {
    let (_, permuted) = permute_tips(pred, gt, visibility);
    oks(&permuted, gt, visibility, area, constants)
}
