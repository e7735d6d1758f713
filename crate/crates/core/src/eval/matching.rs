//! Greedy confidence-ordered matching and 101-point interpolated AP.

/// Result of matching one detection at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOutcome {
    TruePositive { gt: usize },
    FalsePositive,
    /// Excluded from the precision-recall curve.
    Ignored,
}

impl MatchOutcome {
    pub fn is_tp(self) -> bool {
        matches!(self, MatchOutcome::TruePositive { .. })
    }
}

/// Matches detections (rows, already in descending confidence) to ground
/// truths (columns).
///
/// Each detection takes the unmatched ground truth of highest similarity
/// among those at or above `threshold`; equal similarities go to the lower
/// column. `similarity[d][g] = None` marks a pair that can never match.
pub fn match_detections(similarity: &[Vec<Option<f64>>], num_gts: usize, threshold: f64) -> Vec<MatchOutcome> {
    let mut taken = vec![false; num_gts];
    similarity
        .iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (g, s) in row.iter().enumerate() {
                let Some(s) = *s else { continue };
                if taken[g] || s < threshold {
                    continue;
                }
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((g, s));
                }
            }
            match best {
                Some((g, _)) => {
                    taken[g] = true;
                    MatchOutcome::TruePositive { gt: g }
                }
                None => MatchOutcome::FalsePositive,
            }
        })
        .collect()
}

pub const RECALL_POINTS: usize = 101;

/// 101-point interpolated average precision.
///
/// `tp` lists true/false positive flags in descending confidence. The
/// precision at recall level `r` is the best precision reached at any recall
/// `>= r`, zero when that recall is never reached. `None` without ground truth.
pub fn average_precision(tp: &[bool], total_gts: usize) -> Option<f64> {
    if total_gts == 0 {
        return None;
    }
    let mut precision = Vec::with_capacity(tp.len());
    let mut recall = Vec::with_capacity(tp.len());
    let mut tps = 0usize;
    for (i, &hit) in tp.iter().enumerate() {
        if hit {
            tps += 1;
        }
        precision.push(tps as f64 / (i + 1) as f64);
        recall.push(tps as f64 / total_gts as f64);
    }
    // precision envelope, non-increasing from the right
    for i in (0..precision.len().saturating_sub(1)).rev() {
        if precision[i] < precision[i + 1] {
            precision[i] = precision[i + 1];
        }
    }
    let mut sum = 0.0;
    let mut j = 0usize;
    for k in 0..RECALL_POINTS {
        let r = k as f64 / 100.0;
        while j < recall.len() && recall[j] < r {
            j += 1;
        }
        if j < recall.len() {
            sum += precision[j];
        }
    }
    Some(sum / RECALL_POINTS as f64)
}
