//! Dataset-level box and pose mAP reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::BBox;
use crate::dataset::{read_label_file, read_prediction_file, DatasetManifest};
use crate::error::{Error, Result};
use crate::scene::{Visibility, NUM_KEYPOINTS};

use super::matching::{average_precision, match_detections, MatchOutcome};
use super::oks::{pose_oks, DEFAULT_KEYPOINT_CONSTANT};
use super::permutation::Point2;

/// Similarity thresholds 0.50, 0.55, ..., 0.95.
pub fn thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

/// IoU at which a detection overlapping an unlabeled ground truth is
/// ignored instead of counted as a pose false positive.
pub const IGNORE_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub class_id: u32,
    pub bbox: BBox,
    pub keypoints: [Point2; NUM_KEYPOINTS],
    pub visibility: [Visibility; NUM_KEYPOINTS],
}

impl GroundTruth {
    pub fn has_visible_keypoint(&self) -> bool {
        self.visibility.iter().any(|v| v.is_visible())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub class_id: u32,
    pub bbox: BBox,
    pub keypoints: [Point2; NUM_KEYPOINTS],
    pub confidence: f64,
}

/// Ground truths and detections of one image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageEval {
    pub gts: Vec<GroundTruth>,
    pub dets: Vec<Detection>,
}

/// Evaluation inputs keyed by image id.
pub type EvalSet = BTreeMap<String, ImageEval>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Box,
    Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalParams {
    pub keypoint_constants: [f64; NUM_KEYPOINTS],
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            keypoint_constants: [DEFAULT_KEYPOINT_CONSTANT; NUM_KEYPOINTS],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold: f64,
    /// Mean AP over classes with ground truth; 0 when there are none.
    pub ap: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub ignored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub map50: f64,
    pub map50_95: f64,
    pub ground_truths: usize,
    pub detections: usize,
    pub per_threshold: Vec<ThresholdResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "mAP50_box")]
    pub map50_box: f64,
    #[serde(rename = "mAP50_95_box")]
    pub map50_95_box: f64,
    #[serde(rename = "mAP50_pose")]
    pub map50_pose: f64,
    #[serde(rename = "mAP50_95_pose")]
    pub map50_95_pose: f64,
    pub images: usize,
    #[serde(rename = "box")]
    pub box_task: TaskReport,
    #[serde(rename = "pose")]
    pub pose_task: TaskReport,
}

impl MetricReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str("task   mAP50  mAP50-95     gts    dets\n");
        for (name, t) in [("box", &self.box_task), ("pose", &self.pose_task)] {
            s.push_str(&format!(
                "{name:<5} {:>6.3} {:>9.3} {:>7} {:>7}\n",
                t.map50, t.map50_95, t.ground_truths, t.detections
            ));
        }
        s
    }
}

/// Similarity of one detection to one ground truth, `None` when undefined.
pub fn similarity(task: Task, det: &Detection, gt: &GroundTruth, params: &EvalParams) -> Option<f64> {
    if det.class_id != gt.class_id {
        return None;
    }
    match task {
        Task::Box => Some(det.bbox.iou(&gt.bbox)),
        Task::Pose => pose_oks(
            &det.keypoints,
            &gt.keypoints,
            &gt.visibility,
            gt.bbox.area(),
            &params.keypoint_constants,
        ),
    }
}

fn counts_for(task: Task, gt: &GroundTruth) -> bool {
    task == Task::Box || gt.has_visible_keypoint()
}

/// Detection order within an image: confidence descending, then file order.
fn image_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence).then(a.cmp(&b)));
    order
}

/// Per-detection outcomes at every threshold, in the image's own order.
fn match_image(task: Task, image: &ImageEval, class_id: u32, params: &EvalParams) -> Vec<(usize, [MatchOutcome; 10])> {
    let gts: Vec<&GroundTruth> = image.gts.iter().filter(|g| g.class_id == class_id).collect();
    let order: Vec<usize> = image_order(&image.dets)
        .into_iter()
        .filter(|&d| image.dets[d].class_id == class_id)
        .collect();
    let sim: Vec<Vec<Option<f64>>> = order
        .iter()
        .map(|&d| {
            gts.iter()
                .map(|g| {
                    if counts_for(task, g) {
                        similarity(task, &image.dets[d], g, params)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let near_unlabeled: Vec<bool> = order
        .iter()
        .map(|&d| {
            gts.iter()
                .any(|g| !counts_for(task, g) && image.dets[d].bbox.iou(&g.bbox) >= IGNORE_IOU)
        })
        .collect();
    let mut outcomes = vec![[MatchOutcome::FalsePositive; 10]; order.len()];
    for (t, &tau) in thresholds().iter().enumerate() {
        for (k, m) in match_detections(&sim, gts.len(), tau).into_iter().enumerate() {
            outcomes[k][t] = match m {
                MatchOutcome::FalsePositive if near_unlabeled[k] => MatchOutcome::Ignored,
                other => other,
            };
        }
    }
    order.into_iter().zip(outcomes).collect()
}

/// Box or pose mAP over the whole set.
pub fn evaluate_task(task: Task, set: &EvalSet, params: &EvalParams) -> TaskReport {
    let classes: BTreeSet<u32> = set
        .values()
        .flat_map(|im| im.gts.iter().filter(|g| counts_for(task, g)).map(|g| g.class_id))
        .collect();
    let images: Vec<(&String, &ImageEval)> = set.iter().collect();
    let mut per_threshold: Vec<ThresholdResult> = thresholds()
        .iter()
        .map(|&threshold| ThresholdResult {
            threshold,
            ap: 0.0,
            true_positives: 0,
            false_positives: 0,
            ignored: 0,
        })
        .collect();
    let mut aps = vec![Vec::new(); per_threshold.len()];
    let mut ground_truths = 0;
    for &class_id in &classes {
        let n_gt: usize = images
            .iter()
            .map(|(_, im)| im.gts.iter().filter(|g| g.class_id == class_id && counts_for(task, g)).count())
            .sum();
        ground_truths += n_gt;
        // (confidence, image id, detection index, outcomes)
        let mut scored: Vec<(f64, &String, usize, [MatchOutcome; 10])> = images
            .par_iter()
            .map(|(id, im)| {
                match_image(task, im, class_id, params)
                    .into_iter()
                    .map(|(d, o)| (im.dets[d].confidence, *id, d, o))
                    .collect::<Vec<_>>()
            })
            .flatten()
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)).then(a.2.cmp(&b.2)));
        for (t, result) in per_threshold.iter_mut().enumerate() {
            let mut flags = Vec::with_capacity(scored.len());
            for s in &scored {
                match s.3[t] {
                    MatchOutcome::TruePositive { .. } => {
                        result.true_positives += 1;
                        flags.push(true);
                    }
                    MatchOutcome::FalsePositive => {
                        result.false_positives += 1;
                        flags.push(false);
                    }
                    MatchOutcome::Ignored => result.ignored += 1,
                }
            }
            if let Some(ap) = average_precision(&flags, n_gt) {
                aps[t].push(ap);
            }
        }
    }
    for (result, class_aps) in per_threshold.iter_mut().zip(&aps) {
        if !class_aps.is_empty() {
            result.ap = class_aps.iter().sum::<f64>() / class_aps.len() as f64;
        }
    }
    let map50 = per_threshold[0].ap;
    // Mean as an offset from AP50 so stricter thresholds can only lower it,
    // even after rounding.
    let map50_95 =
        map50 + per_threshold.iter().map(|r| r.ap - map50).sum::<f64>() / per_threshold.len() as f64;
    TaskReport {
        map50,
        map50_95,
        ground_truths,
        detections: set.values().map(|im| im.dets.len()).sum(),
        per_threshold,
    }
}

pub fn map_report(set: &EvalSet, params: &EvalParams) -> MetricReport {
    let box_task = evaluate_task(Task::Box, set, params);
    let pose_task = evaluate_task(Task::Pose, set, params);
    MetricReport {
        map50_box: box_task.map50,
        map50_95_box: box_task.map50_95,
        map50_pose: pose_task.map50,
        map50_95_pose: pose_task.map50_95,
        images: set.len(),
        box_task,
        pose_task,
    }
}

fn label_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let path = entry.map_err(|e| Error::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "txt") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn files_by_id(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut map = BTreeMap::new();
    for path in label_files(dir)? {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if let Some(prev) = map.insert(id.clone(), path.clone()) {
            return Err(Error::parse(&path, 0, format!("image id {id:?} also in {}", prev.display())));
        }
    }
    Ok(map)
}

/// Image size from a `manifest.json` in `dir` or up to two parents.
pub fn manifest_image_size(dir: &Path) -> Result<Option<(u32, u32)>> {
    for d in dir.ancestors().take(3) {
        let path = d.join("manifest.json");
        if path.is_file() {
            let m = DatasetManifest::load(&path)?;
            return Ok(Some((m.image_width, m.image_height)));
        }
    }
    Ok(None)
}

/// Reads ground-truth and prediction label trees. Every ground-truth image
/// is evaluated; a missing prediction file means no detections.
pub fn load_eval_set(gt_dir: &Path, pred_dir: &Path, width: u32, height: u32) -> Result<EvalSet> {
    let gt_files = files_by_id(gt_dir)?;
    let pred_files = files_by_id(pred_dir)?;
    let mut set = EvalSet::new();
    for (id, path) in &gt_files {
        let gts = read_label_file(path)?
            .iter()
            .map(|r| GroundTruth {
                class_id: r.class_id,
                bbox: r.bbox_pixels(width, height),
                keypoints: r.keypoints_pixels(width, height),
                visibility: r.visibility(),
            })
            .collect();
        set.insert(id.clone(), ImageEval { gts, dets: Vec::new() });
    }
    for (id, path) in &pred_files {
        let dets: Vec<Detection> = read_prediction_file(path)?
            .iter()
            .map(|p| Detection {
                class_id: p.record.class_id,
                bbox: p.record.bbox_pixels(width, height),
                keypoints: p.record.keypoints_pixels(width, height),
                confidence: p.confidence,
            })
            .collect();
        set.entry(id.clone()).or_default().dets = dets;
    }
    Ok(set)
}
