//! Permutation-invariant keypoint evaluation.

pub mod fixtures;
pub mod matching;
pub mod oks;
pub mod permutation;
pub mod report;

pub use fixtures::{parity_fixtures, ParityCase, ParityFixtures};
pub use matching::{average_precision, match_detections, MatchOutcome};
pub use oks::{oks, permute_tips, pose_oks, DEFAULT_KEYPOINT_CONSTANT};
pub use permutation::{
    optimal_tip_permutation, optimal_tip_permutation_masked, permutation_cost, tip_distances, Point2,
    TipPermutation,
};
pub use report::{
    evaluate_task, load_eval_set, manifest_image_size, map_report, thresholds, Detection, EvalParams, EvalSet,
    GroundTruth, ImageEval, MetricReport, Task, TaskReport,
};
