//! Synthetic wind-turbine keypoint datasets and permutation-invariant pose evaluation.
//!
//! The generation pipeline runs in stages, each a pure function of the
//! `(master_seed, image_index)` pair:
//!
//! 1. [`sampler`] draws a [`sampler::SceneConfig`] (turbines, camera, augmentation plan).
//! 2. [`scene`] turns each turbine into world-frame keypoints with stable tip labels.
//! 3. [`camera`] projects geometry to pixels and derives visibility and boxes.
//! 4. [`raster`] paints flat-shaded silhouettes and composites them over a background.
//! 5. [`augment`] applies HSV shifts, pixel noise and JPEG artifacts.
//! 6. [`dataset`] writes images, pose label files and a manifest.
//!
//! [`eval`] scores detections against labels with IoU (boxes) and OKS over
//! the best of the six blade-tip orderings (poses).

pub mod augment;
pub mod camera;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod preview;
pub mod raster;
pub mod rng;
pub mod sampler;
pub mod scene;

pub use error::{Error, Result};

/// Version string recorded in dataset manifests.
pub const GENERATOR_VERSION: &str = concat!("windkp ", env!("CARGO_PKG_VERSION"));
