//! One image end to end: sample, annotate, render, augment.

use image::RgbImage;
use sha2::{Digest, Sha256};

use crate::augment::{apply_hsv, apply_hsv_layer, apply_noise, decode_jpeg, encode_jpeg};
use crate::camera::{bbox_from_projection, camera_pose, keypoint_visibility, project, CameraPose};
use crate::config::GeneratorConfig;
use crate::dataset::AnnotationRecord;
use crate::error::Result;
use crate::raster::{composite, load_background, render_foreground, silhouette_vertices, BackgroundLibrary};
use crate::rng::{stage_rng, Stage};
use crate::sampler::{sample_scene, SceneConfig};
use crate::scene::{keypoints_world, TurbineInstance, Visibility, NUM_KEYPOINTS};

/// A fully processed image before file encoding.
#[derive(Debug, Clone)]
pub struct RenderedImage {
    pub scene: SceneConfig,
    pub records: Vec<AnnotationRecord>,
    /// Final pixels; equal to the decoded file content.
    pub pixels: RgbImage,
    /// Encoded bytes when the JPEG stage fired.
    pub jpeg: Option<Vec<u8>>,
    /// Hex SHA-256 of the RGB buffer handed to the encoder.
    pub pre_encoding_sha256: String,
}

pub fn pixel_digest(img: &RgbImage) -> String {
    hex::encode(Sha256::digest(img.as_raw()))
}

/// Pixel keypoints with visibility and the clipped box of one turbine.
#[derive(Debug, Clone, Copy)]
pub struct PixelAnnotation {
    pub keypoints: [([f64; 2], Visibility); NUM_KEYPOINTS],
    pub bbox: crate::camera::BBox,
}

/// `None` when the turbine's silhouette misses the image.
pub fn annotate_turbine(t: &TurbineInstance, pose: &CameraPose) -> Option<PixelAnnotation> {
    let mut vertices = silhouette_vertices(t, pose);
    let world = keypoints_world(t);
    let mut keypoints = [([0.0, 0.0], Visibility::NotLabeled); NUM_KEYPOINTS];
    for (slot, point) in keypoints.iter_mut().zip(world.points.iter()) {
        let pixel = project(point, pose);
        let vis = keypoint_visibility(pixel, pose.width, pose.height);
        if let (Some(p), Visibility::Visible) = (pixel, vis) {
            *slot = ([p.u, p.v], vis);
            vertices.push(p);
        }
    }
    let bbox = bbox_from_projection(&vertices, pose.width, pose.height)?;
    Some(PixelAnnotation { keypoints, bbox })
}

/// Annotation records for every turbine that lands in the image, in scene order.
pub fn annotate_scene(scene: &SceneConfig, pose: &CameraPose) -> Vec<AnnotationRecord> {
    scene
        .turbines
        .iter()
        .filter_map(|t| annotate_turbine(t, pose))
        .map(|a| AnnotationRecord::from_pixels(&a.bbox, &a.keypoints, pose.width, pose.height))
        .collect()
}

/// Runs the whole per-image pipeline for `(seed, index)`.
pub fn generate_image(
    cfg: &GeneratorConfig,
    library: Option<&BackgroundLibrary>,
    seed: u64,
    index: u64,
) -> Result<RenderedImage> {
    let scene = sample_scene(seed, index, cfg);
    render_scene(cfg, library, scene)
}

/// Pipeline after sampling: annotate, render, HSV, composite, noise, JPEG.
pub fn render_scene(
    cfg: &GeneratorConfig,
    library: Option<&BackgroundLibrary>,
    scene: SceneConfig,
) -> Result<RenderedImage> {
    let pose = camera_pose(&scene.camera);
    let records = annotate_scene(&scene, &pose);
    let plan = scene.augment;

    let mut foreground = render_foreground(&scene, &pose, &cfg.render);
    apply_hsv_layer(&mut foreground, &plan.hsv_foreground);

    let mut bg_rng = stage_rng(scene.master_seed, scene.image_index, Stage::Background);
    let mut background = load_background(
        library,
        &scene.background,
        &mut bg_rng,
        pose.width,
        pose.height,
        &cfg.render,
    )?;
    apply_hsv(&mut background, None, &plan.hsv_background)?;

    let mut pixels = composite(&foreground, &background)?;
    if let Some(noise) = plan.noise {
        let mut rng = stage_rng(scene.master_seed, scene.image_index, Stage::Noise);
        apply_noise(&mut pixels, noise.mean, noise.std, &mut rng);
    }
    let pre_encoding_sha256 = pixel_digest(&pixels);
    let jpeg = match plan.jpeg_quality {
        Some(q) => {
            let bytes = encode_jpeg(&pixels, q)?;
            pixels = decode_jpeg(&bytes)?;
            Some(bytes)
        }
        None => None,
    };
    Ok(RenderedImage {
        scene,
        records,
        pixels,
        jpeg,
        pre_encoding_sha256,
    })
}
