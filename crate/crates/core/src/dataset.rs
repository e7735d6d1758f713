//! Pose label files, split assignment, manifest and the dataset writer.
//!
//! Label lines are `class cx cy w h x1 y1 v1 ... x7 y7 v7`: integer class and
//! visibility, every coordinate normalized to `[0, 1]` with six decimals.
//! Prediction files use the same layout with a trailing confidence column.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ImageEncoder, RgbImage};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::BBox;
use crate::config::GeneratorConfig;
use crate::error::{Error, Result};
use crate::pipeline::{generate_image, RenderedImage};
use crate::raster::BackgroundLibrary;
use crate::rng::mix64;
use crate::scene::{keypoint_names, Visibility, NUM_KEYPOINTS};

/// Only object class.
pub const TURBINE_CLASS: u32 = 0;
pub const CLASS_NAMES: [&str; 1] = ["wind_turbine"];

const LABEL_FIELDS: usize = 5 + 3 * NUM_KEYPOINTS;

/// Normalized center-size box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormKeypoint {
    pub x: f64,
    pub y: f64,
    pub v: Visibility,
}

impl NormKeypoint {
    pub const HIDDEN: NormKeypoint = NormKeypoint {
        x: 0.0,
        y: 0.0,
        v: Visibility::NotLabeled,
    };
}

/// One turbine in one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotationRecord {
    pub class_id: u32,
    pub bbox: NormBox,
    pub keypoints: [NormKeypoint; NUM_KEYPOINTS],
}

fn unit(v: f64) -> f64 {
    if v > 0.0 {
        v.min(1.0)
    } else {
        0.0
    }
}

impl AnnotationRecord {
    /// Normalizes a pixel box and pixel keypoints; hidden keypoints become `(0, 0, 0)`.
    pub fn from_pixels(
        bbox: &BBox,
        keypoints: &[([f64; 2], Visibility); NUM_KEYPOINTS],
        width: u32,
        height: u32,
    ) -> Self {
        let (w, h) = (f64::from(width), f64::from(height));
        let kps = keypoints.map(|(p, v)| {
            if v.is_visible() {
                NormKeypoint {
                    x: unit(p[0] / w),
                    y: unit(p[1] / h),
                    v,
                }
            } else {
                NormKeypoint::HIDDEN
            }
        });
        Self {
            class_id: TURBINE_CLASS,
            bbox: NormBox {
                cx: unit((bbox.x1 + bbox.x2) / 2.0 / w),
                cy: unit((bbox.y1 + bbox.y2) / 2.0 / h),
                w: unit(bbox.width() / w),
                h: unit(bbox.height() / h),
            },
            keypoints: kps,
        }
    }

    pub fn bbox_pixels(&self, width: u32, height: u32) -> BBox {
        let (w, h) = (f64::from(width), f64::from(height));
        let b = &self.bbox;
        BBox::new(
            (b.cx - b.w / 2.0) * w,
            (b.cy - b.h / 2.0) * h,
            (b.cx + b.w / 2.0) * w,
            (b.cy + b.h / 2.0) * h,
        )
    }

    pub fn keypoints_pixels(&self, width: u32, height: u32) -> [[f64; 2]; NUM_KEYPOINTS] {
        let (w, h) = (f64::from(width), f64::from(height));
        self.keypoints.map(|k| [k.x * w, k.y * h])
    }

    pub fn visibility(&self) -> [Visibility; NUM_KEYPOINTS] {
        self.keypoints.map(|k| k.v)
    }

    pub fn to_line(&self) -> String {
        let mut s = String::with_capacity(200);
        let b = &self.bbox;
        write!(
            s,
            "{} {:.6} {:.6} {:.6} {:.6}",
            self.class_id,
            unit(b.cx),
            unit(b.cy),
            unit(b.w),
            unit(b.h)
        )
        .unwrap();
        for k in &self.keypoints {
            write!(s, " {:.6} {:.6} {}", unit(k.x), unit(k.y), k.v.flag()).unwrap();
        }
        s
    }

    fn from_fields(fields: &[&str]) -> std::result::Result<Self, String> {
        if fields.len() != LABEL_FIELDS {
            return Err(format!(
                "expected {LABEL_FIELDS} fields, found {}",
                fields.len()
            ));
        }
        let class_id: u32 = fields[0]
            .parse()
            .map_err(|_| format!("bad class id {:?}", fields[0]))?;
        let num = |i: usize| -> std::result::Result<f64, String> {
            let v: f64 = fields[i]
                .parse()
                .map_err(|_| format!("field {} is not a number: {:?}", i + 1, fields[i]))?;
            if !v.is_finite() {
                return Err(format!("field {} is not finite", i + 1));
            }
            Ok(v)
        };
        let bbox = NormBox {
            cx: num(1)?,
            cy: num(2)?,
            w: num(3)?,
            h: num(4)?,
        };
        if !(bbox.w > 0.0 && bbox.h > 0.0) {
            return Err("box width and height must be positive".into());
        }
        let mut keypoints = [NormKeypoint::HIDDEN; NUM_KEYPOINTS];
        for (k, kp) in keypoints.iter_mut().enumerate() {
            let base = 5 + 3 * k;
            let flag = num(base + 2)?;
            // flag 1 ("labeled but occluded") counts as visible
            let v = if flag == 0.0 {
                Visibility::NotLabeled
            } else if flag == 1.0 || flag == 2.0 {
                Visibility::Visible
            } else {
                return Err(format!("bad visibility flag {:?}", fields[base + 2]));
            };
            *kp = NormKeypoint {
                x: num(base)?,
                y: num(base + 1)?,
                v,
            };
        }
        Ok(Self {
            class_id,
            bbox,
            keypoints,
        })
    }

    pub fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        Self::from_fields(&fields)
    }
}

/// A predicted record with its confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub record: AnnotationRecord,
    pub confidence: f64,
}

impl Prediction {
    pub fn to_line(&self) -> String {
        format!("{} {:.6}", self.record.to_line(), self.confidence)
    }

    pub fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != LABEL_FIELDS + 1 {
            return Err(format!(
                "expected {} fields (label plus confidence), found {}",
                LABEL_FIELDS + 1,
                fields.len()
            ));
        }
        let record = AnnotationRecord::from_fields(&fields[..LABEL_FIELDS])?;
        let confidence: f64 = fields[LABEL_FIELDS]
            .parse()
            .map_err(|_| format!("bad confidence {:?}", fields[LABEL_FIELDS]))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(format!("confidence {confidence} outside [0, 1]"));
        }
        Ok(Self { record, confidence })
    }
}

fn read_lines<T>(
    path: &Path,
    parse: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse(l).map_err(|m| Error::parse(path, i + 1, m)))
        .collect()
}

pub fn read_label_file(path: &Path) -> Result<Vec<AnnotationRecord>> {
    read_lines(path, AnnotationRecord::parse_line)
}

pub fn read_prediction_file(path: &Path) -> Result<Vec<Prediction>> {
    read_lines(path, Prediction::parse_line)
}

/// Label file contents: one newline-terminated line per record.
pub fn label_text(records: &[AnnotationRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

/// Writes `<dir>/<image_id>.txt`; empty when there are no records.
pub fn write_label_file(dir: &Path, image_id: &str, records: &[AnnotationRecord]) -> Result<PathBuf> {
    let path = dir.join(format!("{image_id}.txt"));
    fs::write(&path, label_text(records)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub const ALL: [Split; 2] = [Split::Train, Split::Val];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

/// Hash-ranked split: the `round(fraction * count)` indices with the
/// smallest hashes go to training.
pub fn split_assignment(count: u64, train_fraction: f64) -> Vec<Split> {
    let n_train = ((train_fraction * count as f64).round() as u64).min(count) as usize;
    let mut order: Vec<u64> = (0..count).collect();
    order.sort_by_key(|&i| (mix64(i ^ 0x5350_4c49_5400_0000), i));
    let mut splits = vec![Split::Val; count as usize];
    for &i in &order[..n_train] {
        splits[i as usize] = Split::Train;
    }
    splits
}

pub fn image_id(index: u64) -> String {
    format!("{index:06}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestImage {
    pub id: String,
    pub index: u64,
    pub split: Split,
    /// Relative to the dataset root.
    pub image: String,
    pub label: String,
    pub turbines: usize,
    /// SHA-256 of the RGB buffer before file encoding.
    pub pixel_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub generator_version: String,
    pub master_seed: u64,
    pub count: u64,
    pub image_width: u32,
    pub image_height: u32,
    pub train_fraction: f64,
    pub counts: BTreeMap<Split, usize>,
    pub class_names: Vec<String>,
    pub keypoint_names: Vec<String>,
    pub conventions: BTreeMap<String, String>,
    pub images: Vec<ManifestImage>,
    pub config: GeneratorConfig,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }
}

fn conventions() -> BTreeMap<String, String> {
    [
        ("world_frame", "z up, ground plane z = 0, camera on the -y axis looking toward +y"),
        ("yaw", "degrees counter-clockwise seen from above; yaw 0 points the hub front along -y, toward the camera"),
        ("blade_rotation", "degrees from 12 o'clock, clockwise seen from the upwind (hub front) side"),
        ("tip_labels", "tip1/tip2/tip3 are the blades whose angle lies in [0,120), [120,240), [240,360)"),
        ("label_format", "class cx cy w h then x y v for each keypoint; coordinates normalized to the image, six decimals"),
        ("visibility", "2 = in frame and in front of the camera, 0 = not labeled with x = y = 0"),
        ("renderer", "flat-shaded silhouettes with distance haze over a background; not photorealistic"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    PngEncoder::new_with_quality(&mut bytes, CompressionType::Fast, FilterType::Sub).write_image(
        img.as_raw(),
        img.width(),
        img.height(),
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(bytes)
}

/// Encoded image bytes and the file extension for them.
pub fn encode_output(rendered: &RenderedImage) -> Result<(Vec<u8>, &'static str)> {
    match &rendered.jpeg {
        Some(bytes) => Ok((bytes.clone(), "jpg")),
        None => Ok((encode_png(&rendered.pixels)?, "png")),
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn reset_dir(path: &Path) -> Result<()> {
    if path.exists() {
        fs::remove_dir_all(path).map_err(|e| Error::io(path, e))?;
    }
    ensure_dir(path)
}

/// Generates `cfg.count` images seeded by `cfg.seed` into `out`.
///
/// Split directories are recreated, so a rerun with the same settings
/// reproduces the same tree. `workers = 0` uses every logical core.
pub fn write_dataset(cfg: &GeneratorConfig, out: &Path, workers: usize) -> Result<DatasetManifest> {
    cfg.validate()?;
    let library = cfg
        .background_dir
        .as_deref()
        .map(BackgroundLibrary::open)
        .transpose()?;

    for split in Split::ALL {
        reset_dir(&out.join("images").join(split.name()))?;
        reset_dir(&out.join("labels").join(split.name()))?;
    }

    let splits = split_assignment(cfg.count, cfg.train_fraction);
    let done = AtomicUsize::new(0);
    let step = (cfg.count as usize / 10).max(1);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let images: Vec<ManifestImage> = pool.install(|| {
        (0..cfg.count)
            .into_par_iter()
            .map(|index| {
                let split = splits[index as usize];
                let rendered = generate_image(cfg, library.as_ref(), cfg.seed, index)?;
                let id = image_id(index);
                let (bytes, ext) = encode_output(&rendered)?;
                let image_rel = format!("images/{}/{id}.{ext}", split.name());
                let image_path = out.join(&image_rel);
                fs::write(&image_path, bytes).map_err(|e| Error::io(&image_path, e))?;
                let label_dir = out.join("labels").join(split.name());
                write_label_file(&label_dir, &id, &rendered.records)?;

                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n.is_multiple_of(step) || n == cfg.count as usize {
                    info!("generated {n}/{} images", cfg.count);
                }
                Ok(ManifestImage {
                    label: format!("labels/{}/{id}.txt", split.name()),
                    id,
                    index,
                    split,
                    image: image_rel,
                    turbines: rendered.records.len(),
                    pixel_sha256: rendered.pre_encoding_sha256.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut counts = BTreeMap::new();
    for split in Split::ALL {
        counts.insert(split, images.iter().filter(|m| m.split == split).count());
    }
    let manifest = DatasetManifest {
        generator_version: crate::GENERATOR_VERSION.to_string(),
        master_seed: cfg.seed,
        count: cfg.count,
        image_width: cfg.image.width,
        image_height: cfg.image.height,
        train_fraction: cfg.train_fraction,
        counts,
        class_names: CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
        keypoint_names: keypoint_names().into_iter().map(String::from).collect(),
        conventions: conventions(),
        images,
        config: cfg.clone(),
    };
    let path = out.join("manifest.json");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)
        .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
    Ok(manifest)
}
