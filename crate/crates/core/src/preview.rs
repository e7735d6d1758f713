//! Annotation overlays for visual audits.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};

use crate::dataset::{read_label_file, AnnotationRecord, DatasetManifest};
use crate::error::{Error, Result};
use crate::scene::NUM_KEYPOINTS;

const BOX_COLOR: Rgb<u8> = Rgb([255, 230, 0]);
const TIP_COLOR: Rgb<u8> = Rgb([255, 40, 40]);
const OTHER_COLOR: Rgb<u8> = Rgb([0, 220, 255]);
const TEXT_COLOR: Rgb<u8> = Rgb([255, 255, 255]);
const WATERMARK: &str = "NO ANNOTATIONS";

/// 3x5 glyphs, one row per byte, high bit on the left.
fn glyph(c: char) -> [u8; 5] {
    match c {
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        'N' => [0b101, 0b111, 0b111, 0b111, 0b101],
        'O' => [0b111, 0b101, 0b101, 0b101, 0b111],
        'A' => [0b010, 0b101, 0b111, 0b101, 0b101],
        'T' => [0b111, 0b010, 0b010, 0b010, 0b010],
        'I' => [0b111, 0b010, 0b010, 0b010, 0b111],
        'S' => [0b111, 0b100, 0b111, 0b001, 0b111],
        _ => [0; 5],
    }
}

/// Everything drawn on one overlay, in pixels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DrawList {
    pub boxes: Vec<[f64; 4]>,
    /// `(keypoint index, x, y)` of every drawn marker center.
    pub keypoints: Vec<(usize, f64, f64)>,
    /// `(text, x, y)` of every text label's top-left corner.
    pub texts: Vec<(String, i64, i64)>,
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && x < i64::from(img.width()) && y < i64::from(img.height()) {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn draw_text(img: &mut RgbImage, text: &str, x: i64, y: i64, scale: i64, c: Rgb<u8>) {
    for (n, ch) in text.chars().enumerate() {
        let ox = x + n as i64 * 4 * scale;
        for (row, bits) in glyph(ch).iter().enumerate() {
            for col in 0..3 {
                if bits & (0b100 >> col) != 0 {
                    for dy in 0..scale {
                        for dx in 0..scale {
                            put(img, ox + col * scale + dx, y + row as i64 * scale + dy, c);
                        }
                    }
                }
            }
        }
    }
}

fn draw_rect(img: &mut RgbImage, b: [f64; 4], c: Rgb<u8>) {
    let [x1, y1, x2, y2] = b.map(|v| v.round() as i64);
    for x in x1..=x2 {
        put(img, x, y1, c);
        put(img, x, y2, c);
    }
    for y in y1..=y2 {
        put(img, x1, y, c);
        put(img, x2, y, c);
    }
}

fn draw_marker(img: &mut RgbImage, x: f64, y: f64, c: Rgb<u8>) {
    let (cx, cy) = (x.round() as i64, y.round() as i64);
    for d in -3..=3i64 {
        put(img, cx + d, cy, c);
        put(img, cx, cy + d, c);
    }
}

/// Draws boxes, keypoint markers and tip numerals; a watermark when
/// `records` is `None`.
pub fn draw_overlay(img: &mut RgbImage, records: Option<&[AnnotationRecord]>) -> DrawList {
    let (w, h) = img.dimensions();
    let mut list = DrawList::default();
    let Some(records) = records else {
        let scale = i64::from((w / 160).max(1));
        let text_w = WATERMARK.len() as i64 * 4 * scale;
        let x = (i64::from(w) - text_w) / 2;
        let y = (i64::from(h) - 5 * scale) / 2;
        draw_text(img, WATERMARK, x, y, scale, TEXT_COLOR);
        list.texts.push((WATERMARK.to_string(), x, y));
        return list;
    };
    let scale = i64::from((w / 640).max(1)) * 2;
    for r in records {
        let b = r.bbox_pixels(w, h);
        let corners = [b.x1, b.y1, b.x2, b.y2];
        draw_rect(img, corners, BOX_COLOR);
        list.boxes.push(corners);
        let points = r.keypoints_pixels(w, h);
        for i in 0..NUM_KEYPOINTS {
            if !r.keypoints[i].v.is_visible() {
                continue;
            }
            let [x, y] = points[i];
            let color = if i < 3 { TIP_COLOR } else { OTHER_COLOR };
            draw_marker(img, x, y, color);
            list.keypoints.push((i, x, y));
            if i < 3 {
                let text = (i + 1).to_string();
                let (tx, ty) = (x.round() as i64 + 5, y.round() as i64 - 5 * scale - 2);
                draw_text(img, &text, tx, ty, scale, TEXT_COLOR);
                list.texts.push((text, tx, ty));
            }
        }
    }
    list
}

/// Image/label pairs of a dataset, from its manifest when present.
fn dataset_entries(dataset: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let manifest = dataset.join("manifest.json");
    if manifest.is_file() {
        let m = DatasetManifest::load(&manifest)?;
        return Ok(m
            .images
            .iter()
            .map(|i| (dataset.join(&i.image), dataset.join(&i.label)))
            .collect());
    }
    let mut out = Vec::new();
    let images = dataset.join("images");
    let dirs = fs::read_dir(&images).map_err(|e| Error::io(&images, e))?;
    for split in dirs {
        let split = split.map_err(|e| Error::io(&images, e))?.path();
        if !split.is_dir() {
            continue;
        }
        let split_name = split.file_name().unwrap_or_default().to_owned();
        for entry in fs::read_dir(&split).map_err(|e| Error::io(&split, e))? {
            let path = entry.map_err(|e| Error::io(&split, e))?.path();
            let is_image = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"));
            if is_image {
                let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let label = dataset.join("labels").join(&split_name).join(format!("{stem}.txt"));
                out.push((path, label));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Writes overlays for the first `n` images of `dataset` into `out` as PNG.
pub fn write_previews(dataset: &Path, n: usize, out: &Path) -> Result<Vec<PathBuf>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let entries = dataset_entries(dataset)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    for (image_path, label_path) in entries.into_iter().take(n) {
        let mut img = image::open(&image_path)
            .map_err(|source| Error::Image {
                path: image_path.clone(),
                source,
            })?
            .to_rgb8();
        let records = if label_path.is_file() {
            Some(read_label_file(&label_path)?)
        } else {
            None
        };
        draw_overlay(&mut img, records.as_deref());
        let stem = image_path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let path = out.join(format!("{stem}_preview.png"));
        img.save(&path).map_err(|source| Error::Image {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
