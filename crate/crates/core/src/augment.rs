//! Post-render augmentations: HSV shifts, Gaussian pixel noise, JPEG artifacts.
//!
//! Pipeline order is fixed: HSV on the foreground layer, HSV on the
//! background layer, composite, noise, JPEG.

use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::{GrayImage, ImageFormat, RgbImage, RgbaImage};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sampler::HsvShift;

/// RGB bytes to `(hue degrees, saturation 0-255, value 0-255)`.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { 255.0 * delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        let sector = (g - b) / delta;
        60.0 * if sector < 0.0 { sector + 6.0 } else { sector }
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h, s, max)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * (s / 255.0);
    let hp = wrap_degrees(h) / 60.0;
    let x = c * (1.0 - (hp - 2.0 * (hp / 2.0).floor() - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|ch| (ch + m).round().clamp(0.0, 255.0) as u8)
}

fn wrap_degrees(h: f64) -> f64 {
    if (0.0..360.0).contains(&h) {
        h
    } else if (360.0..720.0).contains(&h) {
        h - 360.0
    } else {
        h.rem_euclid(360.0)
    }
}

/// Shifts one pixel: hue wraps, saturation and value clamp to 0-255.
pub fn shift_pixel(rgb: [u8; 3], shift: &HsvShift) -> [u8; 3] {
    let (h, s, v) = rgb_to_hsv(rgb);
    hsv_to_rgb(
        wrap_degrees(h + shift.h),
        (s + shift.s).clamp(0.0, 255.0),
        (v * shift.v).clamp(0.0, 255.0),
    )
}

/// [`shift_pixel`] remembering the previous input, for images with long
/// runs of one color.
struct CachedShift<'a> {
    shift: &'a HsvShift,
    last: Option<([u8; 3], [u8; 3])>,
}

impl<'a> CachedShift<'a> {
    fn new(shift: &'a HsvShift) -> Self {
        Self { shift, last: None }
    }

    fn apply(&mut self, rgb: [u8; 3]) -> [u8; 3] {
        match self.last {
            Some((input, output)) if input == rgb => output,
            _ => {
                let output = shift_pixel(rgb, self.shift);
                self.last = Some((rgb, output));
                output
            }
        }
    }
}

/// Applies one HSV shift to every pixel, or only where `mask > 0`.
pub fn apply_hsv(image: &mut RgbImage, mask: Option<&GrayImage>, shift: &HsvShift) -> Result<()> {
    match mask {
        Some(m) => {
            if m.dimensions() != image.dimensions() {
                return Err(Error::DimensionMismatch {
                    left: image.dimensions(),
                    right: m.dimensions(),
                });
            }
            let mut f = CachedShift::new(shift);
            for (px, a) in image.pixels_mut().zip(m.pixels()) {
                if a[0] > 0 {
                    px.0 = f.apply(px.0);
                }
            }
        }
        None => {
            let mut f = CachedShift::new(shift);
            for px in image.pixels_mut() {
                px.0 = f.apply(px.0);
            }
        }
    }
    Ok(())
}

/// HSV shift of an RGBA layer, masked by its own alpha.
pub fn apply_hsv_layer(layer: &mut RgbaImage, shift: &HsvShift) {
    let mut f = CachedShift::new(shift);
    for px in layer.pixels_mut() {
        if px[3] > 0 {
            let [r, g, b] = f.apply([px[0], px[1], px[2]]);
            px.0 = [r, g, b, px[3]];
        }
    }
}

/// `clamp(in + round(N(mean, std)))`, independent per pixel and channel.
pub fn apply_noise<R: Rng + ?Sized>(image: &mut RgbImage, mean: f64, std: f64, rng: &mut R) {
    if std == 0.0 {
        let offset = mean.round();
        if offset != 0.0 {
            for v in image.iter_mut() {
                *v = (f64::from(*v) + offset).clamp(0.0, 255.0) as u8;
            }
        }
        return;
    }
    let normal = Normal::new(mean, std).expect("noise std validated");
    for v in image.iter_mut() {
        let delta = normal.sample(rng).round();
        *v = (f64::from(*v) + delta).clamp(0.0, 255.0) as u8;
    }
}

/// Rounds a sampled quality to the encoder's integer scale.
pub fn jpeg_quality(quality: f64) -> u8 {
    quality.round().clamp(1.0, 100.0) as u8
}

/// Baseline JPEG bytes at the given quality.
pub fn encode_jpeg(image: &RgbImage, quality: f64) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    let mut encoder = JpegEncoder::new_with_quality(&mut bytes, jpeg_quality(quality));
    encoder.encode_image(image)?;
    Ok(bytes)
}

pub fn decode_jpeg(bytes: &[u8]) -> Result<RgbImage> {
    Ok(image::load(Cursor::new(bytes), ImageFormat::Jpeg)?.to_rgb8())
}

/// JPEG round trip: encode at `quality`, decode back.
pub fn apply_jpeg(image: &RgbImage, quality: f64) -> Result<RgbImage> {
    decode_jpeg(&encode_jpeg(image, quality)?)
}

/// Peak signal-to-noise ratio in dB; infinite for identical images.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> f64 {
    let n = a.as_raw().len() as f64;
    let mse = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}
