//! Flat-shaded turbine silhouettes, backgrounds and alpha compositing.
//!
//! Each turbine is a handful of planar convex facets: a tapered tower
//! billboard, a nacelle box, an octagonal hub prism and three tapered blades.
//! Facets are painted far to near into a 2x2 supersampled buffer, which is
//! box-filtered down so only silhouette edges get fractional alpha.

use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::{Rgb, RgbImage, Rgba, RgbaImage};
use log::warn;
use nalgebra::{Point3, Vector3};
use rand::RngCore;

use crate::camera::{CameraPose, PixelPoint};
use crate::config::RenderConfig;
use crate::error::{Error, Result};
use crate::sampler::{BackgroundChoice, SceneConfig, Sun};
use crate::scene::{labeled_tip_angles, TurbineInstance};

/// One planar convex polygon of a turbine.
#[derive(Debug, Clone)]
pub struct Facet {
    pub vertices: Vec<Point3<f64>>,
    /// Outward normal; blades are two-sided.
    pub normal: Vector3<f64>,
    pub two_sided: bool,
}

impl Facet {
    fn centroid(&self) -> Point3<f64> {
        let sum = self
            .vertices
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Point3::from(sum / self.vertices.len() as f64)
    }

    fn faces(&self, eye: &Point3<f64>) -> bool {
        self.two_sided || self.normal.dot(&(eye - self.centroid())) > 0.0
    }
}

const HUB_SIDES: usize = 8;

/// Solid geometry of one turbine; the tower billboard turns toward `eye`.
pub fn turbine_facets(t: &TurbineInstance, eye: &Point3<f64>) -> Vec<Facet> {
    let g = &t.geometry;
    let f = t.frame();
    let mut facets = Vec::with_capacity(6 + HUB_SIDES + 2 + 4);

    // Tower
    let to_eye = Vector3::new(eye.x - f.base.x, eye.y - f.base.y, 0.0);
    let toward = if to_eye.norm() > 1e-9 {
        to_eye.normalize()
    } else {
        -f.forward
    };
    let side = Vector3::new(-toward.y, toward.x, 0.0);
    facets.push(Facet {
        vertices: vec![
            f.base - side * g.tower_base_radius,
            f.base + side * g.tower_base_radius,
            f.tower_top + side * g.tower_top_radius,
            f.tower_top - side * g.tower_top_radius,
        ],
        normal: toward,
        two_sided: false,
    });

    // Nacelle box, rear end to hub rear
    let rear = f.tower_top - f.forward * (g.nacelle_length - g.hub_rear_offset);
    let front = f.tower_top + f.forward * g.hub_rear_offset;
    let (hw, hh) = (g.nacelle_width / 2.0, g.nacelle_height / 2.0);
    let corner = |end: Point3<f64>, sr: f64, su: f64| end + f.right * (sr * hw) + f.up * (su * hh);
    let quad = |a, b, c, d, normal| Facet {
        vertices: vec![a, b, c, d],
        normal,
        two_sided: false,
    };
    for (end, n) in [(front, f.forward), (rear, -f.forward)] {
        facets.push(quad(
            corner(end, -1.0, -1.0),
            corner(end, 1.0, -1.0),
            corner(end, 1.0, 1.0),
            corner(end, -1.0, 1.0),
            n,
        ));
    }
    for (sr, n) in [(1.0, f.right), (-1.0, -f.right)] {
        facets.push(quad(
            corner(rear, sr, -1.0),
            corner(front, sr, -1.0),
            corner(front, sr, 1.0),
            corner(rear, sr, 1.0),
            n,
        ));
    }
    for (su, n) in [(1.0, f.up), (-1.0, -f.up)] {
        facets.push(quad(
            corner(rear, -1.0, su),
            corner(front, -1.0, su),
            corner(front, 1.0, su),
            corner(rear, 1.0, su),
            n,
        ));
    }

    // Hub prism between the two hub keypoints
    let hub_radius = 0.45 * g.nacelle_height;
    let hub_front = f.tower_top + f.forward * g.hub_front_offset;
    let hub_rear = f.tower_top + f.forward * g.hub_rear_offset;
    let radial = |k: usize| {
        let a = std::f64::consts::TAU * (k as f64 + 0.5) / HUB_SIDES as f64;
        f.up * a.cos() + f.right * a.sin()
    };
    let ring = |c: Point3<f64>| -> Vec<Point3<f64>> {
        (0..HUB_SIDES).map(|k| c + radial(k) * hub_radius).collect()
    };
    let front_ring = ring(hub_front);
    let rear_ring = ring(hub_rear);
    for k in 0..HUB_SIDES {
        let k1 = (k + 1) % HUB_SIDES;
        let mid = (radial(k) + radial(k1)).normalize();
        facets.push(quad(rear_ring[k], rear_ring[k1], front_ring[k1], front_ring[k], mid));
    }
    facets.push(Facet {
        vertices: rear_ring,
        normal: -f.forward,
        two_sided: false,
    });
    facets.push(Facet {
        vertices: front_ring,
        normal: f.forward,
        two_sided: false,
    });

    // Blades; tip edges are centered on the tip keypoints.
    for angle in labeled_tip_angles(t.blade_rotation) {
        let dir = f.blade_direction(angle);
        let tangent = f.blade_direction(angle + 90.0);
        let tip = f.rotor_center + dir * g.blade_length;
        let (rw, tw) = (g.blade_root_width / 2.0, g.blade_tip_width / 2.0);
        facets.push(Facet {
            vertices: vec![
                f.rotor_center - tangent * rw,
                tip - tangent * tw,
                tip + tangent * tw,
                f.rotor_center + tangent * rw,
            ],
            normal: f.forward,
            two_sided: true,
        });
    }
    facets
}

/// Projected vertices of every facet of a turbine, near-clipped.
pub fn silhouette_vertices(t: &TurbineInstance, pose: &CameraPose) -> Vec<PixelPoint> {
    turbine_facets(t, &pose.position)
        .iter()
        .flat_map(|facet| pose.project_polygon(&facet.vertices))
        .collect()
}

fn sun_direction(sun: &Sun) -> Vector3<f64> {
    let (sa, ca) = sun.azimuth.to_radians().sin_cos();
    let (se, ce) = sun.altitude.to_radians().sin_cos();
    Vector3::new(sa * ce, ca * ce, se)
}

fn shade(facet: &Facet, depth: f64, eye: &Point3<f64>, sun: &Sun, cfg: &RenderConfig) -> [u8; 3] {
    let mut n = facet.normal;
    if n.dot(&(eye - facet.centroid())) < 0.0 {
        n = -n;
    }
    let light = cfg.ambient + cfg.sun_strength * n.dot(&sun_direction(sun)).max(0.0);
    let haze = (sun.dust_density * depth / cfg.haze_distance).clamp(0.0, 1.0);
    let mut out = [0u8; 3];
    for c in 0..3 {
        let lit = (f64::from(cfg.turbine_color[c]) * light).min(255.0);
        let v = lit * (1.0 - haze) + f64::from(cfg.haze_color[c]) * haze;
        out[c] = v.round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// 2x2 supersampled coverage buffer.
struct Supersampled {
    width: usize,
    height: usize,
    samples: Vec<[u8; 4]>,
}

impl Supersampled {
    fn new(width: u32, height: u32) -> Self {
        let (w, h) = (2 * width as usize, 2 * height as usize);
        Self {
            width: w,
            height: h,
            samples: vec![[0; 4]; w * h],
        }
    }

    /// Fills the sample centers inside a convex polygon given in pixel units.
    fn fill_convex(&mut self, poly: &[PixelPoint], rgb: [u8; 3]) {
        if poly.len() < 3 {
            return;
        }
        let pts: Vec<(f64, f64)> = poly.iter().map(|p| (2.0 * p.u, 2.0 * p.v)).collect();
        let (min_y, max_y) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
        let h = self.height as f64;
        let row_lo = (min_y - 0.5).ceil().max(0.0);
        let row_hi = (max_y - 0.5).floor().min(h - 1.0);
        if !(row_lo <= row_hi) {
            return;
        }
        let w = self.width as f64;
        let color = [rgb[0], rgb[1], rgb[2], 255];
        for row in row_lo as usize..=row_hi as usize {
            let y = row as f64 + 0.5;
            let mut xl = f64::INFINITY;
            let mut xr = f64::NEG_INFINITY;
            for i in 0..pts.len() {
                let a = pts[i];
                let b = pts[(i + 1) % pts.len()];
                let (lo, hi) = if a.1 <= b.1 { (a.1, b.1) } else { (b.1, a.1) };
                if y < lo || y > hi || lo == hi {
                    continue;
                }
                let x = a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1);
                xl = xl.min(x);
                xr = xr.max(x);
            }
            if !(xl <= xr) {
                continue;
            }
            let c0 = (xl - 0.5).ceil().max(0.0);
            let c1 = (xr - 0.5).ceil().min(w);
            if !(c0 < c1) {
                continue;
            }
            let start = row * self.width;
            self.samples[start + c0 as usize..start + c1 as usize].fill(color);
        }
    }

    fn resolve(&self) -> RgbaImage {
        let (w, h) = (self.width / 2, self.height / 2);
        let mut out = RgbaImage::new(w as u32, h as u32);
        for (y, row) in out.rows_mut().enumerate() {
            let top = 2 * y * self.width;
            let bottom = top + self.width;
            for (x, px) in row.enumerate() {
                let quad = [
                    self.samples[top + 2 * x],
                    self.samples[top + 2 * x + 1],
                    self.samples[bottom + 2 * x],
                    self.samples[bottom + 2 * x + 1],
                ];
                let mut count = 0u32;
                let mut sum = [0u32; 3];
                for s in quad.iter().filter(|s| s[3] != 0) {
                    count += 1;
                    for c in 0..3 {
                        sum[c] += u32::from(s[c]);
                    }
                }
                if count > 0 {
                    let avg = |c: usize| ((sum[c] + count / 2) / count) as u8;
                    *px = Rgba([avg(0), avg(1), avg(2), ((255 * count + 2) / 4) as u8]);
                }
            }
        }
        out
    }
}

/// Paints every turbine of the scene into a transparent RGBA layer.
pub fn render_foreground(scene: &SceneConfig, pose: &CameraPose, cfg: &RenderConfig) -> RgbaImage {
    let mut buffer = Supersampled::new(pose.width, pose.height);
    let eye = pose.position;

    let mut order: Vec<(f64, usize)> = scene
        .turbines
        .iter()
        .enumerate()
        .map(|(i, t)| (pose.to_camera(&t.frame().rotor_center).z, i))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    for (_, i) in order {
        let mut facets: Vec<(f64, Facet)> = turbine_facets(&scene.turbines[i], &eye)
            .into_iter()
            .filter(|f| f.faces(&eye))
            .map(|f| (pose.to_camera(&f.centroid()).z, f))
            .collect();
        facets.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (depth, facet) in facets {
            let projected = pose.project_polygon(&facet.vertices);
            if projected.len() < 3 {
                continue;
            }
            let rgb = shade(&facet, depth, &eye, &scene.sun, cfg);
            buffer.fill_convex(&projected, rgb);
        }
    }
    buffer.resolve()
}

/// Sorted list of decodable-looking raster files in a directory.
#[derive(Debug, Clone)]
pub struct BackgroundLibrary {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl BackgroundLibrary {
    pub fn open(root: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
        let mut files = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(root, e))?.path();
            let ext = path
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase);
            if path.is_file() && matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
                files.push(path);
            }
        }
        files.sort();
        if files.is_empty() {
            return Err(Error::Config(format!(
                "background library {} contains no PNG or JPEG images",
                root.display()
            )));
        }
        Ok(Self {
            root: root.to_path_buf(),
            files,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Decodes image `pick % len`, moving on to the next file when one is corrupt.
    pub fn load(&self, pick: u64) -> Result<(usize, RgbImage)> {
        let n = self.files.len();
        let start = (pick % n as u64) as usize;
        for offset in 0..n {
            let idx = (start + offset) % n;
            let path = &self.files[idx];
            match image::open(path) {
                Ok(img) => return Ok((idx, img.to_rgb8())),
                Err(e) => warn!("skipping unreadable background {}: {e}", path.display()),
            }
        }
        Err(Error::Config(format!(
            "no image in background library {} could be decoded",
            self.root.display()
        )))
    }
}

/// Maximal crop of `src` with the target aspect, origin chosen by the
/// fractions, resized bilinearly to the target size.
pub fn crop_and_resize(src: &RgbImage, crop_x: f64, crop_y: f64, width: u32, height: u32) -> RgbImage {
    let (sw, sh) = (u64::from(src.width()), u64::from(src.height()));
    let (tw, th) = (u64::from(width), u64::from(height));
    let (cw, ch) = if sw * th > sh * tw {
        (((sh * tw) as f64 / th as f64).round().max(1.0) as u64, sh)
    } else {
        (sw, ((sw * th) as f64 / tw as f64).round().max(1.0) as u64)
    };
    let (cw, ch) = (cw.min(sw), ch.min(sh));
    let offset = |frac: f64, slack: u64| ((frac.clamp(0.0, 1.0) * (slack + 1) as f64).floor() as u64).min(slack);
    let x0 = offset(crop_x, sw - cw);
    let y0 = offset(crop_y, sh - ch);
    let view = image::imageops::crop_imm(src, x0 as u32, y0 as u32, cw as u32, ch as u32);
    if cw == tw && ch == th {
        return view.to_image();
    }
    image::imageops::resize(&view.to_image(), width, height, FilterType::Triangle)
}

/// Per-pixel, per-channel uniform bytes.
pub fn noise_background<R: RngCore + ?Sized>(width: u32, height: u32, rng: &mut R) -> RgbImage {
    let mut buf = vec![0u8; width as usize * height as usize * 3];
    rng.fill_bytes(&mut buf);
    RgbImage::from_raw(width, height, buf).expect("buffer sized to image")
}

/// Vertical gradient from zenith (top row) to horizon (bottom row).
pub fn sky_background(width: u32, height: u32, cfg: &RenderConfig) -> RgbImage {
    let mut img = RgbImage::new(width, height);
    let denom = f64::from(height.saturating_sub(1).max(1));
    for (y, row) in img.rows_mut().enumerate() {
        let t = y as f64 / denom;
        let mut c = [0u8; 3];
        for k in 0..3 {
            let v = f64::from(cfg.sky_zenith[k]) * (1.0 - t) + f64::from(cfg.sky_horizon[k]) * t;
            c[k] = v.round() as u8;
        }
        for px in row {
            *px = Rgb(c);
        }
    }
    img
}

/// Background layer for a scene at the given output size.
pub fn load_background<R: RngCore + ?Sized>(
    library: Option<&BackgroundLibrary>,
    choice: &BackgroundChoice,
    rng: &mut R,
    width: u32,
    height: u32,
    cfg: &RenderConfig,
) -> Result<RgbImage> {
    match *choice {
        BackgroundChoice::Noise => Ok(noise_background(width, height, rng)),
        BackgroundChoice::Sky => Ok(sky_background(width, height, cfg)),
        BackgroundChoice::Library {
            pick,
            crop_x,
            crop_y,
        } => {
            let library = library.ok_or_else(|| {
                Error::Config("scene requests a library background but none is configured".into())
            })?;
            let (_, src) = library.load(pick)?;
            Ok(crop_and_resize(&src, crop_x, crop_y, width, height))
        }
    }
}

/// Alpha-over: `fg * a + bg * (1 - a)` per channel, rounded to nearest.
pub fn composite(foreground: &RgbaImage, background: &RgbImage) -> Result<RgbImage> {
    if foreground.dimensions() != background.dimensions() {
        return Err(Error::DimensionMismatch {
            left: foreground.dimensions(),
            right: background.dimensions(),
        });
    }
    let mut out = background.clone();
    for (o, f) in out.pixels_mut().zip(foreground.pixels()) {
        let a = u32::from(f[3]);
        if a == 0 {
            continue;
        }
        for c in 0..3 {
            o[c] = ((u32::from(f[c]) * a + u32::from(o[c]) * (255 - a) + 127) / 255) as u8;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{aligned_pitch, camera_pose, CameraConfig};
    use crate::sampler::{AugmentPlan, HsvShift};
    use crate::scene::TurbineGeometry;
    use rand::SeedableRng;

    fn scene(turbines: Vec<TurbineInstance>, dust: f64) -> SceneConfig {
        SceneConfig {
            master_seed: 0,
            image_index: 0,
            sun: Sun {
                azimuth: 0.0,
                altitude: 90.0,
                dust_density: dust,
            },
            far_regime: false,
            turbines,
            camera: CameraConfig {
                distance: 150.0,
                height: 89.0,
                focal_length_mm: 20.0,
                roll: 0.0,
                pitch: aligned_pitch(89.0, 89.0, 150.0),
                yaw: 0.0,
                center_on_hub: false,
                sensor_width_mm: 36.0,
                image_width: 320,
                image_height: 180,
            },
            augment: AugmentPlan {
                hsv_foreground: HsvShift::IDENTITY,
                hsv_background: HsvShift::IDENTITY,
                jpeg_quality: None,
                noise: None,
                noise_background: false,
            },
            background: BackgroundChoice::Sky,
        }
    }

    fn turbine(x: f64, y: f64) -> TurbineInstance {
        TurbineInstance::new([x, y], 0.0, 30.0, TurbineGeometry::default())
    }

    #[test]
    fn empty_scene_is_transparent() {
        let s = scene(vec![], 1.0);
        let fg = render_foreground(&s, &camera_pose(&s.camera), &RenderConfig::default());
        assert!(fg.pixels().all(|p| p[3] == 0));
    }

    #[test]
    fn turbine_behind_camera_draws_nothing() {
        let s = scene(vec![turbine(0.0, -400.0)], 1.0);
        let fg = render_foreground(&s, &camera_pose(&s.camera), &RenderConfig::default());
        assert!(fg.pixels().all(|p| p[3] == 0));
    }

    #[test]
    fn alpha_centroid_inside_bbox() {
        let s = scene(vec![turbine(0.0, 200.0)], 1.0);
        let pose = camera_pose(&s.camera);
        let fg = render_foreground(&s, &pose, &RenderConfig::default());
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for (x, y, p) in fg.enumerate_pixels() {
            let a = f64::from(p[3]);
            sx += a * (x as f64 + 0.5);
            sy += a * (y as f64 + 0.5);
            sw += a;
        }
        assert!(sw > 0.0);
        let bbox = crate::camera::bbox_from_projection(&silhouette_vertices(&s.turbines[0], &pose), 320, 180)
            .unwrap();
        assert!(bbox.contains(sx / sw, sy / sw, 0.0));
        // coverage never leaks outside the box
        for (x, y, p) in fg.enumerate_pixels() {
            if p[3] > 0 {
                assert!(bbox.contains(x as f64 + 0.5, y as f64 + 0.5, 1.0));
            }
        }
    }

    #[test]
    fn fractional_alpha_only_on_edges() {
        let s = scene(vec![turbine(0.0, 200.0)], 1.0);
        let fg = render_foreground(&s, &camera_pose(&s.camera), &RenderConfig::default());
        let (w, h) = fg.dimensions();
        for (x, y, p) in fg.enumerate_pixels() {
            if p[3] == 0 || p[3] == 255 {
                continue;
            }
            // a partially covered pixel touches an uncovered or partial neighbour
            let mut edge = false;
            for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    edge = true;
                    continue;
                }
                if fg.get_pixel(nx as u32, ny as u32)[3] < 255 {
                    edge = true;
                }
            }
            assert!(edge, "interior partial alpha at ({x},{y})");
        }
    }

    #[test]
    fn nearer_turbine_wins_overlap() {
        // Haze makes the two turbines differ in color; the near one is drawn last.
        let near = turbine(0.0, 60.0);
        let far = turbine(0.0, 400.0);
        let cfg = RenderConfig::default();
        let both = scene(vec![near, far], 3.0);
        let pose = camera_pose(&both.camera);
        let img_both = render_foreground(&both, &pose, &cfg);
        let reversed = scene(vec![far, near], 3.0);
        assert_eq!(img_both, render_foreground(&reversed, &pose, &cfg));
        let img_near = render_foreground(&scene(vec![near], 3.0), &pose, &cfg);
        let img_far = render_foreground(&scene(vec![far], 3.0), &pose, &cfg);
        let mut overlap = 0;
        for ((b, n), f) in img_both.pixels().zip(img_near.pixels()).zip(img_far.pixels()) {
            if n[3] == 255 && f[3] == 255 {
                overlap += 1;
                assert_eq!(b, n);
                assert_ne!(n, f);
            }
        }
        assert!(overlap > 0);
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = scene(vec![turbine(-30.0, 100.0), turbine(40.0, 300.0)], 1.0);
        let pose = camera_pose(&s.camera);
        let cfg = RenderConfig::default();
        assert_eq!(render_foreground(&s, &pose, &cfg), render_foreground(&s, &pose, &cfg));
    }

    #[test]
    fn composite_rules() {
        let bg = RgbImage::from_fn(4, 2, |x, y| Rgb([x as u8 * 10, y as u8 * 20, 7]));
        let clear = RgbaImage::from_pixel(4, 2, Rgba([255, 255, 255, 0]));
        assert_eq!(composite(&clear, &bg).unwrap(), bg);
        let opaque = RgbaImage::from_pixel(4, 2, Rgba([1, 2, 3, 255]));
        assert!(composite(&opaque, &bg).unwrap().pixels().all(|p| *p == Rgb([1, 2, 3])));
        let half = RgbaImage::from_pixel(1, 1, Rgba([255, 255, 255, 128]));
        let black = RgbImage::new(1, 1);
        assert_eq!(composite(&half, &black).unwrap().get_pixel(0, 0)[0], 128);
        assert!(matches!(
            composite(&half, &bg),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn noise_background_mean() {
        // Mean of U{0..255} is 127.5, sd 73.9; over 921600 samples 3 sigma is 0.23.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let img = noise_background(1280, 720, &mut rng);
        for c in 0..3 {
            let mean = img.pixels().map(|p| f64::from(p[c])).sum::<f64>() / (1280.0 * 720.0);
            assert!((117.0..=138.0).contains(&mean), "channel {c} mean {mean}");
        }
    }

    #[test]
    fn crop_resize_to_exact_size() {
        let src = RgbImage::from_fn(4000, 3000, |x, y| Rgb([(x % 256) as u8, (y % 256) as u8, 0]));
        let out = crop_and_resize(&src, 0.5, 0.9, 1280, 720);
        assert_eq!(out.dimensions(), (1280, 720));
        let tall = RgbImage::new(300, 900);
        assert_eq!(crop_and_resize(&tall, 1.0, 1.0, 1280, 720).dimensions(), (1280, 720));
    }

    #[test]
    fn single_image_library_always_returns_it() {
        let dir = tempfile::tempdir().unwrap();
        let img = RgbImage::from_pixel(32, 18, Rgb([10, 200, 30]));
        img.save(dir.path().join("only.png")).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let lib = BackgroundLibrary::open(dir.path()).unwrap();
        assert_eq!(lib.len(), 1);
        for pick in [0u64, 1, 17, u64::MAX] {
            let (idx, loaded) = lib.load(pick).unwrap();
            assert_eq!(idx, 0);
            assert_eq!(loaded, img);
        }
    }

    #[test]
    fn corrupt_library_image_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a_broken.png"), b"not a png").unwrap();
        RgbImage::from_pixel(8, 8, Rgb([1, 2, 3]))
            .save(dir.path().join("b_good.png"))
            .unwrap();
        let lib = BackgroundLibrary::open(dir.path()).unwrap();
        let (idx, _) = lib.load(0).unwrap();
        assert_eq!(idx, 1);
    }

    #[test]
    fn missing_or_empty_library_is_an_error() {
        assert!(matches!(
            BackgroundLibrary::open(Path::new("/nonexistent/backgrounds")),
            Err(Error::Io { .. })
        ));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(BackgroundLibrary::open(dir.path()), Err(Error::Config(_))));
    }
}
