//! Pinhole camera model, projection, visibility and bounding boxes.
//!
//! Camera frame follows the usual image convention: `x` right, `y` down,
//! `z` along the optical axis. Pixel `(0, 0)` is the top-left corner of the
//! top-left pixel; the principal point is the image center.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::scene::Visibility;

/// Points closer than this to the camera plane are clipped away, meters.
pub const NEAR_PLANE: f64 = 0.05;

/// Intrinsics and extrinsics of one image's camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    /// Distance from the world origin along `-y`, meters.
    pub distance: f64,
    /// Height above ground, meters.
    pub height: f64,
    pub focal_length_mm: f64,
    /// Rotation about the optical axis, degrees, applied last.
    pub roll: f64,
    /// Elevation of the optical axis above horizontal, degrees.
    pub pitch: f64,
    /// Heading, degrees counter-clockwise from `+y` seen from above.
    pub yaw: f64,
    pub center_on_hub: bool,
    pub sensor_width_mm: f64,
    pub image_width: u32,
    pub image_height: u32,
}

impl CameraConfig {
    pub fn position(&self) -> Point3<f64> {
        Point3::new(0.0, -self.distance, self.height)
    }

    /// Pixel focal length for square pixels.
    pub fn focal_px(&self) -> f64 {
        self.focal_length_mm * f64::from(self.image_width) / self.sensor_width_mm
    }
}

/// Pitch in degrees that puts `(0, 0, aim_height)` on the horizontal center line.
pub fn aligned_pitch(aim_height: f64, camera_height: f64, distance: f64) -> f64 {
    (aim_height - camera_height).atan2(distance).to_degrees()
}

/// `(yaw, pitch)` in degrees aiming the optical axis from `from` at `target`.
pub fn aim_angles(from: Point3<f64>, target: Point3<f64>) -> (f64, f64) {
    let d = target - from;
    let yaw = (-d.x).atan2(d.y).to_degrees();
    let pitch = d.z.atan2(d.x.hypot(d.y)).to_degrees();
    (yaw, pitch)
}

/// Continuous pixel coordinates with depth along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// World-to-image transform for one camera.
#[derive(Debug, Clone, Copy)]
pub struct CameraPose {
    pub position: Point3<f64>,
    /// Rows are the camera axes (right, down, forward) in world coordinates.
    pub rotation: Matrix3<f64>,
    pub focal_px: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

/// Builds the extrinsic transform from a camera configuration.
pub fn camera_pose(config: &CameraConfig) -> CameraPose {
    let (sy, cy) = config.yaw.to_radians().sin_cos();
    let (sp, cp) = config.pitch.to_radians().sin_cos();
    let forward = Vector3::new(-sy * cp, cy * cp, sp);
    // Horizontal right axis; stays defined at +-90 degree pitch.
    let right = Vector3::new(cy, sy, 0.0);
    let down = forward.cross(&right);
    let (sr, cr) = config.roll.to_radians().sin_cos();
    let right_r = right * cr + down * sr;
    let down_r = down * cr - right * sr;
    let rotation = Matrix3::from_rows(&[
        right_r.transpose(),
        down_r.transpose(),
        forward.transpose(),
    ]);
    CameraPose {
        position: config.position(),
        rotation,
        focal_px: config.focal_px(),
        cx: f64::from(config.image_width) / 2.0,
        cy: f64::from(config.image_height) / 2.0,
        width: config.image_width,
        height: config.image_height,
    }
}

impl CameraPose {
    pub fn to_camera(&self, point: &Point3<f64>) -> Vector3<f64> {
        self.rotation * (point - self.position)
    }

    pub fn forward(&self) -> Vector3<f64> {
        self.rotation.row(2).transpose()
    }

    /// Projects a camera-frame point; `None` when it is not in front of the camera.
    pub fn project_camera(&self, p: &Vector3<f64>) -> Option<PixelPoint> {
        if p.z <= 0.0 {
            return None;
        }
        Some(PixelPoint {
            u: self.cx + self.focal_px * p.x / p.z,
            v: self.cy + self.focal_px * p.y / p.z,
            depth: p.z,
        })
    }

    /// Clips a planar world polygon at the near plane and projects the rest.
    pub fn project_polygon(&self, polygon: &[Point3<f64>]) -> Vec<PixelPoint> {
        let cam: Vec<Vector3<f64>> = polygon.iter().map(|p| self.to_camera(p)).collect();
        clip_near(&cam, NEAR_PLANE)
            .iter()
            .filter_map(|p| self.project_camera(p))
            .collect()
    }
}

/// Projects a world point; `None` marks a point behind the camera.
pub fn project(point: &Point3<f64>, pose: &CameraPose) -> Option<PixelPoint> {
    pose.project_camera(&pose.to_camera(point))
}

/// Sutherland-Hodgman against the plane `z = near`.
fn clip_near(polygon: &[Vector3<f64>], near: f64) -> Vec<Vector3<f64>> {
    if polygon.iter().all(|p| p.z >= near) {
        return polygon.to_vec();
    }
    let mut out = Vec::with_capacity(polygon.len() + 2);
    for (i, a) in polygon.iter().enumerate() {
        let b = &polygon[(i + 1) % polygon.len()];
        let a_in = a.z >= near;
        let b_in = b.z >= near;
        if a_in {
            out.push(*a);
        }
        if a_in != b_in {
            let t = (near - a.z) / (b.z - a.z);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Visible when in front of the camera and inside the image rectangle.
pub fn keypoint_visibility(pixel: Option<PixelPoint>, width: u32, height: u32) -> Visibility {
    match pixel {
        Some(p)
            if p.depth > 0.0
                && p.u >= 0.0
                && p.v >= 0.0
                && p.u <= f64::from(width)
                && p.v <= f64::from(height) =>
        {
            Visibility::Visible
        }
        _ => Visibility::NotLabeled,
    }
}

/// Axis-aligned box in pixel corner form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_well_ordered(&self) -> bool {
        self.x1 < self.x2 && self.y1 < self.y2
    }

    pub fn contains(&self, u: f64, v: f64, margin: f64) -> bool {
        u >= self.x1 - margin && u <= self.x2 + margin && v >= self.y1 - margin && v <= self.y2 + margin
    }

    /// Intersection over union; 0 for disjoint or empty boxes.
    pub fn iou(&self, other: &BBox) -> f64 {
        let iw = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let ih = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        let inter = iw * ih;
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Smallest box around every vertex, clipped to the image.
///
/// `None` when nothing lands in the image or the clipped box is thinner
/// than 2 px on either side.
pub fn bbox_from_projection(vertices: &[PixelPoint], width: u32, height: u32) -> Option<BBox> {
    let first = vertices.first()?;
    let mut b = BBox::new(first.u, first.v, first.u, first.v);
    for p in &vertices[1..] {
        b.x1 = b.x1.min(p.u);
        b.y1 = b.y1.min(p.v);
        b.x2 = b.x2.max(p.u);
        b.y2 = b.y2.max(p.v);
    }
    let clipped = BBox::new(
        b.x1.max(0.0),
        b.y1.max(0.0),
        b.x2.min(f64::from(width)),
        b.y2.min(f64::from(height)),
    );
    if clipped.width() < 2.0 || clipped.height() < 2.0 {
        return None;
    }
    Some(clipped)
}
