//! Parametric turbine geometry, world-frame keypoints and blade-tip labeling.
//!
//! World frame: `z` up, ground plane `z = 0`, the default camera sits on the
//! `-y` axis looking toward `+y`.
//!
//! Yaw `ψ` turns the nacelle counter-clockwise (seen from above) about the
//! tower axis. At `ψ = 0` the hub front points along `-y`, so the default
//! camera sees the rotor from its upwind side.
//!
//! Blade angles are measured in the rotor plane from straight up (12 o'clock),
//! increasing clockwise as seen from the upwind side.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of keypoints per turbine.
pub const NUM_KEYPOINTS: usize = 7;

/// Keypoints in annotation order. Tips occupy indices 0..3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keypoint {
    Tip1,
    Tip2,
    Tip3,
    HubFront,
    HubRear,
    TowerTop,
    TowerBottom,
}

impl Keypoint {
    pub const ALL: [Keypoint; NUM_KEYPOINTS] = [
        Keypoint::Tip1,
        Keypoint::Tip2,
        Keypoint::Tip3,
        Keypoint::HubFront,
        Keypoint::HubRear,
        Keypoint::TowerTop,
        Keypoint::TowerBottom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Keypoint::Tip1 => "tip1",
            Keypoint::Tip2 => "tip2",
            Keypoint::Tip3 => "tip3",
            Keypoint::HubFront => "hub_front",
            Keypoint::HubRear => "hub_rear",
            Keypoint::TowerTop => "tower_top",
            Keypoint::TowerBottom => "tower_bottom",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Keypoint names in file order.
pub fn keypoint_names() -> Vec<&'static str> {
    Keypoint::ALL.iter().map(|k| k.name()).collect()
}

/// Annotation visibility flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Visibility {
    #[default]
    NotLabeled = 0,
    Visible = 2,
}

impl Visibility {
    pub fn flag(self) -> u8 {
        self as u8
    }

    pub fn from_flag(flag: u8) -> Option<Self> {
        match flag {
            0 => Some(Visibility::NotLabeled),
            2 => Some(Visibility::Visible),
            _ => None,
        }
    }

    pub fn is_visible(self) -> bool {
        self == Visibility::Visible
    }
}

/// The seven named keypoints of one turbine, in 3D meters or 2D pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointSet<P> {
    pub points: [P; NUM_KEYPOINTS],
    pub visibility: [Visibility; NUM_KEYPOINTS],
}

impl<P: Copy> KeypointSet<P> {
    pub fn get(&self, kp: Keypoint) -> P {
        self.points[kp.index()]
    }

    pub fn tips(&self) -> [P; 3] {
        [self.points[0], self.points[1], self.points[2]]
    }
}

/// Turbine dimensions in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbineGeometry {
    pub hub_height: f64,
    pub blade_length: f64,
    pub blade_root_width: f64,
    pub blade_tip_width: f64,
    pub tower_base_radius: f64,
    pub tower_top_radius: f64,
    pub nacelle_length: f64,
    pub nacelle_width: f64,
    pub nacelle_height: f64,
    /// Distance of the hub front end from the tower axis along the nacelle axis.
    pub hub_front_offset: f64,
    /// Distance of the hub rear end from the tower axis along the nacelle axis.
    pub hub_rear_offset: f64,
}

impl Default for TurbineGeometry {
    fn default() -> Self {
        Self {
            hub_height: 89.0,
            blade_length: 55.0,
            blade_root_width: 4.0,
            blade_tip_width: 1.0,
            tower_base_radius: 2.5,
            tower_top_radius: 1.6,
            nacelle_length: 12.0,
            nacelle_width: 4.0,
            nacelle_height: 4.0,
            hub_front_offset: 6.0,
            hub_rear_offset: 3.0,
        }
    }
}

impl TurbineGeometry {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("hub_height", self.hub_height),
            ("blade_length", self.blade_length),
            ("blade_root_width", self.blade_root_width),
            ("blade_tip_width", self.blade_tip_width),
            ("tower_base_radius", self.tower_base_radius),
            ("tower_top_radius", self.tower_top_radius),
            ("nacelle_length", self.nacelle_length),
            ("nacelle_width", self.nacelle_width),
            ("nacelle_height", self.nacelle_height),
            ("hub_front_offset", self.hub_front_offset),
            ("hub_rear_offset", self.hub_rear_offset),
        ];
        for (name, value) in dims {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!(
                    "geometry.{name} must be a positive number, got {value}"
                )));
            }
        }
        if self.blade_length >= self.hub_height {
            return Err(Error::Config(format!(
                "geometry.blade_length ({}) must be smaller than hub_height ({})",
                self.blade_length, self.hub_height
            )));
        }
        if self.hub_front_offset <= self.hub_rear_offset {
            return Err(Error::Config(format!(
                "geometry.hub_front_offset ({}) must exceed hub_rear_offset ({})",
                self.hub_front_offset, self.hub_rear_offset
            )));
        }
        Ok(())
    }

    /// Blade variant: length and thickness scaled, tower and nacelle unchanged.
    pub fn with_blade_scale(&self, scale: f64) -> Self {
        Self {
            blade_length: self.blade_length * scale,
            blade_root_width: self.blade_root_width * scale,
            blade_tip_width: self.blade_tip_width * scale,
            ..*self
        }
    }

    /// Distance of the blade attachment point from the tower axis.
    pub fn rotor_offset(&self) -> f64 {
        0.5 * (self.hub_front_offset + self.hub_rear_offset)
    }
}

/// Normalizes an angle in degrees to `[0, 360)`.
pub fn normalize_degrees(angle: f64) -> f64 {
    let a = angle.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// One turbine placed in the world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbineInstance {
    /// Ground-plane position `(x, y)` in meters.
    pub position: [f64; 2],
    /// Yaw in degrees, `[0, 360)`.
    pub yaw: f64,
    /// Blade rotation in degrees, `[0, 360)`.
    pub blade_rotation: f64,
    pub geometry: TurbineGeometry,
}

impl TurbineInstance {
    pub fn new(position: [f64; 2], yaw: f64, blade_rotation: f64, geometry: TurbineGeometry) -> Self {
        Self {
            position,
            yaw: normalize_degrees(yaw),
            blade_rotation: normalize_degrees(blade_rotation),
            geometry,
        }
    }

    pub fn frame(&self) -> TurbineFrame {
        TurbineFrame::new(self)
    }
}

/// Local axes of a placed turbine.
#[derive(Debug, Clone, Copy)]
pub struct TurbineFrame {
    /// Ground point under the tower axis.
    pub base: Point3<f64>,
    /// Top of the tower axis at hub height.
    pub tower_top: Point3<f64>,
    /// Nacelle axis, pointing out of the hub front.
    pub forward: Vector3<f64>,
    /// Rotor-plane horizontal axis, to the right when viewed from the front.
    pub right: Vector3<f64>,
    pub up: Vector3<f64>,
    /// Where the blades attach.
    pub rotor_center: Point3<f64>,
}

impl TurbineFrame {
    fn new(t: &TurbineInstance) -> Self {
        let (s, c) = t.yaw.to_radians().sin_cos();
        let forward = Vector3::new(s, -c, 0.0);
        let right = Vector3::new(c, s, 0.0);
        let up = Vector3::z();
        let base = Point3::new(t.position[0], t.position[1], 0.0);
        let tower_top = Point3::new(t.position[0], t.position[1], t.geometry.hub_height);
        let rotor_center = tower_top + forward * t.geometry.rotor_offset();
        Self {
            base,
            tower_top,
            forward,
            right,
            up,
            rotor_center,
        }
    }

    /// Unit vector in the rotor plane for a blade at `angle_deg`.
    pub fn blade_direction(&self, angle_deg: f64) -> Vector3<f64> {
        let (s, c) = angle_deg.to_radians().sin_cos();
        self.up * c + self.right * s
    }
}

/// Blade angles in degrees for the three blades, in blade (not label) order.
pub fn blade_angles(blade_rotation: f64) -> [f64; 3] {
    [
        normalize_degrees(blade_rotation),
        normalize_degrees(blade_rotation + 120.0),
        normalize_degrees(blade_rotation + 240.0),
    ]
}

/// Assigns tip labels from blade angles.
///
/// Returns the zero-based label of each blade: the blade in `[0, 120)` gets
/// label 0 (tip 1), `[120, 240)` label 1, `[240, 360)` label 2.
pub fn assign_tip_labels(tip_angles: [f64; 3]) -> Result<[usize; 3]> {
    const TOLERANCE_DEG: f64 = 1e-6;
    if tip_angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::TipSpacing(tip_angles));
    }
    let norm = tip_angles.map(normalize_degrees);
    for i in 0..3 {
        for j in (i + 1)..3 {
            let gap = (norm[j] - norm[i]).rem_euclid(360.0);
            let ok = (gap - 120.0).abs() < TOLERANCE_DEG || (gap - 240.0).abs() < TOLERANCE_DEG;
            if !ok {
                return Err(Error::TipSpacing(tip_angles));
            }
        }
    }
    // With exact 120-degree spacing one angle falls in each half-open
    // segment, so ascending order is segment order. Ranking also stays a
    // bijection when rounding nudges an angle across a boundary.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| norm[a].total_cmp(&norm[b]).then(a.cmp(&b)));
    let mut labels = [0usize; 3];
    for (label, &blade) in order.iter().enumerate() {
        labels[blade] = label;
    }
    Ok(labels)
}

/// Segment index (0, 1, 2) of an angle under the half-open 120-degree rule.
pub fn tip_segment(angle_deg: f64) -> usize {
    ((normalize_degrees(angle_deg) / 120.0).floor() as usize).min(2)
}

/// Blade angles reordered by tip label.
pub fn labeled_tip_angles(blade_rotation: f64) -> [f64; 3] {
    let angles = blade_angles(blade_rotation);
    let labels = assign_tip_labels(angles).expect("blade angles are spaced by construction");
    let mut out = [0.0; 3];
    for (blade, &label) in labels.iter().enumerate() {
        out[label] = angles[blade];
    }
    out
}

/// World-frame keypoints of a turbine, tips ordered by label.
pub fn keypoints_world(instance: &TurbineInstance) -> KeypointSet<Point3<f64>> {
    let g = &instance.geometry;
    let frame = instance.frame();
    let tips = labeled_tip_angles(instance.blade_rotation)
        .map(|a| frame.rotor_center + frame.blade_direction(a) * g.blade_length);
    KeypointSet {
        points: [
            tips[0],
            tips[1],
            tips[2],
            frame.tower_top + frame.forward * g.hub_front_offset,
            frame.tower_top + frame.forward * g.hub_rear_offset,
            frame.tower_top,
            frame.base,
        ],
        visibility: [Visibility::Visible; NUM_KEYPOINTS],
    }
}
