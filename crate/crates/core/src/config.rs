//! Generator configuration: every sampled parameter as an overridable distribution.
//!
//! The defaults reproduce the experiment parameter table the generator was
//! built around. `windkp default-config` prints them as JSON; any subset of
//! keys may be supplied in a config file, unknown keys are rejected.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::TurbineGeometry;

/// A scalar distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dist {
    Fixed { value: f64 },
    /// Continuous uniform on `[low, high)`.
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std: f64 },
}

impl Dist {
    pub fn fixed(value: f64) -> Self {
        Dist::Fixed { value }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Dist::Uniform { low, high }
    }

    pub fn normal(mean: f64, std: f64) -> Self {
        Dist::Normal { mean, std }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Fixed { value } => value,
            Dist::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Dist::Normal { mean, std } => {
                if std == 0.0 {
                    mean
                } else {
                    Normal::new(mean, std)
                        .expect("validated normal parameters")
                        .sample(rng)
                }
            }
        }
    }

    /// Closed interval containing every draw, infinite for normals.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Dist::Fixed { value } => (value, value),
            Dist::Uniform { low, high } => (low, high),
            Dist::Normal { std: 0.0, mean } => (mean, mean),
            Dist::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Dist::Fixed { value } => value.is_finite(),
            Dist::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            Dist::Normal { mean, std } => mean.is_finite() && std.is_finite() && std >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{name}: invalid distribution {self:?}")))
        }
    }

    fn require_within(&self, name: &str, min: f64, max: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if lo < min || hi > max {
            return Err(Error::Config(format!(
                "{name}: support [{lo}, {hi}] must lie within [{min}, {max}]"
            )));
        }
        Ok(())
    }
}

/// Distance regime: downrange turbine positions paired with camera distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    /// Downrange turbine coordinate `y` in meters.
    pub position_y: Dist,
    /// Camera distance `d_c` from the world origin in meters.
    pub camera_distance: Dist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneDistributions {
    pub solar_azimuth: Dist,
    pub solar_altitude: Dist,
    pub dust_density: Dist,
    /// Multiset the turbine count is drawn from uniformly.
    pub turbine_count: Vec<u32>,
    /// Probability of the far regime.
    pub far_probability: f64,
    /// One coin for both turbine positions and camera distance when true,
    /// two independent coins otherwise.
    pub correlate_regimes: bool,
    pub near: RegimeConfig,
    pub far: RegimeConfig,
    /// Lower bound of the lateral offset `|x|` in meters; the upper bound is `y`.
    pub min_lateral_offset: f64,
    pub negative_x_probability: f64,
    /// Per-image mean wind direction.
    pub yaw_mean: Dist,
    /// Per-turbine scatter around the mean yaw, degrees.
    pub yaw_std: f64,
    pub blade_rotation: Dist,
}

impl Default for SceneDistributions {
    fn default() -> Self {
        Self {
            solar_azimuth: Dist::fixed(0.0),
            solar_altitude: Dist::fixed(90.0),
            dust_density: Dist::fixed(1.0),
            turbine_count: vec![1, 1, 1, 1, 1, 1, 2, 2, 2, 3, 3, 4],
            far_probability: 0.5,
            correlate_regimes: true,
            near: RegimeConfig {
                position_y: Dist::uniform(0.0, 200.0),
                camera_distance: Dist::uniform(80.0, 200.0),
            },
            far: RegimeConfig {
                position_y: Dist::uniform(0.0, 800.0),
                camera_distance: Dist::uniform(80.0, 800.0),
            },
            min_lateral_offset: 20.0,
            negative_x_probability: 0.5,
            yaw_mean: Dist::uniform(0.0, 360.0),
            yaw_std: 5.0,
            blade_rotation: Dist::uniform(0.0, 360.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraDistributions {
    /// Height above ground, meters.
    pub height: Dist,
    pub focal_length_mm: Dist,
    pub roll: Dist,
    pub yaw: Dist,
    /// Height of the world point `(0, 0, aim_height)` kept on the center row.
    pub aim_height: f64,
    /// Aim the camera at the first turbine's hub instead.
    pub center_on_hub: bool,
    pub sensor_width_mm: f64,
}

impl Default for CameraDistributions {
    fn default() -> Self {
        Self {
            height: Dist::uniform(10.0, 260.0),
            focal_length_mm: Dist::uniform(3.0, 55.0),
            roll: Dist::normal(0.0, 3.0),
            yaw: Dist::fixed(0.0),
            aim_height: 89.0,
            center_on_hub: false,
            sensor_width_mm: 36.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentDistributions {
    /// Additive hue shift, degrees.
    pub hue: Dist,
    /// Additive saturation shift on the 0-255 scale.
    pub saturation: Dist,
    /// `v` in the multiplicative value factor `1 + v`.
    pub value_offset: Dist,
    /// Value factors at or below this are redrawn.
    pub min_value_factor: f64,
    pub jpeg_probability: f64,
    pub jpeg_quality: Dist,
    pub noise_probability: f64,
    pub noise_mean: Dist,
    pub noise_std: Dist,
    pub noise_background_probability: f64,
}

impl Default for AugmentDistributions {
    fn default() -> Self {
        Self {
            hue: Dist::normal(0.0, 10.0),
            saturation: Dist::normal(0.0, 10.0),
            value_offset: Dist::normal(0.0, 0.3),
            min_value_factor: 0.05,
            jpeg_probability: 0.4,
            jpeg_quality: Dist::uniform(45.0, 100.0),
            noise_probability: 0.4,
            noise_mean: Dist::fixed(0.0),
            noise_std: Dist::uniform(1.0, 8.0),
            noise_background_probability: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub base: TurbineGeometry,
    /// Blade length/thickness variants, chosen uniformly per turbine.
    pub blade_scales: Vec<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            base: TurbineGeometry::default(),
            blade_scales: vec![0.8, 1.0, 1.2],
        }
    }
}

/// Flat shading and haze parameters of the silhouette renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub turbine_color: [u8; 3],
    pub haze_color: [u8; 3],
    /// Depth at which haze saturates for unit dust density, meters.
    pub haze_distance: f64,
    pub ambient: f64,
    pub sun_strength: f64,
    /// Plain sky used when no background library is configured.
    pub sky_zenith: [u8; 3],
    pub sky_horizon: [u8; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            turbine_color: [236, 238, 240],
            haze_color: [196, 208, 222],
            haze_distance: 1000.0,
            ambient: 0.55,
            sun_strength: 0.45,
            sky_zenith: [88, 140, 206],
            sky_horizon: [196, 216, 236],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl Default for ImageSize {
    fn default() -> Self {
        Self {
            width: 1280,
            height: 720,
        }
    }
}

/// Complete, serializable generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub count: u64,
    pub output_dir: Option<PathBuf>,
    pub background_dir: Option<PathBuf>,
    /// Fraction of images assigned to the training split.
    pub train_fraction: f64,
    pub image: ImageSize,
    pub scene: SceneDistributions,
    pub camera: CameraDistributions,
    pub augment: AugmentDistributions,
    pub geometry: GeometryConfig,
    pub render: RenderConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 100,
            output_dir: None,
            background_dir: None,
            train_fraction: 0.8,
            image: ImageSize::default(),
            scene: SceneDistributions::default(),
            camera: CameraDistributions::default(),
            augment: AugmentDistributions::default(),
            geometry: GeometryConfig::default(),
            render: RenderConfig::default(),
        }
    }
}

fn probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be in [0, 1], got {p}")))
    }
}

impl GeneratorConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GeneratorConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.image.width == 0 || self.image.height == 0 {
            return Err(Error::Config("image.width and image.height must be positive".into()));
        }
        probability("train_fraction", self.train_fraction)?;

        let s = &self.scene;
        for (name, d) in [
            ("scene.solar_azimuth", s.solar_azimuth),
            ("scene.solar_altitude", s.solar_altitude),
            ("scene.dust_density", s.dust_density),
            ("scene.yaw_mean", s.yaw_mean),
            ("scene.blade_rotation", s.blade_rotation),
            ("scene.near.position_y", s.near.position_y),
            ("scene.near.camera_distance", s.near.camera_distance),
            ("scene.far.position_y", s.far.position_y),
            ("scene.far.camera_distance", s.far.camera_distance),
        ] {
            d.validate(name)?;
        }
        s.dust_density.require_within("scene.dust_density", 0.0, f64::INFINITY)?;
        s.solar_altitude.require_within("scene.solar_altitude", -90.0, 90.0)?;
        if s.turbine_count.is_empty() || s.turbine_count.iter().any(|&n| n == 0 || n > 64) {
            return Err(Error::Config(
                "scene.turbine_count must be a non-empty list of counts in 1..=64".into(),
            ));
        }
        probability("scene.far_probability", s.far_probability)?;
        probability("scene.negative_x_probability", s.negative_x_probability)?;
        if !(s.min_lateral_offset.is_finite() && s.min_lateral_offset >= 0.0) {
            return Err(Error::Config("scene.min_lateral_offset must be >= 0".into()));
        }
        if !(s.yaw_std.is_finite() && s.yaw_std >= 0.0) {
            return Err(Error::Config("scene.yaw_std must be >= 0".into()));
        }
        for (name, regime) in [("near", &s.near), ("far", &s.far)] {
            let (_, hi) = regime.position_y.support();
            if hi < s.min_lateral_offset {
                return Err(Error::Config(format!(
                    "scene.{name}.position_y never reaches min_lateral_offset {}; no valid turbine position exists",
                    s.min_lateral_offset
                )));
            }
            regime
                .camera_distance
                .require_within(&format!("scene.{name}.camera_distance"), f64::MIN_POSITIVE, f64::INFINITY)?;
        }

        let c = &self.camera;
        for (name, d) in [
            ("camera.height", c.height),
            ("camera.focal_length_mm", c.focal_length_mm),
            ("camera.roll", c.roll),
            ("camera.yaw", c.yaw),
        ] {
            d.validate(name)?;
        }
        c.focal_length_mm
            .require_within("camera.focal_length_mm", f64::MIN_POSITIVE, f64::INFINITY)?;
        if !(c.sensor_width_mm.is_finite() && c.sensor_width_mm > 0.0) {
            return Err(Error::Config("camera.sensor_width_mm must be positive".into()));
        }
        if !c.aim_height.is_finite() {
            return Err(Error::Config("camera.aim_height must be finite".into()));
        }

        let a = &self.augment;
        for (name, d) in [
            ("augment.hue", a.hue),
            ("augment.saturation", a.saturation),
            ("augment.value_offset", a.value_offset),
            ("augment.jpeg_quality", a.jpeg_quality),
            ("augment.noise_mean", a.noise_mean),
            ("augment.noise_std", a.noise_std),
        ] {
            d.validate(name)?;
        }
        a.jpeg_quality.require_within("augment.jpeg_quality", 1.0, 100.0)?;
        a.noise_std.require_within("augment.noise_std", 0.0, f64::INFINITY)?;
        if !(a.min_value_factor.is_finite() && a.min_value_factor >= 0.0) {
            return Err(Error::Config("augment.min_value_factor must be >= 0".into()));
        }
        if a.value_offset.support().1 + 1.0 <= a.min_value_factor {
            return Err(Error::Config(
                "augment.value_offset never yields a value factor above min_value_factor".into(),
            ));
        }
        probability("augment.jpeg_probability", a.jpeg_probability)?;
        probability("augment.noise_probability", a.noise_probability)?;
        probability(
            "augment.noise_background_probability",
            a.noise_background_probability,
        )?;

        let g = &self.geometry;
        if g.blade_scales.is_empty() {
            return Err(Error::Config("geometry.blade_scales must not be empty".into()));
        }
        for &scale in &g.blade_scales {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::Config(format!(
                    "geometry.blade_scales entries must be positive, got {scale}"
                )));
            }
            g.base.with_blade_scale(scale).validate()?;
        }

        let r = &self.render;
        if !(r.haze_distance.is_finite() && r.haze_distance > 0.0) {
            return Err(Error::Config("render.haze_distance must be positive".into()));
        }
        if !(r.ambient >= 0.0 && r.sun_strength >= 0.0) {
            return Err(Error::Config("render.ambient and render.sun_strength must be >= 0".into()));
        }
        Ok(())
    }
}
