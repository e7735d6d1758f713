//! Seeded sampling of per-image scene configurations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{aim_angles, aligned_pitch, CameraConfig};
use crate::config::{Dist, GeneratorConfig, RegimeConfig};
use crate::rng::derive_rng;
use crate::scene::{normalize_degrees, TurbineInstance};

/// Sun and atmosphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sun {
    /// Degrees clockwise from `+y` seen from above.
    pub azimuth: f64,
    /// Degrees above the horizon.
    pub altitude: f64,
    pub dust_density: f64,
}

/// Per-layer color shift: additive hue (degrees) and saturation (0-255),
/// multiplicative value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsvShift {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl HsvShift {
    pub const IDENTITY: HsvShift = HsvShift {
        h: 0.0,
        s: 0.0,
        v: 1.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelNoise {
    pub mean: f64,
    pub std: f64,
}

/// Augmentations drawn for one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentPlan {
    pub hsv_foreground: HsvShift,
    pub hsv_background: HsvShift,
    /// JPEG quality before rounding, when the JPEG stage fires.
    pub jpeg_quality: Option<f64>,
    pub noise: Option<PixelNoise>,
    /// Replace the background by per-pixel uniform RGB noise.
    pub noise_background: bool,
}

/// Where the background layer comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackgroundChoice {
    /// Library image `pick % library_len`, crop origin as fractions of the slack.
    Library { pick: u64, crop_x: f64, crop_y: f64 },
    /// Uniform RGB noise, independent per pixel and channel.
    Noise,
    /// Plain sky gradient; used when no library is configured.
    Sky,
}

/// Everything sampled for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub master_seed: u64,
    pub image_index: u64,
    pub sun: Sun,
    /// Far regime for turbine positions.
    pub far_regime: bool,
    pub turbines: Vec<TurbineInstance>,
    pub camera: CameraConfig,
    pub augment: AugmentPlan,
    pub background: BackgroundChoice,
}

fn sample_hsv<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> HsvShift {
    let a = &cfg.augment;
    let h = a.hue.sample(rng);
    let s = a.saturation.sample(rng);
    let v = loop {
        let v = 1.0 + a.value_offset.sample(rng);
        if v > a.min_value_factor {
            break v;
        }
    };
    HsvShift { h, s, v }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, low: f64, high: f64) -> f64 {
    Dist::uniform(low, high).sample(rng)
}

/// Samples the full scene for `(master_seed, image_index)`.
///
/// The config must have passed [`GeneratorConfig::validate`].
pub fn sample_scene(master_seed: u64, image_index: u64, cfg: &GeneratorConfig) -> SceneConfig {
    let mut rng = derive_rng(master_seed, image_index);
    let s = &cfg.scene;

    let far_regime = rng.random_bool(s.far_probability);
    let camera_far = if s.correlate_regimes {
        far_regime
    } else {
        rng.random_bool(s.far_probability)
    };
    let regime = |far: bool| -> &RegimeConfig { if far { &s.far } else { &s.near } };

    let n = s.turbine_count[rng.random_range(0..s.turbine_count.len())] as usize;
    let yaw_mean = s.yaw_mean.sample(&mut rng);
    let yaw_scatter = Dist::normal(0.0, s.yaw_std);

    let mut turbines = Vec::with_capacity(n);
    for _ in 0..n {
        // U(x_min, y) is empty below x_min: redraw y.
        let y = loop {
            let y = regime(far_regime).position_y.sample(&mut rng);
            if y >= s.min_lateral_offset {
                break y;
            }
        };
        let negative = rng.random_bool(s.negative_x_probability);
        let magnitude = uniform(&mut rng, s.min_lateral_offset, y);
        let x = if negative { -magnitude } else { magnitude };
        let yaw = yaw_mean + yaw_scatter.sample(&mut rng);
        let blade_rotation = s.blade_rotation.sample(&mut rng);
        let scale = cfg.geometry.blade_scales[rng.random_range(0..cfg.geometry.blade_scales.len())];
        turbines.push(TurbineInstance::new(
            [x, y],
            yaw,
            blade_rotation,
            cfg.geometry.base.with_blade_scale(scale),
        ));
    }

    let c = &cfg.camera;
    let distance = regime(camera_far).camera_distance.sample(&mut rng);
    let height = c.height.sample(&mut rng);
    let focal_length_mm = c.focal_length_mm.sample(&mut rng);
    let roll = c.roll.sample(&mut rng);
    let mut camera = CameraConfig {
        distance,
        height,
        focal_length_mm,
        roll,
        pitch: aligned_pitch(c.aim_height, height, distance),
        yaw: c.yaw.sample(&mut rng),
        center_on_hub: c.center_on_hub,
        sensor_width_mm: c.sensor_width_mm,
        image_width: cfg.image.width,
        image_height: cfg.image.height,
    };
    if c.center_on_hub {
        if let Some(first) = turbines.first() {
            let (yaw, pitch) = aim_angles(camera.position(), first.frame().rotor_center);
            camera.yaw = yaw;
            camera.pitch = pitch;
        }
    }

    let sun = Sun {
        azimuth: normalize_degrees(s.solar_azimuth.sample(&mut rng)),
        altitude: s.solar_altitude.sample(&mut rng),
        dust_density: s.dust_density.sample(&mut rng),
    };

    let a = &cfg.augment;
    let hsv_foreground = sample_hsv(cfg, &mut rng);
    let hsv_background = sample_hsv(cfg, &mut rng);
    let jpeg_fires = rng.random_bool(a.jpeg_probability);
    let jpeg_quality = a.jpeg_quality.sample(&mut rng);
    let noise_fires = rng.random_bool(a.noise_probability);
    let noise = PixelNoise {
        mean: a.noise_mean.sample(&mut rng),
        std: a.noise_std.sample(&mut rng),
    };
    let noise_background = rng.random_bool(a.noise_background_probability);
    // Drawn unconditionally so the stream layout never depends on outcomes.
    let pick: u64 = rng.random();
    let crop_x: f64 = rng.random();
    let crop_y: f64 = rng.random();

    let background = if noise_background {
        BackgroundChoice::Noise
    } else if cfg.background_dir.is_some() {
        BackgroundChoice::Library {
            pick,
            crop_x,
            crop_y,
        }
    } else {
        BackgroundChoice::Sky
    };

    SceneConfig {
        master_seed,
        image_index,
        sun,
        far_regime,
        turbines,
        camera,
        augment: AugmentPlan {
            hsv_foreground,
            hsv_background,
            jpeg_quality: jpeg_fires.then_some(jpeg_quality),
            noise: noise_fires.then_some(noise),
            noise_background,
        },
        background,
    }
}
