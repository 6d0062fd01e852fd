//! World configuration and the four shipped environment variants.
//!
//! Field names mirror the TOML files under `configs/` one-to-one.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geometry::{BoxSpec, Footprint};
use super::WorldError;

/// Which action family an environment accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Discrete,
    Continuous,
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionKind::Discrete => f.write_str("discrete"),
            ActionKind::Continuous => f.write_str("continuous"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnclosureSize {
    pub width: f64,
    pub length: f64,
    /// Wall height. Rays passing above the walls see nothing.
    pub wall_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Mounting height above the ground, meters.
    pub height: f64,
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub width: u32,
    pub height_px: u32,
    pub max_range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionParams {
    pub linear_speed: f64,
    pub angular_speed: f64,
    pub step_duration: f64,
    pub continuous_linear_bound: f64,
    pub continuous_angular_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainJitter {
    pub sigma_pos: f64,
    pub sigma_theta: f64,
    pub enabled: bool,
}

/// Flat-shading intensities for the RGB plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shading {
    pub monolith: u8,
    pub wall: u8,
    pub obstacle: u8,
    pub ground_mean: u8,
    /// Ground texture varies uniformly within `ground_mean ± ground_noise`.
    pub ground_noise: u8,
    /// Texture cell edge, meters.
    pub ground_cell: f64,
    pub sky: u8,
}

impl Default for Shading {
    fn default() -> Self {
        Self {
            monolith: 30,
            wall: 120,
            obstacle: 80,
            ground_mean: 160,
            ground_noise: 24,
            ground_cell: 0.03,
            sky: 220,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub action_kind: ActionKind,
    pub enclosure_size: EnclosureSize,
    pub monolith: BoxSpec,
    #[serde(default)]
    pub obstacles: Vec<BoxSpec>,
    pub robot_footprint: Footprint,
    pub camera: CameraConfig,
    pub action_params: ActionParams,
    pub reward_radius: f64,
    pub max_steps: u32,
    pub boundary_margin: f64,
    pub terrain_jitter: TerrainJitter,
    pub spawn_min_monolith_distance: f64,
    #[serde(default)]
    pub shading: Shading,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Variant::MonolithDiscrete.config()
    }
}

impl WorldConfig {
    pub fn half_width(&self) -> f64 {
        self.enclosure_size.width / 2.0
    }

    pub fn half_length(&self) -> f64 {
        self.enclosure_size.length / 2.0
    }

    pub fn from_toml_str(text: &str) -> Result<Self, WorldError> {
        let config: WorldConfig =
            toml::from_str(text).map_err(|e| WorldError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WorldError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("world config is always representable as TOML")
    }

    /// Checks every structural invariant, naming the first one that fails.
    /// NaN fails every check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), WorldError> {
        let fail = |msg: String| Err(WorldError::InvalidConfig(msg));
        let e = &self.enclosure_size;
        if !(e.width > 0.0 && e.length > 0.0 && e.wall_height > 0.0) {
            return fail("enclosure dimensions must be strictly positive".into());
        }
        let (hw, hl) = (self.half_width(), self.half_length());
        let inside = |b: &BoxSpec| {
            let (lo, hi) = (b.min(), b.max());
            b.half_extents[0] > 0.0
                && b.half_extents[1] > 0.0
                && b.height > 0.0
                && lo[0] >= -hw
                && hi[0] <= hw
                && lo[1] >= -hl
                && hi[1] <= hl
        };
        let m = &self.monolith;
        if !(m.center[0].abs() < hw && m.center[1].abs() < hl) {
            return fail(format!(
                "monolith center ({}, {}) lies outside the {}x{} enclosure",
                m.center[0], m.center[1], e.width, e.length
            ));
        }
        if !inside(m) {
            return fail("monolith box must lie fully inside the enclosure".into());
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !inside(o) {
                return fail(format!("obstacle {i} must lie fully inside the enclosure"));
            }
        }
        let fp = &self.robot_footprint;
        if !(fp.half_width > 0.0 && fp.half_length > 0.0) {
            return fail("robot footprint must be strictly positive".into());
        }
        let c = &self.camera;
        if c.width == 0 || c.height_px == 0 {
            return fail("camera resolution must be non-zero".into());
        }
        if !(c.horizontal_fov > 0.0 && c.horizontal_fov < PI)
            || !(c.vertical_fov > 0.0 && c.vertical_fov < PI)
        {
            return fail("camera fields of view must lie in (0, pi)".into());
        }
        if !(c.height > 0.0) {
            return fail("camera height must be positive".into());
        }
        if !(c.max_range > 0.0 && c.max_range * 1000.0 < f64::from(u16::MAX)) {
            return fail("camera max_range must be positive and below 65.535 m".into());
        }
        let a = &self.action_params;
        if !(a.step_duration > 0.0) {
            return fail("step_duration must be positive".into());
        }
        if !(a.linear_speed >= 0.0
            && a.angular_speed >= 0.0
            && a.continuous_linear_bound >= 0.0
            && a.continuous_angular_bound >= 0.0)
        {
            return fail("speeds and bounds must be non-negative".into());
        }
        if !(self.reward_radius > 0.0) {
            return fail("reward_radius must be positive".into());
        }
        if self.max_steps < 1 {
            return fail("max_steps must be at least 1".into());
        }
        if !(self.boundary_margin >= 0.0) {
            return fail("boundary_margin must be non-negative".into());
        }
        let j = &self.terrain_jitter;
        if !(j.sigma_pos >= 0.0 && j.sigma_theta >= 0.0) {
            return fail("terrain jitter sigmas must be non-negative".into());
        }
        if !(self.spawn_min_monolith_distance > self.reward_radius) {
            return fail("spawn_min_monolith_distance must exceed reward_radius".into());
        }
        if !(self.shading.ground_cell > 0.0) {
            return fail("shading.ground_cell must be positive".into());
        }
        Ok(())
    }
}

/// The four environment variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    MonolithDiscrete,
    MonolithContinuous,
    MonolithObstaclesDiscrete,
    MonolithObstaclesContinuous,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::MonolithDiscrete,
        Variant::MonolithContinuous,
        Variant::MonolithObstaclesDiscrete,
        Variant::MonolithObstaclesContinuous,
    ];

    /// Environment name stem, e.g. `MonolithObstaclesDiscrete`.
    pub fn stem(&self) -> &'static str {
        match self {
            Variant::MonolithDiscrete => "MonolithDiscrete",
            Variant::MonolithContinuous => "MonolithContinuous",
            Variant::MonolithObstaclesDiscrete => "MonolithObstaclesDiscrete",
            Variant::MonolithObstaclesContinuous => "MonolithObstaclesContinuous",
        }
    }

    /// File stem of the shipped TOML config.
    pub fn config_key(&self) -> &'static str {
        match self {
            Variant::MonolithDiscrete => "monolith_discrete",
            Variant::MonolithContinuous => "monolith_continuous",
            Variant::MonolithObstaclesDiscrete => "monolith_obstacles_discrete",
            Variant::MonolithObstaclesContinuous => "monolith_obstacles_continuous",
        }
    }

    pub fn action_kind(&self) -> ActionKind {
        match self {
            Variant::MonolithDiscrete | Variant::MonolithObstaclesDiscrete => ActionKind::Discrete,
            _ => ActionKind::Continuous,
        }
    }

    pub fn has_obstacles(&self) -> bool {
        matches!(
            self,
            Variant::MonolithObstaclesDiscrete | Variant::MonolithObstaclesContinuous
        )
    }

    /// Default configuration for this variant.
    pub fn config(&self) -> WorldConfig {
        let obstacles = if self.has_obstacles() {
            default_obstacle_layout()
        } else {
            Vec::new()
        };
        WorldConfig {
            action_kind: self.action_kind(),
            enclosure_size: EnclosureSize {
                width: 3.0,
                length: 4.0,
                wall_height: 2.0,
            },
            monolith: BoxSpec::new([0.0, 0.0], [0.15, 0.15], 1.2),
            obstacles,
            // 20.0 x 23.5 cm body
            robot_footprint: Footprint {
                half_width: 0.100,
                half_length: 0.1175,
            },
            camera: CameraConfig {
                height: 0.22,
                horizontal_fov: 60f64.to_radians(),
                vertical_fov: 45f64.to_radians(),
                width: 320,
                height_px: 240,
                max_range: 5.0,
            },
            action_params: ActionParams {
                linear_speed: 0.2,
                angular_speed: 0.4,
                step_duration: 2.0,
                continuous_linear_bound: 0.5,
                continuous_angular_bound: 1.0,
            },
            reward_radius: 0.40,
            max_steps: 100,
            boundary_margin: 0.10,
            terrain_jitter: TerrainJitter {
                sigma_pos: 0.01,
                sigma_theta: 0.02,
                enabled: true,
            },
            spawn_min_monolith_distance: 0.60,
            shading: Shading::default(),
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.config_key() == s || v.stem() == s)
            .ok_or_else(|| format!("unknown variant '{s}'"))
    }
}

/// Four 0.4 x 0.4 m boxes at (±0.8, ±1.0).
pub fn default_obstacle_layout() -> Vec<BoxSpec> {
    let mut boxes = Vec::with_capacity(4);
    for x in [-0.8, 0.8] {
        for y in [-1.0, 1.0] {
            boxes.push(BoxSpec::new([x, y], [0.2, 0.2], 0.5));
        }
    }
    boxes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for v in Variant::ALL {
            v.config().validate().unwrap();
        }
    }

    #[test]
    fn monolith_outside_enclosure_is_rejected() {
        let mut c = WorldConfig::default();
        c.monolith.center = [5.0, 0.0];
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("monolith center"), "{err}");
    }

    #[test]
    fn spawn_distance_must_exceed_reward_radius() {
        let c = WorldConfig {
            spawn_min_monolith_distance: 0.40,
            ..WorldConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn obstacle_poking_through_wall_is_rejected() {
        let mut c = Variant::MonolithObstaclesDiscrete.config();
        c.obstacles[0].center = [1.4, 0.0];
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("obstacle 0"), "{err}");
    }

    #[test]
    fn zero_steps_rejected() {
        let c = WorldConfig {
            max_steps: 0,
            ..WorldConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        for v in Variant::ALL {
            let c = v.config();
            let text = c.to_toml_string();
            assert_eq!(WorldConfig::from_toml_str(&text).unwrap(), c);
        }
    }

    #[test]
    fn shipped_config_files_match_defaults() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        for v in Variant::ALL {
            let path = dir.join(format!("{}.toml", v.config_key()));
            let loaded = WorldConfig::load(&path).unwrap();
            assert_eq!(loaded, v.config(), "{}", path.display());
        }
    }

    #[test]
    fn variant_parse() {
        assert_eq!(
            "monolith_obstacles_continuous".parse::<Variant>().unwrap(),
            Variant::MonolithObstaclesContinuous
        );
        assert_eq!(
            "MonolithDiscrete".parse::<Variant>().unwrap(),
            Variant::MonolithDiscrete
        );
        assert!("nope".parse::<Variant>().is_err());
    }
}
