//! Deterministic simulated replica of the monolith enclosures.
//!
//! A [`World`] owns its configuration, a seeded ChaCha generator and the
//! ground-truth robot pose. The pose never leaves the world through an
//! [`Observation`]; only the depth and RGB planes rendered from it do.
//!
//! Every source of randomness (spawn sampling, terrain jitter) draws from the
//! world's own generator, so `(config, seed, actions)` fixes the whole
//! trajectory bit-for-bit.

mod config;
mod geometry;
mod kinematics;
mod observation;
pub mod pnm;
pub mod render;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use config::{
    default_obstacle_layout, ActionKind, ActionParams, CameraConfig, EnclosureSize, Shading,
    TerrainJitter, Variant, WorldConfig,
};
pub use geometry::{normalize_angle, BoxSpec, Footprint, Pose2D};
pub use kinematics::{apply_action, integrate, Action, DiscreteAction};
pub use observation::{ChannelType, Observation, PlaneMismatch, DEPTH_NO_HIT};

/// Upper bound on rejection-sampling attempts per reset.
pub const SPAWN_ATTEMPTS: u32 = 10_000;

/// Extra wall clearance required of spawn poses beyond the boundary margin,
/// so that terrain jitter on the first turns does not end the episode.
pub const SPAWN_WALL_BUFFER: f64 = 0.05;

/// Sampling stride along a motion when looking for the first contact.
const SWEEP_STRIDE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("no collision-free spawn pose found in {0} attempts")]
    SpawnExhausted(u32),
    #[error("wrong action kind: this environment takes {expected} actions")]
    WrongActionKind { expected: ActionKind },
    #[error("no active episode; reset first")]
    NoEpisode,
    #[error("pose ({x:.3}, {y:.3}) is not a valid robot pose")]
    InvalidPose { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    None,
    Success,
    StepLimit,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step_index: u32,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Something the robot footprint can touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Collider {
    /// Wall index: 0 = -x, 1 = +x, 2 = -y, 3 = +y.
    Wall(u8),
    Monolith,
    Obstacle(usize),
}

/// Sparse reward: `(1.0, true)` iff the robot centre is within `reward_radius`
/// of the monolith centre, boundary inclusive.
pub fn compute_reward(pose: &Pose2D, config: &WorldConfig) -> (f64, bool) {
    let success = pose.distance_to(config.monolith.center) <= config.reward_radius;
    (if success { 1.0 } else { 0.0 }, success)
}

/// Termination rule. Success dominates the step limit, which dominates the
/// boundary stop.
pub fn termination_for(pose: &Pose2D, step_index: u32, config: &WorldConfig) -> Termination {
    if compute_reward(pose, config).1 {
        Termination::Success
    } else if step_index >= config.max_steps {
        Termination::StepLimit
    } else if config
        .robot_footprint
        .wall_clearance(pose, config.half_width(), config.half_length())
        < config.boundary_margin
    {
        Termination::Boundary
    } else {
        Termination::None
    }
}

/// Every collider the footprint at `pose` intersects.
pub fn contacts(pose: &Pose2D, config: &WorldConfig) -> Vec<Collider> {
    let fp = &config.robot_footprint;
    let (hw, hl) = (config.half_width(), config.half_length());
    let mut out = Vec::new();
    let corners = fp.corners(pose);
    let walls = [
        corners.iter().any(|c| c[0] < -hw),
        corners.iter().any(|c| c[0] > hw),
        corners.iter().any(|c| c[1] < -hl),
        corners.iter().any(|c| c[1] > hl),
    ];
    for (i, hit) in walls.into_iter().enumerate() {
        if hit {
            out.push(Collider::Wall(i as u8));
        }
    }
    if fp.intersects_box(pose, &config.monolith) {
        out.push(Collider::Monolith);
    }
    for (i, o) in config.obstacles.iter().enumerate() {
        if fp.intersects_box(pose, o) {
            out.push(Collider::Obstacle(i));
        }
    }
    out
}

pub fn collides(pose: &Pose2D, config: &WorldConfig) -> bool {
    let fp = &config.robot_footprint;
    fp.wall_clearance(pose, config.half_width(), config.half_length()) < 0.0
        || fp.intersects_box(pose, &config.monolith)
        || config.obstacles.iter().any(|o| fp.intersects_box(pose, o))
}

#[derive(Debug, Clone, Copy)]
struct Episode {
    step_index: u32,
}

pub struct World {
    config: WorldConfig,
    seed: u64,
    rng: ChaCha8Rng,
    channels: ChannelType,
    pose: Pose2D,
    episode: Option<Episode>,
}

impl World {
    /// Validates `config` and builds a world with no active episode.
    pub fn new(config: WorldConfig, seed: u64) -> Result<Self, WorldError> {
        config.validate()?;
        let pose = Pose2D::new(config.half_width(), config.half_length(), 0.0);
        Ok(Self {
            config,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            channels: ChannelType::Rgbd,
            pose,
            episode: None,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channels(&self) -> ChannelType {
        self.channels
    }

    pub fn set_channels(&mut self, channels: ChannelType) {
        self.channels = channels;
    }

    pub fn action_kind(&self) -> ActionKind {
        self.config.action_kind
    }

    /// Ground-truth pose. Server-side only.
    pub fn pose(&self) -> Pose2D {
        self.pose
    }

    pub fn episode_active(&self) -> bool {
        self.episode.is_some()
    }

    pub fn step_index(&self) -> Option<u32> {
        self.episode.map(|e| e.step_index)
    }

    pub fn collides(&self, pose: &Pose2D) -> bool {
        collides(pose, &self.config)
    }

    pub fn contacts(&self, pose: &Pose2D) -> Vec<Collider> {
        contacts(pose, &self.config)
    }

    pub fn check_termination(&self) -> Termination {
        match self.episode {
            Some(ep) => termination_for(&self.pose, ep.step_index, &self.config),
            None => Termination::None,
        }
    }

    /// True when `pose` is an acceptable episode start.
    pub fn is_spawnable(&self, pose: &Pose2D) -> bool {
        let c = &self.config;
        let clearance = c.robot_footprint.circumradius() + c.boundary_margin + SPAWN_WALL_BUFFER;
        pose.distance_to(c.monolith.center) >= c.spawn_min_monolith_distance
            && c.half_width() - pose.x.abs() >= clearance
            && c.half_length() - pose.y.abs() >= clearance
            && !self.collides(pose)
    }

    /// Starts a new episode at a uniformly sampled spawnable pose, abandoning
    /// any episode in progress.
    pub fn reset(&mut self) -> Result<Observation, WorldError> {
        self.episode = None;
        let pose = self.sample_spawn_pose()?;
        Ok(self.begin(pose))
    }

    /// Draws the next spawn pose from the world generator by rejection
    /// sampling. This is the pose sequence `reset` uses.
    pub fn sample_spawn_pose(&mut self) -> Result<Pose2D, WorldError> {
        let (hw, hl) = (self.config.half_width(), self.config.half_length());
        for _ in 0..SPAWN_ATTEMPTS {
            let x = self.rng.random_range(-hw..hw);
            let y = self.rng.random_range(-hl..hl);
            let theta = self
                .rng
                .random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let pose = Pose2D::new(x, y, theta);
            if self.is_spawnable(&pose) {
                return Ok(pose);
            }
        }
        Err(WorldError::SpawnExhausted(SPAWN_ATTEMPTS))
    }

    /// Starts a new episode at a caller-chosen pose. The pose must be collision
    /// free; it is not required to satisfy the spawn distance rules.
    pub fn reset_to(&mut self, pose: Pose2D) -> Result<Observation, WorldError> {
        let inside =
            pose.x.abs() < self.config.half_width() && pose.y.abs() < self.config.half_length();
        if !inside || self.collides(&pose) {
            return Err(WorldError::InvalidPose {
                x: pose.x,
                y: pose.y,
            });
        }
        self.episode = None;
        Ok(self.begin(pose))
    }

    fn begin(&mut self, pose: Pose2D) -> Observation {
        self.pose = pose;
        self.episode = Some(Episode { step_index: 0 });
        self.render_at(&pose)
    }

    pub fn render_at(&self, pose: &Pose2D) -> Observation {
        render::render(&self.config, self.seed, pose, self.channels)
    }

    /// Depth plane at `pose`, millimeters.
    pub fn render_depth(&self, pose: &Pose2D) -> Vec<u16> {
        render::render(&self.config, self.seed, pose, ChannelType::DepthOnly)
            .depth()
            .expect("depth requested")
            .to_vec()
    }

    /// Interleaved RGB plane at `pose`.
    pub fn render_rgb(&self, pose: &Pose2D) -> Vec<u8> {
        render::render(&self.config, self.seed, pose, ChannelType::RgbOnly)
            .rgb()
            .expect("rgb requested")
            .to_vec()
    }

    /// Advances the active episode by one action.
    pub fn step(&mut self, action: &Action) -> Result<StepResult, WorldError> {
        let mut episode = self.episode.ok_or(WorldError::NoEpisode)?;
        if action.kind() != self.config.action_kind {
            return Err(WorldError::WrongActionKind {
                expected: self.config.action_kind,
            });
        }

        let params = self.config.action_params;
        let (v, omega) = action.velocities(&params);
        let jitter = self.sample_jitter();
        let start = self.pose;
        let path = |s: f64| {
            let p = integrate(&start, v, omega, s * params.step_duration);
            Pose2D::new(
                p.x + s * jitter[0],
                p.y + s * jitter[1],
                p.theta + s * jitter[2],
            )
        };
        let extent = v.abs() * params.step_duration
            + self.config.robot_footprint.circumradius() * omega.abs() * params.step_duration
            + jitter[0].hypot(jitter[1])
            + self.config.robot_footprint.circumradius() * jitter[2].abs();
        self.pose = self.resolve_motion(path, extent);

        episode.step_index += 1;
        let termination = termination_for(&self.pose, episode.step_index, &self.config);
        let (reward, _) = compute_reward(&self.pose, &self.config);
        let done = termination != Termination::None;
        self.episode = if done { None } else { Some(episode) };

        Ok(StepResult {
            observation: self.render_at(&self.pose),
            reward,
            done,
            info: StepInfo {
                step_index: episode.step_index,
                termination,
            },
        })
    }

    fn sample_jitter(&mut self) -> [f64; 3] {
        let j = self.config.terrain_jitter;
        if !j.enabled {
            return [0.0; 3];
        }
        let pos = Normal::new(0.0, j.sigma_pos).expect("validated sigma");
        let rot = Normal::new(0.0, j.sigma_theta).expect("validated sigma");
        [
            pos.sample(&mut self.rng),
            pos.sample(&mut self.rng),
            rot.sample(&mut self.rng),
        ]
    }

    /// Walks `path(s)`, `s` in `[0, 1]`, and stops at the last collision-free
    /// pose before the first contact (bisected to well under 1 mm).
    fn resolve_motion(&self, path: impl Fn(f64) -> Pose2D, extent: f64) -> Pose2D {
        let samples = ((extent / SWEEP_STRIDE).ceil() as usize).clamp(1, 4096);
        let mut free = 0.0;
        for k in 1..=samples {
            let s = if k == samples {
                1.0
            } else {
                k as f64 / samples as f64
            };
            if self.collides(&path(s)) {
                let (mut lo, mut hi) = (free, s);
                for _ in 0..48 {
                    let mid = 0.5 * (lo + hi);
                    if self.collides(&path(mid)) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return if lo == 0.0 { self.pose } else { path(lo) };
            }
            free = s;
        }
        path(1.0)
    }
}

impl std::fmt::Debug for World {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("World")
            .field("seed", &self.seed)
            .field("channels", &self.channels)
            .field("episode", &self.episode.map(|e| e.step_index))
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn quiet(variant: Variant) -> WorldConfig {
        let mut c = variant.config();
        c.terrain_jitter.enabled = false;
        c
    }

    #[test]
    fn reward_boundary_is_inclusive() {
        let c = WorldConfig::default();
        for (d, expected) in [
            (0.39, (1.0, true)),
            (0.40, (1.0, true)),
            (0.41, (0.0, false)),
            (2.0, (0.0, false)),
        ] {
            assert_eq!(
                compute_reward(&Pose2D::new(d, 0.0, 0.0), &c),
                expected,
                "d = {d}"
            );
        }
    }

    #[test]
    fn termination_rule_order() {
        let c = WorldConfig::default();
        let far = Pose2D::new(0.0, 1.2, 0.0);
        assert_eq!(termination_for(&far, 100, &c), Termination::StepLimit);
        assert_eq!(termination_for(&far, 99, &c), Termination::None);
        // Footprint side 0.02 m from the +x wall.
        let near_wall = Pose2D::new(1.5 - 0.02 - 0.1, 1.0, PI / 2.0);
        let clearance = c.robot_footprint.wall_clearance(&near_wall, 1.5, 2.0);
        assert!((clearance - 0.02).abs() < 1e-9);
        assert_eq!(termination_for(&near_wall, 5, &c), Termination::Boundary);
        // At the step limit, a pose inside the reward radius still counts as success.
        let close = Pose2D::new(0.3, 0.0, PI);
        assert_eq!(termination_for(&close, 100, &c), Termination::Success);
    }

    #[test]
    fn collides_basic_cases() {
        let c = WorldConfig::default();
        assert!(collides(&Pose2D::new(0.0, 0.0, 0.0), &c));
        assert!(!collides(&Pose2D::new(1.0, 0.0, 0.3), &c));
        assert!(!collides(&Pose2D::new(0.0, 1.0, 0.3), &c));
        assert!(collides(&Pose2D::new(1.45, 0.0, 0.0), &c));
    }

    #[test]
    fn invalid_config_is_reported() {
        let mut c = WorldConfig::default();
        c.monolith.center = [5.0, 0.0];
        assert!(matches!(
            World::new(c, 1),
            Err(WorldError::InvalidConfig(_))
        ));
    }

    #[test]
    fn step_before_reset_fails() {
        let mut w = World::new(WorldConfig::default(), 1).unwrap();
        let err = w
            .step(&Action::Discrete(DiscreteAction::Forward))
            .unwrap_err();
        assert_eq!(err, WorldError::NoEpisode);
    }

    #[test]
    fn wrong_action_kind_is_rejected() {
        let mut w = World::new(quiet(Variant::MonolithDiscrete), 1).unwrap();
        w.set_channels(ChannelType::DepthOnly);
        w.reset().unwrap();
        let err = w
            .step(&Action::Continuous {
                linear: 0.1,
                angular: 0.0,
            })
            .unwrap_err();
        assert!(matches!(
            err,
            WorldError::WrongActionKind {
                expected: ActionKind::Discrete
            }
        ));

        let mut w = World::new(quiet(Variant::MonolithContinuous), 1).unwrap();
        w.set_channels(ChannelType::DepthOnly);
        w.reset().unwrap();
        assert!(w.step(&Action::Discrete(DiscreteAction::Left)).is_err());
    }

    #[test]
    fn blocked_forward_stops_at_monolith_face_and_succeeds() {
        let mut w = World::new(quiet(Variant::MonolithDiscrete), 3).unwrap();
        w.set_channels(ChannelType::DepthOnly);
        w.reset_to(Pose2D::new(-0.5, 0.0, 0.0)).unwrap();
        let r = w.step(&Action::Discrete(DiscreteAction::Forward)).unwrap();
        // Front edge meets the monolith face when the centre is 0.15 + 0.1175 away.
        let contact = 0.15 + 0.1175;
        let d = w.pose().distance_to([0.0, 0.0]);
        assert!(d >= contact && d - contact < 1e-3, "stopped at {d}");
        assert_eq!(w.pose().theta, 0.0);
        assert_eq!(r.reward, 1.0);
        assert!(r.done);
        assert_eq!(r.info.termination, Termination::Success);
        assert_eq!(
            w.step(&Action::Discrete(DiscreteAction::Forward))
                .unwrap_err(),
            WorldError::NoEpisode
        );
    }

    #[test]
    fn zero_velocity_keeps_pose() {
        let mut w = World::new(quiet(Variant::MonolithContinuous), 3).unwrap();
        w.set_channels(ChannelType::DepthOnly);
        let start = Pose2D::new(0.8, 1.0, 0.4);
        w.reset_to(start).unwrap();
        let r = w
            .step(&Action::Continuous {
                linear: 0.0,
                angular: 0.0,
            })
            .unwrap();
        assert_eq!(w.pose(), start);
        assert_eq!(r.reward, 0.0);
        assert!(!r.done);
    }

    #[test]
    fn fast_motion_does_not_tunnel_through_monolith() {
        let mut w = World::new(quiet(Variant::MonolithContinuous), 3).unwrap();
        w.set_channels(ChannelType::DepthOnly);
        // 1.0 m of travel would carry the body straight through the 0.3 m box.
        w.reset_to(Pose2D::new(-0.55, 0.0, 0.0)).unwrap();
        w.step(&Action::Continuous {
            linear: 0.5,
            angular: 0.0,
        })
        .unwrap();
        assert!(w.pose().x < -0.26, "{:?}", w.pose());
    }

    #[test]
    fn reset_abandons_episode_and_zeroes_counter() {
        let mut w = World::new(quiet(Variant::MonolithDiscrete), 9).unwrap();
        w.set_channels(ChannelType::DepthOnly);
        w.reset().unwrap();
        w.step(&Action::Discrete(DiscreteAction::Left)).unwrap();
        assert_eq!(w.step_index(), Some(1));
        w.reset().unwrap();
        assert_eq!(w.step_index(), Some(0));
    }

    #[test]
    fn reset_to_rejects_colliding_pose() {
        let mut w = World::new(WorldConfig::default(), 9).unwrap();
        assert!(matches!(
            w.reset_to(Pose2D::new(0.0, 0.0, 0.0)),
            Err(WorldError::InvalidPose { .. })
        ));
        assert!(matches!(
            w.reset_to(Pose2D::new(9.0, 0.0, 0.0)),
            Err(WorldError::InvalidPose { .. })
        ));
    }

    #[test]
    fn crowded_layout_exhausts_spawn() {
        let c = WorldConfig {
            obstacles: vec![BoxSpec::new([0.0, 0.0], [1.5, 2.0], 0.5)],
            monolith: BoxSpec::new([0.0, 0.0], [0.1, 0.1], 1.0),
            ..WorldConfig::default()
        };
        let mut w = World::new(c, 1).unwrap();
        assert_eq!(
            w.reset().unwrap_err(),
            WorldError::SpawnExhausted(SPAWN_ATTEMPTS)
        );
    }

    #[test]
    fn observation_follows_channel_setting() {
        let mut w = World::new(WorldConfig::default(), 5).unwrap();
        for ch in [
            ChannelType::DepthOnly,
            ChannelType::RgbOnly,
            ChannelType::Rgbd,
        ] {
            w.set_channels(ch);
            let obs = w.reset().unwrap();
            assert_eq!(obs.channel_type(), ch);
            assert_eq!(obs.depth().is_some(), ch.has_depth());
            assert_eq!(obs.rgb().is_some(), ch.has_rgb());
            assert_eq!(obs.shape(), [240, 320, ch.channel_count()]);
        }
    }
}
