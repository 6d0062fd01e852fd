//! Scripted agents: uniform random, a vision servo, and a pose oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::protocol::ActionSpace;
use crate::world::{normalize_angle, Action, DiscreteAction, Observation, Pose2D, DEPTH_NO_HIT};

/// Privileged state, only available from servers with pose debugging on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseHint {
    pub pose: Pose2D,
    pub monolith: [f64; 2],
}

pub trait Policy {
    fn name(&self) -> &'static str;

    /// Whether [`Policy::act`] wants a [`PoseHint`] on every step.
    fn needs_pose(&self) -> bool {
        false
    }

    fn begin_episode(&mut self) {}

    fn act(&mut self, observation: &Observation, hint: Option<&PoseHint>) -> Action;
}

pub struct RandomPolicy {
    space: ActionSpace,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(space: ActionSpace, seed: u64) -> Self {
        Self {
            space,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn act(&mut self, _: &Observation, _: Option<&PoseHint>) -> Action {
        match self.space {
            ActionSpace::Discrete { n } => {
                let i = self.rng.random_range(0..n.clamp(1, 4)) as usize;
                Action::Discrete(DiscreteAction::ALL[i])
            }
            ActionSpace::Box { low, high } => Action::Continuous {
                linear: self.rng.random_range(low[0]..=high[0]),
                angular: self.rng.random_range(low[1]..=high[1]),
            },
        }
    }
}

/// Turns toward `bearing` (radians, positive to the left) and drives when
/// roughly aligned.
fn steer(
    space: ActionSpace,
    bearing: f64,
    distance: Option<f64>,
    step_duration: f64,
    align: f64,
) -> Action {
    match space {
        ActionSpace::Discrete { .. } => {
            if bearing > align {
                Action::Discrete(DiscreteAction::Left)
            } else if bearing < -align {
                Action::Discrete(DiscreteAction::Right)
            } else {
                Action::Discrete(DiscreteAction::Forward)
            }
        }
        ActionSpace::Box { low, high } => {
            let angular = (bearing / step_duration).clamp(low[1], high[1]);
            let linear = if bearing.abs() < align {
                let wanted = distance.map_or(high[0], |d| (d / step_duration).max(0.05));
                wanted.clamp(0.0, high[0])
            } else {
                0.0
            };
            Action::Continuous { linear, angular }
        }
    }
}

fn search(space: ActionSpace) -> Action {
    match space {
        ActionSpace::Discrete { .. } => Action::Discrete(DiscreteAction::Left),
        ActionSpace::Box { high, .. } => Action::Continuous {
            linear: 0.0,
            angular: 0.8 * high[1],
        },
    }
}

/// Heuristic constants of [`ServoPolicy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServoParams {
    /// RGB pixels darker than this on every channel count as monolith.
    pub dark_threshold: u8,
    pub min_dark_pixels: usize,
    /// Bearing (radians) within which the robot drives instead of turning.
    pub align_tolerance: f64,
    /// Slope of the depth scan line above the horizon. Low boxes drop out of
    /// it beyond a short distance while the tall monolith stays in view.
    pub scan_tan_elevation: f64,
    /// Depth jump separating a foreground segment from its surroundings.
    pub edge_jump_mm: u16,
    pub min_segment_width: usize,
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub step_duration: f64,
}

impl Default for ServoParams {
    fn default() -> Self {
        Self {
            dark_threshold: 55,
            min_dark_pixels: 12,
            align_tolerance: 0.3,
            scan_tan_elevation: 0.2,
            edge_jump_mm: 250,
            min_segment_width: 3,
            horizontal_fov: 60f64.to_radians(),
            vertical_fov: 45f64.to_radians(),
            step_duration: 2.0,
        }
    }
}

/// Turns toward the nearest dark tall object and drives at it. Uses the RGB
/// plane when present, otherwise a depth scan line.
pub struct ServoPolicy {
    space: ActionSpace,
    params: ServoParams,
}

/// A target found in the image: horizontal pixel position and, from depth,
/// its distance in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoTarget {
    pub column: f64,
    pub distance: Option<f64>,
}

impl ServoPolicy {
    pub fn new(space: ActionSpace, params: ServoParams) -> Self {
        Self { space, params }
    }

    pub fn params(&self) -> &ServoParams {
        &self.params
    }

    /// Bearing of image column `column`, positive to the left.
    pub fn bearing_of(&self, column: f64, width: u32) -> f64 {
        let nx = 2.0 * column / f64::from(width) - 1.0;
        -(nx * (self.params.horizontal_fov / 2.0).tan()).atan()
    }

    fn rgb_target(&self, obs: &Observation) -> Option<ServoTarget> {
        let rgb = obs.rgb()?;
        let w = obs.width() as usize;
        let t = self.params.dark_threshold;
        let (mut count, mut sum) = (0usize, 0usize);
        for (i, px) in rgb.chunks_exact(3).enumerate() {
            if px.iter().all(|&c| c < t) {
                count += 1;
                sum += i % w;
            }
        }
        (count >= self.params.min_dark_pixels).then(|| ServoTarget {
            column: sum as f64 / count as f64 + 0.5,
            distance: None,
        })
    }

    /// Nearest segment of the scan line that stands in front of both
    /// neighbours.
    pub fn depth_target(&self, obs: &Observation) -> Option<ServoTarget> {
        let depth = obs.depth()?;
        let (w, h) = (obs.width() as usize, obs.height() as f64);
        let ny = self.params.scan_tan_elevation / (self.params.vertical_fov / 2.0).tan();
        let row = (((1.0 - ny) * h / 2.0).floor() as usize).min(obs.height() as usize - 1);
        let line = &depth[row * w..(row + 1) * w];

        let mut segments: Vec<(usize, usize, f64)> = Vec::new();
        let mut start = 0;
        for c in 1..=w {
            let cut = c == w || line[c].abs_diff(line[c - 1]) > self.params.edge_jump_mm;
            if cut {
                let mean =
                    line[start..c].iter().map(|&d| f64::from(d)).sum::<f64>() / (c - start) as f64;
                segments.push((start, c, mean));
                start = c;
            }
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, &(s, e, mean)) in segments.iter().enumerate() {
            if e - s < self.params.min_segment_width || line[s] == DEPTH_NO_HIT {
                continue;
            }
            let left = i.checked_sub(1).map(|j| segments[j].2);
            let right = segments.get(i + 1).map(|n| n.2);
            let in_front = match (left, right) {
                (None, None) => false,
                (l, r) => l.is_none_or(|l| mean < l) && r.is_none_or(|r| mean < r),
            };
            if in_front && best.is_none_or(|b| mean < b.2) {
                best = Some((s, e, mean));
            }
        }
        best.map(|(s, e, mean)| ServoTarget {
            column: (s + e) as f64 / 2.0,
            distance: Some(mean / 1000.0),
        })
    }

    pub fn target(&self, obs: &Observation) -> Option<ServoTarget> {
        self.rgb_target(obs).or_else(|| self.depth_target(obs))
    }
}

impl Policy for ServoPolicy {
    fn name(&self) -> &'static str {
        "servo"
    }

    fn act(&mut self, obs: &Observation, _: Option<&PoseHint>) -> Action {
        match self.target(obs) {
            Some(t) => steer(
                self.space,
                self.bearing_of(t.column, obs.width()),
                t.distance,
                self.params.step_duration,
                self.params.align_tolerance,
            ),
            None => search(self.space),
        }
    }
}

/// Drives straight at the monolith using the ground-truth pose.
pub struct PoseOracle {
    space: ActionSpace,
    step_duration: f64,
}

impl PoseOracle {
    pub fn new(space: ActionSpace) -> Self {
        Self {
            space,
            step_duration: 2.0,
        }
    }
}

impl Policy for PoseOracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn needs_pose(&self) -> bool {
        true
    }

    fn act(&mut self, _: &Observation, hint: Option<&PoseHint>) -> Action {
        let Some(h) = hint else {
            return search(self.space);
        };
        let (dx, dy) = (h.monolith[0] - h.pose.x, h.monolith[1] - h.pose.y);
        let bearing = normalize_angle(dy.atan2(dx) - h.pose.theta);
        // A discrete turn is 0.8 rad, so turn only when that gets closer.
        steer(
            self.space,
            bearing,
            Some(dx.hypot(dy)),
            self.step_duration,
            0.4,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{ChannelType, Termination, Variant, World};

    fn space(v: Variant) -> ActionSpace {
        ActionSpace::for_config(&v.config())
    }

    fn run<P: Policy>(
        variant: Variant,
        channels: ChannelType,
        policy: &mut P,
        episodes: usize,
    ) -> usize {
        let mut world = World::new(variant.config(), 2024).unwrap();
        world.set_channels(channels);
        let mut successes = 0;
        for _ in 0..episodes {
            let mut obs = world.reset().unwrap();
            policy.begin_episode();
            loop {
                let hint = PoseHint {
                    pose: world.pose(),
                    monolith: world.config().monolith.center,
                };
                let r = world.step(&policy.act(&obs, Some(&hint))).unwrap();
                obs = r.observation;
                if r.done {
                    successes += usize::from(r.info.termination == Termination::Success);
                    break;
                }
            }
        }
        successes
    }

    #[test]
    fn random_actions_stay_in_bounds() {
        for v in Variant::ALL {
            let mut p = RandomPolicy::new(space(v), 1);
            let obs = World::new(v.config(), 1)
                .unwrap()
                .render_at(&Pose2D::new(1.0, 1.0, 0.0));
            for _ in 0..200 {
                match p.act(&obs, None) {
                    Action::Discrete(_) => {
                        assert_eq!(v.action_kind(), crate::world::ActionKind::Discrete)
                    }
                    Action::Continuous { linear, angular } => {
                        assert!(linear.abs() <= 0.5 && angular.abs() <= 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn servo_sees_monolith_in_both_modalities() {
        let mut config = Variant::MonolithDiscrete.config();
        config.terrain_jitter.enabled = false;
        let world = World::new(config, 3).unwrap();
        let servo = ServoPolicy::new(ActionSpace::Discrete { n: 4 }, ServoParams::default());
        // Monolith 2 m ahead and 20 degrees to the left.
        let pose = Pose2D::new(-2.0, 0.0, -20f64.to_radians());
        let obs = world.render_at(&pose);
        for target in [
            servo.rgb_target(&obs).unwrap(),
            servo.depth_target(&obs).unwrap(),
        ] {
            let bearing = servo.bearing_of(target.column, obs.width());
            assert!((bearing - 20f64.to_radians()).abs() < 0.05, "{bearing}");
        }
        let d = servo.depth_target(&obs).unwrap().distance.unwrap();
        assert!((1.75..2.0).contains(&d), "{d}");
    }

    #[test]
    fn oracle_solves_empty_discrete_variant() {
        let mut p = PoseOracle::new(space(Variant::MonolithDiscrete));
        let wins = run(
            Variant::MonolithDiscrete,
            ChannelType::DepthOnly,
            &mut p,
            30,
        );
        assert!(wins >= 29, "{wins}/30");
    }

    #[test]
    fn oracle_solves_empty_continuous_variant() {
        let mut p = PoseOracle::new(space(Variant::MonolithContinuous));
        let wins = run(
            Variant::MonolithContinuous,
            ChannelType::DepthOnly,
            &mut p,
            30,
        );
        assert!(wins >= 29, "{wins}/30");
    }

    #[test]
    fn servo_beats_chance_on_empty_variant() {
        for channels in [ChannelType::RgbOnly, ChannelType::DepthOnly] {
            let mut servo =
                ServoPolicy::new(space(Variant::MonolithDiscrete), ServoParams::default());
            let wins = run(Variant::MonolithDiscrete, channels, &mut servo, 20);
            assert!(wins >= 16, "{channels}: {wins}/20");
        }
    }
}
