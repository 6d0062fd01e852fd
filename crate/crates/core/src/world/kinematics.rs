//! Unicycle (differential-drive) kinematics.

use serde::{Deserialize, Serialize};

use super::config::{ActionKind, ActionParams};
use super::geometry::Pose2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteAction {
    Left,
    Right,
    Forward,
    Backward,
}

impl DiscreteAction {
    pub const ALL: [DiscreteAction; 4] = [
        DiscreteAction::Left,
        DiscreteAction::Right,
        DiscreteAction::Forward,
        DiscreteAction::Backward,
    ];

    /// Index in the conventional `0..4` action space.
    pub fn index(&self) -> usize {
        match self {
            DiscreteAction::Left => 0,
            DiscreteAction::Right => 1,
            DiscreteAction::Forward => 2,
            DiscreteAction::Backward => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Discrete(DiscreteAction),
    Continuous { linear: f64, angular: f64 },
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Discrete(_) => ActionKind::Discrete,
            Action::Continuous { .. } => ActionKind::Continuous,
        }
    }

    /// Commanded `(linear m/s, angular rad/s)`. Continuous commands are
    /// clamped to the configured bounds.
    pub fn velocities(&self, params: &ActionParams) -> (f64, f64) {
        match *self {
            Action::Discrete(DiscreteAction::Forward) => (params.linear_speed, 0.0),
            Action::Discrete(DiscreteAction::Backward) => (-params.linear_speed, 0.0),
            Action::Discrete(DiscreteAction::Left) => (0.0, params.angular_speed),
            Action::Discrete(DiscreteAction::Right) => (0.0, -params.angular_speed),
            Action::Continuous { linear, angular } => {
                let lb = params.continuous_linear_bound;
                let ab = params.continuous_angular_bound;
                (clamp_finite(linear, lb), clamp_finite(angular, ab))
            }
        }
    }
}

fn clamp_finite(value: f64, bound: f64) -> f64 {
    if value.is_nan() {
        0.0
    } else {
        value.clamp(-bound, bound)
    }
}

/// Closed-form unicycle integration of constant `(v, omega)` over `dt`.
pub fn integrate(pose: &Pose2D, v: f64, omega: f64, dt: f64) -> Pose2D {
    let theta = pose.theta;
    if omega == 0.0 {
        Pose2D::new(
            pose.x + v * dt * theta.cos(),
            pose.y + v * dt * theta.sin(),
            theta,
        )
    } else {
        let end = theta + omega * dt;
        let r = v / omega;
        Pose2D::new(
            pose.x + r * (end.sin() - theta.sin()),
            pose.y - r * (end.cos() - theta.cos()),
            end,
        )
    }
}

/// Pose after executing `action` for one full step.
pub fn apply_action(pose: &Pose2D, action: &Action, params: &ActionParams) -> Pose2D {
    let (v, omega) = action.velocities(params);
    integrate(pose, v, omega, params.step_duration)
}
