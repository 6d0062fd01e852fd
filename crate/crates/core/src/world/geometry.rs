//! Planar geometry: poses, axis-aligned boxes and the robot's oriented footprint.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Robot pose in the enclosure frame. The origin is the enclosure centre,
/// `x` spans the width and `y` the length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    /// Builds a pose, normalizing `theta`.
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn distance_to(&self, point: [f64; 2]) -> f64 {
        (self.x - point[0]).hypot(self.y - point[1])
    }

    pub fn heading(&self) -> [f64; 2] {
        [self.theta.cos(), self.theta.sin()]
    }
}

/// An axis-aligned box standing on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub center: [f64; 2],
    pub half_extents: [f64; 2],
    pub height: f64,
}

impl BoxSpec {
    pub fn new(center: [f64; 2], half_extents: [f64; 2], height: f64) -> Self {
        Self {
            center,
            half_extents,
            height,
        }
    }

    pub fn min(&self) -> [f64; 2] {
        [
            self.center[0] - self.half_extents[0],
            self.center[1] - self.half_extents[1],
        ]
    }

    pub fn max(&self) -> [f64; 2] {
        [
            self.center[0] + self.half_extents[0],
            self.center[1] + self.half_extents[1],
        ]
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        let (lo, hi) = (self.min(), self.max());
        p[0] > lo[0] && p[0] < hi[0] && p[1] > lo[1] && p[1] < hi[1]
    }
}

/// Half-dimensions of the robot body. `half_length` runs along the heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub half_width: f64,
    pub half_length: f64,
}

impl Footprint {
    /// Radius of the circle that encloses the footprint at any heading.
    pub fn circumradius(&self) -> f64 {
        self.half_width.hypot(self.half_length)
    }

    /// Corners of the footprint placed at `pose`, counter-clockwise from front-left.
    pub fn corners(&self, pose: &Pose2D) -> [[f64; 2]; 4] {
        let [c, s] = pose.heading();
        let fwd = [c * self.half_length, s * self.half_length];
        let left = [-s * self.half_width, c * self.half_width];
        let at = |a: f64, b: f64| {
            [
                pose.x + a * fwd[0] + b * left[0],
                pose.y + a * fwd[1] + b * left[1],
            ]
        };
        [at(1.0, 1.0), at(-1.0, 1.0), at(-1.0, -1.0), at(1.0, -1.0)]
    }

    /// Separating-axis test between the footprint at `pose` and an axis-aligned box.
    /// Touching edges do not count as an intersection.
    pub fn intersects_box(&self, pose: &Pose2D, b: &BoxSpec) -> bool {
        let corners = self.corners(pose);
        let (lo, hi) = (b.min(), b.max());

        // World axes: project footprint onto x and y.
        for axis in 0..2 {
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for c in &corners {
                min = min.min(c[axis]);
                max = max.max(c[axis]);
            }
            if max <= lo[axis] || min >= hi[axis] {
                return false;
            }
        }

        // Footprint axes: project box onto heading and lateral directions.
        let [c, s] = pose.heading();
        let axes = [([c, s], self.half_length), ([-s, c], self.half_width)];
        let box_corners = [
            [lo[0], lo[1]],
            [hi[0], lo[1]],
            [hi[0], hi[1]],
            [lo[0], hi[1]],
        ];
        for (axis, half) in axes {
            let centre = pose.x * axis[0] + pose.y * axis[1];
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for bc in &box_corners {
                let p = bc[0] * axis[0] + bc[1] * axis[1];
                min = min.min(p);
                max = max.max(p);
            }
            if max <= centre - half || min >= centre + half {
                return false;
            }
        }
        true
    }

    /// Smallest distance from any footprint corner to the enclosure walls.
    /// Negative when a corner is outside.
    pub fn wall_clearance(&self, pose: &Pose2D, half_w: f64, half_l: f64) -> f64 {
        self.corners(pose)
            .iter()
            .map(|c| (half_w - c[0].abs()).min(half_l - c[1].abs()))
            .fold(f64::INFINITY, f64::min)
    }
}
