//! Test-only oracles. These re-derive scene geometry from the config without
//! touching the renderer or the collision code they check.

#![allow(dead_code)]

use gymgate::world::{Pose2D, WorldConfig, DEPTH_NO_HIT};

/// A finite axis-aligned rectangle lying in the plane `coord[axis] == at`.
struct Rect {
    axis: usize,
    at: f64,
    lo: [f64; 3],
    hi: [f64; 3],
}

fn scene_rects(config: &WorldConfig) -> Vec<Rect> {
    let hw = config.enclosure_size.width / 2.0;
    let hl = config.enclosure_size.length / 2.0;
    let wh = config.enclosure_size.wall_height;
    let mut rects = vec![
        // ground
        Rect {
            axis: 2,
            at: 0.0,
            lo: [-hw, -hl, 0.0],
            hi: [hw, hl, 0.0],
        },
        // walls
        Rect {
            axis: 0,
            at: -hw,
            lo: [-hw, -hl, 0.0],
            hi: [-hw, hl, wh],
        },
        Rect {
            axis: 0,
            at: hw,
            lo: [hw, -hl, 0.0],
            hi: [hw, hl, wh],
        },
        Rect {
            axis: 1,
            at: -hl,
            lo: [-hw, -hl, 0.0],
            hi: [hw, -hl, wh],
        },
        Rect {
            axis: 1,
            at: hl,
            lo: [-hw, hl, 0.0],
            hi: [hw, hl, wh],
        },
    ];
    let mut boxes = vec![config.monolith];
    boxes.extend(config.obstacles.iter().copied());
    for b in boxes {
        let lo = [
            b.center[0] - b.half_extents[0],
            b.center[1] - b.half_extents[1],
            0.0,
        ];
        let hi = [
            b.center[0] + b.half_extents[0],
            b.center[1] + b.half_extents[1],
            b.height,
        ];
        for axis in 0..3 {
            for at in [lo[axis], hi[axis]] {
                let mut flo = lo;
                let mut fhi = hi;
                flo[axis] = at;
                fhi[axis] = at;
                rects.push(Rect {
                    axis,
                    at,
                    lo: flo,
                    hi: fhi,
                });
            }
        }
    }
    rects
}

/// Per-pixel brute force: every face of every primitive as a bounded
/// rectangle, nearest positive hit wins.
pub fn brute_force_depth(config: &WorldConfig, pose: &Pose2D) -> Vec<u16> {
    let cam = &config.camera;
    let rects = scene_rects(config);
    let w = f64::from(cam.width);
    let h = f64::from(cam.height_px);
    // focal lengths in pixel units
    let fx = (w / 2.0) / (cam.horizontal_fov / 2.0).tan();
    let fy = (h / 2.0) / (cam.vertical_fov / 2.0).tan();
    let (sin, cos) = pose.theta.sin_cos();
    let origin = [pose.x, pose.y, cam.height];

    let mut out = Vec::with_capacity((cam.width * cam.height_px) as usize);
    for row in 0..cam.height_px {
        for col in 0..cam.width {
            let px = f64::from(col) + 0.5 - w / 2.0;
            let py = h / 2.0 - (f64::from(row) + 0.5);
            // camera frame: forward, left, up
            let cam_dir = [1.0, -px / fx, py / fy];
            let world = [
                cos * cam_dir[0] - sin * cam_dir[1],
                sin * cam_dir[0] + cos * cam_dir[1],
                cam_dir[2],
            ];
            let len = world.iter().map(|c| c * c).sum::<f64>().sqrt();
            let dir = [world[0] / len, world[1] / len, world[2] / len];

            let mut best = f64::INFINITY;
            for r in &rects {
                let d = dir[r.axis];
                if d == 0.0 {
                    continue;
                }
                let t = (r.at - origin[r.axis]) / d;
                if t <= 1e-12 || t >= best {
                    continue;
                }
                let p = [
                    origin[0] + t * dir[0],
                    origin[1] + t * dir[1],
                    origin[2] + t * dir[2],
                ];
                let inside = (0..3)
                    .filter(|&a| a != r.axis)
                    .all(|a| p[a] >= r.lo[a] - 1e-12 && p[a] <= r.hi[a] + 1e-12);
                if inside {
                    best = t;
                }
            }
            out.push(if best.is_finite() && best <= cam.max_range {
                (best * 1000.0).round() as u16
            } else {
                DEPTH_NO_HIT
            });
        }
    }
    out
}

/// Point samples on a `cols x rows` lattice covering the footprint, boundary
/// included, with the footprint grown by `grow` on every side.
pub fn footprint_samples(config: &WorldConfig, pose: &Pose2D, grow: f64) -> Vec<[f64; 2]> {
    const COLS: usize = 20;
    const ROWS: usize = 25;
    let hw = config.robot_footprint.half_width + grow;
    let hl = config.robot_footprint.half_length + grow;
    let (s, c) = pose.theta.sin_cos();
    let mut pts = Vec::with_capacity(COLS * ROWS);
    for i in 0..ROWS {
        let a = -hl + 2.0 * hl * i as f64 / (ROWS - 1) as f64;
        for j in 0..COLS {
            let b = -hw + 2.0 * hw * j as f64 / (COLS - 1) as f64;
            pts.push([pose.x + a * c - b * s, pose.y + a * s + b * c]);
        }
    }
    pts
}

/// Sampling oracle for footprint collision: any sample point outside the
/// enclosure or strictly inside a box.
pub fn sampled_collision(config: &WorldConfig, pose: &Pose2D, grow: f64) -> bool {
    let hw = config.enclosure_size.width / 2.0;
    let hl = config.enclosure_size.length / 2.0;
    let mut boxes = vec![config.monolith];
    boxes.extend(config.obstacles.iter().copied());
    footprint_samples(config, pose, grow).iter().any(|p| {
        p[0] < -hw
            || p[0] > hw
            || p[1] < -hl
            || p[1] > hl
            || boxes.iter().any(|b| {
                (p[0] - b.center[0]).abs() < b.half_extents[0]
                    && (p[1] - b.center[1]).abs() < b.half_extents[1]
            })
    })
}

pub mod harness;
