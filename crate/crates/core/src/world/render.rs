//! Pinhole raycast renderer for the depth and flat-shaded RGB planes.

use rayon::prelude::*;

use super::config::{CameraConfig, WorldConfig};
use super::geometry::{BoxSpec, Pose2D};
use super::observation::{ChannelType, Observation, DEPTH_NO_HIT};

/// Surface a camera ray stopped on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Material {
    Ground,
    Wall,
    Monolith,
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Distance along the unit ray, meters.
    pub distance: f64,
    pub point: [f64; 3],
    pub material: Material,
}

/// Unit ray direction in the world frame for pixel `(col, row)` of a camera
/// whose optical axis points along `theta`.
pub fn pixel_direction(camera: &CameraConfig, theta: f64, col: u32, row: u32) -> [f64; 3] {
    let (u, v) = pixel_plane_offset(camera, col, row);
    direction_from_offsets(theta, u, v)
}

/// Offsets on the image plane at unit focal distance: `u` to the right, `v` up.
fn pixel_plane_offset(camera: &CameraConfig, col: u32, row: u32) -> (f64, f64) {
    let nx = 2.0 * (f64::from(col) + 0.5) / f64::from(camera.width) - 1.0;
    let ny = 1.0 - 2.0 * (f64::from(row) + 0.5) / f64::from(camera.height_px);
    (
        nx * (camera.horizontal_fov / 2.0).tan(),
        ny * (camera.vertical_fov / 2.0).tan(),
    )
}

fn direction_from_offsets(theta: f64, u: f64, v: f64) -> [f64; 3] {
    let (c, s) = (theta.cos(), theta.sin());
    // forward (c, s, 0), right (s, -c, 0), up (0, 0, 1)
    let d = [c + u * s, s - u * c, v];
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [d[0] / n, d[1] / n, d[2] / n]
}

/// Static scene description used for ray queries.
pub struct Scene<'a> {
    config: &'a WorldConfig,
}

impl<'a> Scene<'a> {
    pub fn new(config: &'a WorldConfig) -> Self {
        Self { config }
    }

    /// Nearest surface along the ray, if any.
    pub fn cast(&self, origin: [f64; 3], dir: [f64; 3]) -> Option<Hit> {
        let mut best: Option<(f64, Material)> = None;
        let mut take = |t: f64, m: Material| {
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, m));
            }
        };

        let hw = self.config.half_width();
        let hl = self.config.half_length();
        let exit_t = |o: f64, d: f64, half: f64| {
            if d > 0.0 {
                (half - o) / d
            } else if d < 0.0 {
                (-half - o) / d
            } else {
                f64::INFINITY
            }
        };
        let t_wall = exit_t(origin[0], dir[0], hw).min(exit_t(origin[1], dir[1], hl));
        if t_wall.is_finite() {
            let z = origin[2] + t_wall * dir[2];
            if (0.0..=self.config.enclosure_size.wall_height).contains(&z) {
                take(t_wall, Material::Wall);
            }
        }
        if dir[2] < 0.0 {
            let t = -origin[2] / dir[2];
            if t <= t_wall {
                take(t, Material::Ground);
            }
        }
        if let Some(t) = ray_box(origin, dir, &self.config.monolith) {
            take(t, Material::Monolith);
        }
        for o in &self.config.obstacles {
            if let Some(t) = ray_box(origin, dir, o) {
                take(t, Material::Obstacle);
            }
        }

        best.map(|(t, material)| Hit {
            distance: t,
            point: [
                origin[0] + t * dir[0],
                origin[1] + t * dir[1],
                origin[2] + t * dir[2],
            ],
            material,
        })
    }
}

/// Slab test against a ground-standing box. Returns the entry distance for
/// origins outside the box.
fn ray_box(origin: [f64; 3], dir: [f64; 3], b: &BoxSpec) -> Option<f64> {
    let lo = [b.min()[0], b.min()[1], 0.0];
    let hi = [b.max()[0], b.max()[1], b.height];
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for axis in 0..3 {
        let (o, d) = (origin[axis], dir[axis]);
        if d == 0.0 {
            if o < lo[axis] || o > hi[axis] {
                return None;
            }
            continue;
        }
        let t1 = (lo[axis] - o) / d;
        let t2 = (hi[axis] - o) / d;
        let (near, far) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        t_enter = t_enter.max(near);
        t_exit = t_exit.min(far);
    }
    (t_enter > 0.0 && t_enter <= t_exit).then_some(t_enter)
}

/// Meters to the 16-bit millimeter encoding, honoring the range cut-off.
pub fn quantize_depth(hit: Option<&Hit>, max_range: f64) -> u16 {
    match hit {
        Some(h) if h.distance <= max_range => (h.distance * 1000.0).round() as u16,
        _ => DEPTH_NO_HIT,
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Ground texture intensity: a per-cell value fixed by the world seed, so the
/// floor looks the same from every pose.
fn ground_intensity(config: &WorldConfig, texture_seed: u64, x: f64, y: f64) -> u8 {
    let sh = &config.shading;
    let cx = (x / sh.ground_cell).floor() as i64 as u64;
    let cy = (y / sh.ground_cell).floor() as i64 as u64;
    let h = splitmix64(texture_seed ^ splitmix64(cx ^ splitmix64(cy)));
    let span = 2 * u64::from(sh.ground_noise) + 1;
    let offset = (h % span) as i64 - i64::from(sh.ground_noise);
    (i64::from(sh.ground_mean) + offset).clamp(0, 255) as u8
}

fn shade(config: &WorldConfig, texture_seed: u64, hit: Option<&Hit>) -> u8 {
    let sh = &config.shading;
    match hit {
        None => sh.sky,
        Some(h) => match h.material {
            Material::Monolith => sh.monolith,
            Material::Wall => sh.wall,
            Material::Obstacle => sh.obstacle,
            Material::Ground => ground_intensity(config, texture_seed, h.point[0], h.point[1]),
        },
    }
}

/// Renders the planes selected by `channels` at `pose`.
pub fn render(
    config: &WorldConfig,
    texture_seed: u64,
    pose: &Pose2D,
    channels: ChannelType,
) -> Observation {
    let cam = &config.camera;
    let (w, h) = (cam.width, cam.height_px);
    let scene = Scene::new(config);
    let origin = [pose.x, pose.y, cam.height];

    let rows: Vec<(Vec<u16>, Vec<u8>)> = (0..h)
        .into_par_iter()
        .map(|row| {
            let mut depth = Vec::with_capacity(if channels.has_depth() { w as usize } else { 0 });
            let mut rgb = Vec::with_capacity(if channels.has_rgb() {
                3 * w as usize
            } else {
                0
            });
            for col in 0..w {
                let dir = pixel_direction(cam, pose.theta, col, row);
                let hit = scene.cast(origin, dir);
                if channels.has_depth() {
                    depth.push(quantize_depth(hit.as_ref(), cam.max_range));
                }
                if channels.has_rgb() {
                    let i = shade(config, texture_seed, hit.as_ref());
                    rgb.extend_from_slice(&[i, i, i]);
                }
            }
            (depth, rgb)
        })
        .collect();

    let depth = channels
        .has_depth()
        .then(|| rows.iter().flat_map(|(d, _)| d.iter().copied()).collect());
    let rgb = channels
        .has_rgb()
        .then(|| rows.iter().flat_map(|(_, c)| c.iter().copied()).collect());
    Observation::new(channels, w, h, depth, rgb).expect("renderer emits full planes")
}
