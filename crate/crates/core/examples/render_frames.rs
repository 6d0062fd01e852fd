//! Renders depth and RGB from a fixed pose and writes `depth.pgm` and
//! `rgb.ppm`.
//!
//!     cargo run --example render_frames -- out_dir [x y theta]

use gymgate::world::{pnm, ChannelType, Pose2D, Variant, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "frames".into());
    let nums: Vec<f64> = args.map(|a| a.parse()).collect::<Result<_, _>>()?;
    let pose = match nums[..] {
        [x, y, theta] => Pose2D::new(x, y, theta),
        _ => Pose2D::new(0.0, -1.5, std::f64::consts::FRAC_PI_2),
    };

    let mut world = World::new(Variant::MonolithObstaclesDiscrete.config(), 0)?;
    world.set_channels(ChannelType::Rgbd);
    let obs = world.render_at(&pose);
    let centre = obs.depth_at(obs.width() / 2, obs.height() / 2).unwrap();
    println!("pose {pose:?}: centre depth {centre} mm");
    for path in pnm::dump_observation(&obs, std::path::Path::new(&dir))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
