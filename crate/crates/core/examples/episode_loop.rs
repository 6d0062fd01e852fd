//! One episode against an in-process world with a random policy.
//!
//!     cargo run --example episode_loop -- [seed]

use gymgate::client::{Policy, RandomPolicy};
use gymgate::protocol::ActionSpace;
use gymgate::world::{ChannelType, Variant, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1);
    let mut world = World::new(Variant::MonolithDiscrete.config(), seed)?;
    world.set_channels(ChannelType::DepthOnly);
    let mut policy = RandomPolicy::new(ActionSpace::for_config(world.config()), seed);

    let mut obs = world.reset()?;
    println!("spawn {:?}", world.pose());
    loop {
        let action = policy.act(&obs, None);
        let r = world.step(&action)?;
        let p = world.pose();
        println!(
            "step {:>3} {:<40} -> ({:+.3}, {:+.3}, {:+.3}) reward {}",
            r.info.step_index,
            format!("{action:?}"),
            p.x,
            p.y,
            p.theta,
            r.reward
        );
        if r.done {
            println!("done: {:?}", r.info.termination);
            return Ok(());
        }
        obs = r.observation;
    }
}
