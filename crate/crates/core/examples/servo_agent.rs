//! Scores the vision servo against an in-process world, without a server.
//!
//!     cargo run --release --example servo_agent -- [episodes] [rgb|depth]

use gymgate::client::{Policy, ServoParams, ServoPolicy};
use gymgate::protocol::ActionSpace;
use gymgate::world::{ChannelType, Termination, Variant, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let episodes: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let channels: ChannelType = args.next().as_deref().unwrap_or("rgb").parse()?;

    for variant in Variant::ALL {
        let mut world = World::new(variant.config(), 7)?;
        world.set_channels(channels);
        let mut policy = ServoPolicy::new(
            ActionSpace::for_config(world.config()),
            ServoParams::default(),
        );
        let mut outcomes = std::collections::BTreeMap::<String, u32>::new();
        for _ in 0..episodes {
            let mut obs = world.reset()?;
            policy.begin_episode();
            let termination = loop {
                let r = world.step(&policy.act(&obs, None))?;
                if r.done {
                    break r.info.termination;
                }
                obs = r.observation;
            };
            *outcomes.entry(format!("{termination:?}")).or_default() += 1;
        }
        let wins = outcomes
            .get(&format!("{:?}", Termination::Success))
            .copied()
            .unwrap_or(0);
        println!("{:<28} {wins:>3}/{episodes} {outcomes:?}", variant.stem());
    }
    Ok(())
}
