//! Steps a `Real` alias, which the server paces like hardware, and prints
//! each round-trip latency.
//!
//!     cargo run --example paced_real_env -- [steps]

use std::time::Instant;

use chrono::{Duration, Utc};
use gymgate::client::ClientSession;
use gymgate::gateway::{add_booking, add_user, Gateway, ServerConfig};
use gymgate::world::{Action, ChannelType, DiscreteAction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let steps: u32 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(3);
    let data = tempfile::tempdir()?;
    let env = "OffWorldMonolithDiscreteReal-v0";
    let token = add_user(data.path(), "ada", Utc::now())?;
    add_booking(
        data.path(),
        "ada",
        env,
        Utc::now(),
        Utc::now() + Duration::hours(1),
    )?;
    let gateway = Gateway::start(
        ServerConfig {
            port: 0,
            ..ServerConfig::default()
        },
        data.path(),
    )?;

    let session = ClientSession::connect(&gateway.local_addr().to_string(), &token)?;
    let handle = session.make_env(env, None, false, ChannelType::DepthOnly, None)?;
    session.reset(&handle)?;
    for i in 0..steps {
        let started = Instant::now();
        let r = session.step(&handle, &Action::Discrete(DiscreteAction::Left))?;
        println!(
            "step {} took {:.2} s",
            i + 1,
            started.elapsed().as_secs_f64()
        );
        if r.done {
            session.reset(&handle)?;
        }
    }
    Ok(())
}
