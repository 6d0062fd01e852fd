//! Starts a gateway in-process, books a user and runs a vision-servo agent
//! through the network client.
//!
//!     cargo run --example local_gateway -- [episodes]

use chrono::{Duration, Utc};
use gymgate::client::{run_agent, ClientSession, ServoParams, ServoPolicy};
use gymgate::gateway::{add_booking, add_user, Gateway, ServerConfig};
use gymgate::world::ChannelType;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let episodes = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(10);
    let data = tempfile::tempdir()?;
    let env = "OffWorldMonolithDiscreteSim-v0";
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
    println!(
        "session {} on {}",
        session.session_id(),
        session.server_version()
    );

    let handle = session.make_env(
        env,
        Some("servo-demo"),
        false,
        ChannelType::RgbOnly,
        Some(7),
    )?;
    let mut policy = ServoPolicy::new(handle.action_space, ServoParams::default());
    let mut csv = csv::Writer::from_writer(std::io::stdout());
    let summary = run_agent(&session, &handle, &mut policy, episodes, &mut csv)?;
    drop(csv);
    println!("success rate {:.0}%", 100.0 * summary.success_rate());
    session.close(handle)?;
    Ok(())
}
