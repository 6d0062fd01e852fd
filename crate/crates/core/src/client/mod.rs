//! Client side of the protocol: sessions, scripted agents and observation
//! dumps.
//!
//! ```no_run
//! use gymgate::client::ClientSession;
//! use gymgate::world::{Action, ChannelType, DiscreteAction};
//!
//! let token = std::env::var("GYMGATE_TOKEN").unwrap();
//! let session = ClientSession::connect("127.0.0.1:7007", &token)?;
//! let env = session.make_env(
//!     "OffWorldMonolithDiscreteSim-v0",
//!     Some("My new experiment"),
//!     false,
//!     ChannelType::DepthOnly,
//!     None,
//! )?;
//! let _obs = session.reset(&env)?;
//! let step = session.step(&env, &Action::Discrete(DiscreteAction::Forward))?;
//! println!("reward {} done {}", step.reward, step.done);
//! # Ok::<(), gymgate::client::ClientError>(())
//! ```

mod agent;
mod policy;
mod session;

pub use agent::{
    dump_observation, read_summary, run_agent, summary_writer, AgentError, AgentSummary, DumpError,
    EpisodeSummary,
};
pub use policy::{
    Policy, PoseHint, PoseOracle, RandomPolicy, ServoParams, ServoPolicy, ServoTarget,
};
pub use session::{
    fetch_leaderboard, ClientError, ClientSession, EnvHandle, SessionOptions, StepReply,
    CLIENT_VERSION,
};
