//! Simulated monolith-navigation environments served to remote learning agents.
//!
//! The crate is organised in four layers:
//!
//! - [`world`]: a deterministic planar simulator of the walled enclosure, the
//!   monolith beacon and optional obstacles, with raycast depth and flat-shaded
//!   RGB rendering.
//! - [`protocol`]: the length-prefixed JSON-header + binary-blob wire format
//!   spoken between clients and the gateway.
//! - [`gateway`]: the server. Users, time bookings, exclusive heartbeat leases,
//!   experiment logs, the leaderboard and the TCP front end.
//! - [`client`]: the native client session, scripted policies and the agent
//!   runner used by `gymctl`.
//!
//! Runnable walkthroughs of each layer live in `examples/`:
//!
//! ```bash
//! cargo run -p gymgate --example episode_loop
//! cargo run -p gymgate --example local_gateway
//! ```

pub mod client;
pub mod gateway;
pub mod protocol;
pub mod world;

pub use world::{
    Action, ActionKind, ChannelType, DiscreteAction, Observation, Pose2D, StepResult, Termination,
    Variant, World, WorldConfig, WorldError,
};
