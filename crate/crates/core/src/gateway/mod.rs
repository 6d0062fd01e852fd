//! The gateway server: authentication, bookings, exclusive leases, request
//! routing to simulator instances, step pacing, experiments and the
//! leaderboard.
//!
//! All persistent state lives in a data directory of JSON-lines files:
//!
//! | file                | contents                                   |
//! |---------------------|--------------------------------------------|
//! | `users.jsonl`       | user name, token digest                    |
//! | `bookings.jsonl`    | booked intervals per user and environment  |
//! | `experiments.jsonl` | experiment creation and episode events     |
//! | `leaderboard.jsonl` | entry snapshots, the last per experiment wins |
//!
//! Leases are held in memory only and are dropped on restart.

mod authority;
mod booking;
mod config;
mod experiment;
mod leaderboard;
mod lease;
mod registry;
mod server;
mod store;
mod users;

pub use authority::{
    add_booking, add_user, AdminError, Authority, AuthorityError, HelloError, Snapshot,
    BOOKINGS_FILE, EXPERIMENTS_FILE, LEADERBOARD_FILE, USERS_FILE,
};
pub use booking::{parse_when, Booking, BookingBook, BookingError};
pub use config::{ConfigError, ServerConfig, DEFAULT_PORT};
pub use experiment::{EpisodeRecord, Experiment, ExperimentBook, ExperimentError, ExperimentEvent};
pub use leaderboard::{
    best_window_avg, entry_for, rank_order, Leaderboard, LeaderboardEntry, WINDOW,
};
pub use lease::{Lease, LeaseError, LeaseTable};
pub use registry::{known_env_names, EnvSpec, UnknownEnv};
pub use server::{Gateway, GatewayError, SERVER_VERSION};
pub use store::{replay, JsonlLog, StoreError, RECORD_VERSION};
pub use users::{generate_token, hash_token, User, UserBook};
