//! In-process gateway with a throwaway data directory and one booked user.

use chrono::{Duration, Utc};
use gymgate::gateway::{add_booking, add_user, known_env_names, Gateway, ServerConfig};
use tempfile::TempDir;

pub struct TestServer {
    pub gateway: Gateway,
    pub dir: TempDir,
    pub user: String,
    pub token: String,
}

impl TestServer {
    pub fn addr(&self) -> String {
        self.gateway.local_addr().to_string()
    }
}

/// Creates `name` in `dir` and books every environment for it from an hour
/// ago until tomorrow.
pub fn booked_user(dir: &std::path::Path, name: &str) -> String {
    let now = Utc::now();
    let token = add_user(dir, name, now).expect("add user");
    for env in known_env_names() {
        add_booking(
            dir,
            name,
            &env,
            now - Duration::hours(1),
            now + Duration::days(1),
        )
        .expect("add booking");
    }
    token
}

/// Starts a gateway on a free port.
pub fn start(mut config: ServerConfig) -> TestServer {
    let dir = tempfile::tempdir().expect("tempdir");
    let token = booked_user(dir.path(), "alice");
    config.port = 0;
    let gateway = Gateway::start(config, dir.path()).expect("start gateway");
    TestServer {
        gateway,
        dir,
        user: "alice".into(),
        token,
    }
}

pub fn start_default() -> TestServer {
    start(ServerConfig::default())
}
