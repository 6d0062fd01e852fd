//! The single writer for users, bookings, leases, experiments and the
//! leaderboard, plus the operator commands that edit the data directory.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};

use super::booking::{Booking, BookingBook, BookingError};
use super::experiment::{
    EpisodeRecord, Experiment, ExperimentBook, ExperimentError, ExperimentEvent,
};
use super::leaderboard::{entry_for, Leaderboard, LeaderboardEntry};
use super::lease::{Lease, LeaseError, LeaseTable};
use super::registry::EnvSpec;
use super::store::{replay, JsonlLog, StoreError};
use super::users::{generate_token, hash_token, valid_user_name, User, UserBook};

pub const USERS_FILE: &str = "users.jsonl";
pub const BOOKINGS_FILE: &str = "bookings.jsonl";
pub const EXPERIMENTS_FILE: &str = "experiments.jsonl";
pub const LEADERBOARD_FILE: &str = "leaderboard.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum AuthorityError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("booking {}: {error}", booking.booking_id)]
    Booking {
        booking: Booking,
        error: BookingError,
    },
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum HelloError {
    #[error("unknown token")]
    AuthFailed,
    #[error("no booking is active for this user")]
    NoBooking,
}

/// Everything that survives a restart.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub users: Vec<User>,
    pub bookings: Vec<Booking>,
    pub experiments: Vec<Experiment>,
    pub leaderboard: Vec<LeaderboardEntry>,
}

struct State {
    users: UserBook,
    bookings: BookingBook,
    experiments: ExperimentBook,
    leaderboard: Leaderboard,
}

fn load_users(dir: &Path) -> Result<UserBook, AuthorityError> {
    Ok(UserBook::from_records(replay::<User>(
        &dir.join(USERS_FILE),
    )?))
}

fn load_bookings(dir: &Path) -> Result<BookingBook, AuthorityError> {
    BookingBook::from_records(replay::<Booking>(&dir.join(BOOKINGS_FILE))?)
        .map_err(|(booking, error)| AuthorityError::Booking { booking, error })
}

fn load(dir: &Path) -> Result<State, AuthorityError> {
    let mut experiments = ExperimentBook::default();
    for event in replay::<ExperimentEvent>(&dir.join(EXPERIMENTS_FILE))? {
        experiments.apply(event)?;
    }
    let mut leaderboard = Leaderboard::default();
    for entry in replay::<LeaderboardEntry>(&dir.join(LEADERBOARD_FILE))? {
        leaderboard.upsert(entry);
    }
    Ok(State {
        users: load_users(dir)?,
        bookings: load_bookings(dir)?,
        experiments,
        leaderboard,
    })
}

fn snapshot_of(state: &State) -> Snapshot {
    Snapshot {
        users: state.users.users(),
        bookings: state.bookings.all().to_vec(),
        experiments: state.experiments.all().cloned().collect(),
        leaderboard: state.leaderboard.top(usize::MAX),
    }
}

pub struct Authority {
    dir: PathBuf,
    state: State,
    leases: LeaseTable,
    experiments_log: JsonlLog,
    leaderboard_log: JsonlLog,
}

impl std::fmt::Debug for Authority {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Authority")
            .field("dir", &self.dir)
            .field("users", &self.state.users.len())
            .field("bookings", &self.state.bookings.all().len())
            .field("leases", &self.leases.leases().count())
            .finish()
    }
}

impl Authority {
    /// Replays the data directory. Leases always start empty.
    pub fn open(dir: &Path, lease_ttl: Duration) -> Result<Self, AuthorityError> {
        std::fs::create_dir_all(dir).map_err(|source| StoreError::Io {
            path: dir.to_owned(),
            source,
        })?;
        let experiments_log = JsonlLog::open(&dir.join(EXPERIMENTS_FILE))?;
        let leaderboard_log = JsonlLog::open(&dir.join(LEADERBOARD_FILE))?;
        Ok(Self {
            dir: dir.to_owned(),
            state: load(dir)?,
            leases: LeaseTable::new(lease_ttl),
            experiments_log,
            leaderboard_log,
        })
    }

    /// Reads a data directory without opening it for writing.
    pub fn load_snapshot(dir: &Path) -> Result<Snapshot, AuthorityError> {
        Ok(snapshot_of(&load(dir)?))
    }

    pub fn snapshot(&self) -> Snapshot {
        snapshot_of(&self.state)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Picks up users and bookings appended by operator commands.
    pub fn reload_directory(&mut self) -> Result<(), AuthorityError> {
        self.state.users = load_users(&self.dir)?;
        self.state.bookings = load_bookings(&self.dir)?;
        Ok(())
    }

    fn reload_or_warn(&mut self) {
        if let Err(e) = self.reload_directory() {
            log::warn!("reloading users and bookings: {e}");
        }
    }

    pub fn authenticate(&mut self, token: &str, now: DateTime<Utc>) -> Result<User, HelloError> {
        let check = |s: &State| -> Result<User, HelloError> {
            let user = s.users.authenticate(token).ok_or(HelloError::AuthFailed)?;
            if s.bookings.active_for_user(&user.name, now).next().is_none() {
                return Err(HelloError::NoBooking);
            }
            Ok(user.clone())
        };
        check(&self.state).or_else(|_| {
            self.reload_or_warn();
            check(&self.state)
        })
    }

    pub fn acquire_lease(
        &mut self,
        user_id: &str,
        session_id: &str,
        env_id: &str,
        now: DateTime<Utc>,
    ) -> Result<Lease, LeaseError> {
        match self
            .leases
            .acquire(&self.state.bookings, user_id, session_id, env_id, now)
        {
            Err(LeaseError::NoBooking) => {
                self.reload_or_warn();
                self.leases
                    .acquire(&self.state.bookings, user_id, session_id, env_id, now)
            }
            other => other,
        }
    }

    pub fn leases(&self) -> &LeaseTable {
        &self.leases
    }

    pub fn leases_mut(&mut self) -> &mut LeaseTable {
        &mut self.leases
    }

    pub fn bookings(&self) -> &BookingBook {
        &self.state.bookings
    }

    pub fn experiment(&self, owner: &str, name: &str) -> Option<&Experiment> {
        self.state.experiments.get(owner, name)
    }

    pub fn register_experiment(
        &mut self,
        owner: &str,
        name: &str,
        resume: bool,
        env_name: &str,
        now: DateTime<Utc>,
    ) -> Result<&Experiment, AuthorityError> {
        if let Some(event) = self
            .state
            .experiments
            .plan_register(owner, name, resume, env_name, now)?
        {
            self.experiments_log.append(&event)?;
            self.state.experiments.apply(event)?;
        }
        Ok(self
            .state
            .experiments
            .get(owner, name)
            .expect("registered above"))
    }

    /// Appends an episode and refreshes the experiment's leaderboard entry,
    /// both on disk before returning.
    pub fn record_episode(
        &mut self,
        owner: &str,
        name: &str,
        total_reward: f64,
        steps: u32,
        now: DateTime<Utc>,
    ) -> Result<(EpisodeRecord, Option<LeaderboardEntry>), AuthorityError> {
        let event = self
            .state
            .experiments
            .plan_episode(owner, name, total_reward, steps, now)?;
        self.experiments_log.append(&event)?;
        let experiment = self.state.experiments.apply(event)?;
        let record = experiment.episodes.last().expect("just appended").clone();
        let entry = entry_for(experiment, now);
        if let Some(entry) = &entry {
            self.leaderboard_log.append(entry)?;
            self.state.leaderboard.upsert(entry.clone());
        }
        Ok((record, entry))
    }

    pub fn leaderboard_top(&self, n: usize) -> Vec<LeaderboardEntry> {
        self.state.leaderboard.top(n)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AdminError {
    #[error("user names use letters, digits, '-', '_' and '.' (at most 64)")]
    InvalidName,
    #[error("user '{0}' already exists")]
    NameExists(String),
    #[error("no user named '{0}'")]
    UnknownUser(String),
    #[error(transparent)]
    UnknownEnv(#[from] super::registry::UnknownEnv),
    #[error(transparent)]
    Booking(#[from] BookingError),
    #[error(transparent)]
    Authority(#[from] AuthorityError),
}

impl From<StoreError> for AdminError {
    fn from(e: StoreError) -> Self {
        AdminError::Authority(e.into())
    }
}

/// Creates a user and returns its token. The token is not stored anywhere.
pub fn add_user(dir: &Path, name: &str, now: DateTime<Utc>) -> Result<String, AdminError> {
    if !valid_user_name(name) {
        return Err(AdminError::InvalidName);
    }
    if load_users(dir)?.get(name).is_some() {
        return Err(AdminError::NameExists(name.to_owned()));
    }
    let token = generate_token();
    let user = User {
        name: name.to_owned(),
        token_sha256: hash_token(&token),
        created_at: now,
    };
    JsonlLog::open(&dir.join(USERS_FILE))?.append(&user)?;
    Ok(token)
}

/// Books `env` for `user` over `[start, end)`.
pub fn add_booking(
    dir: &Path,
    user: &str,
    env: &str,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
) -> Result<Booking, AdminError> {
    let spec: EnvSpec = env.parse()?;
    if load_users(dir)?.get(user).is_none() {
        return Err(AdminError::UnknownUser(user.to_owned()));
    }
    let book = load_bookings(dir)?;
    let booking = Booking {
        booking_id: book.next_id(),
        user_id: user.to_owned(),
        env_id: spec.name(),
        start,
        end,
    };
    book.check(&booking)?;
    JsonlLog::open(&dir.join(BOOKINGS_FILE))?.append(&booking)?;
    Ok(booking)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENV: &str = "OffWorldMonolithDiscreteSim-v0";

    fn setup() -> (tempfile::TempDir, String) {
        let dir = tempfile::tempdir().unwrap();
        let token = add_user(dir.path(), "alice", Utc::now()).unwrap();
        (dir, token)
    }

    #[test]
    fn hello_outcomes() {
        let (dir, token) = setup();
        let mut auth = Authority::open(dir.path(), Duration::seconds(60)).unwrap();
        let now = Utc::now();
        assert_eq!(auth.authenticate("bogus", now), Err(HelloError::AuthFailed));
        assert_eq!(auth.authenticate(&token, now), Err(HelloError::NoBooking));
        // Appended while the authority is open: picked up on the next miss.
        add_booking(
            dir.path(),
            "alice",
            ENV,
            now - Duration::minutes(1),
            now + Duration::hours(1),
        )
        .unwrap();
        assert_eq!(auth.authenticate(&token, now).unwrap().name, "alice");
        assert_eq!(
            auth.authenticate(&token, now + Duration::hours(2)),
            Err(HelloError::NoBooking)
        );
    }

    #[test]
    fn admin_commands_validate() {
        let (dir, _) = setup();
        assert!(matches!(
            add_user(dir.path(), "alice", Utc::now()),
            Err(AdminError::NameExists(_))
        ));
        assert!(matches!(
            add_user(dir.path(), "a b", Utc::now()),
            Err(AdminError::InvalidName)
        ));
        let now = Utc::now();
        let later = now + Duration::hours(1);
        assert!(matches!(
            add_booking(dir.path(), "bob", ENV, now, later),
            Err(AdminError::UnknownUser(_))
        ));
        assert!(matches!(
            add_booking(dir.path(), "alice", "Nope-v0", now, later),
            Err(AdminError::UnknownEnv(_))
        ));
        // Short names are stored canonically.
        let b = add_booking(dir.path(), "alice", "MonolithDiscreteSim-v0", now, later).unwrap();
        assert_eq!(b.env_id, ENV);
        assert!(matches!(
            add_booking(
                dir.path(),
                "alice",
                ENV,
                now + Duration::minutes(30),
                later + Duration::hours(1)
            ),
            Err(AdminError::Booking(BookingError::Overlap(1)))
        ));
        assert!(matches!(
            add_booking(dir.path(), "alice", ENV, later, now),
            Err(AdminError::Booking(BookingError::EmptyInterval))
        ));
    }

    #[test]
    fn episodes_persist_and_reload_identically() {
        let (dir, _) = setup();
        let now = Utc::now();
        add_booking(dir.path(), "alice", ENV, now, now + Duration::hours(1)).unwrap();
        let mut auth = Authority::open(dir.path(), Duration::seconds(60)).unwrap();
        auth.register_experiment("alice", "exp", false, ENV, now)
            .unwrap();
        let mut last = None;
        for i in 0..120 {
            let (rec, entry) = auth
                .record_episode("alice", "exp", if i % 3 == 0 { 1.0 } else { 0.0 }, 7, now)
                .unwrap();
            assert_eq!(rec.episode_index, i);
            assert_eq!(entry.is_some(), i >= 99);
            last = entry;
        }
        assert_eq!(auth.leaderboard_top(5), vec![last.unwrap()]);
        let before = auth.snapshot();
        drop(auth);
        assert_eq!(Authority::load_snapshot(dir.path()).unwrap(), before);
        let mut again = Authority::open(dir.path(), Duration::seconds(60)).unwrap();
        assert_eq!(again.snapshot(), before);
        let e = again
            .register_experiment("alice", "exp", true, ENV, now)
            .unwrap();
        assert_eq!(e.next_episode_index(), 120);
    }

    #[test]
    fn leases_are_not_persisted() {
        let (dir, _) = setup();
        let now = Utc::now();
        add_booking(dir.path(), "alice", ENV, now, now + Duration::hours(1)).unwrap();
        let mut auth = Authority::open(dir.path(), Duration::seconds(60)).unwrap();
        auth.acquire_lease("alice", "s1", ENV, now).unwrap();
        assert_eq!(
            auth.acquire_lease("alice", "s2", ENV, now),
            Err(LeaseError::Busy)
        );
        drop(auth);
        let mut auth = Authority::open(dir.path(), Duration::seconds(60)).unwrap();
        assert!(auth.acquire_lease("alice", "s2", ENV, now).is_ok());
    }
}
