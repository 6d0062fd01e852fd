//! TCP front end: one thread per connection, one lock per environment, one
//! authority lock for shared records. Locks are always taken environment
//! first, authority second.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufReader};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use chrono::Utc;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::authority::{Authority, AuthorityError, HelloError};
use super::config::{ConfigError, ServerConfig};
use super::experiment::ExperimentError;
use super::lease::LeaseError;
use super::registry::{known_env_names, EnvSpec};
use crate::protocol::{
    decode_frame, read_frame, write_envelope, ActionSpace, Envelope, ErrorCode, MakeRequest,
    Message, ProtocolError,
};
use crate::world::{Variant, World, WorldConfig, WorldError};

pub const SERVER_VERSION: &str = concat!("gymgate/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Authority(#[from] AuthorityError),
    #[error("binding {addr}: {source}")]
    Bind { addr: String, source: io::Error },
}

struct EnvState {
    world: Option<World>,
    lease_id: Option<u64>,
    experiment: Option<(String, String)>,
    episode_reward: f64,
    episode_steps: u32,
    pacing_rng: ChaCha8Rng,
}

impl EnvState {
    /// Abandons any episode and forgets the holder.
    fn clear(&mut self) {
        self.world = None;
        self.lease_id = None;
        self.experiment = None;
        self.episode_reward = 0.0;
        self.episode_steps = 0;
    }
}

struct EnvSlot {
    spec: EnvSpec,
    paced: bool,
    state: Mutex<EnvState>,
}

struct Shared {
    config: ServerConfig,
    worlds: BTreeMap<Variant, WorldConfig>,
    authority: Mutex<Authority>,
    envs: BTreeMap<String, EnvSlot>,
    connections: Mutex<HashMap<u64, TcpStream>>,
    next_connection: AtomicU64,
    makes: AtomicU64,
    shutdown: AtomicBool,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// A running gateway. Dropping it shuts the server down.
pub struct Gateway {
    shared: Arc<Shared>,
    addr: SocketAddr,
    accept: Option<JoinHandle<()>>,
    sweeper: Option<(mpsc::Sender<()>, JoinHandle<()>)>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("addr", &self.addr).finish()
    }
}

impl Gateway {
    /// Replays `data_dir`, binds `config.bind:config.port` (port 0 picks a
    /// free one) and starts serving.
    pub fn start(config: ServerConfig, data_dir: &Path) -> Result<Self, GatewayError> {
        config.validate()?;
        let worlds = config.world_configs()?;
        let authority = Authority::open(data_dir, config.lease_ttl())?;
        let addr = format!("{}:{}", config.bind, config.port);
        let listener = TcpListener::bind(&addr).map_err(|source| GatewayError::Bind {
            addr: addr.clone(),
            source,
        })?;
        let local = listener
            .local_addr()
            .map_err(|source| GatewayError::Bind { addr, source })?;

        let envs = EnvSpec::all()
            .into_iter()
            .enumerate()
            .map(|(i, spec)| {
                let slot = EnvSlot {
                    spec,
                    paced: config.paced || spec.real,
                    state: Mutex::new(EnvState {
                        world: None,
                        lease_id: None,
                        experiment: None,
                        episode_reward: 0.0,
                        episode_steps: 0,
                        pacing_rng: ChaCha8Rng::seed_from_u64(
                            config.seed ^ (0xA5A5_0000 + i as u64),
                        ),
                    }),
                };
                (spec.name(), slot)
            })
            .collect();

        let shared = Arc::new(Shared {
            config,
            worlds,
            authority: Mutex::new(authority),
            envs,
            connections: Mutex::new(HashMap::new()),
            next_connection: AtomicU64::new(1),
            makes: AtomicU64::new(0),
            shutdown: AtomicBool::new(false),
        });

        let accept = {
            let shared = shared.clone();
            thread::Builder::new()
                .name("gymgate-accept".into())
                .spawn(move || accept_loop(shared, listener))
                .expect("spawning accept thread")
        };
        let (stop, stopped) = mpsc::channel();
        let sweeper = {
            let shared = shared.clone();
            thread::Builder::new()
                .name("gymgate-sweeper".into())
                .spawn(move || {
                    let interval = shared.config.sweep_interval();
                    while let Err(mpsc::RecvTimeoutError::Timeout) = stopped.recv_timeout(interval)
                    {
                        sweep(&shared);
                    }
                })
                .expect("spawning sweeper thread")
        };
        log::info!("listening on {local}");
        Ok(Self {
            shared,
            addr: local,
            accept: Some(accept),
            sweeper: Some((stop, sweeper)),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Runs one expiry pass immediately.
    pub fn sweep_now(&self) -> Vec<String> {
        sweep(&self.shared)
    }

    /// Blocks until the accept loop ends, i.e. forever unless shut down from
    /// another thread.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(&mut self) {
        if self.shared.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        // Wake the blocking accept.
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        if let Some((stop, h)) = self.sweeper.take() {
            let _ = stop.send(());
            let _ = h.join();
        }
        for (_, stream) in lock(&self.shared.connections).drain() {
            let _ = stream.shutdown(Shutdown::Both);
        }
    }
}

impl Drop for Gateway {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn accept_loop(shared: Arc<Shared>, listener: TcpListener) {
    for stream in listener.incoming() {
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept: {e}");
                continue;
            }
        };
        let id = shared.next_connection.fetch_add(1, Ordering::Relaxed);
        if let Ok(clone) = stream.try_clone() {
            lock(&shared.connections).insert(id, clone);
        }
        let shared = shared.clone();
        let spawned = thread::Builder::new()
            .name(format!("gymgate-conn-{id}"))
            .spawn(move || {
                let peer = stream.peer_addr().ok();
                log::debug!("connection {id} from {peer:?}");
                serve_connection(&shared, stream);
                lock(&shared.connections).remove(&id);
                log::debug!("connection {id} closed");
            });
        if let Err(e) = spawned {
            log::error!("spawning connection thread: {e}");
        }
    }
}

/// Releases stale leases. Each environment is reset before it can be granted
/// again. Returns the released env ids.
fn sweep(shared: &Shared) -> Vec<String> {
    let now = Utc::now();
    let expired = lock(&shared.authority).leases_mut().expire(now);
    for lease in &expired {
        log::info!(
            "lease {} on {} held by {} expired",
            lease.lease_id,
            lease.env_id,
            lease.user_id
        );
        let Some(slot) = shared.envs.get(&lease.env_id) else {
            continue;
        };
        let mut state = lock(&slot.state);
        if state.lease_id == Some(lease.lease_id) {
            state.clear();
        }
        lock(&shared.authority)
            .leases_mut()
            .finish_reset(&lease.env_id);
    }
    expired.into_iter().map(|l| l.env_id).collect()
}

#[derive(Debug, Clone)]
struct OpenEnv {
    env_id: String,
    lease_id: u64,
}

struct Session {
    id: String,
    user: Option<String>,
    handles: BTreeMap<u32, OpenEnv>,
    next_handle: u32,
}

/// True when the peer has sent bytes beyond the frame just read.
fn has_pending_input(reader: &BufReader<TcpStream>) -> bool {
    if !reader.buffer().is_empty() {
        return true;
    }
    let stream = reader.get_ref();
    if stream.set_nonblocking(true).is_err() {
        return false;
    }
    let mut probe = [0u8; 1];
    let pending = matches!(stream.peek(&mut probe), Ok(n) if n > 0);
    let _ = stream.set_nonblocking(false);
    pending
}

fn serve_connection(shared: &Shared, stream: TcpStream) {
    let _ = stream.set_nodelay(true);
    let Ok(read_half) = stream.try_clone() else {
        return;
    };
    let mut reader = BufReader::new(read_half);
    let mut writer = stream;
    let mut session = Session {
        id: format!("s-{:016x}", rand::rng().next_u64()),
        user: None,
        handles: BTreeMap::new(),
        next_handle: 1,
    };

    loop {
        let frame = match read_frame(&mut reader) {
            Ok(f) => f,
            Err(ProtocolError::Closed) => break,
            Err(ProtocolError::Io(e)) => {
                log::debug!("session {}: {e}", session.id);
                break;
            }
            Err(e) => {
                let _ = write_envelope(
                    &mut writer,
                    &Envelope::new(0, Message::error(e.error_code(), e.to_string())),
                );
                break;
            }
        };
        let pipelined = has_pending_input(&reader);
        let request = match decode_frame(&frame) {
            Ok(r) => r,
            Err(e) => {
                let reply = Message::error(e.error_code(), e.to_string());
                let _ = write_envelope(
                    &mut writer,
                    &Envelope::new(e.request_id().unwrap_or(0), reply),
                );
                break;
            }
        };
        if pipelined {
            let reply = Message::error(
                ErrorCode::PipeliningUnsupported,
                "send the next request only after the previous response",
            );
            let _ = write_envelope(&mut writer, &Envelope::new(request.id, reply));
            break;
        }
        let reply = handle(shared, &mut session, request.message);
        if let Err(e) = write_envelope(&mut writer, &Envelope::new(request.id, reply)) {
            log::debug!("session {}: {e}", session.id);
            break;
        }
    }

    for (_, open) in std::mem::take(&mut session.handles) {
        close_env(shared, &open);
    }
}

fn handle(shared: &Shared, session: &mut Session, message: Message) -> Message {
    let now = Utc::now();
    if session.user.is_some() {
        lock(&shared.authority)
            .leases_mut()
            .touch_session(&session.id, now);
    }
    match message {
        Message::Hello {
            token,
            client_version,
        } => {
            if session.user.is_some() {
                return Message::error(ErrorCode::BadRequest, "already authenticated");
            }
            match lock(&shared.authority).authenticate(&token, now) {
                Ok(user) => {
                    log::info!(
                        "{} authenticated as {} ({client_version})",
                        session.id,
                        user.name
                    );
                    session.user = Some(user.name);
                    Message::HelloOk {
                        session_id: session.id.clone(),
                        server_version: SERVER_VERSION.into(),
                    }
                }
                Err(HelloError::AuthFailed) => {
                    Message::error(ErrorCode::AuthFailed, "unknown token")
                }
                Err(HelloError::NoBooking) => Message::error(
                    ErrorCode::NoBooking,
                    "no booking is active for this user now",
                ),
            }
        }
        Message::Heartbeat => Message::Heartbeat,
        Message::LeaderboardQuery { top_n } => Message::LeaderboardOk {
            entries: lock(&shared.authority).leaderboard_top(top_n as usize),
        },
        other => {
            let Some(user) = session.user.clone() else {
                return Message::error(ErrorCode::NotAuthenticated, "send hello first");
            };
            match other {
                Message::Make(req) => make(shared, session, &user, req),
                Message::Reset { env_handle } => {
                    with_env(shared, session, env_handle, |_, state| {
                        let world = state.world.as_mut().expect("made");
                        state.episode_reward = 0.0;
                        state.episode_steps = 0;
                        match world.reset() {
                            Ok(observation) => Message::ResetOk { observation },
                            Err(e) => Message::error(ErrorCode::Internal, e.to_string()),
                        }
                    })
                }
                Message::Step { env_handle, action } => {
                    with_env(shared, session, env_handle, |slot, state| {
                        let started = Instant::now();
                        let world = state.world.as_mut().expect("made");
                        let result = match world.step(&action) {
                            Ok(r) => r,
                            Err(WorldError::WrongActionKind { expected }) => {
                                return Message::error(
                                    ErrorCode::WrongActionKind,
                                    format!("{} takes {expected} actions", slot.spec),
                                )
                            }
                            Err(WorldError::NoEpisode) => {
                                return Message::error(
                                    ErrorCode::NoEpisode,
                                    "no active episode; reset first",
                                )
                            }
                            Err(e) => return Message::error(ErrorCode::Internal, e.to_string()),
                        };
                        let step_duration = world.config().action_params.step_duration;
                        state.episode_reward += result.reward;
                        state.episode_steps = result.info.step_index;
                        if result.done {
                            if let Some((owner, name)) = &state.experiment {
                                let recorded = lock(&shared.authority).record_episode(
                                    owner,
                                    name,
                                    state.episode_reward,
                                    state.episode_steps,
                                    Utc::now(),
                                );
                                if let Err(e) = recorded {
                                    log::error!("recording episode of {owner}/{name}: {e}");
                                    return Message::error(
                                        ErrorCode::Internal,
                                        "failed to record the episode",
                                    );
                                }
                            }
                            state.episode_reward = 0.0;
                            state.episode_steps = 0;
                        }
                        if slot.paced {
                            let [lo, hi] = shared.config.pacing_extra_latency_secs;
                            let extra = state.pacing_rng.random_range(lo..=hi);
                            let deadline = started + Duration::from_secs_f64(step_duration + extra);
                            let now = Instant::now();
                            if deadline > now {
                                thread::sleep(deadline - now);
                            }
                        }
                        Message::StepOk {
                            reward: result.reward,
                            done: result.done,
                            termination: result.info.termination,
                            step_index: result.info.step_index,
                            observation: result.observation,
                        }
                    })
                }
                Message::Close { env_handle } => match session.handles.remove(&env_handle) {
                    Some(open) => {
                        if close_env(shared, &open) {
                            Message::CloseOk
                        } else {
                            Message::error(ErrorCode::LeaseLost, "lease had already expired")
                        }
                    }
                    None => invalid_handle(env_handle),
                },
                Message::DebugPose { env_handle } => {
                    if !shared.config.debug_pose {
                        return Message::error(
                            ErrorCode::Forbidden,
                            "pose debugging is disabled on this server",
                        );
                    }
                    with_env(shared, session, env_handle, |_, state| {
                        let world = state.world.as_ref().expect("made");
                        Message::DebugPoseOk {
                            pose: world.pose(),
                            monolith: world.config().monolith.center,
                        }
                    })
                }
                Message::Hello { .. } | Message::Heartbeat | Message::LeaderboardQuery { .. } => {
                    unreachable!()
                }
                response => Message::error(
                    ErrorCode::BadRequest,
                    format!("'{}' is a response, not a request", response.type_name()),
                ),
            }
        }
    }
}

fn invalid_handle(env_handle: u32) -> Message {
    Message::error(
        ErrorCode::InvalidHandle,
        format!("no open environment with handle {env_handle}"),
    )
}

/// Runs `f` on the environment behind `env_handle` while holding its lock,
/// after checking that this session's lease is still live.
fn with_env(
    shared: &Shared,
    session: &Session,
    env_handle: u32,
    f: impl FnOnce(&EnvSlot, &mut EnvState) -> Message,
) -> Message {
    let Some(open) = session.handles.get(&env_handle) else {
        return invalid_handle(env_handle);
    };
    let slot = &shared.envs[&open.env_id];
    let mut state = lock(&slot.state);
    let live = state.lease_id == Some(open.lease_id)
        && lock(&shared.authority)
            .leases_mut()
            .touch(open.lease_id, Utc::now())
            .is_ok();
    if !live || state.world.is_none() {
        return Message::error(
            ErrorCode::LeaseLost,
            format!("lease on {} is no longer held", slot.spec),
        );
    }
    f(slot, &mut state)
}

/// Resets the environment and gives up the lease. Returns false if the lease
/// had already been taken away.
fn close_env(shared: &Shared, open: &OpenEnv) -> bool {
    let slot = &shared.envs[&open.env_id];
    let mut state = lock(&slot.state);
    if state.lease_id != Some(open.lease_id) {
        return false;
    }
    state.clear();
    lock(&shared.authority)
        .leases_mut()
        .release(open.lease_id)
        .is_some()
}

fn make(shared: &Shared, session: &mut Session, user: &str, req: MakeRequest) -> Message {
    let Some(spec) = EnvSpec::parse(&req.env_name) else {
        return Message::error(
            ErrorCode::UnknownEnv,
            format!(
                "unknown environment '{}'; valid names: {}",
                req.env_name,
                known_env_names().join(", ")
            ),
        );
    };
    let env_id = spec.name();
    let now = Utc::now();
    let lease = {
        let mut authority = lock(&shared.authority);
        let lease = match authority.acquire_lease(user, &session.id, &env_id, now) {
            Ok(l) => l,
            Err(LeaseError::Busy) => {
                return Message::error(
                    ErrorCode::Busy,
                    format!("{env_id} is leased by another session"),
                )
            }
            Err(LeaseError::NoBooking | LeaseError::Lost) => {
                return Message::error(
                    ErrorCode::NoBooking,
                    format!("{user} has no booking for {env_id} now"),
                )
            }
        };
        if let Some(name) = &req.experiment_name {
            if let Err(e) =
                authority.register_experiment(user, name, req.resume_experiment, &env_id, now)
            {
                authority.leases_mut().release(lease.lease_id);
                let code = match &e {
                    AuthorityError::Experiment(ExperimentError::NameTaken(_)) => {
                        ErrorCode::NameTaken
                    }
                    AuthorityError::Experiment(ExperimentError::NotFound(_)) => ErrorCode::NotFound,
                    AuthorityError::Experiment(ExperimentError::EnvMismatch { .. }) => {
                        ErrorCode::BadRequest
                    }
                    _ => {
                        log::error!("registering experiment {user}/{name}: {e}");
                        ErrorCode::Internal
                    }
                };
                return Message::error(code, e.to_string());
            }
        }
        lease
    };

    let config = shared.worlds[&spec.variant].clone();
    let seed = req.seed.unwrap_or_else(|| {
        let n = shared.makes.fetch_add(1, Ordering::Relaxed);
        let mut rng = ChaCha8Rng::seed_from_u64(shared.config.seed);
        rng.set_stream(n);
        rng.next_u64()
    });
    let action_space = ActionSpace::for_config(&config);
    let mut world = match World::new(config, seed) {
        Ok(w) => w,
        Err(e) => {
            lock(&shared.authority).leases_mut().release(lease.lease_id);
            return Message::error(ErrorCode::Internal, e.to_string());
        }
    };
    world.set_channels(req.channel_type);
    let cam = world.config().camera;
    {
        let mut state = lock(&shared.envs[&env_id].state);
        state.clear();
        state.world = Some(world);
        state.lease_id = Some(lease.lease_id);
        state.experiment = req.experiment_name.map(|n| (user.to_owned(), n));
    }
    let env_handle = session.next_handle;
    session.next_handle += 1;
    session.handles.insert(
        env_handle,
        OpenEnv {
            env_id: env_id.clone(),
            lease_id: lease.lease_id,
        },
    );
    log::info!(
        "{} ({user}) made {env_id} as handle {env_handle}, seed {seed}",
        session.id
    );
    Message::MakeOk {
        env_handle,
        obs_shape: [cam.height_px, cam.width, req.channel_type.channel_count()],
        action_space,
    }
}
