use std::io::{self, BufReader};
use std::net::{Shutdown, SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::mpsc;
use std::sync::{Arc, Mutex, MutexGuard, TryLockError};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crate::gateway::LeaderboardEntry;
use crate::protocol::{
    read_envelope, write_envelope, ActionSpace, Envelope, ErrorCode, MakeRequest, Message,
    ProtocolError,
};
use crate::world::{Action, ChannelType, Observation, Pose2D, Termination};

pub const CLIENT_VERSION: &str = concat!("gymctl/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot connect to {addr}: {source}")]
    Connect { addr: String, source: io::Error },
    #[error("{code}: {detail}")]
    Server { code: ErrorCode, detail: String },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("unexpected '{got}' response to '{request}'")]
    Unexpected {
        request: &'static str,
        got: &'static str,
    },
    #[error("response id {got} does not answer request {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("connection unusable after an earlier transport error")]
    Broken,
}

impl ClientError {
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            ClientError::Server { code, .. } => Some(*code),
            _ => None,
        }
    }

    /// Process exit status for command-line tools.
    pub fn exit_code(&self) -> i32 {
        match self.code() {
            Some(ErrorCode::AuthFailed | ErrorCode::NoBooking | ErrorCode::NotAuthenticated) => 3,
            Some(ErrorCode::Busy) => 4,
            Some(ErrorCode::UnknownEnv | ErrorCode::NameTaken | ErrorCode::NotFound) => 2,
            _ => 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionOptions {
    pub connect_timeout: Duration,
    /// Idle time after which the background thread sends a heartbeat.
    pub heartbeat_interval: Duration,
    /// Read/write timeout per request. Paced steps take up to 4 s.
    pub io_timeout: Duration,
    pub client_version: String,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            connect_timeout: Duration::from_secs(5),
            heartbeat_interval: Duration::from_secs(10),
            io_timeout: Duration::from_secs(60),
            client_version: CLIENT_VERSION.into(),
        }
    }
}

/// An environment opened with [`ClientSession::make_env`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnvHandle {
    pub handle: u32,
    pub env_name: String,
    pub channel_type: ChannelType,
    /// `[height, width, channels]`.
    pub obs_shape: [u32; 3],
    pub action_space: ActionSpace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReply {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub termination: Termination,
    pub step_index: u32,
}

struct Conn {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    next_id: u64,
    last_sent: Instant,
    broken: bool,
}

impl Conn {
    fn call(&mut self, message: Message) -> Result<Message, ClientError> {
        if self.broken {
            return Err(ClientError::Broken);
        }
        let id = self.next_id;
        self.next_id += 1;
        let request = message.type_name();
        let outcome = write_envelope(&mut self.writer, &Envelope::new(id, message))
            .and_then(|_| read_envelope(&mut self.reader));
        self.last_sent = Instant::now();
        let reply = outcome.inspect_err(|e| {
            // Encoding failures leave the stream intact; anything else does not.
            if !matches!(
                e,
                ProtocolError::InvalidMessage(_) | ProtocolError::Oversize { .. }
            ) {
                self.broken = true;
            }
        })?;
        if reply.id != id {
            self.broken = true;
            return Err(ClientError::IdMismatch {
                expected: id,
                got: reply.id,
            });
        }
        match reply.message {
            Message::Error { code, detail } => {
                log::debug!("{request} failed: {code}: {detail}");
                Err(ClientError::Server { code, detail })
            }
            other => Ok(other),
        }
    }
}

fn lock(conn: &Mutex<Conn>) -> MutexGuard<'_, Conn> {
    conn.lock().unwrap_or_else(|p| p.into_inner())
}

fn open_stream(addr: &str, options: &SessionOptions) -> Result<TcpStream, ClientError> {
    let connect_err = |source| ClientError::Connect {
        addr: addr.to_owned(),
        source,
    };
    let addrs: Vec<SocketAddr> = addr.to_socket_addrs().map_err(connect_err)?.collect();
    let mut last = io::Error::new(io::ErrorKind::InvalidInput, "address resolved to nothing");
    for a in addrs {
        match TcpStream::connect_timeout(&a, options.connect_timeout) {
            Ok(stream) => {
                stream.set_nodelay(true).map_err(connect_err)?;
                stream
                    .set_read_timeout(Some(options.io_timeout))
                    .map_err(connect_err)?;
                stream
                    .set_write_timeout(Some(options.io_timeout))
                    .map_err(connect_err)?;
                return Ok(stream);
            }
            Err(e) => last = e,
        }
    }
    Err(connect_err(last))
}

fn new_conn(stream: TcpStream, addr: &str) -> Result<Conn, ClientError> {
    let reader = stream.try_clone().map_err(|source| ClientError::Connect {
        addr: addr.to_owned(),
        source,
    })?;
    Ok(Conn {
        reader: BufReader::new(reader),
        writer: stream,
        next_id: 1,
        last_sent: Instant::now(),
        broken: false,
    })
}

/// One authenticated connection to a gateway.
///
/// Requests are strictly sequential. The session may be moved between
/// threads, and concurrent calls are serialized, but it is meant for one user
/// at a time. A background thread sends a heartbeat whenever the connection
/// has been idle for the heartbeat interval; it never interleaves with a
/// request in flight.
pub struct ClientSession {
    conn: Arc<Mutex<Conn>>,
    session_id: String,
    server_version: String,
    heartbeat: Option<(mpsc::Sender<()>, JoinHandle<()>)>,
}

impl std::fmt::Debug for ClientSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClientSession")
            .field("session_id", &self.session_id)
            .field("server_version", &self.server_version)
            .finish()
    }
}

impl ClientSession {
    pub fn connect(addr: &str, token: &str) -> Result<Self, ClientError> {
        Self::connect_with(addr, token, SessionOptions::default())
    }

    pub fn connect_with(
        addr: &str,
        token: &str,
        options: SessionOptions,
    ) -> Result<Self, ClientError> {
        let mut conn = new_conn(open_stream(addr, &options)?, addr)?;
        let reply = conn.call(Message::Hello {
            token: token.to_owned(),
            client_version: options.client_version.clone(),
        })?;
        let Message::HelloOk {
            session_id,
            server_version,
        } = reply
        else {
            return Err(ClientError::Unexpected {
                request: "hello",
                got: reply.type_name(),
            });
        };
        let conn = Arc::new(Mutex::new(conn));
        let (stop, stopped) = mpsc::channel::<()>();
        let beat = conn.clone();
        let interval = options.heartbeat_interval;
        let handle = thread::Builder::new()
            .name("gymctl-heartbeat".into())
            .spawn(move || heartbeat_loop(&beat, &stopped, interval))
            .expect("spawning heartbeat thread");
        Ok(Self {
            conn,
            session_id,
            server_version,
            heartbeat: Some((stop, handle)),
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn server_version(&self) -> &str {
        &self.server_version
    }

    fn call(&self, message: Message) -> Result<Message, ClientError> {
        lock(&self.conn).call(message)
    }

    pub fn make_env(
        &self,
        env_name: &str,
        experiment_name: Option<&str>,
        resume_experiment: bool,
        channel_type: ChannelType,
        seed: Option<u64>,
    ) -> Result<EnvHandle, ClientError> {
        let reply = self.call(Message::Make(MakeRequest {
            env_name: env_name.to_owned(),
            experiment_name: experiment_name.map(str::to_owned),
            resume_experiment,
            channel_type,
            seed,
        }))?;
        match reply {
            Message::MakeOk {
                env_handle,
                obs_shape,
                action_space,
            } => Ok(EnvHandle {
                handle: env_handle,
                env_name: env_name.to_owned(),
                channel_type,
                obs_shape,
                action_space,
            }),
            other => Err(ClientError::Unexpected {
                request: "make",
                got: other.type_name(),
            }),
        }
    }

    pub fn reset(&self, env: &EnvHandle) -> Result<Observation, ClientError> {
        match self.call(Message::Reset {
            env_handle: env.handle,
        })? {
            Message::ResetOk { observation } => Ok(observation),
            other => Err(ClientError::Unexpected {
                request: "reset",
                got: other.type_name(),
            }),
        }
    }

    pub fn step(&self, env: &EnvHandle, action: &Action) -> Result<StepReply, ClientError> {
        let reply = self.call(Message::Step {
            env_handle: env.handle,
            action: *action,
        })?;
        match reply {
            Message::StepOk {
                reward,
                done,
                termination,
                step_index,
                observation,
            } => Ok(StepReply {
                observation,
                reward,
                done,
                termination,
                step_index,
            }),
            other => Err(ClientError::Unexpected {
                request: "step",
                got: other.type_name(),
            }),
        }
    }

    pub fn close(&self, env: EnvHandle) -> Result<(), ClientError> {
        match self.call(Message::Close {
            env_handle: env.handle,
        })? {
            Message::CloseOk => Ok(()),
            other => Err(ClientError::Unexpected {
                request: "close",
                got: other.type_name(),
            }),
        }
    }

    pub fn heartbeat(&self) -> Result<(), ClientError> {
        match self.call(Message::Heartbeat)? {
            Message::Heartbeat => Ok(()),
            other => Err(ClientError::Unexpected {
                request: "heartbeat",
                got: other.type_name(),
            }),
        }
    }

    pub fn leaderboard(&self, top_n: u32) -> Result<Vec<LeaderboardEntry>, ClientError> {
        match self.call(Message::LeaderboardQuery { top_n })? {
            Message::LeaderboardOk { entries } => Ok(entries),
            other => Err(ClientError::Unexpected {
                request: "leaderboard_query",
                got: other.type_name(),
            }),
        }
    }

    /// Ground-truth robot pose and monolith centre. Servers refuse this
    /// unless started with pose debugging enabled.
    pub fn debug_pose(&self, env: &EnvHandle) -> Result<(Pose2D, [f64; 2]), ClientError> {
        match self.call(Message::DebugPose {
            env_handle: env.handle,
        })? {
            Message::DebugPoseOk { pose, monolith } => Ok((pose, monolith)),
            other => Err(ClientError::Unexpected {
                request: "debug_pose",
                got: other.type_name(),
            }),
        }
    }
}

impl Drop for ClientSession {
    fn drop(&mut self) {
        if let Some((stop, handle)) = self.heartbeat.take() {
            let _ = stop.send(());
            let _ = handle.join();
        }
        let _ = lock(&self.conn).writer.shutdown(Shutdown::Both);
    }
}

fn heartbeat_loop(conn: &Mutex<Conn>, stopped: &mpsc::Receiver<()>, interval: Duration) {
    let tick = (interval / 4).max(Duration::from_millis(10));
    while let Err(mpsc::RecvTimeoutError::Timeout) = stopped.recv_timeout(tick) {
        let mut guard = match conn.try_lock() {
            Ok(g) => g,
            Err(TryLockError::Poisoned(p)) => p.into_inner(),
            // A request is in flight, which refreshes the lease by itself.
            Err(TryLockError::WouldBlock) => continue,
        };
        if guard.broken {
            return;
        }
        if guard.last_sent.elapsed() >= interval {
            if let Err(e) = guard.call(Message::Heartbeat) {
                log::warn!("heartbeat failed: {e}");
            }
        }
    }
}

/// Queries the leaderboard without authenticating.
pub fn fetch_leaderboard(addr: &str, top_n: u32) -> Result<Vec<LeaderboardEntry>, ClientError> {
    let options = SessionOptions::default();
    let mut conn = new_conn(open_stream(addr, &options)?, addr)?;
    match conn.call(Message::LeaderboardQuery { top_n })? {
        Message::LeaderboardOk { entries } => Ok(entries),
        other => Err(ClientError::Unexpected {
            request: "leaderboard_query",
            got: other.type_name(),
        }),
    }
}
