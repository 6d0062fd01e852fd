mod common;

use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use chrono::Utc;
use common::harness::{self, booked_user};
use gymgate::client::{dump_observation, ClientError, ClientSession, SessionOptions};
use gymgate::gateway::{add_user, Gateway, ServerConfig};
use gymgate::protocol::{
    encode_frame, read_envelope, write_envelope, ActionSpace, Envelope, ErrorCode, Message,
};
use gymgate::world::{Action, ChannelType, DiscreteAction, Observation, Termination};

const ENV: &str = "OffWorldMonolithDiscreteSim-v0";
const LEFT: Action = Action::Discrete(DiscreteAction::Left);

fn code(r: Result<impl std::fmt::Debug, ClientError>) -> Option<ErrorCode> {
    r.expect_err("expected a server error").code()
}

fn quiet_session(addr: &str, token: &str) -> ClientSession {
    let options = SessionOptions {
        heartbeat_interval: Duration::from_secs(3600),
        ..SessionOptions::default()
    };
    ClientSession::connect_with(addr, token, options).unwrap()
}

fn raw(addr: &str) -> TcpStream {
    let s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    s
}

fn call(stream: &mut TcpStream, id: u64, message: Message) -> Envelope {
    write_envelope(stream, &Envelope::new(id, message)).unwrap();
    read_envelope(stream).unwrap()
}

#[test]
fn handshake_outcomes() {
    let server = harness::start_default();
    let ok = ClientSession::connect(&server.addr(), &server.token).unwrap();
    assert!(ok.session_id().starts_with("s-"));

    let bad = ClientSession::connect(&server.addr(), "not-a-token").unwrap_err();
    assert_eq!(bad.code(), Some(ErrorCode::AuthFailed));
    assert_eq!(bad.exit_code(), 3);

    // Known user, nothing booked: refused at hello, picked up without restart.
    let token = add_user(server.dir.path(), "bob", Utc::now()).unwrap();
    let refused = ClientSession::connect(&server.addr(), &token).map(|_| ());
    assert_eq!(code(refused), Some(ErrorCode::NoBooking));
}

#[test]
fn requests_before_hello_are_refused_but_leaderboard_is_public() {
    let server = harness::start_default();
    let mut s = raw(&server.addr());
    let reply = call(&mut s, 1, Message::Reset { env_handle: 1 });
    assert_eq!(reply.id, 1);
    assert!(matches!(
        reply.message,
        Message::Error {
            code: ErrorCode::NotAuthenticated,
            ..
        }
    ));
    let reply = call(&mut s, 2, Message::LeaderboardQuery { top_n: 5 });
    assert_eq!(reply.message, Message::LeaderboardOk { entries: vec![] });
    assert_eq!(
        call(&mut s, 3, Message::Heartbeat).message,
        Message::Heartbeat
    );
}

#[test]
fn make_reports_shape_and_action_space() {
    let server = harness::start_default();
    let session = ClientSession::connect(&server.addr(), &server.token).unwrap();
    for (name, channels, c, space) in [
        (
            ENV,
            ChannelType::DepthOnly,
            1,
            ActionSpace::Discrete { n: 4 },
        ),
        (
            "OffWorldMonolithContinuousSim-v0",
            ChannelType::RgbOnly,
            3,
            ActionSpace::Box {
                low: [-0.5, -1.0],
                high: [0.5, 1.0],
            },
        ),
        (
            "OffWorldMonolithObstaclesDiscreteSim-v0",
            ChannelType::Rgbd,
            4,
            ActionSpace::Discrete { n: 4 },
        ),
    ] {
        let env = session
            .make_env(name, None, false, channels, Some(1))
            .unwrap();
        assert_eq!(env.obs_shape, [240, 320, c]);
        assert_eq!(env.action_space, space);
        let obs = session.reset(&env).unwrap();
        assert_eq!(obs.shape(), [240, 320, c]);
        session.close(env).unwrap();
    }
}

#[test]
fn second_session_is_busy_until_close() {
    let server = harness::start_default();
    let a = ClientSession::connect(&server.addr(), &server.token).unwrap();
    let b = ClientSession::connect(&server.addr(), &server.token).unwrap();
    let held = a
        .make_env(ENV, None, false, ChannelType::DepthOnly, None)
        .unwrap();
    let busy = b
        .make_env(ENV, None, false, ChannelType::DepthOnly, None)
        .unwrap_err();
    assert_eq!(busy.code(), Some(ErrorCode::Busy));
    assert_eq!(busy.exit_code(), 4);
    // Other environments are independent.
    b.make_env(
        "OffWorldMonolithDiscreteReal-v0",
        None,
        false,
        ChannelType::DepthOnly,
        None,
    )
    .unwrap();
    a.close(held).unwrap();
    b.make_env(ENV, None, false, ChannelType::DepthOnly, None)
        .unwrap();
}

#[test]
fn disconnect_releases_the_lease() {
    let server = harness::start_default();
    let a = ClientSession::connect(&server.addr(), &server.token).unwrap();
    a.make_env(ENV, None, false, ChannelType::DepthOnly, None)
        .unwrap();
    drop(a);
    let b = ClientSession::connect(&server.addr(), &server.token).unwrap();
    let mut last = None;
    for _ in 0..50 {
        match b.make_env(ENV, None, false, ChannelType::DepthOnly, None) {
            Ok(_) => return,
            Err(e) => last = Some(e),
        }
        thread::sleep(Duration::from_millis(20));
    }
    panic!("still busy: {last:?}");
}

#[test]
fn unknown_env_lists_valid_names() {
    let server = harness::start_default();
    let session = ClientSession::connect(&server.addr(), &server.token).unwrap();
    let err = session
        .make_env("OffWorldNope-v0", None, false, ChannelType::DepthOnly, None)
        .unwrap_err();
    assert_eq!(err.code(), Some(ErrorCode::UnknownEnv));
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains(ENV), "{err}");
}

#[test]
fn experiment_names_and_resume() {
    let server = harness::start_default();
    let session = ClientSession::connect(&server.addr(), &server.token).unwrap();
    let env = session
        .make_env(ENV, Some("exp"), false, ChannelType::DepthOnly, Some(5))
        .unwrap();
    session.reset(&env).unwrap();
    while !session.step(&env, &LEFT).unwrap().done {}
    session.close(env).unwrap();

    let taken = session
        .make_env(ENV, Some("exp"), false, ChannelType::DepthOnly, None)
        .map(|_| ());
    assert_eq!(code(taken), Some(ErrorCode::NameTaken));
    let missing = session
        .make_env(ENV, Some("ghost"), true, ChannelType::DepthOnly, None)
        .map(|_| ());
    assert_eq!(code(missing), Some(ErrorCode::NotFound));
    let other_env = session
        .make_env(
            "OffWorldMonolithContinuousSim-v0",
            Some("exp"),
            true,
            ChannelType::DepthOnly,
            None,
        )
        .map(|_| ());
    assert_eq!(code(other_env), Some(ErrorCode::BadRequest));

    // A failed make must not leave the env leased.
    let env = session
        .make_env(ENV, Some("exp"), true, ChannelType::DepthOnly, Some(6))
        .unwrap();
    session.reset(&env).unwrap();
    while !session.step(&env, &LEFT).unwrap().done {}
    let board = session.leaderboard(10).unwrap();
    assert_eq!(board.len(), 0, "fewer than 100 episodes never rank");
    let snapshot = gymgate::gateway::Authority::load_snapshot(server.dir.path()).unwrap();
    let exp = &snapshot.experiments[0];
    assert_eq!(
        exp.episodes
            .iter()
            .map(|e| e.episode_index)
            .collect::<Vec<_>>(),
        [0, 1]
    );
    assert!(exp
        .episodes
        .iter()
        .all(|e| e.steps == 100 && e.total_reward == 0.0));
}

#[test]
fn step_errors_are_typed() {
    let server = harness::start_default();
    let session = ClientSession::connect(&server.addr(), &server.token).unwrap();
    let env = session
        .make_env(ENV, None, false, ChannelType::DepthOnly, Some(1))
        .unwrap();
    assert_eq!(code(session.step(&env, &LEFT)), Some(ErrorCode::NoEpisode));
    session.reset(&env).unwrap();
    let wrong = Action::Continuous {
        linear: 0.1,
        angular: 0.0,
    };
    assert_eq!(
        code(session.step(&env, &wrong)),
        Some(ErrorCode::WrongActionKind)
    );
    assert_eq!(code(session.debug_pose(&env)), Some(ErrorCode::Forbidden));
    let stale = env.clone();
    session.close(env).unwrap();
    assert_eq!(
        code(session.step(&stale, &LEFT)),
        Some(ErrorCode::InvalidHandle)
    );
}

fn short_ttl() -> ServerConfig {
    ServerConfig {
        lease_ttl_secs: 0.5,
        sweep_interval_secs: 0.1,
        ..ServerConfig::default()
    }
}

#[test]
fn silent_session_loses_its_lease() {
    let server = harness::start(short_ttl());
    let idle = quiet_session(&server.addr(), &server.token);
    let env = idle
        .make_env(ENV, None, false, ChannelType::DepthOnly, None)
        .unwrap();
    idle.reset(&env).unwrap();
    thread::sleep(Duration::from_millis(900));
    server.gateway.sweep_now();

    let other = ClientSession::connect(&server.addr(), &server.token).unwrap();
    other
        .make_env(ENV, None, false, ChannelType::DepthOnly, None)
        .unwrap();
    assert_eq!(code(idle.step(&env, &LEFT)), Some(ErrorCode::LeaseLost));
    assert_eq!(code(idle.close(env)), Some(ErrorCode::LeaseLost));
}

#[test]
fn heartbeats_keep_an_idle_session_leased() {
    // Ten ttls of idleness, the same ratio as ten minutes against the default.
    let server = harness::start(short_ttl());
    let options = SessionOptions {
        heartbeat_interval: Duration::from_millis(100),
        ..SessionOptions::default()
    };
    let session = ClientSession::connect_with(&server.addr(), &server.token, options).unwrap();
    let env = session
        .make_env(ENV, None, false, ChannelType::DepthOnly, None)
        .unwrap();
    session.reset(&env).unwrap();
    thread::sleep(Duration::from_secs(5));
    let r = session.step(&env, &LEFT).unwrap();
    assert_eq!(r.step_index, 1);
    let other = ClientSession::connect(&server.addr(), &server.token).unwrap();
    let busy = other
        .make_env(ENV, None, false, ChannelType::DepthOnly, None)
        .map(|_| ());
    assert_eq!(code(busy), Some(ErrorCode::Busy));
}

#[test]
fn pipelined_requests_are_rejected() {
    let server = harness::start_default();
    let mut s = raw(&server.addr());
    let mut burst = encode_frame(&Envelope::new(1, Message::Heartbeat)).unwrap();
    burst.extend(encode_frame(&Envelope::new(2, Message::Heartbeat)).unwrap());
    s.write_all(&burst).unwrap();
    let reply = read_envelope(&mut s).unwrap();
    assert!(
        matches!(
            reply.message,
            Message::Error {
                code: ErrorCode::PipeliningUnsupported,
                ..
            }
        ),
        "{reply:?}"
    );
    assert!(
        read_envelope(&mut s).is_err(),
        "connection should be closed"
    );
}

#[test]
fn malformed_and_foreign_version_frames_get_typed_errors() {
    let server = harness::start_default();
    let mut s = raw(&server.addr());
    let header = br#"{"id":9,"type":"heartbeat","v":2}"#;
    let mut frame = ((4 + header.len()) as u32).to_be_bytes().to_vec();
    frame.extend((header.len() as u32).to_be_bytes());
    frame.extend(header);
    s.write_all(&frame).unwrap();
    let reply = read_envelope(&mut s).unwrap();
    assert_eq!(reply.id, 9);
    assert!(matches!(
        reply.message,
        Message::Error {
            code: ErrorCode::VersionMismatch,
            ..
        }
    ));

    let mut s = raw(&server.addr());
    s.write_all(&[0xff, 0xff, 0xff, 0xff]).unwrap();
    let reply = read_envelope(&mut s).unwrap();
    assert!(matches!(
        reply.message,
        Message::Error {
            code: ErrorCode::BadRequest,
            ..
        }
    ));
}

#[test]
fn dump_writes_one_file_per_plane() {
    let server = harness::start_default();
    let session = ClientSession::connect(&server.addr(), &server.token).unwrap();
    for (channels, files) in [
        (ChannelType::DepthOnly, vec!["depth.pgm"]),
        (ChannelType::RgbOnly, vec!["rgb.ppm"]),
        (ChannelType::Rgbd, vec!["depth.pgm", "rgb.ppm"]),
    ] {
        let out = tempfile::tempdir().unwrap();
        let env = session
            .make_env(ENV, None, false, channels, Some(2))
            .unwrap();
        let written = dump_observation(&session, &env, out.path()).unwrap();
        session.close(env).unwrap();
        let mut names: Vec<String> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        names.sort();
        assert_eq!(names, files);
        assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), files.len());
    }
}

/// A fake server that decodes every frame the client library sends and
/// answers with canned replies.
#[test]
fn client_frames_follow_the_schema() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let (tx, rx) = mpsc::channel();
    let fake = thread::spawn(move || {
        let (mut s, _) = listener.accept().unwrap();
        let blank = Observation::new(
            ChannelType::DepthOnly,
            320,
            240,
            Some(vec![0; 320 * 240]),
            None,
        )
        .unwrap();
        while let Ok(request) = read_envelope(&mut s) {
            let reply = match &request.message {
                Message::Hello { .. } => Message::HelloOk {
                    session_id: "s-fake".into(),
                    server_version: "fake/0".into(),
                },
                Message::Make(_) => Message::MakeOk {
                    env_handle: 7,
                    obs_shape: [240, 320, 1],
                    action_space: ActionSpace::Discrete { n: 4 },
                },
                Message::Reset { .. } => Message::ResetOk {
                    observation: blank.clone(),
                },
                Message::Step { .. } => Message::StepOk {
                    reward: 0.0,
                    done: false,
                    termination: Termination::None,
                    step_index: 1,
                    observation: blank.clone(),
                },
                Message::Close { .. } => Message::CloseOk,
                Message::Heartbeat => Message::Heartbeat,
                Message::LeaderboardQuery { .. } => Message::LeaderboardOk { entries: vec![] },
                other => Message::error(ErrorCode::BadRequest, other.type_name()),
            };
            tx.send(request.clone()).unwrap();
            write_envelope(&mut s, &Envelope::new(request.id, reply)).unwrap();
        }
    });

    let session = quiet_session(&addr, "tok");
    let env = session
        .make_env(ENV, Some("x"), false, ChannelType::DepthOnly, Some(3))
        .unwrap();
    assert_eq!(env.handle, 7);
    session.reset(&env).unwrap();
    session.step(&env, &LEFT).unwrap();
    session.heartbeat().unwrap();
    session.leaderboard(3).unwrap();
    session.close(env).unwrap();
    drop(session);
    fake.join().unwrap();

    let seen: Vec<Envelope> = rx.iter().collect();
    let types: Vec<&str> = seen.iter().map(|e| e.message.type_name()).collect();
    assert_eq!(
        types,
        [
            "hello",
            "make",
            "reset",
            "step",
            "heartbeat",
            "leaderboard_query",
            "close"
        ]
    );
    let ids: Vec<u64> = seen.iter().map(|e| e.id).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]), "ids {ids:?}");
    assert_eq!(
        seen[0].message,
        Message::Hello {
            token: "tok".into(),
            client_version: gymgate::client::CLIENT_VERSION.into(),
        }
    );
    assert_eq!(
        seen[3].message,
        Message::Step {
            env_handle: 7,
            action: LEFT
        }
    );
}

#[test]
fn users_and_bookings_added_while_running_are_picked_up() {
    let dir = tempfile::tempdir().unwrap();
    let gateway = Gateway::start(
        ServerConfig {
            port: 0,
            ..ServerConfig::default()
        },
        dir.path(),
    )
    .unwrap();
    let token = booked_user(dir.path(), "dora");
    let session = ClientSession::connect(&gateway.local_addr().to_string(), &token).unwrap();
    session
        .make_env(ENV, None, false, ChannelType::DepthOnly, None)
        .unwrap();
}
