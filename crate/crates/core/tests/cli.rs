use std::path::Path;
use std::process::{Command, Output};

use gymgate::gateway::{Gateway, ServerConfig};

const ENV: &str = "OffWorldMonolithDiscreteSim-v0";

fn gymgate(args: &[&str], data: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gymgate"))
        .args(args)
        .arg("--data-dir")
        .arg(data)
        .output()
        .unwrap()
}

fn gymctl(addr: &str, token: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gymctl"));
    cmd.env_remove("GYMGATE_TOKEN")
        .env("GYMGATE_ADDR", addr)
        .args(args);
    if let Some(t) = token {
        cmd.env("GYMGATE_TOKEN", t);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Setup {
    _dir: tempfile::TempDir,
    data: std::path::PathBuf,
    token: String,
    gateway: Gateway,
}

fn setup() -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = gymgate(&["user", "add", "--name", "erin"], &data);
    assert!(out.status.success(), "{out:?}");
    let token = stdout(&out).trim().to_string();
    assert_eq!(token.len(), 64);
    let out = gymgate(
        &[
            "booking", "add", "--user", "erin", "--env", ENV, "--start", "now-5m", "--end",
            "now+2h",
        ],
        &data,
    );
    assert!(out.status.success(), "{out:?}");
    let gateway = Gateway::start(
        ServerConfig {
            port: 0,
            ..ServerConfig::default()
        },
        &data,
    )
    .unwrap();
    Setup {
        _dir: dir,
        data,
        token,
        gateway,
    }
}

#[test]
fn admin_commands_validate_input() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gymgate(&["user", "add", "--name", "fay"], dir.path())
        .status
        .success());
    let dup = gymgate(&["user", "add", "--name", "fay"], dir.path());
    assert_eq!(dup.status.code(), Some(1));
    let bad_time = gymgate(
        &[
            "booking", "add", "--user", "fay", "--env", ENV, "--start", "soon", "--end", "now+1h",
        ],
        dir.path(),
    );
    assert_eq!(bad_time.status.code(), Some(2));
    let book = |start: &str, end: &str| {
        gymgate(
            &[
                "booking",
                "add",
                "--user",
                "fay",
                "--env",
                "MonolithDiscreteSim-v0",
                "--start",
                start,
                "--end",
                end,
            ],
            dir.path(),
        )
    };
    assert!(book("2030-01-01T10:00:00Z", "2030-01-01T11:00:00Z")
        .status
        .success());
    let overlap = book("2030-01-01T10:30:00Z", "2030-01-01T12:00:00Z");
    assert_eq!(overlap.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&overlap.stderr).contains("overlaps"));
    let usage = Command::new(env!("CARGO_BIN_EXE_gymgate"))
        .arg("frobnicate")
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn connect_test_and_exit_codes() {
    let s = setup();
    let addr = s.gateway.local_addr().to_string();
    let ok = gymctl(&addr, Some(&s.token), &["connect-test"]);
    assert!(ok.status.success(), "{ok:?}");
    assert!(stdout(&ok).starts_with("connected: session s-"));
    assert_eq!(
        gymctl(&addr, Some("wrong"), &["connect-test"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        gymctl(&addr, None, &["connect-test"]).status.code(),
        Some(2)
    );
    let unknown = gymctl(
        &addr,
        Some(&s.token),
        &[
            "run",
            "--env",
            "Nope",
            "--experiment",
            "e",
            "--out",
            "/dev/null",
        ],
    );
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn run_writes_one_row_per_episode() {
    let s = setup();
    let addr = s.gateway.local_addr().to_string();
    let out_dir = tempfile::tempdir().unwrap();

    let empty = out_dir.path().join("empty.csv");
    let o = gymctl(
        &addr,
        Some(&s.token),
        &[
            "run",
            "--env",
            ENV,
            "--experiment",
            "zero",
            "--episodes",
            "0",
            "--out",
            empty.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{o:?}");
    assert_eq!(
        std::fs::read_to_string(&empty).unwrap(),
        "episode_index,reward,steps,termination\n"
    );

    let summary = out_dir.path().join("s.csv");
    let args = [
        "run",
        "--env",
        ENV,
        "--experiment",
        "three",
        "--channels",
        "rgb",
        "--policy",
        "servo",
        "--episodes",
        "3",
        "--seed",
        "4",
        "--out",
        summary.to_str().unwrap(),
    ];
    let o = gymctl(&addr, Some(&s.token), &args);
    assert!(o.status.success(), "{o:?}");
    let rows = gymgate::client::read_summary(&summary).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.episode_index).collect::<Vec<_>>(),
        [0, 1, 2]
    );
    assert!(rows.iter().all(|r| r.steps >= 1 && r.steps <= 100));

    // Same name again: taken, unless resuming.
    let o = gymctl(&addr, Some(&s.token), &args);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    let mut resume = args.to_vec();
    resume.push("--resume");
    assert!(gymctl(&addr, Some(&s.token), &resume).status.success());
    let snapshot = gymgate::gateway::Authority::load_snapshot(&s.data).unwrap();
    let exp = snapshot
        .experiments
        .iter()
        .find(|e| e.name == "three")
        .unwrap();
    assert_eq!(exp.episodes.len(), 6);
}

#[test]
fn oracle_policy_needs_a_debug_server() {
    let s = setup();
    let addr = s.gateway.local_addr().to_string();
    let out = tempfile::tempdir().unwrap();
    let csv = out.path().join("o.csv");
    let o = gymctl(
        &addr,
        Some(&s.token),
        &[
            "run",
            "--env",
            ENV,
            "--experiment",
            "o",
            "--policy",
            "oracle",
            "--episodes",
            "1",
            "--out",
            csv.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(5), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("forbidden"));
}

#[test]
fn dump_and_leaderboard() {
    let s = setup();
    let addr = s.gateway.local_addr().to_string();
    let out = tempfile::tempdir().unwrap();
    let o = gymctl(
        &addr,
        Some(&s.token),
        &[
            "dump",
            "--channels",
            "rgbd",
            "--out",
            out.path().to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).lines().count(), 2);
    let pgm = std::fs::read(out.path().join("depth.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n320 240\n65535\n"));
    assert_eq!(pgm.len(), b"P5\n320 240\n65535\n".len() + 320 * 240 * 2);

    let o = gymctl(&addr, None, &["leaderboard", "--top", "5"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o), "");
    let o = gymgate(&["leaderboard", "show", "--top", "5"], &s.data);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1, "header only");
}
