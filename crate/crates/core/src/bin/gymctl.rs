//! Command-line client for a running gateway.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gymgate::client::{
    dump_observation, fetch_leaderboard, run_agent, summary_writer, AgentError, ClientError,
    ClientSession, Policy, PoseOracle, RandomPolicy, ServoParams, ServoPolicy,
};
use gymgate::world::ChannelType;

#[derive(Parser)]
#[command(name = "gymctl", version, about = "Client for a gymgate server")]
struct Cli {
    #[arg(
        long,
        env = "GYMGATE_ADDR",
        default_value = "127.0.0.1:7007",
        global = true
    )]
    addr: String,
    #[arg(long, env = "GYMGATE_TOKEN", hide_env_values = true, global = true)]
    token: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Random,
    Servo,
    /// Steers from ground-truth pose; needs a server started with --debug-pose.
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Authenticate and print the session id.
    ConnectTest,
    /// Play episodes with a scripted policy and write a CSV summary.
    Run {
        #[arg(long)]
        env: String,
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        resume: bool,
        #[arg(long, default_value = "depth", value_parser = parse_channels)]
        channels: ChannelType,
        #[arg(long, value_enum, default_value_t = PolicyKind::Random)]
        policy: PolicyKind,
        #[arg(long, default_value_t = 10)]
        episodes: u64,
        #[arg(long)]
        out: PathBuf,
        /// Seeds both the environment and the random policy.
        #[arg(long)]
        seed: Option<u64>,
        /// TOML file overriding servo heuristics.
        #[arg(long)]
        servo_config: Option<PathBuf>,
    },
    /// Save the first observation of a fresh episode as PGM/PPM files.
    Dump {
        #[arg(long, default_value = "OffWorldMonolithDiscreteSim-v0")]
        env: String,
        #[arg(long, default_value = "rgbd", value_parser = parse_channels)]
        channels: ChannelType,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the leaderboard.
    Leaderboard {
        #[arg(long, default_value_t = 10)]
        top: u32,
    },
}

fn parse_channels(s: &str) -> Result<ChannelType, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Client(ClientError),
    Other(String),
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        Failure::Client(e)
    }
}

fn token(cli_token: Option<String>) -> Result<String, Failure> {
    cli_token.ok_or_else(|| Failure::Usage("no token; pass --token or set GYMGATE_TOKEN".into()))
}

fn load_servo(path: Option<PathBuf>) -> Result<ServoParams, Failure> {
    let Some(path) = path else {
        return Ok(ServoParams::default());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ConnectTest => {
            let session = ClientSession::connect(&cli.addr, &token(cli.token)?)?;
            println!(
                "connected: session {} server {}",
                session.session_id(),
                session.server_version()
            );
        }
        Command::Run {
            env,
            experiment,
            resume,
            channels,
            policy,
            episodes,
            out,
            seed,
            servo_config,
        } => {
            let servo = load_servo(servo_config)?;
            let session = ClientSession::connect(&cli.addr, &token(cli.token)?)?;
            let handle = session.make_env(&env, Some(&experiment), resume, channels, seed)?;
            let space = handle.action_space;
            let mut policy: Box<dyn Policy> = match policy {
                PolicyKind::Random => {
                    Box::new(RandomPolicy::new(space, seed.unwrap_or_else(rand::random)))
                }
                PolicyKind::Servo => Box::new(ServoPolicy::new(space, servo)),
                PolicyKind::Oracle => Box::new(PoseOracle::new(space)),
            };
            let mut writer = summary_writer(&out)
                .map_err(|e| Failure::Other(format!("{}: {e}", out.display())))?;
            let summary = match run_agent(&session, &handle, policy.as_mut(), episodes, &mut writer)
            {
                Ok(s) => s,
                Err(AgentError::Client { partial, source }) => {
                    eprintln!("gymctl: stopped after {} episodes", partial.episodes.len());
                    return Err(source.into());
                }
                Err(e) => return Err(Failure::Other(e.to_string())),
            };
            session.close(handle)?;
            println!(
                "{} episodes, {} successes ({:.1}%), summary in {}",
                summary.episodes.len(),
                summary.successes(),
                100.0 * summary.success_rate(),
                out.display()
            );
        }
        Command::Dump {
            env,
            channels,
            out,
            seed,
        } => {
            let session = ClientSession::connect(&cli.addr, &token(cli.token)?)?;
            let handle = session.make_env(&env, None, false, channels, seed)?;
            let files = dump_observation(&session, &handle, &out).map_err(|e| match e {
                gymgate::client::DumpError::Client(c) => Failure::Client(c),
                other => Failure::Other(other.to_string()),
            })?;
            session.close(handle)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Leaderboard { top } => {
            let entries = fetch_leaderboard(&cli.addr, top)?;
            for (i, e) in entries.iter().enumerate() {
                println!(
                    "{:>3}. {:<24} {:<12} {:<40} {:>6} episodes  best {:.3}",
                    i + 1,
                    e.experiment_name,
                    e.owner,
                    e.env_name,
                    e.episodes_count,
                    e.best_window_avg
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("gymctl: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Client(e)) => {
            eprintln!("gymctl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("gymctl: {msg}");
            ExitCode::from(5)
        }
    }
}
