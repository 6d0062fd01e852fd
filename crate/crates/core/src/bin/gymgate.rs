//! Gateway server and operator commands.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use gymgate::gateway::{add_booking, add_user, parse_when, Authority, Gateway, ServerConfig};

#[derive(Parser)]
#[command(name = "gymgate", version, about = "Remote RL environment gateway")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataDir {
    /// Directory holding the JSON-lines stores.
    #[arg(long, env = "GYMGATE_DATA_DIR")]
    data_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the server.
    Serve {
        /// Server TOML; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataDir,
        /// Pace every environment like a physical robot.
        #[arg(long)]
        paced: bool,
        #[arg(long, env = "GYMGATE_PORT")]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<String>,
        /// Answer ground-truth pose queries (test deployments only).
        #[arg(long)]
        debug_pose: bool,
    },
    /// Manage users.
    User {
        #[command(subcommand)]
        command: UserCommand,
    },
    /// Manage time bookings.
    Booking {
        #[command(subcommand)]
        command: BookingCommand,
    },
    /// Inspect the leaderboard.
    Leaderboard {
        #[command(subcommand)]
        command: LeaderboardCommand,
    },
}

#[derive(Subcommand)]
enum UserCommand {
    /// Create a user and print its token.
    Add {
        #[arg(long)]
        name: String,
        #[command(flatten)]
        data: DataDir,
    },
}

#[derive(Subcommand)]
enum BookingCommand {
    /// Book an environment. Times are RFC 3339, `now`, or `now+2h` style.
    Add {
        #[arg(long)]
        user: String,
        #[arg(long)]
        env: String,
        #[arg(long)]
        start: String,
        #[arg(long)]
        end: String,
        #[command(flatten)]
        data: DataDir,
    },
}

#[derive(Subcommand)]
enum LeaderboardCommand {
    Show {
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[command(flatten)]
        data: DataDir,
    },
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("gymgate: {message}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Serve {
            config,
            data,
            paced,
            port,
            bind,
            debug_pose,
        } => {
            let mut cfg = match config {
                Some(path) => match ServerConfig::load(&path) {
                    Ok(c) => c,
                    Err(e) => return fail(e),
                },
                None => ServerConfig::default(),
            };
            cfg.paced |= paced;
            cfg.debug_pose |= debug_pose;
            if let Some(p) = port {
                cfg.port = p;
            }
            if let Some(b) = bind {
                cfg.bind = b;
            }
            let gateway = match Gateway::start(cfg, &data.data_dir) {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            println!("listening on {}", gateway.local_addr());
            let _ = std::io::stdout().flush();
            gateway.wait();
            ExitCode::SUCCESS
        }
        Command::User {
            command: UserCommand::Add { name, data },
        } => match add_user(&data.data_dir, &name, Utc::now()) {
            Ok(token) => {
                println!("{token}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Booking {
            command:
                BookingCommand::Add {
                    user,
                    env,
                    start,
                    end,
                    data,
                },
        } => {
            let now = Utc::now();
            let (start, end) = match (parse_when(&start, now), parse_when(&end, now)) {
                (Ok(s), Ok(e)) => (s, e),
                (Err(e), _) | (_, Err(e)) => {
                    eprintln!("gymgate: {e}");
                    return ExitCode::from(2);
                }
            };
            match add_booking(&data.data_dir, &user, &env, start, end) {
                Ok(b) => {
                    println!(
                        "booking {} for {} on {}: {} .. {}",
                        b.booking_id,
                        b.user_id,
                        b.env_id,
                        b.start.to_rfc3339(),
                        b.end.to_rfc3339()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Leaderboard {
            command: LeaderboardCommand::Show { top, data },
        } => match Authority::load_snapshot(&data.data_dir) {
            Ok(snapshot) => {
                println!(
                    "{:>4}  {:<24} {:<12} {:<40} {:>8} {:>7}",
                    "rank", "experiment", "owner", "env", "episodes", "best"
                );
                for (i, e) in snapshot.leaderboard.iter().take(top).enumerate() {
                    println!(
                        "{:>4}  {:<24} {:<12} {:<40} {:>8} {:>7.3}",
                        i + 1,
                        e.experiment_name,
                        e.owner,
                        e.env_name,
                        e.episodes_count,
                        e.best_window_avg
                    );
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
