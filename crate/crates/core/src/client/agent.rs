use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::policy::{Policy, PoseHint};
use super::session::{ClientError, ClientSession, EnvHandle};
use crate::world::Termination;

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode_index: u64,
    pub reward: f64,
    pub steps: u32,
    pub termination: Termination,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentSummary {
    pub episodes: Vec<EpisodeSummary>,
}

impl AgentSummary {
    pub fn successes(&self) -> usize {
        self.episodes
            .iter()
            .filter(|e| e.termination == Termination::Success)
            .count()
    }

    /// Zero for an empty run.
    pub fn success_rate(&self) -> f64 {
        if self.episodes.is_empty() {
            0.0
        } else {
            self.successes() as f64 / self.episodes.len() as f64
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("after {} episodes: {source}", partial.episodes.len())]
    Client {
        partial: AgentSummary,
        source: ClientError,
    },
    #[error("writing summary: {0}")]
    Csv(#[from] csv::Error),
}

/// Plays `episodes` full episodes and streams one CSV row per finished
/// episode to `out`, flushing after each. On a protocol error the rows
/// written so far stay valid.
pub fn run_agent<W: Write>(
    session: &ClientSession,
    env: &EnvHandle,
    policy: &mut dyn Policy,
    episodes: u64,
    out: &mut csv::Writer<W>,
) -> Result<AgentSummary, AgentError> {
    let mut summary = AgentSummary::default();
    for episode_index in 0..episodes {
        match play_episode(session, env, policy) {
            Ok((reward, steps, termination)) => {
                let row = EpisodeSummary {
                    episode_index,
                    reward,
                    steps,
                    termination,
                };
                out.serialize(row)?;
                out.flush().map_err(csv::Error::from)?;
                summary.episodes.push(row);
            }
            Err(source) => {
                out.flush().map_err(csv::Error::from)?;
                return Err(AgentError::Client {
                    partial: summary,
                    source,
                });
            }
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(summary)
}

fn play_episode(
    session: &ClientSession,
    env: &EnvHandle,
    policy: &mut dyn Policy,
) -> Result<(f64, u32, Termination), ClientError> {
    let mut observation = session.reset(env)?;
    policy.begin_episode();
    let mut total = 0.0;
    loop {
        let hint = if policy.needs_pose() {
            let (pose, monolith) = session.debug_pose(env)?;
            Some(PoseHint { pose, monolith })
        } else {
            None
        };
        let action = policy.act(&observation, hint.as_ref());
        let reply = session.step(env, &action)?;
        total += reply.reward;
        if reply.done {
            return Ok((total, reply.step_index, reply.termination));
        }
        observation = reply.observation;
    }
}

/// CSV writer with the summary header, even for zero episodes.
pub fn summary_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(["episode_index", "reward", "steps", "termination"])?;
    Ok(w)
}

/// Reads a summary written by [`run_agent`].
pub fn read_summary(path: &Path) -> Result<Vec<EpisodeSummary>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

/// Resets `env` and writes the first observation as `depth.pgm` and/or
/// `rgb.ppm` under `dir`.
pub fn dump_observation(
    session: &ClientSession,
    env: &EnvHandle,
    dir: &Path,
) -> Result<Vec<PathBuf>, DumpError> {
    let observation = session.reset(env)?;
    Ok(crate::world::pnm::dump_observation(&observation, dir)?)
}

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
