//! Named experiments and their append-only episode logs.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_index: u64,
    pub total_reward: f64,
    pub steps: u32,
    pub ended_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub name: String,
    pub owner: String,
    pub created_at: DateTime<Utc>,
    pub env_name: String,
    pub episodes: Vec<EpisodeRecord>,
}

impl Experiment {
    pub fn next_episode_index(&self) -> u64 {
        self.episodes.last().map_or(0, |e| e.episode_index + 1)
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.total_reward).collect()
    }
}

/// One line of `experiments.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentEvent {
    Created {
        owner: String,
        name: String,
        env_name: String,
        created_at: DateTime<Utc>,
    },
    Episode {
        owner: String,
        name: String,
        episode_index: u64,
        total_reward: f64,
        steps: u32,
        ended_at: DateTime<Utc>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExperimentError {
    #[error("experiment '{0}' already exists")]
    NameTaken(String),
    #[error("experiment '{0}' does not exist")]
    NotFound(String),
    #[error("experiment '{name}' belongs to environment {env_name}")]
    EnvMismatch { name: String, env_name: String },
    #[error("inconsistent experiment log: {0}")]
    Inconsistent(String),
}

type Key = (String, String);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentBook {
    experiments: BTreeMap<Key, Experiment>,
}

impl ExperimentBook {
    pub fn get(&self, owner: &str, name: &str) -> Option<&Experiment> {
        self.experiments.get(&(owner.to_owned(), name.to_owned()))
    }

    pub fn all(&self) -> impl Iterator<Item = &Experiment> {
        self.experiments.values()
    }

    /// Decides what registering `name` means. `Ok(Some(event))` is a new
    /// experiment still to be persisted and applied; `Ok(None)` resumes an
    /// existing one.
    pub fn plan_register(
        &self,
        owner: &str,
        name: &str,
        resume: bool,
        env_name: &str,
        now: DateTime<Utc>,
    ) -> Result<Option<ExperimentEvent>, ExperimentError> {
        match (self.get(owner, name), resume) {
            (Some(_), false) => Err(ExperimentError::NameTaken(name.to_owned())),
            (None, true) => Err(ExperimentError::NotFound(name.to_owned())),
            (Some(e), true) if e.env_name != env_name => Err(ExperimentError::EnvMismatch {
                name: name.to_owned(),
                env_name: e.env_name.clone(),
            }),
            (Some(_), true) => Ok(None),
            (None, false) => Ok(Some(ExperimentEvent::Created {
                owner: owner.to_owned(),
                name: name.to_owned(),
                env_name: env_name.to_owned(),
                created_at: now,
            })),
        }
    }

    pub fn plan_episode(
        &self,
        owner: &str,
        name: &str,
        total_reward: f64,
        steps: u32,
        now: DateTime<Utc>,
    ) -> Result<ExperimentEvent, ExperimentError> {
        let e = self
            .get(owner, name)
            .ok_or_else(|| ExperimentError::NotFound(name.to_owned()))?;
        Ok(ExperimentEvent::Episode {
            owner: owner.to_owned(),
            name: name.to_owned(),
            episode_index: e.next_episode_index(),
            total_reward,
            steps,
            ended_at: now,
        })
    }

    /// Applies a persisted event. Recorded episodes are never rewritten.
    pub fn apply(&mut self, event: ExperimentEvent) -> Result<&Experiment, ExperimentError> {
        match event {
            ExperimentEvent::Created {
                owner,
                name,
                env_name,
                created_at,
            } => {
                let key = (owner.clone(), name.clone());
                if self.experiments.contains_key(&key) {
                    return Err(ExperimentError::NameTaken(name));
                }
                Ok(self.experiments.entry(key).or_insert(Experiment {
                    name,
                    owner,
                    created_at,
                    env_name,
                    episodes: Vec::new(),
                }))
            }
            ExperimentEvent::Episode {
                owner,
                name,
                episode_index,
                total_reward,
                steps,
                ended_at,
            } => {
                let e = self
                    .experiments
                    .get_mut(&(owner, name.clone()))
                    .ok_or(ExperimentError::NotFound(name))?;
                if episode_index < e.next_episode_index() {
                    return Err(ExperimentError::Inconsistent(format!(
                        "episode {episode_index} of '{}' is not after {}",
                        e.name,
                        e.next_episode_index()
                    )));
                }
                e.episodes.push(EpisodeRecord {
                    episode_index,
                    total_reward,
                    steps,
                    ended_at,
                });
                Ok(e)
            }
        }
    }
}
