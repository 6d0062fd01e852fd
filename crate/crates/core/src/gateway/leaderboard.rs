//! Ranked per-experiment aggregates.
//!
//! The score of an experiment is the best mean total reward over any
//! contiguous window of [`WINDOW`] episodes. Experiments with fewer episodes
//! have no entry.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::experiment::Experiment;

pub const WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub experiment_name: String,
    pub owner: String,
    pub env_name: String,
    pub episodes_count: u64,
    pub best_window_avg: f64,
    pub last_updated: DateTime<Utc>,
}

/// Best mean over contiguous windows of `window` values, in one pass.
pub fn best_window_avg(rewards: &[f64], window: usize) -> Option<f64> {
    if window == 0 || rewards.len() < window {
        return None;
    }
    let mut sum: f64 = rewards[..window].iter().sum();
    let mut best = sum;
    for i in window..rewards.len() {
        sum += rewards[i] - rewards[i - window];
        best = best.max(sum);
    }
    Some(best / window as f64)
}

pub fn entry_for(experiment: &Experiment, now: DateTime<Utc>) -> Option<LeaderboardEntry> {
    let avg = best_window_avg(&experiment.rewards(), WINDOW)?;
    Some(LeaderboardEntry {
        experiment_name: experiment.name.clone(),
        owner: experiment.owner.clone(),
        env_name: experiment.env_name.clone(),
        episodes_count: experiment.episodes.len() as u64,
        best_window_avg: avg,
        last_updated: now,
    })
}

/// Higher average first, then fewer episodes, then earlier update.
pub fn rank_order(a: &LeaderboardEntry, b: &LeaderboardEntry) -> Ordering {
    b.best_window_avg
        .total_cmp(&a.best_window_avg)
        .then(a.episodes_count.cmp(&b.episodes_count))
        .then(a.last_updated.cmp(&b.last_updated))
        .then_with(|| (&a.owner, &a.experiment_name).cmp(&(&b.owner, &b.experiment_name)))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Leaderboard {
    entries: BTreeMap<(String, String), LeaderboardEntry>,
}

impl Leaderboard {
    /// Later entries for the same experiment replace earlier ones.
    pub fn upsert(&mut self, entry: LeaderboardEntry) {
        self.entries
            .insert((entry.owner.clone(), entry.experiment_name.clone()), entry);
    }

    pub fn get(&self, owner: &str, experiment: &str) -> Option<&LeaderboardEntry> {
        self.entries.get(&(owner.to_owned(), experiment.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, n: usize) -> Vec<LeaderboardEntry> {
        let mut all: Vec<LeaderboardEntry> = self.entries.values().cloned().collect();
        all.sort_by(rank_order);
        all.truncate(n);
        all
    }
}
