//! Ranks three synthetic experiments by their best 100-episode window.
//!
//!     cargo run --example leaderboard

use chrono::{TimeZone, Utc};
use gymgate::gateway::{entry_for, EpisodeRecord, Experiment, Leaderboard};

fn experiment(name: &str, rewards: impl Iterator<Item = f64>) -> Experiment {
    let t0 = Utc.with_ymd_and_hms(2026, 6, 1, 0, 0, 0).unwrap();
    let episodes = rewards
        .enumerate()
        .map(|(i, r)| EpisodeRecord {
            episode_index: i as u64,
            total_reward: r,
            steps: if r > 0.0 { 20 } else { 100 },
            ended_at: t0 + chrono::Duration::minutes(i as i64),
        })
        .collect();
    Experiment {
        name: name.into(),
        owner: "ada".into(),
        created_at: t0,
        env_name: "OffWorldMonolithDiscreteSim-v0".into(),
        episodes,
    }
}

fn main() {
    let now = Utc::now();
    let runs = [
        // improves steadily
        experiment(
            "learner",
            (0..300).map(|i| f64::from(u8::from(i % 10 < i / 30))),
        ),
        // flat 50%
        experiment("coin", (0..150).map(|i| f64::from(i % 2))),
        // too short to rank
        experiment("fresh", (0..40).map(|_| 1.0)),
    ];
    let mut board = Leaderboard::default();
    for exp in &runs {
        match entry_for(exp, now) {
            Some(e) => board.upsert(e),
            None => println!(
                "{}: {} episodes, not ranked yet",
                exp.name,
                exp.episodes.len()
            ),
        }
    }
    for (rank, e) in board.top(10).iter().enumerate() {
        println!(
            "{}. {:<8} best window {:.2} over {} episodes",
            rank + 1,
            e.experiment_name,
            e.best_window_avg,
            e.episodes_count
        );
    }
}
