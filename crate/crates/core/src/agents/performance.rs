use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::policy::Policy;
use crate::error::{Error, Result};
use crate::harness::seeds::derive_seed;
use crate::maze::{optimal_moves, step, MazeEnv, MazeState};
use crate::observation::observe;
use crate::SimRng;

pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_THRESHOLD: f64 = 0.95;

/// `optimal / actual` when the goal was reached, else 0.
pub fn episode_performance(optimal: usize, actual: usize, reached: bool) -> f64 {
    if !reached || actual == 0 {
        return 0.0;
    }
    (optimal as f64 / actual as f64).clamp(0.0, 1.0)
}

/// Per-episode performance with its rolling mean and convergence point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub performance: Vec<f64>,
    pub rolling_mean: Vec<f64>,
    /// First episode whose full rolling window averages at least `threshold`.
    pub convergence_episode: Option<usize>,
    pub window: usize,
    pub threshold: f64,
}

impl PerformanceReport {
    pub fn new(performance: Vec<f64>, window: usize, threshold: f64) -> Self {
        let window = window.max(1);
        let rolling_mean: Vec<f64> = (0..performance.len())
            .map(|i| {
                let w = &performance[(i + 1).saturating_sub(window)..=i];
                w.iter().sum::<f64>() / w.len() as f64
            })
            .collect();
        let convergence_episode = rolling_mean
            .iter()
            .enumerate()
            .find(|(i, m)| i + 1 >= window && **m >= threshold)
            .map(|(i, _)| i);
        PerformanceReport {
            performance,
            rolling_mean,
            convergence_episode,
            window,
            threshold,
        }
    }

    pub fn with_defaults(performance: Vec<f64>) -> Self {
        Self::new(performance, DEFAULT_WINDOW, DEFAULT_THRESHOLD)
    }

    /// Rolling mean at the last episode, 0 when empty.
    pub fn final_mean(&self) -> f64 {
        self.rolling_mean.last().copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        if self.performance.is_empty() {
            return 0.0;
        }
        self.performance.iter().sum::<f64>() / self.performance.len() as f64
    }
}

/// Result of one acted episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult {
    pub moves: usize,
    pub optimal: usize,
    pub reached_goal: bool,
    pub performance: f64,
}

/// Step cap for episodes in scenarios without a time limit.
pub fn episode_cap(env: &MazeEnv) -> usize {
    env.scenario
        .time_limit
        .unwrap_or(4 * env.grid.width() * env.grid.height())
}

/// Acts `policy` from `start` until the episode ends or `cap` moves pass.
pub fn play_episode<P: Policy + ?Sized>(
    start: MazeState,
    policy: &mut P,
    rng: &mut SimRng,
    cap: usize,
) -> Result<EpisodeResult> {
    let goal = start
        .goal
        .ok_or_else(|| Error::Scenario("performance needs a goal".into()))?;
    let optimal = optimal_moves(&start.grid, start.player, goal)?
        .ok_or_else(|| Error::Scenario("goal unreachable from start".into()))?;
    let mut state = start;
    let mut moves = 0;
    while !state.is_terminal() && moves < cap {
        let action = policy.act(&observe(&state), rng);
        state = step(&state, action)?.state;
        moves += 1;
    }
    let reached_goal = state.at_goal();
    Ok(EpisodeResult {
        moves,
        optimal,
        reached_goal,
        performance: episode_performance(optimal, moves, reached_goal),
    })
}

/// Runs `episodes` episodes from seeded starts and scores each against the
/// BFS-optimal move count.
pub fn evaluate<P: Policy + ?Sized>(
    env: &MazeEnv,
    policy: &mut P,
    episodes: usize,
    seed: u64,
) -> Result<PerformanceReport> {
    let cap = episode_cap(env);
    let mut perf = Vec::with_capacity(episodes);
    for i in 0..episodes as u64 {
        let start = env.reset(derive_seed(seed, "eval-start", i))?;
        let mut rng = SimRng::seed_from_u64(derive_seed(seed, "eval-policy", i));
        perf.push(play_episode(start, policy, &mut rng, cap)?.performance);
    }
    Ok(PerformanceReport::with_defaults(perf))
}
