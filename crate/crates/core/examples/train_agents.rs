//! Trains DQN and PPO on a 5x5 perfect maze from real experience and prints
//! how their greedy policies score against the shortest path.
//!
//! cargo run --release --example train_agents -- 2000

use dreaming_maze::agents::{train_cell, AgentKind, CellConfig};
use dreaming_maze::harness::config::ExperimentConfig;
use dreaming_maze::harness::experiment::{build_env, collect_real};

fn main() -> dreaming_maze::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let mut cfg = ExperimentConfig::agents(5);
    cfg.collect.episodes = 100;
    let env = build_env(&cfg)?;
    let d = collect_real(&cfg, &env)?;
    let cell = CellConfig {
        episodes,
        ..CellConfig::default()
    };
    for kind in [AgentKind::Dqn, AgentKind::Ppo] {
        let (_, report) = train_cell(kind, &env, &d, &cfg.agent, &cell, 11)?;
        let converged = report
            .convergence_episode
            .map_or("never".to_string(), |e| format!("at episode {e}"));
        println!(
            "{}: final rolling mean {:.2}, converged {converged}",
            kind.name(),
            report.final_mean()
        );
    }
    Ok(())
}
