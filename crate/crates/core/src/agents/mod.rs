//! Policies and learners: random exploration, a tabular Q oracle, DQN and
//! PPO trainable on real or dreamed experience, and the optimal-path
//! performance metric.

mod dqn;
mod hyper;
mod performance;
mod policy;
mod ppo;
mod tabular;
mod train;

pub use dqn::{bootstraps, dqn_train, DqnAgent};
pub use hyper::AgentHyper;
pub use performance::{
    episode_cap, episode_performance, evaluate, play_episode, EpisodeResult, PerformanceReport, DEFAULT_THRESHOLD,
    DEFAULT_WINDOW,
};
pub use policy::{
    random_policy, ExplorationKind, Greedy, GreedyAction, NetworkPolicy, OraclePolicy, Policy, RandomPolicy,
    ScriptedPolicy,
};
pub use ppo::{clipped_surrogate, ppo_train, PpoAgent, PpoSample, PpoSource, Rollout, RolloutStep};
pub use tabular::{cell_index, q_update, QTable, TabularTransition};
pub use train::{train_cell, AgentKind, CellConfig, TrainedAgent};
