use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learner hyperparameters shared by DQN and PPO. Fields a learner does not
/// use are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentHyper {
    /// Discount, in `[0, 1)`.
    pub gamma: f64,
    pub lr: f64,
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    /// DQN: exploration rate at episode 0.
    pub epsilon_start: f64,
    /// DQN: exploration rate once the decay is over.
    pub epsilon_end: f64,
    /// DQN: episodes over which epsilon decays linearly.
    pub epsilon_decay_episodes: usize,
    /// DQN: gradient updates between target-network syncs. PPO on a
    /// buffer: updates between refreshes of the old policy.
    pub target_sync: usize,
    /// DQN in the environment: environment steps per gradient update.
    pub train_every: usize,
    /// Gradient updates per budget episode when learning from a fixed buffer.
    pub updates_per_episode: usize,
    pub replay_capacity: usize,
    /// PPO ratio clip.
    pub clip: f64,
    /// PPO: passes over each on-policy batch.
    pub ppo_epochs: usize,
    /// PPO: episodes collected per on-policy update.
    pub episodes_per_update: usize,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    /// Probability the behaviour policy assigned to each stored action.
    pub behaviour_prob: f64,
}

impl Default for AgentHyper {
    fn default() -> Self {
        AgentHyper {
            gamma: 0.98,
            lr: 1e-3,
            hidden: vec![64],
            batch_size: 32,
            epsilon_start: 1.0,
            epsilon_end: 0.0,
            epsilon_decay_episodes: 1000,
            target_sync: 200,
            train_every: 2,
            updates_per_episode: 8,
            replay_capacity: 50_000,
            clip: 0.2,
            ppo_epochs: 4,
            episodes_per_update: 8,
            gae_lambda: 0.95,
            entropy_coef: 0.01,
            behaviour_prob: 0.25,
        }
    }
}

impl AgentHyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        if self.batch_size == 0 || self.target_sync == 0 || self.train_every == 0 {
            return bad("batch_size, target_sync and train_every must be positive");
        }
        if self.replay_capacity == 0 || self.ppo_epochs == 0 || self.episodes_per_update == 0 {
            return bad("replay_capacity, ppo_epochs and episodes_per_update must be positive");
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
            ("gae_lambda", self.gae_lambda),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must lie in (0, 1)");
        }
        if self.entropy_coef < 0.0 {
            return bad("entropy_coef must be non-negative");
        }
        if !(self.behaviour_prob > 0.0 && self.behaviour_prob <= 1.0) {
            return bad("behaviour_prob must lie in (0, 1]");
        }
        Ok(())
    }

    /// Linear epsilon schedule.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        if self.epsilon_decay_episodes == 0 || episode >= self.epsilon_decay_episodes {
            return self.epsilon_end;
        }
        let frac = episode as f64 / self.epsilon_decay_episodes as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}
