use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::dqn::DqnAgent;
use super::hyper::AgentHyper;
use super::performance::{episode_cap, play_episode, PerformanceReport, DEFAULT_THRESHOLD, DEFAULT_WINDOW};
use super::policy::{Greedy, GreedyAction, Policy};
use super::ppo::PpoAgent;
use crate::dvae::{BufferKind, ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::harness::seeds::derive_seed;
use crate::maze::{step, Action, MazeEnv};
use crate::neural::ModelFile;
use crate::observation::{observe, ObservationTensor};
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Dqn,
    Ppo,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Dqn => "DQN",
            AgentKind::Ppo => "PPO",
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dqn" => Ok(AgentKind::Dqn),
            "ppo" => Ok(AgentKind::Ppo),
            _ => Err(Error::Invalid(format!("unknown agent {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum TrainedAgent {
    Dqn(DqnAgent),
    Ppo(PpoAgent),
}

impl TrainedAgent {
    pub fn new(kind: AgentKind, input_dim: usize, hyper: &AgentHyper, env: &MazeEnv, seed: u64) -> Result<Self> {
        let rewards = env.scenario.rewards;
        Ok(match kind {
            AgentKind::Dqn => TrainedAgent::Dqn(DqnAgent::new(input_dim, hyper, rewards, seed)?),
            AgentKind::Ppo => TrainedAgent::Ppo(PpoAgent::new(input_dim, hyper, rewards, seed)?),
        })
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            TrainedAgent::Dqn(_) => AgentKind::Dqn,
            TrainedAgent::Ppo(_) => AgentKind::Ppo,
        }
    }

    pub fn to_model_file(&self) -> ModelFile {
        match self {
            TrainedAgent::Dqn(a) => a.to_model_file(),
            TrainedAgent::Ppo(a) => a.to_model_file(),
        }
    }
}

impl GreedyAction for TrainedAgent {
    fn greedy_action(&self, obs: &ObservationTensor) -> Action {
        match self {
            TrainedAgent::Dqn(a) => a.greedy_action(obs),
            TrainedAgent::Ppo(a) => a.greedy_action(obs),
        }
    }
}

impl Policy for TrainedAgent {
    fn act(&mut self, obs: &ObservationTensor, rng: &mut SimRng) -> Action {
        match self {
            TrainedAgent::Dqn(a) => a.act(obs, rng),
            TrainedAgent::Ppo(a) => a.act(obs, rng),
        }
    }
}

/// Budget and scoring of one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellConfig {
    pub episodes: usize,
    pub window: usize,
    pub threshold: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            episodes: 10_000,
            window: DEFAULT_WINDOW,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Trains one (agent, buffer) cell for `cell.episodes` budget episodes.
///
/// With a real buffer the learner interacts with `env`: DQN starts from the
/// transitions in `data` and appends its own, PPO learns on-policy. With a
/// dreamed buffer the learner never steps the environment for training and
/// performs `updates_per_episode` updates on `data` per budget episode.
///
/// After each budget episode the greedy policy plays one scored episode in
/// `env`; those scores form the report.
pub fn train_cell(
    kind: AgentKind,
    env: &MazeEnv,
    data: &ReplayBuffer,
    hyper: &AgentHyper,
    cell: &CellConfig,
    seed: u64,
) -> Result<(TrainedAgent, PerformanceReport)> {
    hyper.validate()?;
    let dim = observe(&env.reset(0)?).len();
    if let Some(t) = data.get(0) {
        if t.state.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                got: t.state.len(),
            });
        }
    } else if data.kind() == BufferKind::Dreamed || kind == AgentKind::Dqn {
        return Err(Error::EmptyBuffer);
    }
    let mut agent = TrainedAgent::new(kind, dim, hyper, env, seed)?;
    let cap = episode_cap(env);
    let mut batch_rng = SimRng::seed_from_u64(derive_seed(seed, "cell-batches", 0));
    let mut replay = ReplayBuffer::new(hyper.replay_capacity.max(data.len()), BufferKind::Real);
    if data.kind() == BufferKind::Real && kind == AgentKind::Dqn {
        for t in data {
            replay.push(t.clone())?;
        }
    }
    let mut pending = Vec::with_capacity(hyper.episodes_per_update);
    let mut env_steps = 0usize;
    let mut perf = Vec::with_capacity(cell.episodes);
    for i in 0..cell.episodes as u64 {
        let mut act_rng = SimRng::seed_from_u64(derive_seed(seed, "cell-act", i));
        match (&mut agent, data.kind()) {
            (TrainedAgent::Dqn(a), BufferKind::Real) => {
                a.epsilon = hyper.epsilon_at(i as usize);
                let mut state = env.reset(derive_seed(seed, "cell-start", i))?;
                let mut obs = observe(&state);
                let mut moves = 0;
                while !state.is_terminal() && moves < cap {
                    let action = a.act(&obs, &mut act_rng);
                    let out = step(&state, action)?;
                    let next = observe(&out.state);
                    replay.push(Transition::new(obs, action, out.reward, next.clone(), out.terminal)?)?;
                    state = out.state;
                    obs = next;
                    moves += 1;
                    env_steps += 1;
                    if env_steps % hyper.train_every == 0 {
                        a.update_from(&replay, &mut batch_rng)?;
                    }
                }
            }
            (TrainedAgent::Dqn(a), BufferKind::Dreamed) => {
                for _ in 0..hyper.updates_per_episode {
                    a.update_from(data, &mut batch_rng)?;
                }
            }
            (TrainedAgent::Ppo(a), BufferKind::Real) => {
                let start = env.reset(derive_seed(seed, "cell-start", i))?;
                pending.push(a.rollout(start, &mut act_rng, cap)?);
                if pending.len() == hyper.episodes_per_update {
                    a.learn_rollouts(&pending, &mut batch_rng)?;
                    pending.clear();
                }
            }
            (TrainedAgent::Ppo(a), BufferKind::Dreamed) => {
                for _ in 0..hyper.updates_per_episode {
                    a.update_from_buffer(data, &mut batch_rng)?;
                }
            }
        }
        let start = env.reset(derive_seed(seed, "cell-eval", i))?;
        let score = play_episode(start, &mut Greedy(&agent), &mut act_rng, cap)?;
        perf.push(score.performance);
    }
    if let TrainedAgent::Dqn(a) = &mut agent {
        a.epsilon = 0.0;
    }
    Ok((agent, PerformanceReport::new(perf, cell.window, cell.threshold)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::RandomPolicy;
    use crate::dvae::run_agent;
    use crate::maze::{generate_maze, GoalPlacement, MazeStyle, ScenarioConfig};

    fn env() -> MazeEnv {
        let grid = generate_maze(4, 4, 1, MazeStyle::Open).unwrap();
        let cfg = ScenarioConfig::normal()
            .with_goal(GoalPlacement::FarCorner)
            .with_time_limit(20);
        MazeEnv::new(grid, cfg).unwrap()
    }

    fn small() -> (AgentHyper, CellConfig) {
        let hyper = AgentHyper {
            hidden: vec![16],
            epsilon_decay_episodes: 20,
            ..AgentHyper::default()
        };
        let cell = CellConfig {
            episodes: 30,
            ..CellConfig::default()
        };
        (hyper, cell)
    }

    #[test]
    fn every_cell_runs_and_repeats() {
        let env = env();
        let mut d = ReplayBuffer::new(1000, BufferKind::Real);
        run_agent(&env, &mut RandomPolicy::uniform(), 20, &mut d, 4).unwrap();
        let mut dreamed = ReplayBuffer::new(1000, BufferKind::Dreamed);
        for t in &d {
            dreamed.push(t.clone()).unwrap();
        }
        let (hyper, cell) = small();
        for kind in [AgentKind::Dqn, AgentKind::Ppo] {
            for data in [&d, &dreamed] {
                let (a, r) = train_cell(kind, &env, data, &hyper, &cell, 9).unwrap();
                assert_eq!(a.kind(), kind);
                assert_eq!(r.performance.len(), 30);
                assert!(r.performance.iter().all(|p| (0.0..=1.0).contains(p)));
                let (b, again) = train_cell(kind, &env, data, &hyper, &cell, 9).unwrap();
                assert_eq!(r, again);
                assert_eq!(a.to_model_file().to_bytes(), b.to_model_file().to_bytes());
            }
        }
    }

    #[test]
    fn empty_dreamed_buffer_is_an_error() {
        let env = env();
        let (hyper, cell) = small();
        let empty = ReplayBuffer::new(4, BufferKind::Dreamed);
        assert!(train_cell(AgentKind::Ppo, &env, &empty, &hyper, &cell, 0).is_err());
        let real = ReplayBuffer::new(4, BufferKind::Real);
        assert!(train_cell(AgentKind::Ppo, &env, &real, &hyper, &cell, 0).is_ok());
    }
}
