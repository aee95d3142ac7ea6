use rand::{Rng, SeedableRng};

use super::hyper::AgentHyper;
use super::policy::{GreedyAction, Policy};
use crate::dvae::{ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::harness::seeds::derive_seed;
use crate::maze::{Action, RewardScheme};
use crate::neural::{Activation, AdamConfig, AdamState, DenseNet, GradAt, ModelFile, ModelRole, Trace};
use crate::observation::ObservationTensor;
use crate::SimRng;

/// Whether the value of `t.next_state` counts toward the target. Episodes
/// cut by the time limit are truncated, not absorbed, so only a terminal
/// carrying the goal reward stops bootstrapping.
pub fn bootstraps(t: &Transition, rewards: &RewardScheme) -> bool {
    !(t.terminal && t.reward == rewards.goal)
}

pub(crate) fn argmax(xs: &[f32]) -> usize {
    let mut best = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

/// Q-network learner with a target network and epsilon-greedy acting.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub online: DenseNet<f32>,
    pub target: DenseNet<f32>,
    pub epsilon: f64,
    pub hyper: AgentHyper,
    pub rewards: RewardScheme,
    opt: AdamState<f32>,
    updates: u64,
    trace: Trace<f32>,
}

impl DqnAgent {
    pub fn new(input_dim: usize, hyper: &AgentHyper, rewards: RewardScheme, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut widths = hyper.hidden.clone();
        widths.push(Action::COUNT);
        let specs = DenseNet::<f32>::mlp_specs(input_dim, &widths, Activation::Identity);
        let mut rng = SimRng::seed_from_u64(derive_seed(seed, "dqn-init", 0));
        let online = DenseNet::init(specs, &mut rng)?;
        Ok(DqnAgent {
            target: online.clone(),
            opt: AdamState::new(online.param_count(), AdamConfig::with_lr(hyper.lr)),
            online,
            epsilon: hyper.epsilon_start,
            hyper: hyper.clone(),
            rewards,
            updates: 0,
            trace: Trace::default(),
        })
    }

    pub fn q_values(&self, obs: &[f32]) -> Result<Vec<f32>> {
        self.online.forward(obs)
    }

    fn greedy(&self, obs: &ObservationTensor) -> Action {
        let q = self
            .q_values(obs.as_slice())
            .expect("observation matches the network input");
        Action::ALL[argmax(&q)]
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// One Adam step on the mean squared TD error of `batch`; syncs the
    /// target every `target_sync` updates. Returns the loss.
    pub fn update(&mut self, batch: &[&Transition]) -> Result<f32> {
        if batch.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let gamma = self.hyper.gamma as f32;
        let scale = 2.0 / batch.len() as f32;
        let mut grads = self.online.zero_grads();
        let mut loss = 0.0;
        for t in batch {
            let mut y = t.reward;
            if bootstraps(t, &self.rewards) {
                let next = self.target.forward(t.next_state.as_slice())?;
                y += gamma * next.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            }
            self.online.forward_trace(t.state.as_slice(), &mut self.trace)?;
            let a = t.action.index();
            let err = self.trace.output()[a] - y;
            loss += err * err;
            let mut upstream = [0.0f32; 4];
            upstream[a] = scale * err;
            self.online
                .backward(&mut self.trace, &upstream, GradAt::Output, &mut grads, None);
        }
        self.opt.step(self.online.params_mut(), &grads)?;
        self.updates += 1;
        if self.updates % self.hyper.target_sync as u64 == 0 {
            self.sync_target();
        }
        Ok(loss / batch.len() as f32)
    }

    /// Update on a uniformly drawn minibatch of `buffer`.
    pub fn update_from(&mut self, buffer: &ReplayBuffer, rng: &mut SimRng) -> Result<f32> {
        if buffer.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let batch: Vec<&Transition> = (0..self.hyper.batch_size)
            .map(|_| buffer.get(rng.gen_range(0..buffer.len())).unwrap())
            .collect();
        self.update(&batch)
    }

    pub fn to_model_file(&self) -> ModelFile {
        ModelFile {
            role: ModelRole::Dqn,
            latent_dim: 0,
            nets: vec![self.online.clone()],
        }
    }
}

impl GreedyAction for DqnAgent {
    fn greedy_action(&self, obs: &ObservationTensor) -> Action {
        self.greedy(obs)
    }
}

impl Policy for DqnAgent {
    fn act(&mut self, obs: &ObservationTensor, rng: &mut SimRng) -> Action {
        if self.epsilon > 0.0 && rng.gen::<f64>() < self.epsilon {
            return Action::ALL[rng.gen_range(0..Action::COUNT)];
        }
        self.greedy(obs)
    }
}

/// Trains a fresh DQN for `steps` minibatch updates on a fixed buffer.
pub fn dqn_train(
    buffer: &ReplayBuffer,
    hyper: &AgentHyper,
    rewards: RewardScheme,
    steps: usize,
    seed: u64,
) -> Result<DqnAgent> {
    let first = buffer.get(0).ok_or(Error::EmptyBuffer)?;
    let mut agent = DqnAgent::new(first.state.len(), hyper, rewards, seed)?;
    let mut rng = SimRng::seed_from_u64(derive_seed(seed, "dqn-batches", 0));
    for _ in 0..steps {
        agent.update_from(buffer, &mut rng)?;
    }
    agent.epsilon = 0.0;
    Ok(agent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{evaluate, RandomPolicy};
    use crate::dvae::{run_agent, BufferKind};
    use crate::maze::{generate_maze, GoalPlacement, MazeEnv, MazeStyle, ScenarioConfig};

    fn agent(eps: f64) -> DqnAgent {
        let h = AgentHyper {
            epsilon_start: eps,
            hidden: vec![8],
            ..AgentHyper::default()
        };
        DqnAgent::new(12, &h, RewardScheme::default(), 4).unwrap()
    }

    fn obs() -> ObservationTensor {
        let mut v = vec![0.0; 12];
        v[5] = 1.0;
        ObservationTensor::from_vec(3, 2, 2, v).unwrap()
    }

    #[test]
    fn epsilon_one_is_uniform() {
        let mut a = agent(1.0);
        let mut rng = SimRng::seed_from_u64(3);
        let mut counts = [0usize; 4];
        for _ in 0..4000 {
            counts[a.act(&obs(), &mut rng).index()] += 1;
        }
        assert!(counts.iter().all(|c| (800..=1200).contains(c)), "{counts:?}");
    }

    #[test]
    fn epsilon_zero_is_argmax() {
        let mut a = agent(0.0);
        let q = a.q_values(obs().as_slice()).unwrap();
        let mut best = 0;
        for i in 0..4 {
            if q[i] > q[best] {
                best = i;
            }
        }
        let mut rng = SimRng::seed_from_u64(3);
        for _ in 0..50 {
            assert_eq!(a.act(&obs(), &mut rng).index(), best);
        }
    }

    #[test]
    fn target_equals_online_after_sync() {
        let mut a = agent(0.0);
        a.hyper.target_sync = 3;
        let t = Transition::new(obs(), Action::Left, 1.0, obs(), false).unwrap();
        for k in 1..=7 {
            a.update(&[&t]).unwrap();
            if k % 3 == 0 {
                assert_eq!(a.target, a.online, "after update {k}");
            } else {
                assert_ne!(a.target, a.online, "after update {k}");
            }
        }
    }

    #[test]
    fn truncated_terminals_bootstrap() {
        let r = RewardScheme::default();
        let goal = Transition::new(obs(), Action::Up, r.goal, obs(), true).unwrap();
        let cut = Transition::new(obs(), Action::Up, r.step, obs(), true).unwrap();
        let mid = Transition::new(obs(), Action::Up, r.step, obs(), false).unwrap();
        assert!(!bootstraps(&goal, &r));
        assert!(bootstraps(&cut, &r));
        assert!(bootstraps(&mid, &r));
    }

    #[test]
    fn empty_buffer_is_an_error() {
        let d = ReplayBuffer::new(4, BufferKind::Real);
        assert!(dqn_train(&d, &AgentHyper::default(), RewardScheme::default(), 10, 0).is_err());
    }

    #[test]
    fn learns_five_by_five_from_real_replay() {
        let grid = generate_maze(5, 5, 0, MazeStyle::Open).unwrap();
        let cfg = ScenarioConfig::normal()
            .with_goal(GoalPlacement::FarCorner)
            .with_time_limit(20);
        let env = MazeEnv::new(grid, cfg).unwrap();
        let mut d = ReplayBuffer::new(50_000, BufferKind::Real);
        run_agent(&env, &mut RandomPolicy::uniform(), 800, &mut d, 11).unwrap();
        let hyper = AgentHyper {
            hidden: vec![32],
            ..AgentHyper::default()
        };
        let mut agent = dqn_train(&d, &hyper, cfg.rewards, 4000, 5).unwrap();
        let report = evaluate(&env, &mut agent, 100, 99).unwrap();
        assert!(report.mean() >= 0.9, "mean performance {}", report.mean());
    }
}
