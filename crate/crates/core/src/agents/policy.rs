use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maze::{optimal_action, Action, Cell, MazeGrid, Representation};
use crate::neural::{DenseNet, ModelFile, ModelRole};
use crate::observation::ObservationTensor;
use crate::SimRng;

/// Maps an observation to an action.
pub trait Policy {
    fn act(&mut self, obs: &ObservationTensor, rng: &mut SimRng) -> Action;
}

impl<P: Policy + ?Sized> Policy for &mut P {
    fn act(&mut self, obs: &ObservationTensor, rng: &mut SimRng) -> Action {
        (**self).act(obs, rng)
    }
}

/// Learners that can act deterministically.
pub trait GreedyAction {
    fn greedy_action(&self, obs: &ObservationTensor) -> Action;
}

/// Acts with the wrapped learner's greedy action and ignores the rng.
#[derive(Debug, Clone, Copy)]
pub struct Greedy<'a, A: ?Sized>(pub &'a A);

impl<A: GreedyAction + ?Sized> Policy for Greedy<'_, A> {
    fn act(&mut self, obs: &ObservationTensor, _rng: &mut SimRng) -> Action {
        self.0.greedy_action(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplorationKind {
    /// Uniform over the four actions.
    #[default]
    Uniform,
    /// Argmax of standard-normal logits drawn per step.
    GaussianLogits,
}

/// Exploration policy used to collect real experience.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy {
    pub kind: ExplorationKind,
}

impl RandomPolicy {
    pub fn uniform() -> Self {
        RandomPolicy {
            kind: ExplorationKind::Uniform,
        }
    }

    /// Probability of `action` under this policy.
    pub fn prob(&self, _action: Action) -> f64 {
        // both kinds are exchangeable over the four actions
        0.25
    }
}

pub fn random_policy(_obs: &ObservationTensor, rng: &mut SimRng) -> Action {
    Action::ALL[rng.gen_range(0..Action::COUNT)]
}

impl Policy for RandomPolicy {
    fn act(&mut self, obs: &ObservationTensor, rng: &mut SimRng) -> Action {
        match self.kind {
            ExplorationKind::Uniform => random_policy(obs, rng),
            ExplorationKind::GaussianLogits => {
                let logits: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
                let best = (0..4).max_by(|a, b| logits[*a].total_cmp(&logits[*b])).unwrap();
                Action::ALL[best]
            }
        }
    }
}

/// Follows the BFS-optimal path to a known goal, reading the player
/// position off a fully observed tensor.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    pub grid: MazeGrid,
    pub goal: Cell,
    pub representation: Representation,
}

impl Policy for OraclePolicy {
    fn act(&mut self, obs: &ObservationTensor, _rng: &mut SimRng) -> Action {
        let player = obs.player_cell(self.representation);
        optimal_action(&self.grid, player, self.goal)
            .ok()
            .flatten()
            .unwrap_or(Action::Up)
    }
}

/// Greedy policy read from a stored network: the argmax of its outputs,
/// which are Q-values for DQN and action logits for PPO.
#[derive(Debug, Clone)]
pub struct NetworkPolicy {
    pub net: DenseNet<f32>,
}

impl NetworkPolicy {
    /// Uses the first network of a DQN or PPO model file.
    pub fn from_model_file(file: ModelFile) -> Result<Self> {
        if file.role == ModelRole::Dvae {
            return Err(Error::Invalid("a transition model is not a policy".into()));
        }
        let net = file
            .nets
            .into_iter()
            .next()
            .ok_or_else(|| Error::Invalid("model file has no networks".into()))?;
        if net.output_dim() != Action::COUNT {
            return Err(Error::Shape {
                expected: Action::COUNT,
                got: net.output_dim(),
            });
        }
        Ok(NetworkPolicy { net })
    }
}

impl GreedyAction for NetworkPolicy {
    fn greedy_action(&self, obs: &ObservationTensor) -> Action {
        let out = self
            .net
            .forward(obs.as_slice())
            .expect("observation matches the network input");
        let best = (0..out.len()).fold(0, |b, i| if out[i] > out[b] { i } else { b });
        Action::ALL[best]
    }
}

impl Policy for NetworkPolicy {
    fn act(&mut self, obs: &ObservationTensor, _rng: &mut SimRng) -> Action {
        self.greedy_action(obs)
    }
}

/// Replays a fixed action list, then repeats its last action.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    pub actions: Vec<Action>,
    pub cursor: usize,
}

impl ScriptedPolicy {
    pub fn new(actions: Vec<Action>) -> Self {
        ScriptedPolicy { actions, cursor: 0 }
    }
}

impl Policy for ScriptedPolicy {
    fn act(&mut self, _obs: &ObservationTensor, _rng: &mut SimRng) -> Action {
        let a = self.actions[self.cursor.min(self.actions.len() - 1)];
        self.cursor += 1;
        a
    }
}
