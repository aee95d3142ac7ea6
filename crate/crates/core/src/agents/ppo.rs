use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use super::dqn::{argmax, bootstraps};
use super::hyper::AgentHyper;
use super::performance::episode_cap;
use super::policy::{GreedyAction, Policy};
use crate::dvae::{ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::harness::seeds::derive_seed;
use crate::maze::{step, Action, MazeEnv, MazeState, RewardScheme};
use crate::neural::{softmax, Activation, AdamConfig, AdamState, DenseNet, GradAt, ModelFile, ModelRole, Trace};
use crate::observation::{observe, ObservationTensor};
use crate::SimRng;

/// Per-sample clipped surrogate `min(r A, clip(r, 1 - ε, 1 + ε) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    (ratio * advantage).min(clipped * advantage)
}

/// Whether the unclipped term is the minimum, i.e. whether the ratio still
/// receives gradient.
fn ratio_active(ratio: f64, advantage: f64, clip: f64) -> bool {
    if advantage >= 0.0 {
        ratio <= 1.0 + clip
    } else {
        ratio >= 1.0 - clip
    }
}

/// One training sample for the policy and value heads.
#[derive(Debug, Clone)]
pub struct PpoSample<'a> {
    pub state: &'a [f32],
    pub action: Action,
    /// Probability of `action` under the policy that produced the advantage.
    pub old_prob: f32,
    pub advantage: f32,
    pub value_target: f32,
    /// Importance weight of the sample; 1 for on-policy data.
    pub weight: f32,
}

/// One on-policy step.
#[derive(Debug, Clone)]
pub struct RolloutStep {
    pub obs: ObservationTensor,
    pub action: Action,
    pub prob: f32,
    pub reward: f32,
    pub value: f32,
}

/// An on-policy episode and the value of where it stopped: 0 at the goal,
/// the critic's estimate when cut by the time limit.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub steps: Vec<RolloutStep>,
    pub last_value: f32,
}

/// Stochastic softmax policy with a separate value network.
#[derive(Debug, Clone)]
pub struct PpoAgent {
    pub actor: DenseNet<f32>,
    pub critic: DenseNet<f32>,
    /// Frozen policy used for ratios when learning from a buffer.
    pub old_actor: DenseNet<f32>,
    pub hyper: AgentHyper,
    pub rewards: RewardScheme,
    actor_opt: AdamState<f32>,
    critic_opt: AdamState<f32>,
    updates: u64,
    actor_trace: Trace<f32>,
    critic_trace: Trace<f32>,
}

impl PpoAgent {
    pub fn new(input_dim: usize, hyper: &AgentHyper, rewards: RewardScheme, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut rng = SimRng::seed_from_u64(derive_seed(seed, "ppo-init", 0));
        let mut widths = hyper.hidden.clone();
        widths.push(Action::COUNT);
        let actor = DenseNet::init(
            DenseNet::<f32>::mlp_specs(input_dim, &widths, Activation::Identity),
            &mut rng,
        )?;
        *widths.last_mut().unwrap() = 1;
        let critic = DenseNet::init(
            DenseNet::<f32>::mlp_specs(input_dim, &widths, Activation::Identity),
            &mut rng,
        )?;
        let adam = AdamConfig::with_lr(hyper.lr);
        Ok(PpoAgent {
            old_actor: actor.clone(),
            actor_opt: AdamState::new(actor.param_count(), adam),
            critic_opt: AdamState::new(critic.param_count(), adam),
            actor,
            critic,
            hyper: hyper.clone(),
            rewards,
            updates: 0,
            actor_trace: Trace::default(),
            critic_trace: Trace::default(),
        })
    }

    pub fn probs(&self, obs: &[f32]) -> Result<Vec<f32>> {
        Ok(softmax(&self.actor.forward(obs)?))
    }

    pub fn value(&self, obs: &[f32]) -> Result<f32> {
        Ok(self.critic.forward(obs)?[0])
    }

    fn greedy(&self, obs: &ObservationTensor) -> Action {
        let p = self
            .probs(obs.as_slice())
            .expect("observation matches the network input");
        Action::ALL[argmax(&p)]
    }

    fn sample(probs: &[f32], rng: &mut SimRng) -> Action {
        let u: f32 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Action::ALL[i];
            }
        }
        Action::ALL[probs.len() - 1]
    }

    /// One Adam step on both heads over the mean of `samples`. Returns the
    /// mean surrogate.
    pub fn update(&mut self, samples: &[PpoSample<'_>]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let clip = self.hyper.clip;
        let beta = self.hyper.entropy_coef as f32;
        let inv_n = 1.0 / samples.len() as f32;
        let mut actor_grads = self.actor.zero_grads();
        let mut critic_grads = self.critic.zero_grads();
        let mut surrogate = 0.0;
        for s in samples {
            self.actor.forward_trace(s.state, &mut self.actor_trace)?;
            let p = softmax(self.actor_trace.output());
            let a = s.action.index();
            let ratio = p[a] / s.old_prob.max(1e-12);
            let adv = s.advantage as f64;
            surrogate += s.weight as f64 * clipped_surrogate(ratio as f64, adv, clip);
            let logs: Vec<f32> = p.iter().map(|x| x.max(1e-12).ln()).collect();
            let entropy: f32 = -p.iter().zip(&logs).map(|(x, l)| x * l).sum::<f32>();
            let mut upstream = [0.0f32; 4];
            let g_ratio = if ratio_active(ratio as f64, adv, clip) {
                -s.weight * s.advantage * ratio
            } else {
                0.0
            };
            for k in 0..4 {
                let onehot = if k == a { 1.0 } else { 0.0 };
                upstream[k] = inv_n * (g_ratio * (onehot - p[k]) + beta * p[k] * (logs[k] + entropy));
            }
            self.actor.backward(
                &mut self.actor_trace,
                &upstream,
                GradAt::PreActivation,
                &mut actor_grads,
                None,
            );

            self.critic.forward_trace(s.state, &mut self.critic_trace)?;
            let v = self.critic_trace.output()[0];
            let dv = [inv_n * s.weight * (v - s.value_target)];
            self.critic.backward(
                &mut self.critic_trace,
                &dv,
                GradAt::PreActivation,
                &mut critic_grads,
                None,
            );
        }
        self.actor_opt.step(self.actor.params_mut(), &actor_grads)?;
        self.critic_opt.step(self.critic.params_mut(), &critic_grads)?;
        self.updates += 1;
        Ok(surrogate / samples.len() as f64)
    }

    /// Acts stochastically from `start` until the episode ends or hits `cap`.
    pub fn rollout(&mut self, start: MazeState, rng: &mut SimRng, cap: usize) -> Result<Rollout> {
        let mut steps = Vec::new();
        let mut state = start;
        let mut obs = observe(&state);
        let mut absorbed = false;
        while !state.is_terminal() && steps.len() < cap {
            let p = self.probs(obs.as_slice())?;
            let action = Self::sample(&p, rng);
            let value = self.value(obs.as_slice())?;
            let out = step(&state, action)?;
            absorbed = out.state.at_goal();
            steps.push(RolloutStep {
                obs,
                action,
                prob: p[action.index()],
                reward: out.reward,
                value,
            });
            state = out.state;
            obs = observe(&state);
        }
        let last_value = if absorbed { 0.0 } else { self.value(obs.as_slice())? };
        Ok(Rollout { steps, last_value })
    }

    /// GAE advantages and value targets for each step of each rollout.
    pub fn advantages(&self, rollouts: &[Rollout]) -> Vec<(f32, f32)> {
        let gamma = self.hyper.gamma as f32;
        let lambda = self.hyper.gae_lambda as f32;
        let mut out = Vec::new();
        for r in rollouts {
            let mut adv = vec![0.0f32; r.steps.len()];
            let mut next_value = r.last_value;
            let mut acc = 0.0f32;
            for t in (0..r.steps.len()).rev() {
                let s = &r.steps[t];
                let delta = s.reward + gamma * next_value - s.value;
                acc = delta + gamma * lambda * acc;
                adv[t] = acc;
                next_value = s.value;
            }
            out.extend(adv.iter().zip(&r.steps).map(|(a, s)| (*a, *a + s.value)));
        }
        out
    }

    /// `ppo_epochs` shuffled minibatch passes over a batch of rollouts with
    /// normalized advantages.
    pub fn learn_rollouts(&mut self, rollouts: &[Rollout], rng: &mut SimRng) -> Result<()> {
        let targets = self.advantages(rollouts);
        if targets.is_empty() {
            return Ok(());
        }
        let steps: Vec<&RolloutStep> = rollouts.iter().flat_map(|r| &r.steps).collect();
        let n = targets.len() as f32;
        let mean = targets.iter().map(|t| t.0).sum::<f32>() / n;
        let var = targets.iter().map(|t| (t.0 - mean).powi(2)).sum::<f32>() / n;
        let std = var.sqrt().max(1e-6);
        let samples: Vec<PpoSample> = steps
            .iter()
            .zip(&targets)
            .map(|(s, (adv, target))| PpoSample {
                state: s.obs.as_slice(),
                action: s.action,
                old_prob: s.prob,
                advantage: (adv - mean) / std,
                value_target: *target,
                weight: 1.0,
            })
            .collect();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        for _ in 0..self.hyper.ppo_epochs {
            order.shuffle(rng);
            for chunk in order.chunks(self.hyper.batch_size) {
                let batch: Vec<PpoSample> = chunk.iter().map(|i| samples[*i].clone()).collect();
                self.update(&batch)?;
            }
        }
        Ok(())
    }

    /// One off-policy minibatch update from a buffer collected by a policy
    /// giving each action probability `behaviour_prob`. Samples carry the
    /// weight `π_old(a|s) / μ(a|s)`, the advantage is the one-step TD error
    /// and the old policy is refreshed every `target_sync` updates.
    pub fn update_from_buffer(&mut self, buffer: &ReplayBuffer, rng: &mut SimRng) -> Result<f64> {
        if buffer.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if self.updates % self.hyper.target_sync as u64 == 0 {
            self.old_actor = self.actor.clone();
        }
        let gamma = self.hyper.gamma as f32;
        let mu = self.hyper.behaviour_prob as f32;
        let batch: Vec<&Transition> = (0..self.hyper.batch_size)
            .map(|_| buffer.get(rng.gen_range(0..buffer.len())).unwrap())
            .collect();
        let mut samples = Vec::with_capacity(batch.len());
        for t in &batch {
            let old = softmax(&self.old_actor.forward(t.state.as_slice())?)[t.action.index()];
            let v = self.value(t.state.as_slice())?;
            let mut target = t.reward;
            if bootstraps(t, &self.rewards) {
                target += gamma * self.value(t.next_state.as_slice())?;
            }
            samples.push(PpoSample {
                state: t.state.as_slice(),
                action: t.action,
                old_prob: old,
                advantage: target - v,
                value_target: target,
                weight: old / mu,
            });
        }
        self.update(&samples)
    }

    pub fn to_model_file(&self) -> ModelFile {
        ModelFile {
            role: ModelRole::Ppo,
            latent_dim: 0,
            nets: vec![self.actor.clone(), self.critic.clone()],
        }
    }
}

impl GreedyAction for PpoAgent {
    fn greedy_action(&self, obs: &ObservationTensor) -> Action {
        self.greedy(obs)
    }
}

impl Policy for PpoAgent {
    fn act(&mut self, obs: &ObservationTensor, rng: &mut SimRng) -> Action {
        let p = self
            .probs(obs.as_slice())
            .expect("observation matches the network input");
        Self::sample(&p, rng)
    }
}

/// Where PPO gets its experience.
#[derive(Debug, Clone, Copy)]
pub enum PpoSource<'a> {
    /// On-policy rollouts in the environment.
    Env(&'a MazeEnv),
    /// Off-policy replay of stored (typically dreamed) transitions.
    Buffer(&'a ReplayBuffer, RewardScheme),
}

/// Trains a fresh PPO agent. An iteration is one on-policy batch of
/// `episodes_per_update` episodes for an environment source, or one
/// minibatch update for a buffer source.
pub fn ppo_train(source: PpoSource<'_>, hyper: &AgentHyper, iterations: usize, seed: u64) -> Result<PpoAgent> {
    let mut rng = SimRng::seed_from_u64(derive_seed(seed, "ppo-updates", 0));
    match source {
        PpoSource::Env(env) => {
            let dim = observe(&env.reset(0)?).len();
            let mut agent = PpoAgent::new(dim, hyper, env.scenario.rewards, seed)?;
            let cap = episode_cap(env);
            let mut episode = 0u64;
            for _ in 0..iterations {
                let mut batch = Vec::with_capacity(hyper.episodes_per_update);
                for _ in 0..hyper.episodes_per_update {
                    let start = env.reset(derive_seed(seed, "ppo-start", episode))?;
                    let mut act_rng = SimRng::seed_from_u64(derive_seed(seed, "ppo-act", episode));
                    batch.push(agent.rollout(start, &mut act_rng, cap)?);
                    episode += 1;
                }
                agent.learn_rollouts(&batch, &mut rng)?;
            }
            Ok(agent)
        }
        PpoSource::Buffer(buffer, rewards) => {
            let first = buffer.get(0).ok_or(Error::EmptyBuffer)?;
            let mut agent = PpoAgent::new(first.state.len(), hyper, rewards, seed)?;
            for _ in 0..iterations {
                agent.update_from_buffer(buffer, &mut rng)?;
            }
            Ok(agent)
        }
    }
}
