use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::buffer::{BufferKind, ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::harness::seeds::derive_seed;
use crate::maze::Action;
use crate::neural::{AdamConfig, AdamState, Dvae, DvaeShape, DvaeWorkspace, ModelFile};
use crate::observation::{encode_action, ObservationTensor};
use crate::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DvaeHyper {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    /// Epochs over which the KL gradient weight ramps linearly from 0 to 1.
    /// Zero trains on the plain ELBO from the first step.
    pub kl_warmup_epochs: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for DvaeHyper {
    fn default() -> Self {
        DvaeHyper {
            epochs: 1000,
            lr: 1e-3,
            batch_size: 32,
            latent_dim: 32,
            hidden: vec![256],
            kl_warmup_epochs: 0,
            seed: 0,
        }
    }
}

/// Trainable weights of the transition model plus their optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct DvaeParams {
    pub model: Dvae<f32>,
    pub encoder_opt: AdamState<f32>,
    pub decoder_opt: AdamState<f32>,
    pub epochs_done: usize,
}

impl DvaeParams {
    pub fn init(state_dim: usize, hyper: &DvaeHyper) -> Result<Self> {
        let shape = DvaeShape {
            state_dim,
            action_dim: Action::COUNT,
            latent_dim: hyper.latent_dim,
            hidden: hyper.hidden.clone(),
        };
        let mut rng = SimRng::seed_from_u64(derive_seed(hyper.seed, "dvae-init", 0));
        let model = Dvae::init(&shape, &mut rng)?;
        Ok(Self::from_model(model, AdamConfig::with_lr(hyper.lr)))
    }

    pub fn from_model(model: Dvae<f32>, adam: AdamConfig) -> Self {
        DvaeParams {
            encoder_opt: AdamState::new(model.encoder.param_count(), adam),
            decoder_opt: AdamState::new(model.decoder.param_count(), adam),
            model,
            epochs_done: 0,
        }
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile::from_dvae(&self.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Encoder input for `(s, a)`: the flattened state followed by the one-hot action.
pub fn model_input(state: &ObservationTensor, action: Action) -> Vec<f32> {
    let mut x = Vec::with_capacity(state.len() + Action::COUNT);
    x.extend_from_slice(state.as_slice());
    x.extend_from_slice(&encode_action(action));
    x
}

/// Trains a fresh model on `d` for `hyper.epochs` epochs and returns it with
/// the per-epoch mean losses.
pub fn train_dvae(d: &ReplayBuffer, hyper: &DvaeHyper) -> Result<(DvaeParams, Vec<EpochLoss>)> {
    let state_dim = d.get(0).ok_or(Error::EmptyBuffer)?.state.len();
    let mut params = DvaeParams::init(state_dim, hyper)?;
    let curve = train_more(&mut params, d, hyper)?;
    Ok((params, curve))
}

/// Continues training `params` on `d`. Each epoch visits every record once
/// in an order drawn from `(seed, epoch)` and samples latent noise from the
/// same stream.
pub fn train_more(params: &mut DvaeParams, d: &ReplayBuffer, hyper: &DvaeHyper) -> Result<Vec<EpochLoss>> {
    if d.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if hyper.batch_size == 0 {
        return Err(Error::Invalid("batch_size must be positive".into()));
    }
    let model_dim = params.model.state_dim();
    let inputs: Vec<Vec<f32>> = d.iter().map(|t| model_input(&t.state, t.action)).collect();
    let targets: Vec<&[f32]> = d.iter().map(|t| t.next_state.as_slice()).collect();
    if targets[0].len() != model_dim {
        return Err(Error::Shape {
            expected: model_dim,
            got: targets[0].len(),
        });
    }
    let latent = params.model.latent_dim();
    let mut grads = params.model.zero_grads();
    let mut ws = DvaeWorkspace::default();
    let mut eps = vec![0.0f32; latent];
    let mut order: Vec<usize> = (0..d.len()).collect();
    let mut curve = Vec::with_capacity(hyper.epochs);
    for epoch in 0..hyper.epochs {
        let mut rng = SimRng::seed_from_u64(derive_seed(hyper.seed, "dvae-epoch", params.epochs_done as u64));
        order.shuffle(&mut rng);
        let kl_weight = kl_weight(params.epochs_done, hyper.kl_warmup_epochs);
        let (mut loss, mut recon, mut kl) = (0.0f64, 0.0f64, 0.0f64);
        for batch in order.chunks(hyper.batch_size) {
            grads.zero();
            for &i in batch {
                eps.iter_mut().for_each(|e| *e = rng.sample(StandardNormal));
                let terms = params
                    .model
                    .accumulate_grad_weighted(&inputs[i], targets[i], &eps, kl_weight, &mut ws, &mut grads)?;
                loss += terms.total as f64;
                recon += terms.recon as f64;
                kl += terms.kl as f64;
            }
            grads.scale(1.0 / batch.len() as f32);
            params
                .encoder_opt
                .step(params.model.encoder.params_mut(), &grads.encoder)?;
            params
                .decoder_opt
                .step(params.model.decoder.params_mut(), &grads.decoder)?;
        }
        let n = d.len() as f64;
        params.epochs_done += 1;
        curve.push(EpochLoss {
            epoch,
            loss: loss / n,
            recon: recon / n,
            kl: kl / n,
        });
    }
    Ok(curve)
}

fn kl_weight(epoch: usize, warmup: usize) -> f32 {
    if epoch >= warmup {
        1.0
    } else {
        epoch as f32 / warmup as f32
    }
}

/// Latent noise used when dreaming.
pub enum LatentNoise<'a> {
    /// Decode the posterior mean.
    Zero,
    /// Draw standard-normal noise from the given stream.
    Sample(&'a mut SimRng),
}

/// One dreamed transition: decode `Q(z | s, a)` into a probable next state.
pub fn dream_step(
    theta: &Dvae<f32>,
    s: &ObservationTensor,
    a: Action,
    noise: &mut LatentNoise<'_>,
) -> Result<ObservationTensor> {
    if s.len() != theta.state_dim() {
        return Err(Error::Shape {
            expected: theta.state_dim(),
            got: s.len(),
        });
    }
    let eps: Vec<f32> = match noise {
        LatentNoise::Zero => vec![0.0; theta.latent_dim()],
        LatentNoise::Sample(rng) => (0..theta.latent_dim()).map(|_| rng.sample(StandardNormal)).collect(),
    };
    let out = theta.reconstruct(&model_input(s, a), &eps)?;
    let (c, h, w) = s.shape();
    ObservationTensor::from_vec(c, h, w, out)
}

/// Nested dreaming: each state is the dream of its predecessor, starting
/// from the real `s0`. Returns one state per action.
pub fn dream_trajectory(
    theta: &Dvae<f32>,
    s0: &ObservationTensor,
    actions: &[Action],
    noise: &mut LatentNoise<'_>,
) -> Result<Vec<ObservationTensor>> {
    let mut out: Vec<ObservationTensor> = Vec::with_capacity(actions.len());
    for a in actions {
        let prev = out.last().unwrap_or(s0);
        let next = dream_step(theta, prev, *a, noise)?;
        out.push(next);
    }
    Ok(out)
}

/// What a dreamed record stores for each state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DreamOutput {
    /// Per-pixel Bernoulli means, as decoded.
    #[default]
    Mean,
    /// Most likely pixel values: means of at least one half become 1, the
    /// rest 0. Suits the binary planes of raw and RGB observations.
    Mode,
}

impl DreamOutput {
    pub fn apply(self, obs: ObservationTensor) -> ObservationTensor {
        match self {
            DreamOutput::Mean => obs,
            DreamOutput::Mode => {
                let (c, h, w) = obs.shape();
                let data = obs
                    .into_vec()
                    .into_iter()
                    .map(|v| if v >= 0.5 { 1.0 } else { 0.0 })
                    .collect();
                ObservationTensor::from_vec(c, h, w, data).expect("shape unchanged")
            }
        }
    }
}

/// Dreams one record per record of `d`. Actions, rewards and terminal flags
/// are copied. Within an episode each dreamed state, after `output` is
/// applied, feeds the next dream; the chain restarts from the real state
/// after every terminal record.
pub fn generate_artificial_buffer(
    theta: &Dvae<f32>,
    d: &ReplayBuffer,
    noise: &mut LatentNoise<'_>,
    output: DreamOutput,
) -> Result<ReplayBuffer> {
    if d.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let mut dreamed = ReplayBuffer::new(d.capacity(), BufferKind::Dreamed);
    let mut chain: Option<ObservationTensor> = None;
    for record in d {
        let s_hat = chain.take().unwrap_or_else(|| record.state.clone());
        let next_hat = output.apply(dream_step(theta, &s_hat, record.action, noise)?);
        if !record.terminal {
            chain = Some(next_hat.clone());
        }
        dreamed.push(Transition::new(
            s_hat,
            record.action,
            record.reward,
            next_hat,
            record.terminal,
        )?)?;
    }
    Ok(dreamed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(v: [f32; 4]) -> ObservationTensor {
        ObservationTensor::from_vec(1, 2, 2, v.to_vec()).unwrap()
    }

    fn tiny_model() -> Dvae<f32> {
        let hyper = DvaeHyper {
            latent_dim: 2,
            hidden: vec![5],
            ..DvaeHyper::default()
        };
        DvaeParams::init(4, &hyper).unwrap().model
    }

    #[test]
    fn untrained_dream_has_state_shape() {
        let theta = tiny_model();
        let s = obs([1.0, 0.0, 0.0, 0.0]);
        let out = dream_step(&theta, &s, Action::Right, &mut LatentNoise::Zero).unwrap();
        assert_eq!(out.shape(), s.shape());
        assert!(out.as_slice().iter().all(|v| *v > 0.0 && *v < 1.0));
        let again = dream_step(&theta, &s, Action::Right, &mut LatentNoise::Zero).unwrap();
        assert_eq!(out, again);
        let bad = ObservationTensor::zeros(1, 3, 3);
        assert!(dream_step(&theta, &bad, Action::Up, &mut LatentNoise::Zero).is_err());
    }

    #[test]
    fn trajectory_nests_dreams() {
        let theta = tiny_model();
        let s0 = obs([0.0, 1.0, 0.0, 0.0]);
        let acts = [Action::Down, Action::Left, Action::Up];
        let traj = dream_trajectory(&theta, &s0, &acts, &mut LatentNoise::Zero).unwrap();
        assert_eq!(traj.len(), 3);
        let mut prev = s0.clone();
        for (a, s) in acts.iter().zip(&traj) {
            let expected = dream_step(&theta, &prev, *a, &mut LatentNoise::Zero).unwrap();
            assert_eq!(&expected, s);
            prev = expected;
        }
        let one = dream_trajectory(&theta, &s0, &acts[..1], &mut LatentNoise::Zero).unwrap();
        assert_eq!(
            one[0],
            dream_step(&theta, &s0, acts[0], &mut LatentNoise::Zero).unwrap()
        );
    }

    fn record(s: [f32; 4], a: Action, r: f32, n: [f32; 4], terminal: bool) -> Transition {
        Transition::new(obs(s), a, r, obs(n), terminal).unwrap()
    }

    #[test]
    fn single_record_dreams_once() {
        let theta = tiny_model();
        let mut d = ReplayBuffer::new(8, BufferKind::Real);
        d.push(record(
            [1.0, 0.0, 0.0, 0.0],
            Action::Right,
            -0.01,
            [0.0, 1.0, 0.0, 0.0],
            false,
        ))
        .unwrap();
        let dh = generate_artificial_buffer(&theta, &d, &mut LatentNoise::Zero, DreamOutput::Mean).unwrap();
        assert_eq!(dh.len(), 1);
        assert_eq!(dh.kind(), BufferKind::Dreamed);
        let r = dh.get(0).unwrap();
        assert_eq!(r.state, obs([1.0, 0.0, 0.0, 0.0]));
        let expected = dream_step(&theta, &r.state, Action::Right, &mut LatentNoise::Zero).unwrap();
        assert_eq!(r.next_state, expected);
        assert_eq!((r.action, r.reward, r.terminal), (Action::Right, -0.01, false));
    }

    #[test]
    fn mode_output_is_binary_and_feeds_the_chain() {
        let theta = tiny_model();
        let mut d = ReplayBuffer::new(8, BufferKind::Real);
        d.push(record(
            [1.0, 0.0, 0.0, 0.0],
            Action::Right,
            -0.01,
            [0.0, 1.0, 0.0, 0.0],
            false,
        ))
        .unwrap();
        d.push(record(
            [0.0, 1.0, 0.0, 0.0],
            Action::Down,
            1.0,
            [0.0, 0.0, 0.0, 1.0],
            true,
        ))
        .unwrap();
        let dh = generate_artificial_buffer(&theta, &d, &mut LatentNoise::Zero, DreamOutput::Mode).unwrap();
        for r in &dh {
            assert!(r.next_state.as_slice().iter().all(|v| *v == 0.0 || *v == 1.0));
        }
        let second = dh.get(1).unwrap();
        assert_eq!(second.state, dh.get(0).unwrap().next_state);
        let expected =
            DreamOutput::Mode.apply(dream_step(&theta, &second.state, Action::Down, &mut LatentNoise::Zero).unwrap());
        assert_eq!(second.next_state, expected);
        assert_eq!(
            DreamOutput::Mode.apply(obs([0.5, 0.49, 0.0, 0.99])),
            obs([1.0, 0.0, 0.0, 1.0])
        );
    }

    #[test]
    fn chain_resets_after_terminal() {
        // two episodes: records 0..=1 then 2..=3
        let theta = tiny_model();
        let mut d = ReplayBuffer::new(8, BufferKind::Real);
        let s = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        d.push(record(s[0], Action::Right, -0.01, s[1], false)).unwrap();
        d.push(record(s[1], Action::Down, 1.0, s[3], true)).unwrap();
        d.push(record(s[2], Action::Up, -0.01, s[0], false)).unwrap();
        d.push(record(s[0], Action::Right, -0.01, s[1], true)).unwrap();
        let dh = generate_artificial_buffer(&theta, &d, &mut LatentNoise::Zero, DreamOutput::Mean).unwrap();
        let step = |x: &ObservationTensor, a| dream_step(&theta, x, a, &mut LatentNoise::Zero).unwrap();
        let d0 = step(&obs(s[0]), Action::Right);
        let d1 = step(&d0, Action::Down);
        let d2 = step(&obs(s[2]), Action::Up);
        let d3 = step(&d2, Action::Right);
        assert_eq!(dh.get(1).unwrap().state, d0, "chained within episode");
        assert_eq!(dh.get(1).unwrap().next_state, d1);
        assert_eq!(dh.get(2).unwrap().state, obs(s[2]), "anchored after terminal");
        assert_eq!(dh.get(3).unwrap().state, d2);
        assert_eq!(dh.get(3).unwrap().next_state, d3);
        let copied = |b: &ReplayBuffer| b.iter().map(|t| (t.action, t.reward, t.terminal)).collect::<Vec<_>>();
        assert_eq!(copied(&d), copied(&dh));
    }

    #[test]
    fn empty_inputs_are_errors() {
        let d = ReplayBuffer::new(4, BufferKind::Real);
        assert!(matches!(train_dvae(&d, &DvaeHyper::default()), Err(Error::EmptyBuffer)));
        assert!(generate_artificial_buffer(&tiny_model(), &d, &mut LatentNoise::Zero, DreamOutput::Mean).is_err());
    }

    #[test]
    fn zero_epochs_returns_initial_parameters() {
        let mut d = ReplayBuffer::new(4, BufferKind::Real);
        d.push(record(
            [1.0, 0.0, 0.0, 0.0],
            Action::Right,
            -0.01,
            [0.0, 1.0, 0.0, 0.0],
            false,
        ))
        .unwrap();
        let hyper = DvaeHyper {
            epochs: 0,
            latent_dim: 2,
            hidden: vec![5],
            ..DvaeHyper::default()
        };
        let (params, curve) = train_dvae(&d, &hyper).unwrap();
        assert!(curve.is_empty());
        assert_eq!(params, DvaeParams::init(4, &hyper).unwrap());
    }
}
