use rand::SeedableRng;

use super::buffer::{BufferKind, ReplayBuffer, Transition};
use crate::agents::Policy;
use crate::error::{Error, Result};
use crate::harness::seeds::derive_seed;
use crate::maze::{step, MazeEnv, MazeState};
use crate::observation::observe;
use crate::SimRng;

/// Start state and length of one collected episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub start: MazeState,
    pub steps: usize,
    pub reached_goal: bool,
}

/// Runs `episodes` episodes of `policy` in `env`, appending one transition
/// per step to the real buffer `d`. Episode `i` is reset and acted from
/// seeds derived from `(base_seed, i)`.
pub fn run_agent<P: Policy + ?Sized>(
    env: &MazeEnv,
    policy: &mut P,
    episodes: usize,
    d: &mut ReplayBuffer,
    base_seed: u64,
) -> Result<Vec<EpisodeLog>> {
    if d.kind() != BufferKind::Real {
        return Err(Error::Invalid("run_agent stores into a real buffer".into()));
    }
    let mut logs = Vec::with_capacity(episodes);
    for i in 0..episodes as u64 {
        let start = env.reset(derive_seed(base_seed, "episode-start", i))?;
        let mut rng = SimRng::seed_from_u64(derive_seed(base_seed, "episode-policy", i));
        let mut state = start.clone();
        let mut obs = observe(&state);
        let mut steps = 0;
        while !state.is_terminal() {
            let action = policy.act(&obs, &mut rng);
            let out = step(&state, action)?;
            let next_obs = observe(&out.state);
            d.push(Transition::new(
                obs,
                action,
                out.reward,
                next_obs.clone(),
                out.terminal,
            )?)?;
            state = out.state;
            obs = next_obs;
            steps += 1;
        }
        logs.push(EpisodeLog {
            start,
            steps,
            reached_goal: state.at_goal(),
        });
    }
    Ok(logs)
}
