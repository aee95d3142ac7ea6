//! The dreaming loop: collect real experience into `D`, fit the transition
//! model `T_θ(s, a) = P(X | Q(z | s, a))`, and dream an artificial buffer `D̂`.

mod buffer;
mod collect;
mod model;

pub use buffer::{BufferKind, ReplayBuffer, Transition};
pub use collect::{run_agent, EpisodeLog};
pub use model::{
    dream_step, dream_trajectory, generate_artificial_buffer, model_input, train_dvae, train_more, DreamOutput,
    DvaeHyper, DvaeParams, EpochLoss, LatentNoise,
};
