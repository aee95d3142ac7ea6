//! A reinforcement-learning workbench built around a dreaming variational
//! autoencoder: collect real experience in a configurable Deep Maze, learn
//! the transition function as a generative model, dream artificial replay
//! buffers from it, and compare agents trained on real versus dreamed data.
//!
//! * [`maze`]: grid generation, transition function, rewards, BFS oracle.
//! * [`observation`]: tensor encodings, partial observability, solution fade.
//! * [`neural`]: dense networks, VAE pieces, reverse-mode gradients, Adam.
//! * [`dvae`]: replay buffers, experience collection, DVAE training and dreaming.
//! * [`agents`]: random, tabular Q, DQN and PPO learners plus the performance metric.
//! * [`harness`]: configs, seeds, persistence, rendering, CLI and experiments.

pub mod agents;
pub mod dvae;
pub mod error;
pub mod harness;
pub mod maze;
pub mod neural;
pub mod observation;

pub use error::{Error, Result};

/// Random number generator used for every seeded stream in the crate.
pub type SimRng = rand_chacha::ChaCha8Rng;
