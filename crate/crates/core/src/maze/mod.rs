//! Deep Maze engine: grid generation, transition and reward function,
//! terminal detection, and the shortest-path oracle.

pub mod dmz;
mod env;
mod grid;
mod path;

pub use env::{
    reset, state_at, step, Action, GoalPlacement, MazeEnv, MazeState, Representation, RewardScheme, ScenarioConfig,
    ScenarioMode, StartRegion, StepOutcome, VisionKind,
};
pub use grid::{generate_maze, Cell, MazeGrid, MazeStyle, MAX_DIM, MIN_DIM};
pub use path::{distance_field, optimal_action, optimal_moves, optimal_path};
