use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{Cell, MazeGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }

    /// Neighbouring cell in this direction, if it lies inside a `width`×`height` grid.
    pub fn apply(self, cell: Cell, width: usize, height: usize) -> Option<Cell> {
        let (dx, dy) = self.delta();
        let x = cell.x as isize + dx;
        let y = cell.y as isize + dy;
        (x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height).then(|| Cell::new(x as usize, y as usize))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
        };
        f.write_str(s)
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "up" | "u" => Ok(Action::Up),
            "down" | "d" => Ok(Action::Down),
            "left" | "l" => Ok(Action::Left),
            "right" | "r" => Ok(Action::Right),
            other => Err(Error::Invalid(format!("unknown action `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioMode {
    Normal,
    Pomdp,
    LimitedPomdp,
    TimedLimitedPomdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisionKind {
    Radius,
    Raytrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Raw,
    Grayscale,
    Rgb,
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Representation::Raw),
            "grayscale" | "gray" => Ok(Representation::Grayscale),
            "rgb" => Ok(Representation::Rgb),
            other => Err(Error::Invalid(format!("unknown representation `{other}`"))),
        }
    }
}

/// Where the goal goes on reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoalPlacement {
    /// Free roaming: no goal, episodes end on the time limit only.
    None,
    /// Uniform over open cells, drawn from the episode seed.
    Random,
    /// The open cell closest (row-major) to the bottom-right corner.
    FarCorner,
    Fixed {
        x: usize,
        y: usize,
    },
}

/// Cells from which the player may start. `Top` restricts starts to the
/// upper half of the rows, which leaves the other half of the state space
/// unexplored by short collection episodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartRegion {
    Anywhere,
    Top,
    Bottom,
    Left,
    Right,
}

impl StartRegion {
    pub fn contains(self, cell: Cell, width: usize, height: usize) -> bool {
        match self {
            StartRegion::Anywhere => true,
            StartRegion::Top => cell.y < height / 2,
            StartRegion::Bottom => cell.y >= height / 2,
            StartRegion::Left => cell.x < width / 2,
            StartRegion::Right => cell.x >= width / 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardScheme {
    pub goal: f32,
    pub step: f32,
}

impl Default for RewardScheme {
    fn default() -> Self {
        RewardScheme { goal: 1.0, step: -0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub mode: ScenarioMode,
    pub vision_radius: Option<usize>,
    pub vision_kind: VisionKind,
    pub time_limit: Option<usize>,
    pub solution_fade_steps: Option<usize>,
    pub representation: Representation,
    pub goal: GoalPlacement,
    pub start: StartRegion,
    pub rewards: RewardScheme,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            mode: ScenarioMode::Normal,
            vision_radius: None,
            vision_kind: VisionKind::Radius,
            time_limit: None,
            solution_fade_steps: None,
            representation: Representation::Raw,
            goal: GoalPlacement::Random,
            start: StartRegion::Anywhere,
            rewards: RewardScheme::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn normal() -> Self {
        Self::default()
    }

    pub fn with_time_limit(mut self, limit: usize) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn with_goal(mut self, goal: GoalPlacement) -> Self {
        self.goal = goal;
        self
    }

    pub fn with_start(mut self, start: StartRegion) -> Self {
        self.start = start;
        self
    }

    pub fn with_representation(mut self, repr: Representation) -> Self {
        self.representation = repr;
        self
    }

    pub fn pomdp(radius: usize, kind: VisionKind) -> Self {
        ScenarioConfig {
            mode: ScenarioMode::Pomdp,
            vision_radius: Some(radius),
            vision_kind: kind,
            ..Self::default()
        }
    }

    pub fn limited_pomdp(radius: usize, kind: VisionKind, time_limit: usize) -> Self {
        ScenarioConfig {
            mode: ScenarioMode::LimitedPomdp,
            time_limit: Some(time_limit),
            ..Self::pomdp(radius, kind)
        }
    }

    pub fn timed_limited_pomdp(radius: usize, kind: VisionKind, time_limit: usize, fade_steps: usize) -> Self {
        ScenarioConfig {
            mode: ScenarioMode::TimedLimitedPomdp,
            solution_fade_steps: Some(fade_steps),
            ..Self::limited_pomdp(radius, kind, time_limit)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Scenario(m.to_string()));
        match self.mode {
            ScenarioMode::Normal => {
                if self.vision_radius.is_some() {
                    return bad("normal mode is fully observable; vision_radius must be absent");
                }
            }
            _ => match self.vision_radius {
                None => return bad("partially observable modes need a vision_radius"),
                Some(0) => return bad("vision_radius must be positive"),
                Some(_) => {}
            },
        }
        if matches!(self.mode, ScenarioMode::LimitedPomdp | ScenarioMode::TimedLimitedPomdp)
            && self.time_limit.is_none()
        {
            return bad("limited modes need a time_limit");
        }
        if self.mode == ScenarioMode::TimedLimitedPomdp && self.solution_fade_steps.is_none() {
            return bad("timed limited mode needs solution_fade_steps");
        }
        if self.mode != ScenarioMode::TimedLimitedPomdp && self.solution_fade_steps.is_some() {
            return bad("solution_fade_steps only applies to the timed limited mode");
        }
        if self.time_limit == Some(0) {
            return bad("time_limit must be positive");
        }
        if self.goal == GoalPlacement::None && self.time_limit.is_none() {
            return bad("a goal-free scenario needs a time_limit to end episodes");
        }
        Ok(())
    }
}

/// Full environment configuration at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct MazeState {
    pub grid: Arc<MazeGrid>,
    pub scenario: ScenarioConfig,
    pub player: Cell,
    pub goal: Option<Cell>,
    pub step_count: usize,
}

impl MazeState {
    pub fn at_goal(&self) -> bool {
        self.goal == Some(self.player)
    }

    pub fn is_terminal(&self) -> bool {
        self.at_goal() || self.scenario.time_limit.is_some_and(|t| self.step_count >= t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: MazeState,
    pub reward: f32,
    pub terminal: bool,
}

fn resolve_goal(
    grid: &MazeGrid,
    placement: GoalPlacement,
    open: &[Cell],
    rng: &mut ChaCha8Rng,
) -> Result<Option<Cell>> {
    Ok(match placement {
        GoalPlacement::None => None,
        GoalPlacement::Random => Some(*open.choose(rng).ok_or(Error::NoPlacement)?),
        GoalPlacement::FarCorner => Some(*open.last().ok_or(Error::NoPlacement)?),
        GoalPlacement::Fixed { x, y } => {
            let cell = Cell::new(x, y);
            grid.check_open(cell)?;
            Some(cell)
        }
    })
}

/// Places the player (and goal, per the scenario) on distinct open cells.
/// Deterministic in `seed`.
pub fn reset(grid: Arc<MazeGrid>, scenario: &ScenarioConfig, seed: u64) -> Result<MazeState> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let open = grid.open_cells();
    let goal = resolve_goal(&grid, scenario.goal, &open, &mut rng)?;
    let starts: Vec<Cell> = open
        .iter()
        .copied()
        .filter(|c| Some(*c) != goal && scenario.start.contains(*c, grid.width(), grid.height()))
        .collect();
    let player = *starts.choose(&mut rng).ok_or(Error::NoPlacement)?;
    Ok(MazeState {
        grid,
        scenario: *scenario,
        player,
        goal,
        step_count: 0,
    })
}

/// Start state at an explicit player cell.
pub fn state_at(grid: Arc<MazeGrid>, scenario: &ScenarioConfig, player: Cell, goal: Option<Cell>) -> Result<MazeState> {
    scenario.validate()?;
    grid.check_open(player)?;
    if let Some(g) = goal {
        grid.check_open(g)?;
    }
    Ok(MazeState {
        grid,
        scenario: *scenario,
        player,
        goal,
        step_count: 0,
    })
}

/// Transition function. Moves into walls or off the grid leave the player in
/// place but still consume a step.
pub fn step(state: &MazeState, action: Action) -> Result<StepOutcome> {
    if state.is_terminal() {
        return Err(Error::TerminalState);
    }
    let grid = &state.grid;
    let player = action
        .apply(state.player, grid.width(), grid.height())
        .filter(|c| !grid.is_wall(*c))
        .unwrap_or(state.player);
    let next = MazeState {
        player,
        step_count: state.step_count + 1,
        ..state.clone()
    };
    let rewards = state.scenario.rewards;
    let reward = if next.at_goal() { rewards.goal } else { rewards.step };
    let terminal = next.is_terminal();
    Ok(StepOutcome {
        state: next,
        reward,
        terminal,
    })
}

/// A grid plus the scenario played on it.
#[derive(Debug, Clone)]
pub struct MazeEnv {
    pub grid: Arc<MazeGrid>,
    pub scenario: ScenarioConfig,
}

impl MazeEnv {
    pub fn new(grid: MazeGrid, scenario: ScenarioConfig) -> Result<Self> {
        scenario.validate()?;
        Ok(MazeEnv {
            grid: Arc::new(grid),
            scenario,
        })
    }

    pub fn reset(&self, seed: u64) -> Result<MazeState> {
        reset(self.grid.clone(), &self.scenario, seed)
    }

    pub fn with_scenario(&self, scenario: ScenarioConfig) -> Result<Self> {
        scenario.validate()?;
        Ok(MazeEnv {
            grid: self.grid.clone(),
            scenario,
        })
    }
}
