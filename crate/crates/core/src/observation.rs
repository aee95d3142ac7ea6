//! Encodes maze states as `[channel][row][column]` tensors with values in
//! `[0, 1]`.
//!
//! Content channels depend on the representation:
//!
//! | representation | channels                                     |
//! |----------------|----------------------------------------------|
//! | raw            | walls, player, goal (one-hot planes)          |
//! | grayscale      | one plane: wall 0.33, goal 0.66, player 1.0   |
//! | rgb            | R = player, G = goal, B = walls               |
//!
//! Partially observable modes append a visibility channel (1.0 seen,
//! [`MASK_VALUE`] unseen), and the timed mode appends a solution overlay
//! channel after it. Unseen cells carry [`MASK_VALUE`] on every channel.

use crate::error::{Error, Result};
use crate::maze::{optimal_path, Action, Cell, MazeState, Representation, ScenarioMode, VisionKind};

pub const MASK_VALUE: f32 = 0.5;

pub const GRAY_WALL: f32 = 0.33;
pub const GRAY_GOAL: f32 = 0.66;
pub const GRAY_PLAYER: f32 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ObservationTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        ObservationTensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape {
                expected: channels * height * width,
                got: data.len(),
            });
        }
        Ok(ObservationTensor {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    /// Cell holding the largest value of plane `c` (first one on ties).
    pub fn argmax_cell(&self, c: usize) -> Cell {
        let mut best = 0;
        for (i, v) in self.plane(c).iter().enumerate() {
            if *v > self.plane(c)[best] {
                best = i;
            }
        }
        Cell::new(best % self.width, best / self.width)
    }

    /// Where the player appears under `repr`.
    pub fn player_cell(&self, repr: Representation) -> Cell {
        self.argmax_cell(player_channel(repr))
    }

    pub fn mean_abs_diff(&self, other: &ObservationTensor) -> f32 {
        debug_assert_eq!(self.shape(), other.shape());
        let total: f32 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).sum();
        total / self.data.len() as f32
    }
}

/// Channel carrying the player under each representation.
pub fn player_channel(repr: Representation) -> usize {
    match repr {
        Representation::Raw => 1,
        Representation::Grayscale | Representation::Rgb => 0,
    }
}

pub fn content_channels(repr: Representation) -> usize {
    match repr {
        Representation::Raw | Representation::Rgb => 3,
        Representation::Grayscale => 1,
    }
}

/// Channel arrangement for a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub representation: Representation,
    pub visibility: bool,
    pub overlay: bool,
}

impl Layout {
    pub fn new(representation: Representation, mode: ScenarioMode) -> Self {
        Layout {
            representation,
            visibility: mode != ScenarioMode::Normal,
            overlay: mode == ScenarioMode::TimedLimitedPomdp,
        }
    }

    pub fn for_state(state: &MazeState) -> Self {
        Layout::new(state.scenario.representation, state.scenario.mode)
    }

    pub fn channels(&self) -> usize {
        content_channels(self.representation) + self.visibility as usize + self.overlay as usize
    }

    pub fn visibility_channel(&self) -> Option<usize> {
        self.visibility.then(|| content_channels(self.representation))
    }

    pub fn overlay_channel(&self) -> Option<usize> {
        self.overlay.then(|| self.channels() - 1)
    }
}

/// Tensor shape `(channels, height, width)` produced for states of this scenario.
pub fn observation_shape(state: &MazeState) -> (usize, usize, usize) {
    (
        Layout::for_state(state).channels(),
        state.grid.height(),
        state.grid.width(),
    )
}

/// Encodes the whole state with no masking.
pub fn observe_full(state: &MazeState, representation: Representation) -> ObservationTensor {
    let layout = Layout::new(representation, state.scenario.mode);
    let grid = &state.grid;
    let (h, w) = (grid.height(), grid.width());
    let mut obs = ObservationTensor::zeros(layout.channels(), h, w);
    for y in 0..h {
        for x in 0..w {
            let cell = Cell::new(x, y);
            let wall = grid.is_wall(cell);
            let player = state.player == cell;
            let goal = state.goal == Some(cell);
            match representation {
                Representation::Raw => {
                    obs.set(0, y, x, wall as u8 as f32);
                    obs.set(1, y, x, player as u8 as f32);
                    obs.set(2, y, x, goal as u8 as f32);
                }
                Representation::Rgb => {
                    obs.set(0, y, x, player as u8 as f32);
                    obs.set(1, y, x, goal as u8 as f32);
                    obs.set(2, y, x, wall as u8 as f32);
                }
                Representation::Grayscale => {
                    let v = if player {
                        GRAY_PLAYER
                    } else if goal {
                        GRAY_GOAL
                    } else if wall {
                        GRAY_WALL
                    } else {
                        0.0
                    };
                    obs.set(0, y, x, v);
                }
            }
        }
    }
    if let Some(vc) = layout.visibility_channel() {
        obs.data[vc * h * w..(vc + 1) * h * w].fill(1.0);
    }
    obs
}

fn mask_cells(obs: &mut ObservationTensor, visible: impl Fn(Cell) -> bool) {
    let (c, h, w) = obs.shape();
    for y in 0..h {
        for x in 0..w {
            if !visible(Cell::new(x, y)) {
                for ch in 0..c {
                    obs.set(ch, y, x, MASK_VALUE);
                }
            }
        }
    }
}

/// Cells farther than `radius` (Chebyshev) from the player are masked.
pub fn observe_radius(state: &MazeState, radius: usize) -> ObservationTensor {
    let mut obs = observe_full(state, state.scenario.representation);
    mask_cells(&mut obs, |c| c.chebyshev(state.player) <= radius);
    obs
}

/// Cells on the Bresenham line from `from` to `to`, both endpoints included.
pub fn bresenham(from: Cell, to: Cell) -> Vec<Cell> {
    let (mut x, mut y) = (from.x as isize, from.y as isize);
    let (x1, y1) = (to.x as isize, to.y as isize);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut cells = vec![from];
    while (x, y) != (x1, y1) {
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
        cells.push(Cell::new(x as usize, y as usize));
    }
    cells
}

/// True when no wall lies strictly between `from` and `to` on their
/// Bresenham line. The endpoint itself may be a wall; the walls bounding a
/// corridor are therefore visible.
pub fn line_of_sight(state: &MazeState, from: Cell, to: Cell) -> bool {
    let line = bresenham(from, to);
    if line.len() <= 2 {
        return true;
    }
    line[1..line.len() - 1].iter().all(|c| !state.grid.is_wall(*c))
}

/// Radius vision further restricted to cells with an unobstructed line of sight.
pub fn observe_raytrace(state: &MazeState, radius: usize) -> ObservationTensor {
    let mut obs = observe_full(state, state.scenario.representation);
    mask_cells(&mut obs, |c| {
        c.chebyshev(state.player) <= radius && line_of_sight(state, state.player, c)
    });
    obs
}

/// Marks the remaining optimal path on the overlay channel with intensity
/// `1 - step_count / fade_steps` while `step_count < fade_steps`.
pub fn apply_solution_fade(obs: &ObservationTensor, state: &MazeState, fade_steps: usize) -> Result<ObservationTensor> {
    let overlay = Layout::for_state(state)
        .overlay_channel()
        .filter(|_| obs.channels() == Layout::for_state(state).channels())
        .ok_or_else(|| Error::Scenario("solution fade needs the timed limited mode overlay channel".into()))?;
    let mut out = obs.clone();
    let Some(goal) = state.goal else {
        return Ok(out);
    };
    if state.step_count >= fade_steps {
        return Ok(out);
    }
    let intensity = 1.0 - state.step_count as f32 / fade_steps as f32;
    for cell in optimal_path(&state.grid, state.player, goal)? {
        out.set(overlay, cell.y, cell.x, intensity);
    }
    Ok(out)
}

/// Encodes a state exactly as the agent perceives it under its scenario.
pub fn observe(state: &MazeState) -> ObservationTensor {
    let sc = &state.scenario;
    let obs = match (sc.mode, sc.vision_radius) {
        (ScenarioMode::Normal, _) | (_, None) => observe_full(state, sc.representation),
        (_, Some(r)) => match sc.vision_kind {
            VisionKind::Radius => observe_radius(state, r),
            VisionKind::Raytrace => observe_raytrace(state, r),
        },
    };
    match (sc.mode, sc.solution_fade_steps) {
        (ScenarioMode::TimedLimitedPomdp, Some(fade)) => {
            apply_solution_fade(&obs, state, fade).expect("timed layout has an overlay channel")
        }
        _ => obs,
    }
}

pub fn encode_action(action: Action) -> [f32; 4] {
    let mut v = [0.0; 4];
    v[action.index()] = 1.0;
    v
}

/// Inverse of [`encode_action`]; `None` unless `v` is exactly one-hot.
pub fn decode_action(v: &[f32]) -> Option<Action> {
    if v.len() != 4 {
        return None;
    }
    let hot: Vec<usize> = (0..4).filter(|i| v[*i] == 1.0).collect();
    let zeros = v.iter().filter(|x| **x == 0.0).count();
    match (hot.as_slice(), zeros) {
        ([i], 3) => Action::from_index(*i),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{generate_maze, state_at, GoalPlacement, MazeGrid, MazeStyle, ScenarioConfig};
    use std::sync::Arc;

    fn free_roam() -> ScenarioConfig {
        ScenarioConfig::normal()
            .with_goal(GoalPlacement::None)
            .with_time_limit(50)
    }

    fn open_state(n: usize, player: Cell, cfg: ScenarioConfig) -> MazeState {
        let grid = Arc::new(generate_maze(n, n, 0, MazeStyle::Open).unwrap());
        state_at(grid, &cfg, player, None).unwrap()
    }

    #[test]
    fn raw_player_plane_matches_table_walk() {
        let s0 = open_state(2, Cell::new(0, 0), free_roam());
        let obs = observe_full(&s0, Representation::Raw);
        assert_eq!(obs.shape(), (3, 2, 2));
        assert_eq!(obs.plane(1), &[1.0, 0.0, 0.0, 0.0]);
        let s2 = open_state(2, Cell::new(1, 1), free_roam());
        assert_eq!(observe_full(&s2, Representation::Raw).plane(1), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn representations_agree_on_player() {
        let grid = Arc::new(generate_maze(9, 9, 4, MazeStyle::Perfect).unwrap());
        let cfg = ScenarioConfig::normal();
        for seed in 0..20 {
            let s = crate::maze::reset(grid.clone(), &cfg, seed).unwrap();
            for repr in [Representation::Raw, Representation::Grayscale, Representation::Rgb] {
                let obs = observe_full(&s, repr);
                assert_eq!(obs.player_cell(repr), s.player);
                assert!(obs.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            }
            assert_eq!(observe_full(&s, Representation::Rgb).channels(), 3);
        }
    }

    #[test]
    fn distinct_configurations_encode_distinctly() {
        let grid = Arc::new(generate_maze(4, 4, 0, MazeStyle::Open).unwrap());
        let cfg = ScenarioConfig::normal();
        let cells = grid.open_cells();
        let mut seen = Vec::new();
        for p in &cells {
            for g in &cells {
                if p == g {
                    continue;
                }
                let s = state_at(grid.clone(), &cfg, *p, Some(*g)).unwrap();
                for repr in [Representation::Raw, Representation::Grayscale, Representation::Rgb] {
                    seen.push((repr as u8, observe_full(&s, repr).into_vec()));
                }
            }
        }
        let n = seen.len();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        seen.dedup();
        assert_eq!(seen.len(), n);
    }

    #[test]
    fn radius_covering_whole_grid_masks_nothing() {
        let cfg = ScenarioConfig::pomdp(3, VisionKind::Radius).with_goal(GoalPlacement::Random);
        let s = open_state(7, Cell::new(3, 3), cfg);
        let obs = observe_radius(&s, 3);
        assert_eq!(obs.plane(3).iter().filter(|v| **v == MASK_VALUE).count(), 0);
        assert_eq!(obs, observe_full(&s, Representation::Raw));
        let corner = open_state(7, Cell::new(0, 0), cfg);
        assert_eq!(observe_radius(&corner, 7), observe_full(&corner, Representation::Raw));
    }

    #[test]
    fn corner_radius_one_leaves_two_by_two_block() {
        let cfg = ScenarioConfig::pomdp(1, VisionKind::Radius);
        let s = open_state(5, Cell::new(0, 0), cfg);
        let obs = observe_radius(&s, 1);
        let vis = obs.plane(3);
        let unmasked: Vec<usize> = (0..25).filter(|i| vis[*i] == 1.0).collect();
        assert_eq!(unmasked, vec![0, 1, 5, 6]);
        // masked cells carry the sentinel on every channel
        for c in 0..4 {
            assert_eq!(obs.get(c, 4, 4), MASK_VALUE);
        }
    }

    #[test]
    fn masked_count_matches_chebyshev_ball() {
        for n in 2..=8 {
            for radius in 1..4 {
                let cfg = ScenarioConfig::pomdp(radius, VisionKind::Radius);
                for x in 0..n {
                    for y in 0..n {
                        let s = open_state(n, Cell::new(x, y), cfg);
                        let obs = observe_radius(&s, radius);
                        let masked = obs.plane(3).iter().filter(|v| **v == MASK_VALUE).count();
                        let ball = (x.saturating_sub(radius)..=(x + radius).min(n - 1)).count()
                            * (y.saturating_sub(radius)..=(y + radius).min(n - 1)).count();
                        assert_eq!(masked, n * n - ball);
                    }
                }
            }
        }
    }

    #[test]
    fn raytrace_equals_radius_without_walls() {
        let cfg = ScenarioConfig::pomdp(2, VisionKind::Raytrace);
        for p in [Cell::new(0, 0), Cell::new(3, 2), Cell::new(5, 5)] {
            let s = open_state(6, p, cfg);
            for r in 1..5 {
                assert_eq!(observe_raytrace(&s, r), observe_radius(&s, r));
            }
        }
    }

    /// Line walk for a horizontal ray: blocked by any wall strictly between.
    fn row_blocked(walls: &[bool], w: usize, px: usize, py: usize, tx: usize) -> bool {
        (px + 1..tx).any(|x| walls[py * w + x])
    }

    #[test]
    fn wall_right_of_player_hides_rest_of_row() {
        let w = 7;
        let mut walls = vec![false; w * w];
        walls[3 * w + 4] = true;
        let grid = Arc::new(MazeGrid::from_walls(w, w, 0, MazeStyle::Open, walls.clone()).unwrap());
        let cfg = ScenarioConfig::pomdp(6, VisionKind::Raytrace);
        let s = state_at(grid, &cfg, Cell::new(3, 3), None).unwrap();
        let obs = observe_raytrace(&s, 6);
        for x in 4..w {
            let expected_visible = !row_blocked(&walls, w, 3, 3, x);
            assert_eq!(obs.get(3, 3, x) == 1.0, expected_visible, "x={x}");
        }
        assert_eq!(obs.get(3, 3, 4), 1.0, "the wall itself is seen");
        assert_eq!(obs.get(3, 3, 5), MASK_VALUE);
        assert_eq!(obs.get(3, 3, 6), MASK_VALUE);
        assert_eq!(obs.get(3, 3, 3), 1.0, "player cell is always visible");
    }

    #[test]
    fn raytrace_visibility_is_subset_of_radius() {
        let grid = Arc::new(generate_maze(11, 11, 8, MazeStyle::Perfect).unwrap());
        for r in 1..5 {
            let cfg = ScenarioConfig::pomdp(r, VisionKind::Raytrace);
            for p in grid.open_cells() {
                let s = state_at(grid.clone(), &cfg, p, None);
                let Ok(s) = s else { continue };
                let ray = observe_raytrace(&s, r);
                let rad = observe_radius(&s, r);
                for i in 0..121 {
                    if ray.plane(3)[i] == 1.0 {
                        assert_eq!(rad.plane(3)[i], 1.0);
                    }
                }
                assert_eq!(ray.get(3, p.y, p.x), 1.0);
            }
        }
    }

    #[test]
    fn visibility_is_symmetric_on_open_grids() {
        let cfg = ScenarioConfig::pomdp(2, VisionKind::Raytrace);
        let n = 5;
        let cells: Vec<Cell> = (0..n * n).map(|i| Cell::new(i % n, i / n)).collect();
        let vis = |p: Cell, c: Cell| observe_raytrace(&open_state(n, p, cfg), 2).get(3, c.y, c.x) == 1.0;
        for p in &cells {
            for c in &cells {
                assert_eq!(vis(*p, *c), vis(*c, *p));
            }
        }
    }

    #[test]
    fn bresenham_endpoints() {
        let line = bresenham(Cell::new(0, 0), Cell::new(4, 2));
        assert_eq!(line.first(), Some(&Cell::new(0, 0)));
        assert_eq!(line.last(), Some(&Cell::new(4, 2)));
        assert_eq!(line.len(), 5);
        assert_eq!(bresenham(Cell::new(2, 2), Cell::new(2, 2)), vec![Cell::new(2, 2)]);
    }

    fn timed_state(step_count: usize) -> (MazeState, ObservationTensor) {
        let cfg = ScenarioConfig::timed_limited_pomdp(8, VisionKind::Radius, 40, 10);
        let grid = Arc::new(generate_maze(5, 5, 0, MazeStyle::Open).unwrap());
        let mut s = state_at(grid, &cfg, Cell::new(0, 0), Some(Cell::new(4, 0))).unwrap();
        s.step_count = step_count;
        let obs = observe_radius(&s, 8);
        (s, obs)
    }

    #[test]
    fn fade_full_intensity_at_start() {
        let (s, obs) = timed_state(0);
        let out = apply_solution_fade(&obs, &s, 10).unwrap();
        let overlay = out.plane(4);
        for x in 0..5 {
            assert_eq!(overlay[x], 1.0);
        }
        assert_eq!(overlay.iter().filter(|v| **v > 0.0).count(), 5);
    }

    #[test]
    fn fade_midpoint_and_end() {
        let (s, obs) = timed_state(5);
        let out = apply_solution_fade(&obs, &s, 10).unwrap();
        assert_eq!(out.get(4, 0, 2), 0.5);
        let (s, obs) = timed_state(10);
        assert_eq!(apply_solution_fade(&obs, &s, 10).unwrap(), obs);
    }

    #[test]
    fn fade_needs_overlay_channel() {
        let s = open_state(3, Cell::new(0, 0), free_roam());
        let obs = observe_full(&s, Representation::Raw);
        assert!(apply_solution_fade(&obs, &s, 4).is_err());
    }

    #[test]
    fn action_one_hot() {
        assert_eq!(encode_action(Action::Up), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(encode_action(Action::Right), [0.0, 0.0, 0.0, 1.0]);
        for a in Action::ALL {
            assert_eq!(decode_action(&encode_action(a)), Some(a));
        }
        assert_eq!(decode_action(&[0.5, 0.5, 0.0, 0.0]), None);
    }
}
