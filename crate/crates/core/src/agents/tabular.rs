use crate::maze::{Action, Cell, MazeGrid};

/// Discrete transition between state indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularTransition {
    pub state: usize,
    pub action: Action,
    pub reward: f64,
    pub next_state: usize,
    pub terminal: bool,
}

/// Action values indexed by state, for fully observed small mazes.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<[f64; 4]>,
}

impl QTable {
    pub fn new(states: usize) -> Self {
        QTable {
            values: vec![[0.0; 4]; states],
        }
    }

    pub fn states(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, state: usize, action: Action) -> f64 {
        self.values[state][action.index()]
    }

    pub fn set(&mut self, state: usize, action: Action, v: f64) {
        self.values[state][action.index()] = v;
    }

    pub fn max(&self, state: usize) -> f64 {
        self.values[state].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-valued action; ties go to the earlier action.
    pub fn greedy(&self, state: usize) -> Action {
        let row = &self.values[state];
        let mut best = 0;
        for a in 1..4 {
            if row[a] > row[best] {
                best = a;
            }
        }
        Action::ALL[best]
    }
}

/// `Q(s,a) += α (r + γ max Q(s') (1 - terminal) - Q(s,a))`
pub fn q_update(table: &mut QTable, t: &TabularTransition, alpha: f64, gamma: f64) {
    let bootstrap = if t.terminal { 0.0 } else { table.max(t.next_state) };
    let q = table.get(t.state, t.action);
    table.set(t.state, t.action, q + alpha * (t.reward + gamma * bootstrap - q));
}

/// Row-major state index of `cell` in `grid`.
pub fn cell_index(grid: &MazeGrid, cell: Cell) -> usize {
    cell.y * grid.width() + cell.x
}
