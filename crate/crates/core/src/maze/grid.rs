use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 56;

/// Grid coordinate; `x` is the column, `y` the row (row 0 at the top).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MazeStyle {
    /// No interior walls.
    Open,
    /// Spanning tree carved by a randomized depth-first search.
    Perfect,
}

impl MazeStyle {
    pub fn name(self) -> &'static str {
        match self {
            MazeStyle::Open => "open",
            MazeStyle::Perfect => "perfect",
        }
    }
}

impl fmt::Display for MazeStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MazeStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(MazeStyle::Open),
            "perfect" | "perfect-maze" => Ok(MazeStyle::Perfect),
            other => Err(Error::Invalid(format!("unknown maze style `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MazeGrid {
    width: usize,
    height: usize,
    seed: u64,
    style: MazeStyle,
    walls: Vec<bool>,
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::Dimension(d))
    }
}

/// Builds a grid. Deterministic in every argument.
///
/// Perfect mazes carve a lattice of cells at even coordinates with an
/// iterative recursive backtracker, so walls occupy the odd rows and columns
/// between them. When a dimension is even, the last row or column has no
/// lattice cells of its own; each lattice cell bordering it gets a dead-end
/// leaf there, which keeps the open cells a tree.
pub fn generate_maze(width: usize, height: usize, seed: u64, style: MazeStyle) -> Result<MazeGrid> {
    check_dim(width)?;
    check_dim(height)?;
    let walls = match style {
        MazeStyle::Open => vec![false; width * height],
        MazeStyle::Perfect => carve_backtracker(width, height, seed),
    };
    Ok(MazeGrid {
        width,
        height,
        seed,
        style,
        walls,
    })
}

fn carve_backtracker(width: usize, height: usize, seed: u64) -> Vec<bool> {
    let mut walls = vec![true; width * height];
    let lw = width.div_ceil(2);
    let lh = height.div_ceil(2);
    let mut visited = vec![false; lw * lh];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let open = |walls: &mut Vec<bool>, x: usize, y: usize| walls[y * width + x] = false;

    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    open(&mut walls, 0, 0);
    while let Some(&(cx, cy)) = stack.last() {
        let mut next = Vec::with_capacity(4);
        if cy > 0 && !visited[(cy - 1) * lw + cx] {
            next.push((cx, cy - 1));
        }
        if cy + 1 < lh && !visited[(cy + 1) * lw + cx] {
            next.push((cx, cy + 1));
        }
        if cx > 0 && !visited[cy * lw + cx - 1] {
            next.push((cx - 1, cy));
        }
        if cx + 1 < lw && !visited[cy * lw + cx + 1] {
            next.push((cx + 1, cy));
        }
        match next.choose(&mut rng) {
            Some(&(nx, ny)) => {
                visited[ny * lw + nx] = true;
                // knock down the wall between the two lattice cells
                open(&mut walls, cx + nx, cy + ny);
                open(&mut walls, 2 * nx, 2 * ny);
                stack.push((nx, ny));
            }
            None => {
                stack.pop();
            }
        }
    }

    if width % 2 == 0 {
        for y in (0..height).step_by(2) {
            open(&mut walls, width - 1, y);
        }
    }
    if height % 2 == 0 {
        for x in (0..width).step_by(2) {
            open(&mut walls, x, height - 1);
        }
    }
    walls
}

impl MazeGrid {
    /// Builds a grid from an explicit wall map (row-major).
    pub fn from_walls(width: usize, height: usize, seed: u64, style: MazeStyle, walls: Vec<bool>) -> Result<Self> {
        check_dim(width)?;
        check_dim(height)?;
        if walls.len() != width * height {
            return Err(Error::Shape {
                expected: width * height,
                got: walls.len(),
            });
        }
        Ok(MazeGrid {
            width,
            height,
            seed,
            style,
            walls,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn style(&self) -> MazeStyle {
        self.style
    }

    pub fn len(&self) -> usize {
        self.walls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walls.is_empty()
    }

    pub fn walls(&self) -> &[bool] {
        &self.walls
    }

    pub fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        self.walls[cell.y * self.width + cell.x]
    }

    /// True when the cell is inside the grid and not a wall.
    pub fn is_open(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height && !self.is_wall(cell)
    }

    pub fn wall_count(&self) -> usize {
        self.walls.iter().filter(|w| **w).count()
    }

    pub fn open_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|c| !self.is_wall(*c))
            .collect()
    }

    pub(crate) fn check_open(&self, cell: Cell) -> Result<()> {
        if self.is_open(cell) {
            Ok(())
        } else {
            Err(Error::BlockedCell { x: cell.x, y: cell.y })
        }
    }
}
