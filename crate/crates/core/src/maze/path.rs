use std::collections::VecDeque;

use super::env::Action;
use super::grid::{Cell, MazeGrid};
use crate::error::Result;

/// Shortest path by breadth-first search, endpoints included. Neighbours are
/// expanded Up, Down, Left, Right so ties always resolve the same way.
/// Returns an empty path when `to` is unreachable.
pub fn optimal_path(grid: &MazeGrid, from: Cell, to: Cell) -> Result<Vec<Cell>> {
    grid.check_open(from)?;
    grid.check_open(to)?;
    let w = grid.width();
    let mut parent: Vec<Option<usize>> = vec![None; grid.len()];
    let mut seen = vec![false; grid.len()];
    let idx = |c: Cell| c.y * w + c.x;
    seen[idx(from)] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c == to {
            break;
        }
        for a in Action::ALL {
            if let Some(n) = a.apply(c, w, grid.height()) {
                if !grid.is_wall(n) && !seen[idx(n)] {
                    seen[idx(n)] = true;
                    parent[idx(n)] = Some(idx(c));
                    queue.push_back(n);
                }
            }
        }
    }
    if !seen[idx(to)] {
        return Ok(Vec::new());
    }
    let mut path = vec![to];
    let mut cur = idx(to);
    while let Some(p) = parent[cur] {
        path.push(Cell::new(p % w, p / w));
        cur = p;
    }
    path.reverse();
    Ok(path)
}

/// Number of moves on the shortest path, `None` when unreachable.
pub fn optimal_moves(grid: &MazeGrid, from: Cell, to: Cell) -> Result<Option<usize>> {
    let path = optimal_path(grid, from, to)?;
    Ok(path.len().checked_sub(1))
}

/// BFS distance from every cell to `target` (`None` for walls and
/// unreachable cells), row-major.
pub fn distance_field(grid: &MazeGrid, target: Cell) -> Result<Vec<Option<usize>>> {
    grid.check_open(target)?;
    let w = grid.width();
    let mut dist = vec![None; grid.len()];
    dist[target.y * w + target.x] = Some(0);
    let mut queue = VecDeque::from([target]);
    while let Some(c) = queue.pop_front() {
        let d = dist[c.y * w + c.x].unwrap();
        for a in Action::ALL {
            if let Some(n) = a.apply(c, w, grid.height()) {
                let i = n.y * w + n.x;
                if !grid.is_wall(n) && dist[i].is_none() {
                    dist[i] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
    }
    Ok(dist)
}

/// First move of the deterministic BFS path, `None` if already there or unreachable.
pub fn optimal_action(grid: &MazeGrid, from: Cell, to: Cell) -> Result<Option<Action>> {
    let path = optimal_path(grid, from, to)?;
    Ok(path.get(1).and_then(|next| {
        Action::ALL
            .into_iter()
            .find(|a| a.apply(from, grid.width(), grid.height()) == Some(*next))
    }))
}
