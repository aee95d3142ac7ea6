//! Tabular Q-learning on a small open maze. The greedy table policy is
//! compared against breadth-first-search distances from every cell.
//!
//! cargo run --example tabular_q_learning

use std::sync::Arc;

use dreaming_maze::agents::{cell_index, q_update, QTable, TabularTransition};
use dreaming_maze::maze::{
    distance_field, generate_maze, state_at, step, Action, Cell, GoalPlacement, MazeStyle, ScenarioConfig,
};
use dreaming_maze::SimRng;
use rand::{Rng, SeedableRng};

fn main() -> dreaming_maze::Result<()> {
    let grid = Arc::new(generate_maze(5, 5, 0, MazeStyle::Open)?);
    let goal = Cell::new(4, 4);
    let scenario = ScenarioConfig::normal().with_goal(GoalPlacement::Fixed { x: 4, y: 4 });
    let open = grid.open_cells();
    let mut q = QTable::new(grid.len());
    let mut rng = SimRng::seed_from_u64(1);

    for _ in 0..20_000 {
        let from = open[rng.gen_range(0..open.len())];
        if from == goal {
            continue;
        }
        let action = Action::ALL[rng.gen_range(0..4)];
        let out = step(&state_at(grid.clone(), &scenario, from, Some(goal))?, action)?;
        let t = TabularTransition {
            state: cell_index(&grid, from),
            action,
            reward: out.reward as f64,
            next_state: cell_index(&grid, out.state.player),
            terminal: out.state.at_goal(),
        };
        q_update(&mut q, &t, 0.5, 0.95);
    }

    let dist = distance_field(&grid, goal)?;
    let mut optimal = 0;
    for &cell in &open {
        if cell == goal {
            continue;
        }
        let next = step(
            &state_at(grid.clone(), &scenario, cell, Some(goal))?,
            q.greedy(cell_index(&grid, cell)),
        )?;
        let closer = dist[cell_index(&grid, next.state.player)] < dist[cell_index(&grid, cell)];
        optimal += closer as usize;
    }
    println!(
        "greedy move shortens the BFS distance from {optimal} of {} cells",
        open.len() - 1
    );
    Ok(())
}
