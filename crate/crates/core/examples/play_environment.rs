//! Steps the maze by hand: follows the shortest path to the goal, prints
//! rewards, then shows what a ray-traced partial view sees from the start.
//!
//! cargo run --example play_environment

use std::sync::Arc;

use dreaming_maze::maze::{
    generate_maze, optimal_action, reset, step, GoalPlacement, MazeStyle, ScenarioConfig, VisionKind,
};
use dreaming_maze::observation::observe;

fn main() -> dreaming_maze::Result<()> {
    let grid = Arc::new(generate_maze(9, 9, 3, MazeStyle::Perfect)?);
    let scenario = ScenarioConfig::normal()
        .with_goal(GoalPlacement::FarCorner)
        .with_time_limit(200);

    let start = reset(grid.clone(), &scenario, 42)?;
    let goal = start.goal.unwrap();
    println!("start {:?}, goal {:?}", start.player, goal);

    let mut state = start.clone();
    let mut ret = 0.0;
    while !state.is_terminal() {
        let action = optimal_action(&grid, state.player, goal)?.unwrap();
        let out = step(&state, action)?;
        ret += out.reward;
        println!(
            "{:>5} -> {:?} reward {:+.2}",
            format!("{action:?}"),
            out.state.player,
            out.reward
        );
        state = out.state;
    }
    println!("reached goal in {} steps, return {ret:.2}", state.step_count);

    // Same start under a limited field of view.
    let pomdp = ScenarioConfig::pomdp(2, VisionKind::Raytrace).with_goal(GoalPlacement::FarCorner);
    let seen = reset(grid, &pomdp, 42)?;
    let obs = observe(&seen);
    let vis = obs.plane(obs.channels() - 1);
    println!("visible cells around {:?}:", seen.player);
    for y in 0..obs.height() {
        let row: String = (0..obs.width())
            .map(|x| if vis[y * obs.width() + x] > 0.5 { '#' } else { '.' })
            .collect();
        println!("  {row}");
    }
    Ok(())
}
