//! Writes observation images: a full RGB view and a grayscale partial view
//! of the same state, plus the pair side by side.
//!
//! cargo run --example render_frames -- /tmp/frames

use std::path::PathBuf;
use std::sync::Arc;

use dreaming_maze::harness::render::{render_observation, render_pair, Image};
use dreaming_maze::maze::{generate_maze, reset, GoalPlacement, MazeStyle, Representation, ScenarioConfig, VisionKind};
use dreaming_maze::observation::observe;

fn main() -> dreaming_maze::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("dreaming-maze-frames"));
    std::fs::create_dir_all(&dir)?;

    let grid = Arc::new(generate_maze(15, 15, 5, MazeStyle::Perfect)?);
    let full = ScenarioConfig::normal()
        .with_goal(GoalPlacement::FarCorner)
        .with_representation(Representation::Rgb);
    let partial = ScenarioConfig::pomdp(3, VisionKind::Raytrace)
        .with_goal(GoalPlacement::FarCorner)
        .with_representation(Representation::Rgb);

    let a = observe(&reset(grid.clone(), &full, 1)?);
    let b = observe(&reset(grid, &partial, 1)?);
    render_observation(&a, dir.join("full.ppm"))?;
    render_observation(&b, dir.join("partial.ppm"))?;
    render_pair(&a, &b, dir.join("pair.ppm"))?;

    let img = Image::load(dir.join("pair.ppm"))?;
    println!(
        "wrote {} ({}x{})",
        dir.join("pair.ppm").display(),
        img.width,
        img.height
    );
    Ok(())
}
