//! Generates a seeded perfect maze, prints it in DMZ1 text form and checks
//! that the far corner is reachable.
//!
//! cargo run --example generate_maze -- 11 7

use dreaming_maze::maze::{dmz, generate_maze, optimal_path, MazeStyle};

fn main() -> dreaming_maze::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(11);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let grid = generate_maze(size, size, seed, MazeStyle::Perfect)?;
    print!("{}", dmz::to_string(&grid));

    let open = grid.open_cells();
    let (from, to) = (open[0], *open.last().unwrap());
    let path = optimal_path(&grid, from, to)?;
    println!(
        "{} open cells, {} walls; shortest path {:?} -> {:?} takes {} moves",
        open.len(),
        grid.wall_count(),
        from,
        to,
        path.len() - 1
    );

    // Same seed, same maze.
    assert_eq!(grid, generate_maze(size, size, seed, MazeStyle::Perfect)?);
    Ok(())
}
