//! Learns the transition function of the 2x2 open maze from episodes that
//! only start on its top row, then dreams every (state, action) pair.
//! Pairs never seen in training are where the artifacts show up.
//!
//! cargo run --release --example dream_2x2

use std::collections::HashSet;

use dreaming_maze::dvae::{dream_step, train_dvae, LatentNoise};
use dreaming_maze::harness::config::ExperimentConfig;
use dreaming_maze::harness::experiment::{build_env, collect_real, dvae_hyper};
use dreaming_maze::maze::{state_at, step, Action, Representation};
use dreaming_maze::observation::observe;

fn main() -> dreaming_maze::Result<()> {
    let cfg = ExperimentConfig::preset("dvae-2x2")?;
    let env = build_env(&cfg)?;
    let d = collect_real(&cfg, &env)?;
    let seen: HashSet<(usize, usize, usize)> = d
        .iter()
        .map(|t| {
            let p = t.state.player_cell(Representation::Raw);
            (p.x, p.y, t.action.index())
        })
        .collect();

    let (params, losses) = train_dvae(&d, &dvae_hyper(&cfg))?;
    println!(
        "{} transitions, loss {:.3} -> {:.3}",
        d.len(),
        losses[0].loss,
        losses.last().unwrap().loss
    );

    for cell in env.grid.open_cells() {
        for action in Action::ALL {
            let state = state_at(env.grid.clone(), &env.scenario, cell, None)?;
            let truth = observe(&step(&state, action)?.state);
            let dream = dream_step(&params.model, &observe(&state), action, &mut LatentNoise::Zero)?;
            let tag = if seen.contains(&(cell.x, cell.y, action.index())) {
                "seen"
            } else {
                "unseen"
            };
            println!(
                "({},{}) {:<5} -> dreamed {:?}  pixel error {:.3}  {tag}",
                cell.x,
                cell.y,
                format!("{action:?}"),
                dream.player_cell(Representation::Raw),
                dream.mean_abs_diff(&truth)
            );
        }
    }
    Ok(())
}
