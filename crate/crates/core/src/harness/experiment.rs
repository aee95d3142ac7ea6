use std::path::{Path, PathBuf};

use rand::SeedableRng;

use super::config::{BufferChoice, ExperimentConfig};
use super::metrics::{performance_rows, report_from_csv, write_csv, HorizonRow, LossRow, SummaryRow};
use super::render::render_pair;
use super::seeds::derive_seed;
use crate::agents::{train_cell, AgentKind, CellConfig, PerformanceReport, Policy, RandomPolicy};
use crate::dvae::{
    dream_step, dream_trajectory, generate_artificial_buffer, run_agent, train_dvae, BufferKind, DvaeHyper, EpochLoss,
    LatentNoise, ReplayBuffer,
};
use crate::error::{Error, Result};
use crate::maze::{dmz, generate_maze, step, Action, MazeEnv, Representation};
use crate::neural::Dvae;
use crate::observation::observe;
use crate::SimRng;

/// Result of one (agent, buffer) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub agent: AgentKind,
    pub buffer: BufferChoice,
    pub report: PerformanceReport,
}

impl CellOutcome {
    /// Row label such as `DQN-D` or `PPO-D̂`.
    pub fn label(&self) -> String {
        cell_label(self.agent, self.buffer)
    }
}

pub fn cell_label(agent: AgentKind, buffer: BufferChoice) -> String {
    let data = match buffer {
        BufferChoice::Real => "D",
        BufferChoice::Dreamed => "D\u{302}",
    };
    format!("{}-{data}", agent.name())
}

/// Stem used for per-cell file names, e.g. `ppo_dreamed`.
pub fn cell_stem(agent: AgentKind, buffer: BufferChoice) -> String {
    let data = match buffer {
        BufferChoice::Real => "real",
        BufferChoice::Dreamed => "dreamed",
    };
    format!("{}_{data}", agent.name().to_ascii_lowercase())
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dir: PathBuf,
    pub real_transitions: usize,
    pub loss: Vec<EpochLoss>,
    /// Share of `D` whose one-step dream puts the player on the right cell.
    pub one_step_accuracy: f64,
    pub horizon: Vec<HorizonRow>,
    /// In summary order: dreamed before real, DQN before PPO.
    pub cells: Vec<CellOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn cell(&self, agent: AgentKind, buffer: BufferChoice) -> Option<&CellOutcome> {
        self.cells.iter().find(|c| c.agent == agent && c.buffer == buffer)
    }
}

/// The environment agents are scored in.
pub fn build_env(cfg: &ExperimentConfig) -> Result<MazeEnv> {
    let grid = generate_maze(cfg.maze.width, cfg.maze.height, cfg.maze_seed(), cfg.maze.style)?;
    MazeEnv::new(grid, cfg.scenario)
}

/// Same maze with the collection start region and episode length.
pub fn collect_env(cfg: &ExperimentConfig, env: &MazeEnv) -> Result<MazeEnv> {
    let mut scenario = env.scenario;
    scenario.time_limit = Some(cfg.collect.time_limit);
    scenario.start = cfg.collect.start;
    env.with_scenario(scenario)
}

pub fn collect_real(cfg: &ExperimentConfig, env: &MazeEnv) -> Result<ReplayBuffer> {
    let env = collect_env(cfg, env)?;
    let mut d = ReplayBuffer::new(cfg.collect.capacity, BufferKind::Real);
    let mut policy = RandomPolicy {
        kind: cfg.collect.exploration,
    };
    run_agent(
        &env,
        &mut policy,
        cfg.collect.episodes,
        &mut d,
        derive_seed(cfg.experiment.master_seed, "collect", 0),
    )?;
    Ok(d)
}

pub fn dvae_hyper(cfg: &ExperimentConfig) -> DvaeHyper {
    DvaeHyper {
        seed: derive_seed(cfg.experiment.master_seed, "dvae", 0),
        ..cfg.dvae.clone()
    }
}

/// Fraction of records in `d` where the mean-latent dream of `(s, a)` puts
/// the player plane's argmax on the true next cell.
pub fn one_step_accuracy(model: &Dvae<f32>, d: &ReplayBuffer, repr: Representation) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let mut hits = 0usize;
    for t in d {
        let dreamed = dream_step(model, &t.state, t.action, &mut LatentNoise::Zero)?;
        hits += (dreamed.player_cell(repr) == t.next_state.player_cell(repr)) as usize;
    }
    Ok(hits as f64 / d.len() as f64)
}

/// Error of nested dreams against the real trajectory, per horizon.
///
/// Each sample resets `env`, draws a uniform random action sequence of
/// length `horizon`, and compares the `k`-th dreamed state with the `k`-th
/// real one. A sample stops counting once the real episode terminates, so
/// `samples` may shrink with the horizon.
pub fn dream_horizon(
    model: &Dvae<f32>,
    env: &MazeEnv,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<HorizonRow>> {
    let repr = env.scenario.representation;
    let mut pos = vec![0.0f64; horizon];
    let mut pix = vec![0.0f64; horizon];
    let mut counts = vec![0usize; horizon];
    let mut policy = RandomPolicy::uniform();
    for i in 0..samples as u64 {
        let mut rng = SimRng::seed_from_u64(derive_seed(seed, "horizon", i));
        let start = env.reset(derive_seed(seed, "horizon-start", i))?;
        let s0 = observe(&start);
        let actions: Vec<Action> = (0..horizon).map(|_| policy.act(&s0, &mut rng)).collect();
        let dreams = dream_trajectory(model, &s0, &actions, &mut LatentNoise::Zero)?;
        let mut state = start;
        for (k, (a, dreamed)) in actions.iter().zip(&dreams).enumerate() {
            if state.is_terminal() {
                break;
            }
            state = step(&state, *a)?.state;
            let real = observe(&state);
            let (p, q) = (dreamed.player_cell(repr), real.player_cell(repr));
            pos[k] += (p.x.abs_diff(q.x) + p.y.abs_diff(q.y)) as f64;
            pix[k] += dreamed.mean_abs_diff(&real) as f64;
            counts[k] += 1;
        }
    }
    Ok((0..horizon)
        .map(|k| {
            let n = counts[k].max(1) as f64;
            HorizonRow {
                horizon: k + 1,
                position_error: pos[k] / n,
                pixel_error: pix[k] / n,
                samples: counts[k],
            }
        })
        .collect())
}

fn summary_order(cells: &mut [(AgentKind, BufferChoice)]) {
    cells.sort_by_key(|(a, b)| (*b != BufferChoice::Dreamed, *a != AgentKind::Dqn));
}

/// Summary rows rebuilt from the per-cell metrics files in `dir`.
pub fn summarize(
    dir: &Path,
    cells: &[(AgentKind, BufferChoice)],
    window: usize,
    threshold: f64,
) -> Result<(Vec<CellOutcome>, Vec<SummaryRow>)> {
    let mut outcomes = Vec::with_capacity(cells.len());
    let mut rows = Vec::with_capacity(cells.len());
    for &(agent, buffer) in cells {
        let path = dir.join(format!("metrics_{}.csv", cell_stem(agent, buffer)));
        let report = report_from_csv(path, window, threshold)?;
        rows.push(SummaryRow {
            algorithm: cell_label(agent, buffer),
            avg_performance: report.final_mean(),
            converged_episode: report
                .convergence_episode
                .map_or_else(|| "N/A".to_string(), |e| e.to_string()),
        });
        outcomes.push(CellOutcome { agent, buffer, report });
    }
    Ok((outcomes, rows))
}

/// Collect `D`, train the transition model, dream `D̂`, render frames and
/// the horizon curve, train every configured cell, and write the summary.
/// Files land in `cfg.experiment.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(cfg, &mut |_| {})
}

/// [`run_experiment`] reporting each stage to `progress`.
pub fn run_experiment_with(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    cfg.validate()?;
    let dir = cfg.experiment.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
    let master = cfg.experiment.master_seed;

    let env = build_env(cfg)?;
    dmz::save(&env.grid, dir.join("maze.dmz"))?;

    let d = collect_real(cfg, &env)?;
    d.save(dir.join("d.dvrb"))?;
    progress(&format!("collected {} real transitions", d.len()));

    let (params, loss) = train_dvae(&d, &dvae_hyper(cfg))?;
    let loss_rows: Vec<LossRow> = loss.iter().copied().map(LossRow::from).collect();
    write_csv(dir.join("dvae_loss.csv"), &loss_rows)?;
    params.to_file().save(dir.join("dvae.dvm"))?;
    let repr = cfg.scenario.representation;
    let one_step_accuracy = one_step_accuracy(&params.model, &d, repr)?;
    if let Some(last) = loss.last() {
        progress(&format!(
            "trained transition model: final loss {:.4}, one-step position accuracy {:.3}",
            last.loss, one_step_accuracy
        ));
    }

    let mut dream_rng = SimRng::seed_from_u64(derive_seed(master, "dream", 0));
    let mut noise = if cfg.dream.sample_latent {
        LatentNoise::Sample(&mut dream_rng)
    } else {
        LatentNoise::Zero
    };
    let dhat = generate_artificial_buffer(&params.model, &d, &mut noise, cfg.dream.output)?;
    dhat.save(dir.join("dhat.dvrb"))?;

    for (i, t) in d.iter().take(cfg.report.frame_pairs).enumerate() {
        let dreamed = dream_step(&params.model, &t.state, t.action, &mut LatentNoise::Zero)?;
        let ext = if crate::observation::content_channels(repr) >= 3 {
            "ppm"
        } else {
            "pgm"
        };
        render_pair(&t.next_state, &dreamed, dir.join(format!("frame_{i:03}.{ext}")))?;
    }

    let mut horizon_scenario = collect_env(cfg, &env)?.scenario;
    horizon_scenario.time_limit = Some(cfg.report.horizon.max(cfg.collect.time_limit));
    let horizon = dream_horizon(
        &params.model,
        &env.with_scenario(horizon_scenario)?,
        cfg.report.horizon,
        cfg.report.horizon_samples,
        derive_seed(master, "horizon", 0),
    )?;
    write_csv(dir.join("horizon.csv"), &horizon)?;

    let mut cells: Vec<(AgentKind, BufferChoice)> = cfg
        .cells
        .agents
        .iter()
        .flat_map(|a| cfg.cells.buffers.iter().map(move |b| (*a, *b)))
        .collect();
    summary_order(&mut cells);
    cells.dedup();
    let cell_cfg = CellConfig {
        episodes: cfg.cells.episodes,
        window: cfg.cells.window,
        threshold: cfg.cells.threshold,
    };
    for &(agent, buffer) in &cells {
        let data = match buffer {
            BufferChoice::Real => &d,
            BufferChoice::Dreamed => &dhat,
        };
        let stem = cell_stem(agent, buffer);
        let seed = derive_seed(master, &format!("cell-{stem}"), 0);
        let (trained, report) = train_cell(agent, &env, data, &cfg.agent, &cell_cfg, seed)?;
        write_csv(dir.join(format!("metrics_{stem}.csv")), &performance_rows(&report))?;
        trained.to_model_file().save(dir.join(format!("agent_{stem}.dvm")))?;
        progress(&format!(
            "{}: final rolling mean {:.4}, converged at {}",
            cell_label(agent, buffer),
            report.final_mean(),
            report
                .convergence_episode
                .map_or_else(|| "N/A".to_string(), |e| e.to_string())
        ));
    }

    let (cells, summary) = summarize(&dir, &cells, cfg.cells.window, cfg.cells.threshold)?;
    write_csv(dir.join("summary.csv"), &summary)?;
    Ok(ExperimentReport {
        dir,
        real_transitions: d.len(),
        loss,
        one_step_accuracy,
        horizon,
        cells,
        summary,
    })
}
