use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::ExperimentConfig;
use super::experiment::run_experiment_with;
use super::metrics::{performance_rows, write_csv, LossRow};
use super::render::{render_observation, render_pair};
use crate::agents::{
    evaluate, train_cell, AgentHyper, AgentKind, CellConfig, ExplorationKind, NetworkPolicy, RandomPolicy,
};
use crate::dvae::{
    dream_step, generate_artificial_buffer, run_agent, train_dvae, BufferKind, DreamOutput, DvaeHyper, LatentNoise,
    ReplayBuffer,
};
use crate::error::{Error, Result};
use crate::maze::{
    dmz, generate_maze, GoalPlacement, MazeEnv, MazeStyle, Representation, ScenarioConfig, StartRegion, MAX_DIM,
    MIN_DIM,
};
use crate::neural::ModelFile;
use crate::SimRng;

const CSV_SCHEMAS: &str = "\
CSV files (RFC 4180, header row, CRLF line endings):
  dvae loss      epoch,loss,recon,kl
  agent metrics  episode,performance,rolling_mean
  dream horizon  horizon,position_error,pixel_error,samples
  summary        algorithm,avg_performance,converged_episode   (N/A when never converged)

Exit status: 0 success, 1 usage error, 2 runtime error.";

#[derive(Debug, Parser)]
#[command(
    name = "dreaming-maze",
    version,
    about = "Deep Maze, a dreaming VAE world model, and DQN/PPO agents on real or dreamed replay",
    after_help = CSV_SCHEMAS
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a maze and write it as DMZ1 text.
    Gen {
        #[arg(long, value_parser = dimension)]
        width: usize,
        #[arg(long, value_parser = dimension)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "perfect", value_parser = parse_with::<MazeStyle>)]
        style: MazeStyle,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a random exploration policy and store its transitions as DVRB.
    Collect {
        #[arg(long)]
        maze: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value = "uniform", value_parser = exploration)]
        exploration: ExplorationKind,
        #[arg(long, default_value_t = 100_000)]
        capacity: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the transition model on a replay file; writes DVM1 and a loss CSV.
    TrainDvae {
        #[arg(long)]
        replay: PathBuf,
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 32)]
        latent_dim: usize,
        /// Hidden layer widths, comma separated.
        #[arg(long, default_value = "256", value_delimiter = ',')]
        hidden: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        kl_warmup_epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the model path with a `.loss.csv` extension.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Dream an artificial replay buffer from a real one.
    Dream {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        replay: PathBuf,
        /// Sample latent noise instead of decoding the posterior mean.
        #[arg(long)]
        sample: bool,
        /// Store decoded means, or round them to the most likely binary image.
        #[arg(long, default_value = "mean", value_parser = dream_output)]
        output: DreamOutput,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a DQN or PPO agent on real or dreamed replay.
    TrainAgent {
        #[arg(long)]
        maze: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_parser = parse_with::<AgentKind>)]
        agent: AgentKind,
        /// Replay to learn from. Required for DQN and for dreamed training.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Treat the replay as dreamed: never step the maze while learning.
        #[arg(long)]
        dreamed: bool,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        /// TOML file with agent hyperparameters.
        #[arg(long)]
        hyper: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Score a stored agent by its greedy action over fresh episodes.
    Eval {
        #[arg(long)]
        maze: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Render one replay record as PGM/PPM, or beside its dream with --model.
    Render {
        #[arg(long)]
        replay: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a whole experiment from a TOML config or a preset.
    Experiment {
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// dvae-2x2, dvae-8x8, agents-11 or agents-21
        #[arg(long)]
        preset: Option<String>,
        /// Override a config value, e.g. --set dvae.epochs=200
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
        /// Print the resolved config as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// none, random, far-corner or X,Y
    #[arg(long, default_value = "far-corner", value_parser = goal)]
    goal: GoalPlacement,
    #[arg(long)]
    time_limit: Option<usize>,
    /// anywhere, top, bottom, left or right
    #[arg(long, default_value = "anywhere", value_parser = start)]
    start: StartRegion,
    #[arg(long, default_value = "raw", value_parser = parse_with::<Representation>)]
    representation: Representation,
}

impl ScenarioArgs {
    fn env(&self, maze: &Path) -> Result<MazeEnv> {
        let mut scenario = ScenarioConfig::normal()
            .with_goal(self.goal)
            .with_start(self.start)
            .with_representation(self.representation);
        scenario.time_limit = self.time_limit;
        MazeEnv::new(dmz::load(maze)?, scenario)
    }
}

fn dimension(s: &str) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if (MIN_DIM..=MAX_DIM).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in {MIN_DIM}..={MAX_DIM}"))
    }
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn goal(s: &str) -> std::result::Result<GoalPlacement, String> {
    match s {
        "none" => Ok(GoalPlacement::None),
        "random" => Ok(GoalPlacement::Random),
        "far-corner" => Ok(GoalPlacement::FarCorner),
        _ => {
            let (x, y) = s.split_once(',').ok_or("expected none, random, far-corner or X,Y")?;
            let x = x.trim().parse().map_err(|_| "bad goal x")?;
            let y = y.trim().parse().map_err(|_| "bad goal y")?;
            Ok(GoalPlacement::Fixed { x, y })
        }
    }
}

fn start(s: &str) -> std::result::Result<StartRegion, String> {
    Ok(match s {
        "anywhere" => StartRegion::Anywhere,
        "top" => StartRegion::Top,
        "bottom" => StartRegion::Bottom,
        "left" => StartRegion::Left,
        "right" => StartRegion::Right,
        _ => return Err("expected anywhere, top, bottom, left or right".into()),
    })
}

fn dream_output(s: &str) -> std::result::Result<DreamOutput, String> {
    match s {
        "mean" => Ok(DreamOutput::Mean),
        "mode" => Ok(DreamOutput::Mode),
        _ => Err("expected mean or mode".into()),
    }
}

fn exploration(s: &str) -> std::result::Result<ExplorationKind, String> {
    match s {
        "uniform" => Ok(ExplorationKind::Uniform),
        "gaussian-logits" => Ok(ExplorationKind::GaussianLogits),
        _ => Err("expected uniform or gaussian-logits".into()),
    }
}

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// process exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().ansi().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Gen {
            width,
            height,
            seed,
            style,
            out: path,
        } => {
            let grid = generate_maze(width, height, seed, style)?;
            dmz::save(&grid, &path)?;
            writeln!(out, "wrote {width}x{height} {style} maze to {}", path.display())?;
        }
        Command::Collect {
            maze,
            scenario,
            episodes,
            exploration,
            capacity,
            seed,
            out: path,
        } => {
            let env = scenario.env(&maze)?;
            if env.scenario.time_limit.is_none() && env.scenario.goal == GoalPlacement::None {
                return Err(Error::Invalid("free roaming collection needs --time-limit".into()));
            }
            let mut d = ReplayBuffer::new(capacity.max(1), BufferKind::Real);
            let mut policy = RandomPolicy { kind: exploration };
            run_agent(&env, &mut policy, episodes, &mut d, seed)?;
            d.save(&path)?;
            writeln!(out, "wrote {} transitions to {}", d.len(), path.display())?;
        }
        Command::TrainDvae {
            replay,
            epochs,
            lr,
            batch_size,
            latent_dim,
            hidden,
            kl_warmup_epochs,
            seed,
            out: path,
            loss_csv,
        } => {
            let d = ReplayBuffer::load(&replay, BufferKind::Real, 1)?;
            let hyper = DvaeHyper {
                epochs,
                lr,
                batch_size,
                latent_dim,
                hidden,
                kl_warmup_epochs,
                seed,
            };
            if latent_dim == 0 || batch_size == 0 || hyper.hidden.contains(&0) || !(lr > 0.0) {
                return Err(Error::Invalid(
                    "latent dim, batch size, widths and lr must be positive".into(),
                ));
            }
            let (params, curve) = train_dvae(&d, &hyper)?;
            params.to_file().save(&path)?;
            let csv_path = loss_csv.unwrap_or_else(|| path.with_extension("loss.csv"));
            let rows: Vec<LossRow> = curve.iter().copied().map(LossRow::from).collect();
            write_csv(&csv_path, &rows)?;
            if let Some(last) = curve.last() {
                writeln!(
                    out,
                    "final epoch loss {:.6} (recon {:.6}, kl {:.6})",
                    last.loss, last.recon, last.kl
                )?;
            }
            writeln!(out, "wrote {} and {}", path.display(), csv_path.display())?;
        }
        Command::Dream {
            model,
            replay,
            sample,
            output,
            seed,
            out: path,
        } => {
            let theta = ModelFile::load(&model)?.into_dvae()?;
            let d = ReplayBuffer::load(&replay, BufferKind::Real, 1)?;
            let mut rng: SimRng = rand::SeedableRng::seed_from_u64(seed);
            let mut noise = if sample {
                LatentNoise::Sample(&mut rng)
            } else {
                LatentNoise::Zero
            };
            let dhat = generate_artificial_buffer(&theta, &d, &mut noise, output)?;
            dhat.save(&path)?;
            writeln!(out, "wrote {} dreamed transitions to {}", dhat.len(), path.display())?;
        }
        Command::TrainAgent {
            maze,
            scenario,
            agent,
            replay,
            dreamed,
            episodes,
            hyper,
            seed,
            out: path,
            metrics,
        } => {
            let env = scenario.env(&maze)?;
            let hyper: AgentHyper = match hyper {
                Some(p) => toml::from_str(&std::fs::read_to_string(p)?).map_err(|e| Error::Invalid(e.to_string()))?,
                None => AgentHyper::default(),
            };
            let kind = if dreamed { BufferKind::Dreamed } else { BufferKind::Real };
            let data = match replay {
                Some(p) => ReplayBuffer::load(p, kind, hyper.replay_capacity)?,
                None => ReplayBuffer::new(1, kind),
            };
            let cell = CellConfig {
                episodes,
                ..CellConfig::default()
            };
            let (trained, report) = train_cell(agent, &env, &data, &hyper, &cell, seed)?;
            trained.to_model_file().save(&path)?;
            if let Some(m) = metrics {
                write_csv(m, &performance_rows(&report))?;
            }
            writeln!(
                out,
                "final rolling mean {:.4}, converged at {}",
                report.final_mean(),
                report
                    .convergence_episode
                    .map_or_else(|| "N/A".to_string(), |e| e.to_string())
            )?;
        }
        Command::Eval {
            maze,
            scenario,
            model,
            episodes,
            seed,
            metrics,
        } => {
            let env = scenario.env(&maze)?;
            let mut policy = NetworkPolicy::from_model_file(ModelFile::load(&model)?)?;
            let report = evaluate(&env, &mut policy, episodes, seed)?;
            if let Some(m) = metrics {
                write_csv(m, &performance_rows(&report))?;
            }
            writeln!(out, "mean performance {:.4} over {episodes} episodes", report.mean())?;
        }
        Command::Render {
            replay,
            index,
            model,
            out: path,
        } => {
            let d = ReplayBuffer::load(&replay, BufferKind::Real, 1)?;
            let t = d
                .get(index)
                .ok_or_else(|| Error::Invalid(format!("replay has {} records, index {index}", d.len())))?;
            match model {
                Some(m) => {
                    let theta = ModelFile::load(m)?.into_dvae()?;
                    let dreamed = dream_step(&theta, &t.state, t.action, &mut LatentNoise::Zero)?;
                    render_pair(&t.next_state, &dreamed, &path)?;
                }
                None => render_observation(&t.state, &path)?,
            }
            writeln!(out, "wrote {}", path.display())?;
        }
        Command::Experiment {
            config,
            preset,
            overrides,
            print_config,
        } => {
            let cfg = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(path, &overrides)?,
                (None, Some(name)) => {
                    let base = ExperimentConfig::preset(&name)?;
                    ExperimentConfig::from_parts(
                        &base.to_toml_string(),
                        std::env::var(super::config::SEED_ENV).ok().as_deref(),
                        &overrides,
                    )?
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            if print_config {
                write!(out, "{}", cfg.to_toml_string())?;
                return Ok(());
            }
            let report = run_experiment_with(&cfg, &mut |msg| {
                let _ = writeln!(err, "{msg}");
            })?;
            writeln!(out, "{:<8} {:>16} {:>18}", "", "avg performance", "converged episode")?;
            for row in &report.summary {
                writeln!(
                    out,
                    "{:<8} {:>15.2}% {:>18}",
                    row.algorithm,
                    100.0 * row.avg_performance,
                    row.converged_episode
                )?;
            }
            writeln!(out, "results in {}", report.dir.display())?;
        }
    }
    Ok(())
}
