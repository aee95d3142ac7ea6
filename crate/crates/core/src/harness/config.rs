use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentHyper, AgentKind, ExplorationKind};
use crate::dvae::{BufferKind, DreamOutput, DvaeHyper};
use crate::error::{Error, Result};
use crate::maze::{GoalPlacement, MazeStyle, ScenarioConfig, StartRegion};

/// Environment variable that replaces `experiment.master_seed`.
pub const SEED_ENV: &str = "DREAMING_MAZE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            name: "experiment".into(),
            master_seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MazeSection {
    pub width: usize,
    pub height: usize,
    pub style: MazeStyle,
    /// Layout seed; derived from the master seed when absent.
    pub seed: Option<u64>,
}

impl Default for MazeSection {
    fn default() -> Self {
        MazeSection {
            width: 11,
            height: 11,
            style: MazeStyle::Perfect,
            seed: None,
        }
    }
}

/// How the real buffer `D` is gathered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectSection {
    pub episodes: usize,
    /// Length cap of collection episodes.
    pub time_limit: usize,
    pub start: StartRegion,
    pub exploration: ExplorationKind,
    pub capacity: usize,
}

impl Default for CollectSection {
    fn default() -> Self {
        CollectSection {
            episodes: 100,
            time_limit: 10,
            start: StartRegion::Anywhere,
            exploration: ExplorationKind::Uniform,
            capacity: 100_000,
        }
    }
}

/// How `D̂` is dreamed from `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DreamSection {
    pub output: DreamOutput,
    /// Sample the latent instead of decoding the posterior mean.
    pub sample_latent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BufferChoice {
    Real,
    Dreamed,
}

impl From<BufferChoice> for BufferKind {
    fn from(b: BufferChoice) -> Self {
        match b {
            BufferChoice::Real => BufferKind::Real,
            BufferChoice::Dreamed => BufferKind::Dreamed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellsSection {
    pub agents: Vec<AgentKind>,
    pub buffers: Vec<BufferChoice>,
    pub episodes: usize,
    pub window: usize,
    pub threshold: f64,
}

impl Default for CellsSection {
    fn default() -> Self {
        CellsSection {
            agents: vec![AgentKind::Dqn, AgentKind::Ppo],
            buffers: vec![BufferChoice::Dreamed, BufferChoice::Real],
            episodes: 10_000,
            window: 100,
            threshold: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Real/dreamed frame pairs rendered from the start of `D`.
    pub frame_pairs: usize,
    /// Longest dream horizon in the horizon curve.
    pub horizon: usize,
    pub horizon_samples: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            frame_pairs: 4,
            horizon: 12,
            horizon_samples: 200,
        }
    }
}

/// Everything one `experiment` run needs. Serialized as TOML with one
/// section per table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub maze: MazeSection,
    pub scenario: ScenarioConfig,
    pub collect: CollectSection,
    pub dvae: DvaeHyper,
    pub dream: DreamSection,
    pub agent: AgentHyper,
    pub cells: CellsSection,
    pub report: ReportSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads `path`, then applies `DREAMING_MAZE_SEED`, then each
    /// `section.key=value` override in order.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_parts(&text, std::env::var(SEED_ENV).ok().as_deref(), overrides)
    }

    pub fn from_parts(text: &str, env_seed: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Invalid(e.to_string()))?;
        if let Some(seed) = env_seed {
            let seed: u64 = seed
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("{SEED_ENV} is not an unsigned integer")))?;
            set_path(&mut doc, "experiment.master_seed", toml::Value::Integer(seed as i64))?;
        }
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("override {o:?} is not key=value")))?;
            set_path(&mut doc, key.trim(), parse_value(value.trim()))?;
        }
        let cfg: ExperimentConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| Error::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        crate::maze::generate_maze(self.maze.width, self.maze.height, 0, MazeStyle::Open)?;
        self.scenario.validate()?;
        if self.scenario.goal == GoalPlacement::None && !self.cells.agents.is_empty() {
            return Err(Error::Invalid("agents need a goal to be scored".into()));
        }
        if self.collect.episodes == 0 || self.collect.time_limit == 0 || self.collect.capacity == 0 {
            return Err(Error::Invalid(
                "collect episodes, time_limit and capacity must be positive".into(),
            ));
        }
        let d = &self.dvae;
        if d.latent_dim == 0 || d.batch_size == 0 || !(d.lr > 0.0) || d.hidden.contains(&0) {
            return Err(Error::Invalid(
                "dvae latent_dim, batch_size, lr and hidden must be positive".into(),
            ));
        }
        self.agent.validate()?;
        if !(0.0..=1.0).contains(&self.cells.threshold) || self.cells.window == 0 {
            return Err(Error::Invalid(
                "cells threshold must lie in [0, 1] and window be positive".into(),
            ));
        }
        if self.report.horizon == 0 {
            return Err(Error::Invalid("report horizon must be positive".into()));
        }
        Ok(())
    }

    /// Master seed with the layout seed filled in.
    pub fn maze_seed(&self) -> u64 {
        self.maze
            .seed
            .unwrap_or_else(|| super::seeds::derive_seed(self.experiment.master_seed, "maze", 0))
    }
}

impl ExperimentConfig {
    /// Built-in configs by name: `dvae-2x2`, `dvae-8x8`, `agents-11`, `agents-21`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "dvae-2x2" => Ok(Self::dvae_2x2()),
            "dvae-8x8" => Ok(Self::dvae_8x8()),
            "agents-11" => Ok(Self::agents(11)),
            "agents-21" => Ok(Self::agents(21)),
            other => Err(Error::Invalid(format!("unknown preset {other:?}"))),
        }
    }

    /// Open 2x2 maze, starts restricted to the top row and one-step
    /// episodes, so half of the state space is never a source state.
    pub fn dvae_2x2() -> Self {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.name = "dvae-2x2".into();
        cfg.experiment.output_dir = "out/dvae-2x2".into();
        cfg.maze = MazeSection {
            width: 2,
            height: 2,
            style: MazeStyle::Open,
            seed: Some(0),
        };
        cfg.scenario = ScenarioConfig::normal()
            .with_goal(GoalPlacement::None)
            .with_time_limit(1);
        cfg.collect = CollectSection {
            episodes: 64,
            time_limit: 1,
            start: StartRegion::Top,
            ..CollectSection::default()
        };
        cfg.dvae = DvaeHyper {
            epochs: 1000,
            lr: 1e-3,
            batch_size: 8,
            latent_dim: 8,
            hidden: vec![64],
            ..DvaeHyper::default()
        };
        cfg.cells.agents.clear();
        cfg.report.horizon = 8;
        cfg
    }

    /// Open 8x8 maze without a goal explored by short random episodes.
    pub fn dvae_8x8() -> Self {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.name = "dvae-8x8".into();
        cfg.experiment.output_dir = "out/dvae-8x8".into();
        cfg.maze = MazeSection {
            width: 8,
            height: 8,
            style: MazeStyle::Open,
            seed: Some(0),
        };
        cfg.scenario = ScenarioConfig::normal()
            .with_goal(GoalPlacement::None)
            .with_time_limit(10);
        cfg.collect = CollectSection {
            episodes: 100,
            time_limit: 10,
            ..CollectSection::default()
        };
        cfg.dvae = DvaeHyper {
            epochs: 5000,
            lr: 1e-3,
            batch_size: 32,
            latent_dim: 4,
            hidden: vec![128],
            ..DvaeHyper::default()
        };
        cfg.cells.agents.clear();
        cfg.report.horizon = 12;
        cfg
    }

    /// Perfect maze of side `size` with the goal in the far corner and all
    /// four (agent, buffer) cells.
    pub fn agents(size: usize) -> Self {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.name = format!("agents-{size}");
        cfg.experiment.output_dir = format!("out/agents-{size}").into();
        cfg.maze = MazeSection {
            width: size,
            height: size,
            style: MazeStyle::Perfect,
            seed: None,
        };
        cfg.scenario = ScenarioConfig::normal()
            .with_goal(GoalPlacement::FarCorner)
            .with_time_limit(4 * size * size / 5);
        cfg.collect = CollectSection {
            episodes: 1000,
            time_limit: 3,
            ..CollectSection::default()
        };
        cfg.dvae = DvaeHyper {
            epochs: 2000,
            lr: 1e-3,
            batch_size: 32,
            latent_dim: 4,
            hidden: vec![64],
            kl_warmup_epochs: 300,
            ..DvaeHyper::default()
        };
        cfg.dream.output = DreamOutput::Mode;
        cfg.agent.lr = 3e-4;
        cfg
    }
}

/// Value text as TOML when it parses, else as a bare string.
fn parse_value(text: &str) -> toml::Value {
    match format!("v = {text}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

fn set_path(doc: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Invalid(format!("bad key {path:?}")));
    }
    let mut table = doc;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Invalid(format!("{p} in {path:?} is not a section")))?;
    }
    let last = parts[parts.len() - 1];
    if value.as_str() == Some("none") {
        table.remove(last);
    } else {
        table.insert(last.to_string(), value);
    }
    Ok(())
}
