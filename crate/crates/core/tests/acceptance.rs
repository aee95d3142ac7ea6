//! Acceptance run. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails. Criteria run one after another so their timings are not
//! inflated by each other; pass criterion numbers to run a subset:
//!
//! cargo test --test acceptance -- 1 5 8
//!
//! Artifacts (experiment directories, CSVs, models) stay under the cargo
//! target tmp dir in `acceptance/`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use dreaming_maze::agents::AgentKind;
use dreaming_maze::dvae::{dream_step, train_dvae, BufferKind, LatentNoise, ReplayBuffer, Transition};
use dreaming_maze::harness::config::{BufferChoice, ExperimentConfig};
use dreaming_maze::harness::experiment::{
    build_env, cell_label, collect_real, dvae_hyper, run_experiment, run_experiment_with, ExperimentReport,
};
use dreaming_maze::harness::metrics::{read_csv, HorizonRow};
use dreaming_maze::harness::render::Image;
use dreaming_maze::maze::{dmz, generate_maze, state_at, step, Action, Cell, MazeStyle, ScenarioConfig};
use dreaming_maze::neural::{Activation, DenseNet, Dvae, DvaeShape, DvaeWorkspace, LayerSpec, ModelFile, ModelRole};
use dreaming_maze::observation::{observe, ObservationTensor};
use dreaming_maze::{Result, SimRng};
use rand::{Rng, SeedableRng};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

type Criterion = fn(&Path) -> Result<Verdict>;

fn main() {
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&root).unwrap();
    let wanted: HashSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, Criterion); 8] = [
        ("4x4 transition oracle", transition_oracle),
        ("2x2 dreaming with half coverage", dvae_2x2),
        ("8x8 one-step dreams", dvae_8x8),
        ("11x11 agent table", agent_table),
        ("transition model gradients", gradients),
        ("dream horizon degradation", horizon),
        ("rerun determinism", determinism),
        ("file format round trips", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let (pass, detail) = match check(&root) {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!("criterion {n} {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn fresh_dir(root: &Path, name: &str) -> PathBuf {
    let dir = root.join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

/// Every (cell, action) of the open 4x4 maze against a table built from the
/// movement rule alone: move one cell, stay put at the border.
fn transition_oracle(_: &Path) -> Result<Verdict> {
    let start = Instant::now();
    let grid = Arc::new(generate_maze(4, 4, 0, MazeStyle::Open)?);
    let scenario = ScenarioConfig::normal();
    let mut checked = 0;
    let mut wrong = 0;
    for y in 0..4usize {
        for x in 0..4usize {
            for action in Action::ALL {
                let (dx, dy) = match action {
                    Action::Up => (0, -1),
                    Action::Down => (0, 1),
                    Action::Left => (-1, 0),
                    Action::Right => (1, 0),
                };
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                let expected = if (0..4).contains(&nx) && (0..4).contains(&ny) {
                    Cell::new(nx as usize, ny as usize)
                } else {
                    Cell::new(x, y)
                };
                let s = state_at(grid.clone(), &scenario, Cell::new(x, y), None)?;
                let out = step(&s, action)?;
                checked += 1;
                if out.state.player != expected || out.terminal || out.state.step_count != 1 {
                    wrong += 1;
                }
            }
        }
    }
    let took = start.elapsed();
    verdict(
        checked == 64 && wrong == 0 && took < Duration::from_secs(1),
        format!("{checked} pairs, {wrong} mismatches, {}", secs(took)),
    )
}

/// Episodes start only on the top row; the model must fit what it saw and
/// do visibly worse on what it did not.
fn dvae_2x2(_: &Path) -> Result<Verdict> {
    let start = Instant::now();
    let cfg = ExperimentConfig::preset("dvae-2x2")?;
    let env = build_env(&cfg)?;
    let d = collect_real(&cfg, &env)?;
    let hyper = dvae_hyper(&cfg);
    let (params, losses) = train_dvae(&d, &hyper)?;
    let seen: HashSet<(Cell, usize)> = d
        .iter()
        .map(|t| (t.state.player_cell(env.scenario.representation), t.action.index()))
        .collect();
    let (mut explored, mut unexplored) = (Vec::new(), Vec::new());
    for cell in env.grid.open_cells() {
        for action in Action::ALL {
            let s = state_at(env.grid.clone(), &env.scenario, cell, None)?;
            let truth = observe(&step(&s, action)?.state);
            let dream = dream_step(&params.model, &observe(&s), action, &mut LatentNoise::Zero)?;
            let err = dream.mean_abs_diff(&truth) as f64;
            if seen.contains(&(cell, action.index())) {
                explored.push(err);
            } else {
                unexplored.push(err);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let (e, u) = (mean(&explored), mean(&unexplored));
    let (first, last) = (losses[0].loss, losses.last().unwrap().loss);
    let took = start.elapsed();
    verdict(
        hyper.epochs == 1000
            && hyper.lr == 1e-3
            && last < 0.5 * first
            && !unexplored.is_empty()
            && e < 0.05
            && e < u
            && took < Duration::from_secs(120),
        format!(
            "loss {first:.3} -> {last:.3}, pixel error explored {e:.4} ({} pairs) vs unexplored {u:.4} ({} pairs), {}",
            explored.len(),
            unexplored.len(),
            secs(took)
        ),
    )
}

static EIGHT: OnceLock<(ExperimentReport, Duration)> = OnceLock::new();

fn eight_by_eight(root: &Path) -> Result<&'static (ExperimentReport, Duration)> {
    if let Some(r) = EIGHT.get() {
        return Ok(r);
    }
    let mut cfg = ExperimentConfig::preset("dvae-8x8")?;
    cfg.experiment.output_dir = fresh_dir(root, "dvae-8x8");
    let start = Instant::now();
    let report = run_experiment(&cfg)?;
    Ok(EIGHT.get_or_init(|| (report, start.elapsed())))
}

fn dvae_8x8(root: &Path) -> Result<Verdict> {
    let (report, took) = eight_by_eight(root)?;
    let epochs = report.loss.len();
    verdict(
        epochs == 5000 && report.one_step_accuracy >= 0.95 && *took < Duration::from_secs(30 * 60),
        format!(
            "{} transitions, {epochs} epochs, player position right on {:.2}% of D, {}",
            report.real_transitions,
            100.0 * report.one_step_accuracy,
            secs(*took)
        ),
    )
}

fn horizon(root: &Path) -> Result<Verdict> {
    let (report, _) = eight_by_eight(root)?;
    let csv = report.dir.join("horizon.csv");
    let rows: Vec<HorizonRow> = read_csv(&csv)?;
    let at = |h: usize| rows.iter().find(|r| r.horizon == h).map(|r| r.position_error);
    let (Some(h1), Some(h8)) = (at(1), at(8)) else {
        return verdict(false, format!("{} lacks horizons 1 and 8", csv.display()));
    };
    let curve: Vec<String> = rows.iter().map(|r| format!("{:.2}", r.position_error)).collect();
    verdict(
        h8 >= h1 && rows == report.horizon,
        format!(
            "position error h1 {h1:.3}, h8 {h8:.3}; curve [{}] in {}",
            curve.join(" "),
            csv.display()
        ),
    )
}

const SEEDS: [u64; 3] = [1, 2, 3];

/// 21x21 budget. The full budget does not fit next to the three 11x11 runs
/// in the hour, so the larger maze runs a shortened schedule and is only
/// reported.
const LARGE_DVAE_EPOCHS: usize = 1000;
const LARGE_EPISODES: usize = 1000;

fn agent_table(root: &Path) -> Result<Verdict> {
    let start = Instant::now();
    let cells = [
        (AgentKind::Dqn, BufferChoice::Dreamed),
        (AgentKind::Ppo, BufferChoice::Dreamed),
        (AgentKind::Dqn, BufferChoice::Real),
        (AgentKind::Ppo, BufferChoice::Real),
    ];
    let mut sums = [0.0f64; 4];
    for seed in SEEDS {
        let mut cfg = ExperimentConfig::agents(11);
        cfg.experiment.master_seed = seed;
        cfg.experiment.output_dir = fresh_dir(root, &format!("agents-11-seed{seed}"));
        let report = run_experiment(&cfg)?;
        let mut line = Vec::new();
        for (i, (agent, buffer)) in cells.iter().enumerate() {
            let cell = report.cell(*agent, *buffer).expect("every cell runs");
            sums[i] += cell.report.final_mean();
            let conv = cell
                .report
                .convergence_episode
                .map_or("N/A".to_string(), |e| e.to_string());
            line.push(format!(
                "{} {:.2} (conv {conv})",
                cell_label(*agent, *buffer),
                cell.report.final_mean()
            ));
        }
        println!("  11x11 seed {seed}: {} [{}]", line.join(", "), secs(start.elapsed()));
    }
    let avg = sums.map(|s| s / SEEDS.len() as f64);
    let [dqn_dream, ppo_dream, dqn_real, ppo_real] = avg;

    let mut cfg = ExperimentConfig::agents(21);
    cfg.experiment.output_dir = fresh_dir(root, "agents-21");
    cfg.dvae.epochs = LARGE_DVAE_EPOCHS;
    cfg.cells.episodes = LARGE_EPISODES;
    let large = run_experiment_with(&cfg, &mut |_| {})?;
    let row: Vec<String> = large
        .summary
        .iter()
        .map(|r| {
            format!(
                "{} {:.2} (conv {})",
                r.algorithm, r.avg_performance, r.converged_episode
            )
        })
        .collect();
    println!(
        "  21x21 seed 1, {LARGE_DVAE_EPOCHS} model epochs, {LARGE_EPISODES} episodes (reported only): {}",
        row.join(", ")
    );

    let took = start.elapsed();
    let labels = cells.map(|(a, b)| cell_label(a, b));
    let means: Vec<String> = labels.iter().zip(avg).map(|(l, v)| format!("{l} {v:.3}")).collect();
    verdict(
        ppo_real >= 0.90
            && dqn_real >= 0.90
            && ppo_dream >= 0.75
            && ppo_real >= ppo_dream
            && dqn_real >= dqn_dream
            && took <= Duration::from_secs(3600),
        format!("mean over seeds {SEEDS:?}: {}, {}", means.join(", "), secs(took)),
    )
}

/// Central differences in f64 against the analytic gradient of the ELBO on
/// 20 random small models with fixed reparameterization noise.
fn gradients(_: &Path) -> Result<Verdict> {
    let start = Instant::now();
    let mut rng = SimRng::seed_from_u64(2024);
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut params = 0;
    let mut largest = 0;
    for _ in 0..20 {
        let shape = DvaeShape {
            state_dim: rng.gen_range(2..6),
            action_dim: 4,
            latent_dim: rng.gen_range(1..4),
            hidden: vec![rng.gen_range(2..6)],
        };
        let mut model: Dvae<f64> = Dvae::init(&shape, &mut rng)?;
        for p in model.encoder.params_mut().iter_mut().chain(model.decoder.params_mut()) {
            *p += rng.gen_range(-0.1..0.1);
        }
        largest = largest.max(model.param_count());
        params += model.param_count();
        let input: Vec<f64> = (0..shape.state_dim)
            .map(|_| rng.gen_range(0..2) as f64)
            .chain((0..4).map(|i| (i == 1) as u8 as f64))
            .collect();
        let target: Vec<f64> = (0..shape.state_dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        let eps: Vec<f64> = (0..shape.latent_dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let mut grads = model.zero_grads();
        model.accumulate_grad(&input, &target, &eps, &mut DvaeWorkspace::default(), &mut grads)?;

        for which in 0..2 {
            let n = if which == 0 {
                model.encoder.param_count()
            } else {
                model.decoder.param_count()
            };
            for i in 0..n {
                let numeric = {
                    let mut at = |delta: f64| -> Result<f64> {
                        let net = if which == 0 {
                            &mut model.encoder
                        } else {
                            &mut model.decoder
                        };
                        let p = net.params()[i];
                        net.params_mut()[i] = p + delta;
                        let l = model.loss(&input, &target, &eps)?.total;
                        let net = if which == 0 {
                            &mut model.encoder
                        } else {
                            &mut model.decoder
                        };
                        net.params_mut()[i] = p;
                        Ok(l)
                    };
                    (at(h)? - at(-h)?) / (2.0 * h)
                };
                let analytic = if which == 0 { grads.encoder[i] } else { grads.decoder[i] };
                let scale = analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max((analytic - numeric).abs() / scale);
            }
        }
    }
    let took = start.elapsed();
    verdict(
        worst < 1e-4 && largest <= 200 && took < Duration::from_secs(10),
        format!(
            "20 models, {params} parameters (largest {largest}), max relative error {worst:.2e}, {}",
            secs(took)
        ),
    )
}

fn small_pipeline(dir: PathBuf) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::agents(5);
    cfg.experiment.master_seed = 11;
    cfg.experiment.output_dir = dir;
    cfg.collect.episodes = 60;
    cfg.dvae.epochs = 40;
    cfg.dvae.kl_warmup_epochs = 10;
    cfg.cells.episodes = 150;
    cfg.report.horizon_samples = 20;
    cfg
}

/// The same master seed twice: every file in the two output directories
/// must match byte for byte.
fn determinism(root: &Path) -> Result<Verdict> {
    let a = fresh_dir(root, "rerun-a");
    let b = fresh_dir(root, "rerun-b");
    run_experiment_with(&small_pipeline(a.clone()), &mut |_| {})?;
    run_experiment_with(&small_pipeline(b.clone()), &mut |_| {})?;
    let mut names: Vec<String> = std::fs::read_dir(&a)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<std::io::Result<_>>()?;
    names.sort();
    let mut differ = Vec::new();
    let mut csvs = 0;
    let mut models = 0;
    for name in &names {
        if name == "config.toml" {
            continue;
        }
        csvs += name.ends_with(".csv") as usize;
        models += name.ends_with(".dvm") as usize;
        let other = b.join(name);
        if !other.exists() || std::fs::read(a.join(name))? != std::fs::read(other)? {
            differ.push(name.clone());
        }
    }
    verdict(
        differ.is_empty() && csvs >= 6 && models >= 5,
        format!(
            "{} files compared ({csvs} CSVs, {models} models), differing: {differ:?}",
            names.len() - 1
        ),
    )
}

fn random_tensor(rng: &mut SimRng, c: usize, h: usize, w: usize) -> ObservationTensor {
    let data = (0..c * h * w).map(|_| rng.gen_range(0.0f32..=1.0)).collect();
    ObservationTensor::from_vec(c, h, w, data).unwrap()
}

fn random_net(rng: &mut SimRng) -> DenseNet<f32> {
    let activations = [Activation::Identity, Activation::Relu, Activation::Sigmoid];
    let mut specs = Vec::new();
    let mut prev = rng.gen_range(1..8);
    for _ in 0..rng.gen_range(1..4) {
        let outputs = rng.gen_range(1..8);
        specs.push(LayerSpec {
            inputs: prev,
            outputs,
            activation: activations[rng.gen_range(0..3)],
        });
        prev = outputs;
    }
    DenseNet::init(specs, rng).unwrap()
}

/// write -> read -> write on 100 random instances of each format.
fn round_trips(_: &Path) -> Result<Verdict> {
    let mut rng = SimRng::seed_from_u64(8);
    let mut failures = Vec::new();
    let cases = 100;
    for _ in 0..cases {
        let style = if rng.gen() { MazeStyle::Perfect } else { MazeStyle::Open };
        let grid = generate_maze(rng.gen_range(2..40), rng.gen_range(2..40), rng.gen(), style)?;
        let mut bytes = Vec::new();
        dmz::write(&grid, &mut bytes)?;
        let mut again = Vec::new();
        dmz::write(&dmz::read(bytes.as_slice())?, &mut again)?;
        if bytes != again {
            failures.push("DMZ1");
        }

        let (c, h, w) = (rng.gen_range(1..5), rng.gen_range(1..8), rng.gen_range(1..8));
        let mut d = ReplayBuffer::new(64, BufferKind::Real);
        for _ in 0..rng.gen_range(0..20) {
            let s = random_tensor(&mut rng, c, h, w);
            let n = random_tensor(&mut rng, c, h, w);
            d.push(Transition::new(
                s,
                Action::ALL[rng.gen_range(0..4)],
                rng.gen_range(-1.0..1.0),
                n,
                rng.gen(),
            )?)?;
        }
        let bytes = d.to_bytes();
        if ReplayBuffer::read(bytes.as_slice(), BufferKind::Real, 64)?.to_bytes() != bytes {
            failures.push("DVRB");
        }

        let roles = [ModelRole::Dvae, ModelRole::Dqn, ModelRole::Ppo];
        let file = ModelFile {
            role: roles[rng.gen_range(0..3)],
            latent_dim: rng.gen_range(0..40),
            nets: (0..rng.gen_range(1..3)).map(|_| random_net(&mut rng)).collect(),
        };
        let bytes = file.to_bytes();
        if ModelFile::read(bytes.as_slice())?.to_bytes() != bytes {
            failures.push("DVM1");
        }

        let rgb: bool = rng.gen();
        let (w, h) = (rng.gen_range(1..50), rng.gen_range(1..50));
        let img = Image {
            width: w,
            height: h,
            rgb,
            data: (0..w * h * if rgb { 3 } else { 1 }).map(|_| rng.gen()).collect(),
        };
        let bytes = img.to_bytes();
        if Image::parse(&bytes)?.to_bytes() != bytes {
            failures.push(if rgb { "PPM" } else { "PGM" });
        }
    }
    verdict(
        failures.is_empty(),
        format!("{cases} cases each of DMZ1, DVRB, DVM1 and PGM/PPM, failures {failures:?}"),
    )
}
