//! Runs the whole pipeline from a config: collect D, train the transition
//! model, dream D-hat, train every agent cell and write the artifacts.
//! With no argument a small 5x5 config runs in well under a minute.
//!
//! cargo run --release --example run_experiment -- [preset] [output-dir]

use dreaming_maze::harness::config::ExperimentConfig;
use dreaming_maze::harness::experiment::run_experiment_with;

fn main() -> dreaming_maze::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = match args.next() {
        Some(name) => ExperimentConfig::preset(&name)?,
        None => {
            let mut cfg = ExperimentConfig::agents(5);
            cfg.experiment.name = "demo-5x5".into();
            cfg.collect.episodes = 300;
            cfg.dvae.epochs = 1000;
            cfg.dvae.kl_warmup_epochs = 150;
            cfg.cells.episodes = 1000;
            cfg
        }
    };
    cfg.experiment.output_dir = args
        .next()
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join(&cfg.experiment.name));

    let report = run_experiment_with(&cfg, &mut |line| println!("{line}"))?;
    println!("one-step accuracy {:.3}", report.one_step_accuracy);
    for row in &report.horizon {
        println!("horizon {:>2}: position error {:.2}", row.horizon, row.position_error);
    }
    Ok(())
}
