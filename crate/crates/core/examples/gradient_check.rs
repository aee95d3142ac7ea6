//! Compares the hand-written transition-model gradients against central
//! finite differences in f64.
//!
//! cargo run --example gradient_check

use dreaming_maze::neural::{Dvae, DvaeShape, DvaeWorkspace};
use dreaming_maze::SimRng;
use rand::{Rng, SeedableRng};

fn main() -> dreaming_maze::Result<()> {
    let mut rng = SimRng::seed_from_u64(9);
    let shape = DvaeShape {
        state_dim: 6,
        action_dim: 4,
        latent_dim: 3,
        hidden: vec![5],
    };
    let mut model: Dvae<f64> = Dvae::init(&shape, &mut rng)?;
    let input: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
    let target: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
    let eps: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let mut grads = model.zero_grads();
    model.accumulate_grad(&input, &target, &eps, &mut DvaeWorkspace::default(), &mut grads)?;

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..model.encoder.param_count() {
        let p = model.encoder.params()[i];
        model.encoder.params_mut()[i] = p + h;
        let up = model.loss(&input, &target, &eps)?.total;
        model.encoder.params_mut()[i] = p - h;
        let down = model.loss(&input, &target, &eps)?.total;
        model.encoder.params_mut()[i] = p;
        let numeric = (up - down) / (2.0 * h);
        let rel = (numeric - grads.encoder[i]).abs() / numeric.abs().max(grads.encoder[i].abs()).max(1e-8);
        worst = worst.max(rel);
    }
    for i in 0..model.decoder.param_count() {
        let p = model.decoder.params()[i];
        model.decoder.params_mut()[i] = p + h;
        let up = model.loss(&input, &target, &eps)?.total;
        model.decoder.params_mut()[i] = p - h;
        let down = model.loss(&input, &target, &eps)?.total;
        model.decoder.params_mut()[i] = p;
        let numeric = (up - down) / (2.0 * h);
        let rel = (numeric - grads.decoder[i]).abs() / numeric.abs().max(grads.decoder[i].abs()).max(1e-8);
        worst = worst.max(rel);
    }
    println!("{} parameters, worst relative error {worst:.2e}", model.param_count());
    Ok(())
}
