//! Minimal differentiable-network core: dense layers with hand-written
//! reverse-mode gradients, the reparameterized VAE used as a transition
//! model, the ELBO, and Adam.

mod adam;
mod dense;
pub mod model_file;
mod scalar;
mod vae;

pub use adam::{AdamConfig, AdamState};
pub use dense::{Activation, DenseNet, GradAt, LayerSpec, Trace};
pub use model_file::{ModelFile, ModelRole};
pub use scalar::{sigmoid, Scalar};
pub use vae::{
    elbo_loss, reparameterize, Dvae, DvaeGrads, DvaeShape, DvaeWorkspace, LossTerms, BCE_FLOOR, LOGVAR_MAX, LOGVAR_MIN,
};

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().fold(T::neg_infinity(), |m, v| m.max(*v));
    let exps: Vec<T> = logits.iter().map(|v| (*v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
