//! Encoder/decoder pair with a Gaussian latent, the ELBO, and its gradient.

use rand::Rng;

use super::dense::{Activation, DenseNet, GradAt, Trace};
use super::scalar::Scalar;
use crate::error::{Error, Result};

pub const LOGVAR_MIN: f64 = -10.0;
pub const LOGVAR_MAX: f64 = 10.0;
pub const BCE_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms<T> {
    pub total: T,
    pub recon: T,
    pub kl: T,
}

/// `z = mu + exp(logvar / 2) * eps`
pub fn reparameterize<T: Scalar>(mu: &[T], logvar: &[T], eps: &[T]) -> Result<Vec<T>> {
    if mu.len() != logvar.len() || mu.len() != eps.len() {
        return Err(Error::Shape {
            expected: mu.len(),
            got: if logvar.len() != mu.len() {
                logvar.len()
            } else {
                eps.len()
            },
        });
    }
    let half = T::of(0.5);
    Ok(mu
        .iter()
        .zip(logvar)
        .zip(eps)
        .map(|((m, lv), e)| *m + (*lv * half).exp() * *e)
        .collect())
}

fn bce<T: Scalar>(target: T, p: T) -> T {
    let lo = T::of(BCE_FLOOR);
    let p = p.max(lo).min(T::one() - lo);
    -(target * p.ln() + (T::one() - target) * (T::one() - p).ln())
}

fn kl<T: Scalar>(mu: &[T], logvar: &[T]) -> T {
    let half = T::of(0.5);
    mu.iter()
        .zip(logvar)
        .map(|(m, lv)| half * (*m * *m + lv.exp() - T::one() - *lv))
        .sum()
}

/// Binary cross-entropy summed over pixels plus the KL divergence from the
/// standard normal prior. `x_recon` must lie strictly inside (0, 1).
pub fn elbo_loss<T: Scalar>(x_target: &[T], x_recon: &[T], mu: &[T], logvar: &[T]) -> Result<LossTerms<T>> {
    if x_target.len() != x_recon.len() {
        return Err(Error::Shape {
            expected: x_target.len(),
            got: x_recon.len(),
        });
    }
    if mu.len() != logvar.len() {
        return Err(Error::Shape {
            expected: mu.len(),
            got: logvar.len(),
        });
    }
    if let Some(bad) = x_recon.iter().find(|p| !(**p > T::zero() && **p < T::one())) {
        return Err(Error::ReconRange(bad.as_f64()));
    }
    let recon = x_target.iter().zip(x_recon).map(|(t, p)| bce(*t, *p)).sum();
    let kl = kl(mu, logvar);
    Ok(LossTerms {
        total: recon + kl,
        recon,
        kl,
    })
}

/// Layer widths of a DVAE. The encoder maps `state_dim + 4` inputs through
/// `hidden` ReLU layers to `2 * latent_dim` outputs (means, then log
/// variances); the decoder mirrors the hidden widths and ends in a sigmoid
/// over `state_dim` outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DvaeShape {
    pub state_dim: usize,
    pub action_dim: usize,
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dvae<T> {
    pub encoder: DenseNet<T>,
    pub decoder: DenseNet<T>,
    latent_dim: usize,
}

/// Scratch buffers for one sample's forward and backward pass.
#[derive(Debug, Clone, Default)]
pub struct DvaeWorkspace<T> {
    enc: Trace<T>,
    dec: Trace<T>,
    z: Vec<T>,
    logvar: Vec<T>,
    d_out: Vec<T>,
    d_z: Vec<T>,
    d_enc: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DvaeGrads<T> {
    pub encoder: Vec<T>,
    pub decoder: Vec<T>,
}

impl<T: Scalar> DvaeGrads<T> {
    pub fn zero(&mut self) {
        self.encoder.iter_mut().for_each(|g| *g = T::zero());
        self.decoder.iter_mut().for_each(|g| *g = T::zero());
    }

    pub fn scale(&mut self, k: T) {
        self.encoder.iter_mut().for_each(|g| *g *= k);
        self.decoder.iter_mut().for_each(|g| *g *= k);
    }
}

impl<T: Scalar> Dvae<T> {
    pub fn init<R: Rng + ?Sized>(shape: &DvaeShape, rng: &mut R) -> Result<Self> {
        if shape.latent_dim == 0 || shape.state_dim == 0 {
            return Err(Error::Invalid("latent and state dimensions must be positive".into()));
        }
        let mut enc_widths = shape.hidden.clone();
        enc_widths.push(2 * shape.latent_dim);
        let mut dec_widths: Vec<usize> = shape.hidden.iter().rev().copied().collect();
        dec_widths.push(shape.state_dim);
        let encoder = DenseNet::init(
            DenseNet::<T>::mlp_specs(shape.state_dim + shape.action_dim, &enc_widths, Activation::Identity),
            rng,
        )?;
        let decoder = DenseNet::init(
            DenseNet::<T>::mlp_specs(shape.latent_dim, &dec_widths, Activation::Sigmoid),
            rng,
        )?;
        Ok(Dvae {
            encoder,
            decoder,
            latent_dim: shape.latent_dim,
        })
    }

    pub fn from_parts(encoder: DenseNet<T>, decoder: DenseNet<T>) -> Result<Self> {
        let latent_dim = decoder.input_dim();
        if encoder.output_dim() != 2 * latent_dim {
            return Err(Error::Shape {
                expected: 2 * latent_dim,
                got: encoder.output_dim(),
            });
        }
        if decoder.specs().last().unwrap().activation != Activation::Sigmoid {
            return Err(Error::Invalid("decoder head must be a sigmoid".into()));
        }
        Ok(Dvae {
            encoder,
            decoder,
            latent_dim,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn state_dim(&self) -> usize {
        self.decoder.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    pub fn zero_grads(&self) -> DvaeGrads<T> {
        DvaeGrads {
            encoder: self.encoder.zero_grads(),
            decoder: self.decoder.zero_grads(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Dvae<U> {
        Dvae {
            encoder: self.encoder.cast(),
            decoder: self.decoder.cast(),
            latent_dim: self.latent_dim,
        }
    }

    /// Posterior mean and clamped log variance.
    pub fn encode(&self, input: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let out = self.encoder.forward(input)?;
        let (mu, lv) = out.split_at(self.latent_dim);
        Ok((mu.to_vec(), lv.iter().map(|v| clamp_logvar(*v)).collect()))
    }

    pub fn decode(&self, z: &[T]) -> Result<Vec<T>> {
        self.decoder.forward(z)
    }

    /// Full pipeline with a fixed noise vector.
    pub fn reconstruct(&self, input: &[T], eps: &[T]) -> Result<Vec<T>> {
        let (mu, lv) = self.encode(input)?;
        self.decode(&reparameterize(&mu, &lv, eps)?)
    }

    /// Loss of one sample, forward only.
    pub fn loss(&self, input: &[T], target: &[T], eps: &[T]) -> Result<LossTerms<T>> {
        let (mu, lv) = self.encode(input)?;
        let recon = self.decode(&reparameterize(&mu, &lv, eps)?)?;
        if recon.len() != target.len() {
            return Err(Error::Shape {
                expected: recon.len(),
                got: target.len(),
            });
        }
        let r = target.iter().zip(&recon).map(|(t, p)| bce(*t, *p)).sum();
        let k = kl(&mu, &lv);
        Ok(LossTerms {
            total: r + k,
            recon: r,
            kl: k,
        })
    }

    /// Loss of one sample and its exact gradient, accumulated into `grads`.
    ///
    /// The log-variance and BCE clamps only bound forward values; gradients
    /// pass straight through them, so inside the clamp ranges they are the
    /// true derivatives of [`loss`](Self::loss).
    pub fn accumulate_grad(
        &self,
        input: &[T],
        target: &[T],
        eps: &[T],
        ws: &mut DvaeWorkspace<T>,
        grads: &mut DvaeGrads<T>,
    ) -> Result<LossTerms<T>> {
        self.accumulate_grad_weighted(input, target, eps, T::one(), ws, grads)
    }

    /// Like [`accumulate_grad`](Self::accumulate_grad) but the KL gradient is
    /// scaled by `kl_weight`. The returned terms are unweighted.
    pub fn accumulate_grad_weighted(
        &self,
        input: &[T],
        target: &[T],
        eps: &[T],
        kl_weight: T,
        ws: &mut DvaeWorkspace<T>,
        grads: &mut DvaeGrads<T>,
    ) -> Result<LossTerms<T>> {
        let l = self.latent_dim;
        if eps.len() != l {
            return Err(Error::Shape {
                expected: l,
                got: eps.len(),
            });
        }
        if target.len() != self.state_dim() {
            return Err(Error::Shape {
                expected: self.state_dim(),
                got: target.len(),
            });
        }
        self.encoder.forward_trace(input, &mut ws.enc)?;
        let half = T::of(0.5);
        {
            let out = ws.enc.output();
            let (mu, lv_raw) = out.split_at(l);
            ws.logvar.clear();
            ws.logvar.extend(lv_raw.iter().map(|v| clamp_logvar(*v)));
            ws.z.clear();
            ws.z.extend(
                mu.iter()
                    .zip(&ws.logvar)
                    .zip(eps)
                    .map(|((m, lv), e)| *m + (*lv * half).exp() * *e),
            );
        }
        self.decoder.forward_trace(&ws.z, &mut ws.dec)?;
        let recon_out = ws.dec.output();
        let recon: T = target.iter().zip(recon_out).map(|(t, p)| bce(*t, *p)).sum();
        let mu = &ws.enc.output()[..l];
        let kl_term = kl(mu, &ws.logvar);

        // d(BCE)/d(logit) = p - t through the sigmoid head
        ws.d_out.clear();
        ws.d_out.extend(recon_out.iter().zip(target).map(|(p, t)| *p - *t));
        ws.d_z.resize(l, T::zero());
        self.decoder.backward(
            &mut ws.dec,
            &ws.d_out,
            GradAt::PreActivation,
            &mut grads.decoder,
            Some(&mut ws.d_z),
        );

        ws.d_enc.clear();
        let mu = &ws.enc.output()[..l];
        ws.d_enc
            .extend(mu.iter().zip(&ws.d_z).map(|(m, dz)| *dz + kl_weight * *m));
        for k in 0..l {
            let sigma = (ws.logvar[k] * half).exp();
            let d_lv = ws.d_z[k] * eps[k] * half * sigma + kl_weight * half * (ws.logvar[k].exp() - T::one());
            ws.d_enc.push(d_lv);
        }
        self.encoder
            .backward(&mut ws.enc, &ws.d_enc, GradAt::Output, &mut grads.encoder, None);
        Ok(LossTerms {
            total: recon + kl_term,
            recon,
            kl: kl_term,
        })
    }
}

fn clamp_logvar<T: Scalar>(v: T) -> T {
    v.max(T::of(LOGVAR_MIN)).min(T::of(LOGVAR_MAX))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_noise_returns_mean() {
        let z = reparameterize(&[1.0, -2.0], &[0.3, 1.5], &[0.0, 0.0]).unwrap();
        assert_eq!(z, vec![1.0, -2.0]);
    }

    #[test]
    fn unit_sigma_adds_noise() {
        let z = reparameterize(&[1.0, -2.0], &[0.0, 0.0], &[0.5, 0.25]).unwrap();
        assert_eq!(z, vec![1.5, -1.75]);
    }

    #[test]
    fn sigma_two() {
        let z = reparameterize(&[0.0f64], &[2.0 * 2f64.ln()], &[1.0]).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kl_closed_forms() {
        let t = elbo_loss(&[0.5f64], &[0.5], &[0.0], &[0.0]).unwrap();
        assert_eq!(t.kl, 0.0);
        assert!((t.recon - 2f64.ln()).abs() < 1e-12);
        let t = elbo_loss(&[0.5f64], &[0.5], &[1.0], &[0.0]).unwrap();
        assert!((t.kl - 0.5).abs() < 1e-12);
        assert!((t.total - t.recon - t.kl).abs() < 1e-12);
    }

    #[test]
    fn recon_out_of_range_is_rejected() {
        assert!(matches!(
            elbo_loss(&[0.0f64], &[1.0], &[0.0], &[0.0]),
            Err(Error::ReconRange(_))
        ));
        assert!(elbo_loss(&[0.0f64], &[0.0], &[0.0], &[0.0]).is_err());
        assert!(elbo_loss(&[0.0f64, 1.0], &[0.5], &[0.0], &[0.0]).is_err());
    }

    fn small_shape() -> DvaeShape {
        DvaeShape {
            state_dim: 5,
            action_dim: 4,
            latent_dim: 2,
            hidden: vec![6],
        }
    }

    #[test]
    fn deterministic_pipeline_with_zero_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = Dvae::<f32>::init(&small_shape(), &mut rng).unwrap();
        let x = [0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let a = model.reconstruct(&x, &[0.0, 0.0]).unwrap();
        let b = model.reconstruct(&x, &[0.0, 0.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
    }

    #[test]
    fn unused_parameter_has_zero_gradient() {
        // an input that is always zero never touches its weight row
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = Dvae::<f64>::init(&small_shape(), &mut rng).unwrap();
        let x = [0.0, 1.0, 0.3, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let mut grads = model.zero_grads();
        let mut ws = DvaeWorkspace::default();
        model
            .accumulate_grad(&x, &[0.0, 1.0, 0.0, 1.0, 0.0], &[0.2, -0.4], &mut ws, &mut grads)
            .unwrap();
        for o in 0..6 {
            assert_eq!(grads.encoder[o], 0.0, "row of input 0");
        }
        assert!(grads.encoder.iter().any(|g| *g != 0.0));
    }

    #[test]
    fn scaling_the_loss_scales_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = Dvae::<f64>::init(&small_shape(), &mut rng).unwrap();
        let x = [0.1, 0.9, 0.3, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0];
        let t = [0.0, 1.0, 0.0, 1.0, 0.0];
        let mut ws = DvaeWorkspace::default();
        let mut once = model.zero_grads();
        model.accumulate_grad(&x, &t, &[0.5, 0.1], &mut ws, &mut once).unwrap();
        // the same sample twice is the gradient of twice the loss
        let mut twice = model.zero_grads();
        for _ in 0..2 {
            model.accumulate_grad(&x, &t, &[0.5, 0.1], &mut ws, &mut twice).unwrap();
        }
        for (a, b) in once
            .encoder
            .iter()
            .chain(&once.decoder)
            .zip(twice.encoder.iter().chain(&twice.decoder))
        {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn accumulated_loss_matches_forward_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = Dvae::<f64>::init(&small_shape(), &mut rng).unwrap();
        let x = [0.2, 0.0, 0.7, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let t = [1.0, 0.0, 0.0, 0.0, 1.0];
        let eps = [0.3, -1.2];
        let mut ws = DvaeWorkspace::default();
        let mut g = model.zero_grads();
        let a = model.accumulate_grad(&x, &t, &eps, &mut ws, &mut g).unwrap();
        let b = model.loss(&x, &t, &eps).unwrap();
        assert!((a.total - b.total).abs() < 1e-12);
        assert!(a.kl >= 0.0);
    }
}
