use rand::Rng;

use super::scalar::{axpy, dot, sigmoid, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity = 0,
    Relu = 1,
    Sigmoid = 2,
}

impl Activation {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Sigmoid),
            _ => None,
        }
    }

    fn apply<T: Scalar>(self, xs: &mut [T]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => xs.iter_mut().for_each(|x| *x = x.max(T::zero())),
            Activation::Sigmoid => xs.iter_mut().for_each(|x| *x = sigmoid(*x)),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => y * (T::one() - y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }
}

/// Fully connected network. All parameters live in one flat buffer; layer
/// `l` stores its weights as an `inputs × outputs` row-major matrix
/// followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet<T> {
    specs: Vec<LayerSpec>,
    offsets: Vec<usize>,
    params: Vec<T>,
}

/// Where the upstream gradient handed to [`DenseNet::backward`] is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradAt {
    /// Gradient with respect to the network output (after the last activation).
    Output,
    /// Gradient with respect to the last layer's pre-activation.
    PreActivation,
}

/// Activations recorded by a forward pass, reused across calls.
#[derive(Debug, Clone, Default)]
pub struct Trace<T> {
    acts: Vec<Vec<T>>,
    delta: Vec<T>,
    delta_prev: Vec<T>,
}

impl<T: Scalar> Trace<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

fn offsets_for(specs: &[LayerSpec]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(specs.len() + 1);
    let mut acc = 0;
    for s in specs {
        offsets.push(acc);
        acc += s.param_count();
    }
    offsets.push(acc);
    offsets
}

impl<T: Scalar> DenseNet<T> {
    pub fn zeros(specs: Vec<LayerSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Invalid("network needs at least one layer".into()));
        }
        for pair in specs.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Shape {
                    expected: pair[0].outputs,
                    got: pair[1].inputs,
                });
            }
        }
        if specs.iter().any(|s| s.inputs == 0 || s.outputs == 0) {
            return Err(Error::Invalid("layer dimensions must be positive".into()));
        }
        let offsets = offsets_for(&specs);
        let params = vec![T::zero(); *offsets.last().unwrap()];
        Ok(DenseNet { specs, offsets, params })
    }

    pub fn from_params(specs: Vec<LayerSpec>, params: Vec<T>) -> Result<Self> {
        let mut net = Self::zeros(specs)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    /// Uniform ±sqrt(6 / (fan_in + fan_out)) weights, zero biases.
    pub fn init<R: Rng + ?Sized>(specs: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(specs)?;
        for l in 0..net.specs.len() {
            let s = net.specs[l];
            let limit = (6.0 / (s.inputs + s.outputs) as f64).sqrt();
            let off = net.offsets[l];
            for w in &mut net.params[off..off + s.inputs * s.outputs] {
                *w = T::of(rng.gen_range(-limit..limit));
            }
        }
        Ok(net)
    }

    /// Stack of layers from `input` through `widths`, the last with `head`
    /// activation and the rest ReLU.
    pub fn mlp_specs(input: usize, widths: &[usize], head: Activation) -> Vec<LayerSpec> {
        let mut specs = Vec::with_capacity(widths.len());
        let mut prev = input;
        for (i, w) in widths.iter().enumerate() {
            let activation = if i + 1 == widths.len() { head } else { Activation::Relu };
            specs.push(LayerSpec {
                inputs: prev,
                outputs: *w,
                activation,
            });
            prev = *w;
        }
        specs
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn input_dim(&self) -> usize {
        self.specs[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.specs.last().unwrap().outputs
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn weight(&self, layer: usize, i: usize, o: usize) -> T {
        self.params[self.offsets[layer] + i * self.specs[layer].outputs + o]
    }

    pub fn bias(&self, layer: usize, o: usize) -> T {
        let s = self.specs[layer];
        self.params[self.offsets[layer] + s.inputs * s.outputs + o]
    }

    pub fn zero_grads(&self) -> Vec<T> {
        vec![T::zero(); self.params.len()]
    }

    pub fn cast<U: Scalar>(&self) -> DenseNet<U> {
        DenseNet {
            specs: self.specs.clone(),
            offsets: self.offsets.clone(),
            params: self.params.iter().map(|p| U::of(p.as_f64())).collect(),
        }
    }

    fn layer_forward(&self, l: usize, input: &[T], out: &mut Vec<T>) {
        let s = self.specs[l];
        let off = self.offsets[l];
        let w = &self.params[off..off + s.inputs * s.outputs];
        out.clear();
        out.extend_from_slice(&self.params[off + s.inputs * s.outputs..off + s.param_count()]);
        for (i, x) in input.iter().enumerate() {
            // one-hot style inputs are mostly zeros
            if *x != T::zero() {
                axpy(out, *x, &w[i * s.outputs..(i + 1) * s.outputs]);
            }
        }
        s.activation.apply(out);
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_input(input)?;
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for l in 0..self.specs.len() {
            self.layer_forward(l, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Forward pass that records every layer's output for [`backward`](Self::backward).
    pub fn forward_trace(&self, input: &[T], trace: &mut Trace<T>) -> Result<()> {
        self.check_input(input)?;
        trace.acts.resize_with(self.specs.len() + 1, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(input);
        for l in 0..self.specs.len() {
            let (done, rest) = trace.acts.split_at_mut(l + 1);
            self.layer_forward(l, &done[l], &mut rest[0]);
        }
        Ok(())
    }

    /// Accumulates parameter gradients of the last traced pass into `grads`
    /// and optionally writes the gradient with respect to the input.
    pub fn backward(
        &self,
        trace: &mut Trace<T>,
        upstream: &[T],
        at: GradAt,
        grads: &mut [T],
        grad_input: Option<&mut [T]>,
    ) {
        debug_assert_eq!(upstream.len(), self.output_dim());
        debug_assert_eq!(grads.len(), self.params.len());
        let Trace {
            acts,
            delta,
            delta_prev,
        } = trace;
        let last = self.specs.len() - 1;
        delta.clear();
        delta.extend_from_slice(upstream);
        if at == GradAt::Output {
            let act = self.specs[last].activation;
            for (d, y) in delta.iter_mut().zip(&acts[last + 1]) {
                *d *= act.derivative_from_output(*y);
            }
        }
        let want_input = grad_input.is_some();
        for l in (0..=last).rev() {
            let s = self.specs[l];
            let off = self.offsets[l];
            let x = &acts[l];
            let (gw, gb) = grads[off..off + s.param_count()].split_at_mut(s.inputs * s.outputs);
            for (b, d) in gb.iter_mut().zip(delta.iter()) {
                *b += *d;
            }
            for (i, xi) in x.iter().enumerate() {
                if *xi != T::zero() {
                    axpy(&mut gw[i * s.outputs..(i + 1) * s.outputs], *xi, delta);
                }
            }
            if l == 0 && !want_input {
                break;
            }
            let w = &self.params[off..off + s.inputs * s.outputs];
            delta_prev.clear();
            delta_prev.extend((0..s.inputs).map(|i| dot(&w[i * s.outputs..(i + 1) * s.outputs], delta)));
            if l > 0 {
                let act = self.specs[l - 1].activation;
                for (d, y) in delta_prev.iter_mut().zip(&acts[l]) {
                    *d *= act.derivative_from_output(*y);
                }
            }
            std::mem::swap(delta, delta_prev);
        }
        if let Some(gi) = grad_input {
            gi.copy_from_slice(delta);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(i: usize, o: usize, a: Activation) -> LayerSpec {
        LayerSpec {
            inputs: i,
            outputs: o,
            activation: a,
        }
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut net = DenseNet::<f64>::zeros(vec![spec(3, 3, Activation::Identity)]).unwrap();
        for i in 0..3 {
            net.params_mut()[i * 3 + i] = 1.0;
        }
        assert_eq!(net.forward(&[0.5, -2.0, 7.0]).unwrap(), vec![0.5, -2.0, 7.0]);
    }

    #[test]
    fn relu_clips_negative_preactivations() {
        let mut net = DenseNet::<f32>::zeros(vec![spec(2, 3, Activation::Relu)]).unwrap();
        net.params_mut().iter_mut().for_each(|p| *p = -1.0);
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn sigmoid_outputs_are_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::<f64>::init(vec![spec(4, 5, Activation::Sigmoid)], &mut rng).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-30.0..30.0)).collect();
            assert!(net.forward(&x).unwrap().iter().all(|y| *y > 0.0 && *y < 1.0));
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DenseNet::<f32>::zeros(vec![spec(2, 3, Activation::Relu), spec(4, 1, Activation::Identity)]).is_err());
        let net = DenseNet::<f32>::zeros(vec![spec(2, 3, Activation::Relu)]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape { expected: 2, got: 1 })));
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let specs = DenseNet::<f32>::mlp_specs(10, &[6, 2], Activation::Identity);
        let a = DenseNet::<f32>::init(specs.clone(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = DenseNet::<f32>::init(specs, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        let limit = (6.0f32 / 16.0).sqrt();
        for i in 0..10 {
            for o in 0..6 {
                assert!(a.weight(0, i, o).abs() <= limit);
            }
        }
        assert_eq!(a.bias(1, 1), 0.0);
    }

    fn loss_of(net: &DenseNet<f64>, x: &[f64], t: &[f64]) -> f64 {
        net.forward(x)
            .unwrap()
            .iter()
            .zip(t)
            .map(|(y, t)| 0.5 * (y - t) * (y - t))
            .sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let specs = vec![
            spec(3, 4, Activation::Relu),
            spec(4, 3, Activation::Sigmoid),
            spec(3, 2, Activation::Identity),
        ];
        let mut net = DenseNet::<f64>::init(specs, &mut rng).unwrap();
        net.params_mut().iter_mut().for_each(|p| *p += rng.gen_range(-0.1..0.1));
        let x = [0.3, -0.7, 1.1];
        let t = [0.2, -0.4];
        let mut trace = Trace::default();
        net.forward_trace(&x, &mut trace).unwrap();
        let upstream: Vec<f64> = trace.output().iter().zip(&t).map(|(y, t)| y - t).collect();
        let mut grads = net.zero_grads();
        let mut gx = vec![0.0; 3];
        net.backward(&mut trace, &upstream, GradAt::Output, &mut grads, Some(&mut gx));
        let h = 1e-6;
        for p in 0..net.param_count() {
            let orig = net.params()[p];
            net.params_mut()[p] = orig + h;
            let up = loss_of(&net, &x, &t);
            net.params_mut()[p] = orig - h;
            let down = loss_of(&net, &x, &t);
            net.params_mut()[p] = orig;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - grads[p]).abs() < 1e-7, "param {p}: {fd} vs {}", grads[p]);
        }
        for i in 0..3 {
            let mut xp = x;
            xp[i] += h;
            let mut xm = x;
            xm[i] -= h;
            let fd = (loss_of(&net, &xp, &t) - loss_of(&net, &xm, &t)) / (2.0 * h);
            assert!((fd - gx[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..37).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..37).map(|i| 1.0 - i as f64 * 0.1).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9);
    }
}
