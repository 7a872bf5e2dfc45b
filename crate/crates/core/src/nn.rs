//! Dense feed-forward networks with manual backpropagation and ADAM.
//!
//! Shared by the delay-to-power regressor and both halves of the GAN.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    Sigmoid,
    /// Slope applied to negative inputs.
    LeakyRelu(f64),
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::LeakyRelu(a) => x.max(0.0) + a * x.min(0.0),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Linear => 1.0,
        }
    }

    /// Text tag used by the model document format.
    pub fn tag(self) -> String {
        match self {
            Activation::Sigmoid => "sigmoid".into(),
            Activation::LeakyRelu(a) => format!("leaky_relu({})", crate::io::fmt_f64(a)),
            Activation::Linear => "linear".into(),
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        let tag = tag.trim();
        match tag {
            "sigmoid" => Ok(Activation::Sigmoid),
            "linear" => Ok(Activation::Linear),
            _ => {
                let slope = tag
                    .strip_prefix("leaky_relu(")
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| Error::Parse(format!("unknown activation `{tag}`")))?;
                slope
                    .trim()
                    .parse()
                    .map(Activation::LeakyRelu)
                    .map_err(|_| Error::Parse(format!("bad leaky_relu slope `{slope}`")))
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One affine layer followed by an activation. Weights are row-major
/// `outputs x inputs`, so `weights[j * inputs + i]` connects input `i` to
/// neuron `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

/// Intermediate values from a forward pass over a batch, kept for backprop.
#[derive(Debug, Clone)]
pub struct Trace {
    batch: usize,
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl MlpModel {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.inputs == 0 || l.outputs == 0 {
                return Err(Error::Shape(format!("layer {i} has a zero dimension")));
            }
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::Shape(format!(
                    "layer {i}: expected {}x{} weights and {} biases",
                    l.outputs, l.inputs, l.outputs
                )));
            }
            if l.weights.iter().chain(&l.biases).any(|w| !w.is_finite()) {
                return Err(Error::Shape(format!("layer {i} has non-finite parameters")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Shape(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].outputs,
                    i + 1,
                    pair[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Random init, every parameter uniform on [-0.5, 0.5].
    pub fn random<R: Rng + ?Sized>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Shape("need one activation per layer transition".into()));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(d, &activation)| Layer {
                inputs: d[0],
                outputs: d[1],
                weights: (0..d[0] * d[1]).map(|_| rng.random_range(-0.5..=0.5)).collect(),
                biases: (0..d[1]).map(|_| rng.random_range(-0.5..=0.5)).collect(),
                activation,
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters in canonical order: per layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            let (b, tail) = tail.split_at(l.biases.len());
            l.weights.copy_from_slice(w);
            l.biases.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Visits every parameter mutably in canonical order.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut k = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                f(k, w);
                k += 1;
            }
        }
    }

    /// Sum of squared weights (biases excluded), the L2 penalty base.
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|w| w * w)
            .sum()
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        let mut x = input.to_vec();
        for l in &self.layers {
            x = (0..l.outputs)
                .map(|j| {
                    let row = &l.weights[j * l.inputs..(j + 1) * l.inputs];
                    let z = l.biases[j] + row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
                    l.activation.apply(z)
                })
                .collect();
        }
        Ok(x)
    }

    /// Scalar-in, scalar-out convenience wrapper.
    pub fn forward_scalar(&self, x: f64) -> Result<f64> {
        if self.input_dim() != 1 || self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "scalar evaluation needs a 1 -> 1 network, have {:?}",
                self.layer_dims()
            )));
        }
        Ok(self.forward(&[x])?[0])
    }

    /// Batched forward pass; `inputs` is row-major `batch x input_dim`.
    pub fn forward_batch(&self, inputs: &[f64]) -> Result<Trace> {
        let d = self.input_dim();
        if inputs.len() % d != 0 {
            return Err(Error::Shape("batch length is not a multiple of the input size".into()));
        }
        let batch = inputs.len() / d;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        activations.push(inputs.to_vec());
        for l in &self.layers {
            let x = activations.last().expect("input pushed");
            let mut z = vec![0.0; batch * l.outputs];
            for s in 0..batch {
                let xs = &x[s * l.inputs..(s + 1) * l.inputs];
                let zs = &mut z[s * l.outputs..(s + 1) * l.outputs];
                for (j, zj) in zs.iter_mut().enumerate() {
                    let row = &l.weights[j * l.inputs..(j + 1) * l.inputs];
                    *zj = l.biases[j] + row.iter().zip(xs).map(|(w, v)| w * v).sum::<f64>();
                }
            }
            let y = z.iter().map(|&v| l.activation.apply(v)).collect();
            pre.push(z);
            activations.push(y);
        }
        Ok(Trace {
            batch,
            activations,
            pre,
        })
    }

    /// Backpropagates `grad_output` (d loss / d output, `batch x output_dim`).
    ///
    /// Parameter gradients are accumulated into `grads` (canonical order) and
    /// the gradient with respect to the network input is returned.
    pub fn backward(&self, trace: &Trace, grad_output: &[f64], grads: &mut [f64]) -> Vec<f64> {
        assert_eq!(grads.len(), self.param_count(), "gradient buffer size");
        assert_eq!(grad_output.len(), trace.batch * self.output_dim(), "output gradient size");
        let batch = trace.batch;
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for l in &self.layers {
            offsets.push(acc);
            acc += l.param_count();
        }
        let mut delta_out = grad_output.to_vec();
        for (li, l) in self.layers.iter().enumerate().rev() {
            let z = &trace.pre[li];
            let y = &trace.activations[li + 1];
            let x = &trace.activations[li];
            let delta: Vec<f64> = delta_out
                .iter()
                .zip(z.iter().zip(y))
                .map(|(g, (&zv, &yv))| g * l.activation.derivative(zv, yv))
                .collect();
            let (gw, gb) = grads[offsets[li]..offsets[li] + l.param_count()].split_at_mut(l.weights.len());
            let mut delta_in = vec![0.0; batch * l.inputs];
            for s in 0..batch {
                let ds = &delta[s * l.outputs..(s + 1) * l.outputs];
                let xs = &x[s * l.inputs..(s + 1) * l.inputs];
                let dins = &mut delta_in[s * l.inputs..(s + 1) * l.inputs];
                for (j, &dj) in ds.iter().enumerate() {
                    if dj == 0.0 {
                        continue;
                    }
                    gb[j] += dj;
                    let row = &l.weights[j * l.inputs..(j + 1) * l.inputs];
                    let grow = &mut gw[j * l.inputs..(j + 1) * l.inputs];
                    for i in 0..l.inputs {
                        grow[i] += dj * xs[i];
                        dins[i] += dj * row[i];
                    }
                }
            }
            delta_out = delta_in;
        }
        delta_out
    }
}

/// ADAM optimizer state for one parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(params: usize, lr: f64) -> Self {
        Self::with_betas(params, lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(params: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            m: vec![0.0; params],
            v: vec![0.0; params],
            step: 0,
        }
    }

    /// Descends along `grads`.
    pub fn step(&mut self, model: &mut MlpModel, grads: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let (m, v) = (&mut self.m, &mut self.v);
        model.for_each_param_mut(|k, w| {
            let g = grads[k];
            m[k] = b1 * m[k] + (1.0 - b1) * g;
            v[k] = b2 * v[k] + (1.0 - b2) * g * g;
            let mh = m[k] / c1;
            let vh = v[k] / c2;
            *w -= lr * mh / (vh.sqrt() + eps);
        });
    }
}
