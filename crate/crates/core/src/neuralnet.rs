//! Dense feed-forward networks with exact backpropagation, plus the Adam and
//! Adadelta optimizers used to train them.
//!
//! A [`DenseNet`] is a chain of affine layers, each followed by an element-wise
//! activation. Weight matrices are row-major with shape `(outputs, inputs)`.
//! All arithmetic is `f64`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::{Error, Result};

/// Header line of the text model format.
pub const MODEL_HEADER: &str = "GANDI-NET v1";

/// Pre-activations fed to the sigmoid are clamped to this magnitude so the
/// output stays strictly inside (0, 1).
pub const SIGMOID_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Linear,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP)).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative with respect to the pre-activation, expressed through the
    /// pre-activation `z` and the output `y = apply(z)`.
    pub fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::Format(format!("unknown activation tag '{other}'"))),
        }
    }
}

/// One affine layer `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    /// Row-major, `outputs` rows of `inputs` columns.
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn from_parts(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidConfig("layer dimensions must be positive".into()));
        }
        if weights.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::Dimension(format!(
                "layer {inputs}->{outputs} expects {} weights and {outputs} biases, got {} and {}",
                inputs * outputs,
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self { inputs, outputs, weights, bias, activation })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn pre_activation(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            row.iter().zip(input).fold(*b, |acc, (w, x)| w.mul_add(*x, acc))
        }));
    }
}

/// Values recorded during a forward pass, needed by [`DenseNet::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[0]` is the input; `activations[l + 1]` is the output of layer `l`.
    activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }
}

/// Parameter gradients with the same shapes as the network's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient { weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.bias.len()] })
                .collect(),
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += scale * y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|x| *x *= factor);
        }
    }

    /// Flattened view in parameter order: per layer, weights then bias.
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    fn shapes_match(&self, net: &DenseNet) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.weights.len() == l.weights.len() && g.bias.len() == l.bias.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

impl DenseNet {
    /// Builds a network with Glorot-uniform weights (limit `sqrt(6 / (fan_in + fan_out))`)
    /// and zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        validate_shape(sizes, activations)?;
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(pair, &act)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect();
                DenseLayer::from_parts(fan_in, fan_out, weights, vec![0.0; fan_out], act)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    /// Network with every weight and bias set to zero.
    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        validate_shape(sizes, activations)?;
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(pair, &act)| {
                DenseLayer::from_parts(pair[0], pair[1], vec![0.0; pair[0] * pair[1]], vec![0.0; pair[1]], act)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("a network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Dimension(format!(
                    "layer output {} does not feed next layer input {}",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(|l| l.outputs)).collect()
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.parameter_slices().all(|s| s.iter().all(|x| x.is_finite()))
    }

    fn parameter_slices(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    fn parameter_slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    /// Flattened parameters in the same order as [`Gradients::flat`].
    pub fn flat_parameters(&self) -> Vec<f64> {
        self.parameter_slices().flat_map(|s| s.iter().copied()).collect()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        let mut z = Vec::new();
        for layer in &self.layers {
            layer.pre_activation(&current, &mut z);
            current.clear();
            current.extend(z.iter().map(|&v| layer.activation.apply(v)));
        }
        Ok(current)
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        activations.push(input.to_vec());
        for layer in &self.layers {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.pre_activation(activations.last().expect("input pushed"), &mut z);
            activations.push(z.iter().map(|&v| layer.activation.apply(v)).collect());
            pre_activations.push(z);
        }
        Ok(ForwardTrace { activations, pre_activations })
    }

    /// Backpropagates `output_gradient` (dL/d output) through a recorded
    /// forward pass. Returns the parameter gradients and dL/d input.
    pub fn backward(&self, trace: &ForwardTrace, output_gradient: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backward_accumulate(trace, output_gradient, &mut grads, 1.0)?;
        Ok((grads, input_grad))
    }

    /// Like [`DenseNet::backward`] but adds `scale *` the parameter gradients
    /// into `grads`, which avoids reallocating inside training loops.
    pub fn backward_accumulate(
        &self,
        trace: &ForwardTrace,
        output_gradient: &[f64],
        grads: &mut Gradients,
        scale: f64,
    ) -> Result<Vec<f64>> {
        if trace.activations.len() != self.layers.len() + 1
            || trace.activations[0].len() != self.input_dim()
            || trace.activations.iter().skip(1).zip(&self.layers).any(|(a, l)| a.len() != l.outputs)
        {
            return Err(Error::Dimension("forward trace does not belong to this network".into()));
        }
        if output_gradient.len() != self.output_dim() {
            return Err(Error::Dimension(format!(
                "output gradient has length {}, network output is {}",
                output_gradient.len(),
                self.output_dim()
            )));
        }
        if !grads.shapes_match(self) {
            return Err(Error::Dimension("gradient buffer shape does not match network".into()));
        }
        let mut upstream = output_gradient.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let z = &trace.pre_activations[idx];
            let y = &trace.activations[idx + 1];
            let x = &trace.activations[idx];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(z.iter().zip(y))
                .map(|(g, (&zv, &yv))| g * layer.activation.derivative(zv, yv))
                .collect();
            let lg = &mut grads.layers[idx];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                lg.bias[o] += scale * d;
                let row = &mut lg.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (w, &xi) in row.iter_mut().zip(x) {
                    *w += scale * d * xi;
                }
            }
            let mut down = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (acc, &w) in down.iter_mut().zip(row) {
                    *acc += d * w;
                }
            }
            upstream = down;
        }
        Ok(upstream)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Serializes to the versioned text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MODEL_HEADER);
        out.push('\n');
        out.push_str(&join(self.layer_sizes().iter().map(usize::to_string)));
        out.push('\n');
        out.push_str(&join(self.layers.iter().map(|l| l.activation.tag().to_string())));
        out.push('\n');
        for layer in &self.layers {
            for row in layer.weights.chunks_exact(layer.inputs) {
                out.push_str(&join(row.iter().map(|v| format_real(*v))));
                out.push('\n');
            }
            out.push_str(&join(layer.bias.iter().map(|v| format_real(*v))));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        Self::read_lines(&mut lines, true)
    }

    /// Parses a network from a line iterator positioned at the header. When
    /// `exhaustive` is set, trailing non-empty lines are rejected.
    pub(crate) fn read_lines<'a, I>(lines: &mut I, exhaustive: bool) -> Result<Self>
    where
        I: Iterator<Item = &'a str>,
    {
        let header = lines.next().ok_or_else(|| Error::Truncated("missing header".into()))?;
        if header.trim() != MODEL_HEADER {
            return Err(Error::Version(format!("expected '{MODEL_HEADER}', found '{}'", header.trim())));
        }
        let sizes_line = lines.next().ok_or_else(|| Error::Truncated("missing layer sizes".into()))?;
        let sizes = sizes_line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::Format(format!("bad layer size '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        let acts_line = lines.next().ok_or_else(|| Error::Truncated("missing activation tags".into()))?;
        let activations = acts_line.split_whitespace().map(str::parse).collect::<Result<Vec<Activation>>>()?;
        if sizes.len() < 2 || sizes.contains(&0) || activations.len() != sizes.len() - 1 {
            return Err(Error::Dimension(format!(
                "{} layer sizes with {} activation tags",
                sizes.len(),
                activations.len()
            )));
        }
        let mut layers = Vec::with_capacity(activations.len());
        for (pair, &act) in sizes.windows(2).zip(&activations) {
            let (inputs, outputs) = (pair[0], pair[1]);
            let mut weights = Vec::with_capacity(inputs * outputs);
            for _ in 0..outputs {
                let row = lines.next().ok_or_else(|| Error::Truncated("missing weight row".into()))?;
                weights.extend(parse_row(row, inputs)?);
            }
            let bias_line = lines.next().ok_or_else(|| Error::Truncated("missing bias vector".into()))?;
            let bias = parse_row(bias_line, outputs)?;
            layers.push(DenseLayer::from_parts(inputs, outputs, weights, bias, act)?);
        }
        if exhaustive && lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Dimension(format!(
                "file holds more matrices than the {} layers it declares",
                activations.len()
            )));
        }
        Self::from_layers(layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn validate_shape(sizes: &[usize], activations: &[Activation]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::InvalidConfig("need at least input and output sizes".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidConfig("layer sizes must be positive".into()));
    }
    if activations.len() != sizes.len() - 1 {
        return Err(Error::InvalidConfig(format!(
            "{} layer sizes need {} activations, got {}",
            sizes.len(),
            sizes.len() - 1,
            activations.len()
        )));
    }
    Ok(())
}

/// 17 significant digits, enough for a bit-exact `f64` round trip.
pub(crate) fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(" ")
}

fn parse_row(line: &str, expected: usize) -> Result<Vec<f64>> {
    let values = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad number '{t}'"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected {
        return Err(Error::Dimension(format!("row has {} values, expected {expected}", values.len())));
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Adam { learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64 },
    Adadelta { learning_rate: f64, rho: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn adam(learning_rate: f64) -> Self {
        OptimizerKind::Adam { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    pub fn adadelta(learning_rate: f64) -> Self {
        OptimizerKind::Adadelta { learning_rate, rho: 0.95, epsilon: 1e-6 }
    }
}

/// Per-parameter accumulators for one network.
///
/// For Adam `first`/`second` hold the moment estimates; for Adadelta they hold
/// the running averages of squared gradients and squared updates.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    kind: OptimizerKind,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, net: &DenseNet) -> Self {
        let zeros: Vec<Vec<f64>> = net.parameter_slices().map(|s| vec![0.0; s.len()]).collect();
        Self { kind, first: zeros.clone(), second: zeros, step: 0 }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update with whichever rule this state was built for.
    pub fn apply(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        match self.kind {
            OptimizerKind::Adam { .. } => adam_step(net, grads, self),
            OptimizerKind::Adadelta { .. } => adadelta_step(net, grads, self),
        }
    }

    fn check(&self, net: &DenseNet, grads: &Gradients) -> Result<()> {
        let matches = grads.shapes_match(net)
            && self.first.len() == grads.layers.len() * 2
            && self.first.iter().zip(net.parameter_slices()).all(|(b, p)| b.len() == p.len());
        if matches {
            Ok(())
        } else {
            Err(Error::Dimension("optimizer state, gradients and network disagree in shape".into()))
        }
    }
}

/// Adam with bias correction.
pub fn adam_step(net: &mut DenseNet, grads: &Gradients, state: &mut OptimizerState) -> Result<()> {
    let OptimizerKind::Adam { learning_rate, beta1, beta2, epsilon } = state.kind else {
        return Err(Error::InvalidConfig("adam_step called with a non-Adam optimizer state".into()));
    };
    state.check(net, grads)?;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let buffers = state.first.iter_mut().zip(state.second.iter_mut());
    for ((params, g), (m, v)) in net.parameter_slices_mut().zip(grads.slices()).zip(buffers) {
        for i in 0..params.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

/// Adadelta; the learning rate scales the unit-corrected update.
pub fn adadelta_step(net: &mut DenseNet, grads: &Gradients, state: &mut OptimizerState) -> Result<()> {
    let OptimizerKind::Adadelta { learning_rate, rho, epsilon } = state.kind else {
        return Err(Error::InvalidConfig("adadelta_step called with a non-Adadelta optimizer state".into()));
    };
    state.check(net, grads)?;
    state.step += 1;
    let buffers = state.first.iter_mut().zip(state.second.iter_mut());
    for ((params, g), (acc_grad, acc_update)) in net.parameter_slices_mut().zip(grads.slices()).zip(buffers) {
        for i in 0..params.len() {
            acc_grad[i] = rho * acc_grad[i] + (1.0 - rho) * g[i] * g[i];
            let update = g[i] * (acc_update[i] + epsilon).sqrt() / (acc_grad[i] + epsilon).sqrt();
            params[i] -= learning_rate * update;
            acc_update[i] = rho * acc_update[i] + (1.0 - rho) * update * update;
        }
    }
    Ok(())
}
