//! Small fully connected networks with hand-written backpropagation.
//!
//! Hidden layers use `tanh`; the output layer uses a per-network activation.
//! Parameters are `f64` and stored row-major (`weights[o * inputs + i]`).

use std::path::Path;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

const CHECKPOINT_MAGIC: &[u8; 4] = b"SVNN";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }

    fn tag(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Sigmoid => 1,
            Activation::Identity => 2,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Tanh),
            1 => Ok(Activation::Sigmoid),
            2 => Ok(Activation::Identity),
            other => Err(Error::Checkpoint(format!("unknown activation tag {other}"))),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        }));
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }
}

/// Parameter-shaped container; used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(network: &Network) -> Self {
        Self {
            layers: network
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        self.values_mut()
            .zip(other.values())
            .for_each(|(a, b)| *a += b);
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    fn matches(&self, network: &Network) -> bool {
        self.layers.len() == network.layers.len()
            && self
                .layers
                .iter()
                .zip(&network.layers)
                .all(|(g, l)| g.inputs == l.inputs && g.outputs == l.outputs)
    }
}

fn flatten_layers(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct AdamState {
    step: u64,
    first: Gradients,
    second: Gradients,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
    output_activation: Activation,
    optimizer: OptimizerKind,
    adam: Option<AdamState>,
}

/// Post-activation values of every layer, input included.
struct Trace {
    activations: Vec<Vec<f64>>,
}

impl Network {
    /// Builds a network with weights and hidden biases uniform in
    /// `±1/sqrt(fan_in)` and every output bias set to `output_bias`.
    pub fn new(
        sizes: &[usize],
        output_activation: Activation,
        output_bias: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let mut net = Self::zeros(sizes, output_activation)?;
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w = rng.gen_range(-bound..bound);
            }
        }
        if let Some(last) = net.layers.last_mut() {
            last.biases.iter_mut().for_each(|b| *b = output_bias);
        }
        Ok(net)
    }

    /// All parameters zero.
    pub fn zeros(sizes: &[usize], output_activation: Activation) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidLayout(format!(
                "need at least input and output sizes, got {sizes:?}"
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidLayout(format!(
                "layer sizes must be positive, got {sizes:?}"
            )));
        }
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
            output_activation,
            optimizer: OptimizerKind::adam(),
            adam: None,
        })
    }

    pub fn with_optimizer(mut self, optimizer: OptimizerKind) -> Self {
        self.optimizer = optimizer;
        self.adam = None;
        self
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                got: values.len(),
            });
        }
        let mut it = values.iter();
        for layer in &mut self.layers {
            for p in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *p = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Sets every bias of the output layer.
    pub fn set_output_bias(&mut self, bias: f64) {
        if let Some(last) = self.layers.last_mut() {
            last.biases.iter_mut().for_each(|b| *b = bias);
        }
    }

    /// Zeroes the weights and biases of the output layer.
    pub fn zero_output_layer(&mut self) {
        if let Some(last) = self.layers.last_mut() {
            last.weights.iter_mut().for_each(|w| *w = 0.0);
            last.biases.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::DimensionMismatch {
                expected: self.input_size(),
                got: input.len(),
            });
        }
        Ok(())
    }

    fn trace(&self, input: &[f64]) -> Trace {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(activations.last().unwrap(), &mut z);
            let act = if i == last {
                self.output_activation
            } else {
                Activation::Tanh
            };
            z.iter_mut().for_each(|v| *v = act.apply(*v));
            activations.push(z);
        }
        Trace { activations }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.trace(input).activations.pop().unwrap())
    }

    /// Gradient of a scalar loss with respect to every parameter, given the
    /// loss gradient at the network output.
    pub fn backward(&self, input: &[f64], output_gradient: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate(input, &mut grads, |_| Ok(output_gradient.to_vec()))?;
        Ok(grads)
    }

    /// Runs one forward pass, asks `loss_gradient` for dL/d(output) and adds
    /// the resulting parameter gradients into `grads`. Returns the output.
    pub fn accumulate<F>(
        &self,
        input: &[f64],
        grads: &mut Gradients,
        loss_gradient: F,
    ) -> Result<Vec<f64>>
    where
        F: FnOnce(&[f64]) -> Result<Vec<f64>>,
    {
        self.check_input(input)?;
        if !grads.matches(self) {
            return Err(Error::InvalidLayout(
                "gradient container does not match network".into(),
            ));
        }
        let trace = self.trace(input);
        let output = trace.activations.last().unwrap();
        let out_grad = loss_gradient(output)?;
        if out_grad.len() != self.output_size() {
            return Err(Error::DimensionMismatch {
                expected: self.output_size(),
                got: out_grad.len(),
            });
        }

        let last = self.layers.len() - 1;
        // delta holds dL/dz for the current layer.
        let mut delta: Vec<f64> = out_grad
            .iter()
            .zip(output)
            .map(|(g, y)| g * self.output_activation.derivative_from_output(*y))
            .collect();
        for idx in (0..=last).rev() {
            let layer = &self.layers[idx];
            let input_act = &trace.activations[idx];
            let g = &mut grads.layers[idx];
            for (o, d) in delta.iter().enumerate() {
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input_act).for_each(|(w, x)| *w += d * x);
            }
            if idx > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                }
                prev.iter_mut()
                    .zip(input_act)
                    .for_each(|(p, y)| *p *= Activation::Tanh.derivative_from_output(*y));
                delta = prev;
            }
        }
        Ok(output.clone())
    }

    /// Moves parameters against `grads` using the configured optimizer.
    pub fn apply_update(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if !grads.matches(self) {
            return Err(Error::InvalidLayout(
                "gradient container does not match network".into(),
            ));
        }
        if !grads.is_finite() {
            return Err(Error::Divergence("gradient"));
        }
        match self.optimizer {
            OptimizerKind::Sgd => {
                for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
                    for (p, d) in layer
                        .weights
                        .iter_mut()
                        .chain(layer.biases.iter_mut())
                        .zip(g.weights.iter().chain(&g.biases))
                    {
                        *p -= learning_rate * d;
                    }
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let zeros = Gradients::zeros_like(self);
                let state = self.adam.get_or_insert_with(|| AdamState {
                    step: 0,
                    first: zeros.clone(),
                    second: zeros,
                });
                state.step += 1;
                let c1 = 1.0 - beta1.powi(state.step as i32);
                let c2 = 1.0 - beta2.powi(state.step as i32);
                let params = self
                    .layers
                    .iter_mut()
                    .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()));
                for (((p, g), m), v) in params
                    .zip(grads.values())
                    .zip(state.first.values_mut())
                    .zip(state.second.values_mut())
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
        if !self.is_finite() {
            return Err(Error::Divergence("parameters"));
        }
        Ok(())
    }

    /// Serializes layout and parameters. Optimizer state is not stored.
    ///
    /// Layout: magic `SVNN`, version u32, layer count u32, each size u32,
    /// hidden activation tag u8, output activation tag u8, then per layer the
    /// row-major weights followed by the biases as f64. All little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.sizes.len() + 8 * self.parameter_count());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.sizes.len() as u32).to_le_bytes());
        for &s in &self.sizes {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        out.push(Activation::Tanh.tag());
        out.push(self.output_activation.tag());
        for p in self.parameters() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cursor.len() < n {
                return Err(Error::Checkpoint("truncated file".into()));
            }
            let (head, rest) = cursor.split_at(n);
            cursor = rest;
            Ok(head)
        };
        let read_u32 = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());

        if take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = read_u32(take(4)?);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let count = read_u32(take(4)?) as usize;
        if count > 1024 {
            return Err(Error::Checkpoint(format!(
                "implausible layer count {count}"
            )));
        }
        let mut sizes = Vec::with_capacity(count);
        for _ in 0..count {
            sizes.push(read_u32(take(4)?) as usize);
        }
        let hidden = Activation::from_tag(take(1)?[0])?;
        if hidden != Activation::Tanh {
            return Err(Error::Checkpoint("hidden activation must be tanh".into()));
        }
        let output = Activation::from_tag(take(1)?[0])?;
        let mut net =
            Network::zeros(&sizes, output).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let n = net.parameter_count();
        let raw = take(8 * n)?;
        let params: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if !cursor.is_empty() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        net.set_parameters(&params)?;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::export::write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Mean-squared-error training helper: one optimizer step on a batch.
/// Returns the mean loss before the step.
pub fn mse_step<'a, I>(net: &mut Network, batch: I, learning_rate: f64) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let mut grads = Gradients::zeros_like(net);
    let mut loss = 0.0;
    let mut count = 0usize;
    for (input, target) in batch {
        net.accumulate(input, &mut grads, |out| {
            if target.len() != out.len() {
                return Err(Error::DimensionMismatch {
                    expected: out.len(),
                    got: target.len(),
                });
            }
            Ok(out
                .iter()
                .zip(target)
                .map(|(y, t)| {
                    loss += (y - t) * (y - t);
                    2.0 * (y - t)
                })
                .collect())
        })?;
        count += 1;
    }
    if count == 0 {
        return Ok(0.0);
    }
    grads.scale(1.0 / count as f64);
    net.apply_update(&grads, learning_rate)?;
    let loss = loss / count as f64;
    if !loss.is_finite() {
        return Err(Error::Divergence("loss"));
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{
        any, prop, prop_assert, prop_assert_eq, proptest, ProptestConfig, Strategy,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Central finite differences of the weighted output sum `w · out`.
    fn finite_difference(net: &Network, input: &[f64], weights: &[f64], h: f64) -> Vec<f64> {
        let base = net.parameters();
        let loss = |params: &[f64]| {
            let mut probe = net.clone();
            probe.set_parameters(params).unwrap();
            probe
                .forward(input)
                .unwrap()
                .iter()
                .zip(weights)
                .map(|(y, w)| w * y)
                .sum::<f64>()
        };
        (0..base.len())
            .map(|i| {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[i] += h;
                minus[i] -= h;
                (loss(&plus) - loss(&minus)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn parameter_count_matches_layout() {
        let net = Network::new(&[4, 32, 1], Activation::Sigmoid, -4.0, &mut rng(0)).unwrap();
        assert_eq!(net.parameter_count(), 193);
        assert_eq!(net.parameters().len(), 193);
    }

    #[test]
    fn init_is_seeded() {
        let a = Network::new(&[3, 8, 2], Activation::Identity, 0.0, &mut rng(7)).unwrap();
        let b = Network::new(&[3, 8, 2], Activation::Identity, 0.0, &mut rng(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_scale_bounded_by_fan_in() {
        let net = Network::new(&[16, 8, 1], Activation::Identity, 0.0, &mut rng(1)).unwrap();
        assert!(net.layers()[0].weights().iter().all(|w| w.abs() < 0.25));
        assert!(net.layers()[1]
            .weights()
            .iter()
            .all(|w| w.abs() < 1.0 / 8f64.sqrt()));
    }

    #[test]
    fn invalid_layouts_are_rejected() {
        assert!(Network::zeros(&[], Activation::Identity).is_err());
        assert!(Network::zeros(&[3], Activation::Identity).is_err());
        assert!(Network::zeros(&[3, 0, 1], Activation::Identity).is_err());
    }

    #[test]
    fn optimistic_bias_gives_small_sigmoid_output() {
        let mut net = Network::zeros(&[4, 8, 1], Activation::Sigmoid).unwrap();
        net.set_output_bias(-4.0);
        let y = net.forward(&[0.1, -0.2, 0.3, 0.0]).unwrap()[0];
        assert!((y - 0.017986).abs() < 1e-5);
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut net = Network::zeros(&[2, 3, 2], Activation::Identity).unwrap();
        net.set_output_bias(1.5);
        assert_eq!(net.forward(&[9.0, -9.0]).unwrap(), vec![1.5, 1.5]);
        let sig = Network::zeros(&[2, 3, 1], Activation::Sigmoid).unwrap();
        assert_eq!(sig.forward(&[1.0, 2.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn forward_rejects_wrong_input() {
        let net = Network::zeros(&[2, 3, 1], Activation::Identity).unwrap();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = Network::new(&[3, 5, 2], Activation::Sigmoid, 0.0, &mut rng(2)).unwrap();
        let g = net.backward(&[0.3, -0.1, 0.7], &[0.0, 0.0]).unwrap();
        assert!(g.flatten().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_linear_neuron_closed_form() {
        let mut net = Network::zeros(&[3, 1], Activation::Identity).unwrap();
        net.set_parameters(&[0.5, -0.25, 2.0, 0.1]).unwrap();
        let x = [1.0, 2.0, -1.0];
        let target = 0.7;
        let pred = net.forward(&x).unwrap()[0];
        let g = net
            .backward(&x, &[2.0 * (pred - target)])
            .unwrap()
            .flatten();
        let expected: Vec<f64> = x
            .iter()
            .map(|xi| 2.0 * (pred - target) * xi)
            .chain(std::iter::once(2.0 * (pred - target)))
            .collect();
        for (a, b) in g.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sgd_step_is_plain_descent() {
        let mut net = Network::zeros(&[1, 1], Activation::Identity)
            .unwrap()
            .with_optimizer(OptimizerKind::Sgd);
        net.set_parameters(&[2.0, 1.0]).unwrap();
        let mut g = Gradients::zeros_like(&net);
        g.layers[0].weights[0] = 0.5;
        g.layers[0].biases[0] = -1.0;
        net.apply_update(&g, 0.1).unwrap();
        assert_eq!(net.parameters(), vec![2.0 - 0.1 * 0.5, 1.0 + 0.1]);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::adam()] {
            let mut net = Network::new(&[2, 4, 1], Activation::Identity, 0.0, &mut rng(4))
                .unwrap()
                .with_optimizer(kind);
            let before = net.parameters();
            let g = Gradients::zeros_like(&net);
            net.apply_update(&g, 0.01).unwrap();
            assert_eq!(before, net.parameters());
        }
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut net = Network::zeros(&[1, 1], Activation::Identity).unwrap();
        let mut g = Gradients::zeros_like(&net);
        g.layers[0].biases[0] = f64::NAN;
        assert!(matches!(
            net.apply_update(&g, 0.1),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn sgd_converges_on_quadratic() {
        // Minimise (b - 3)^2 for the bias of a zero-input neuron; minimum at b = 3.
        let mut net = Network::zeros(&[1, 1], Activation::Identity)
            .unwrap()
            .with_optimizer(OptimizerKind::Sgd);
        for _ in 0..200 {
            let b = net.forward(&[0.0]).unwrap()[0];
            let g = net.backward(&[0.0], &[2.0 * (b - 3.0)]).unwrap();
            net.apply_update(&g, 0.1).unwrap();
        }
        assert!((net.forward(&[0.0]).unwrap()[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        assert!(Network::from_bytes(b"nope").is_err());
        let net = Network::new(&[2, 3, 1], Activation::Sigmoid, -4.0, &mut rng(0)).unwrap();
        let mut bytes = net.to_bytes();
        bytes.pop();
        assert!(Network::from_bytes(&bytes).is_err());
    }

    #[test]
    fn checkpoint_header_layout() {
        let net = Network::zeros(&[4, 2, 1], Activation::Sigmoid).unwrap();
        let bytes = net.to_bytes();
        assert_eq!(&bytes[0..4], b"SVNN");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(bytes[24], 0);
        assert_eq!(bytes[25], 1);
        assert_eq!(bytes.len(), 26 + 8 * net.parameter_count());
    }

    fn arb_net() -> impl Strategy<Value = (Vec<usize>, u64, usize)> {
        (
            2usize..=6,
            prop::collection::vec(1usize..=16, 1..=2),
            1usize..=3,
            any::<u64>(),
            0usize..3,
        )
            .prop_map(|(inp, hidden, out, seed, act)| {
                let mut sizes = vec![inp];
                sizes.extend(hidden);
                sizes.push(out);
                (sizes, seed, act)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn backward_matches_finite_differences((sizes, seed, act) in arb_net()) {
            let act = [Activation::Identity, Activation::Sigmoid, Activation::Tanh][act];
            let mut r = rng(seed);
            let net = Network::new(&sizes, act, 0.1, &mut r).unwrap();
            let input: Vec<f64> = (0..sizes[0]).map(|_| r.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..*sizes.last().unwrap()).map(|_| r.gen_range(-1.0..1.0)).collect();
            let analytic = net.backward(&input, &w).unwrap().flatten();
            let numeric = finite_difference(&net, &input, &w, 1e-5);
            for (a, n) in analytic.iter().zip(&numeric) {
                let denom = a.abs().max(n.abs()).max(1e-6);
                prop_assert!((a - n).abs() / denom < 1e-4, "analytic {a} numeric {n}");
            }
        }

        #[test]
        fn sigmoid_head_stays_in_open_interval(seed in any::<u64>(), x in prop::collection::vec(-50.0f64..50.0, 3)) {
            let net = Network::new(&[3, 8, 1], Activation::Sigmoid, -4.0, &mut rng(seed)).unwrap();
            let y = net.forward(&x).unwrap()[0];
            prop_assert!(y > 0.0 && y < 1.0);
        }

        #[test]
        fn checkpoint_round_trip(seed in any::<u64>(), act in 0usize..3) {
            let act = [Activation::Identity, Activation::Sigmoid, Activation::Tanh][act];
            let net = Network::new(&[3, 7, 2], act, -1.0, &mut rng(seed)).unwrap();
            let back = Network::from_bytes(&net.to_bytes()).unwrap();
            prop_assert_eq!(back.parameters(), net.parameters());
            prop_assert_eq!(back.sizes(), net.sizes());
            prop_assert_eq!(back.output_activation(), net.output_activation());
        }
    }
}
