//! Small feed-forward networks: sigmoid hidden layers, one output unit,
//! minibatch SGD with an L2 weight penalty and per-epoch learning-rate decay.
//!
//! Input gradients `d mu / d x_j` are the substrate of both permutation
//! tests. One-hidden-layer networks have a closed form
//! ([`input_gradient_closed_form`]); any depth is handled by reverse-mode
//! accumulation ([`input_gradient_backprop`]).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    /// Continuous outcome, mean squared error loss.
    Identity,
    /// Binary outcome, cross-entropy loss.
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// One or two hidden layer widths.
    pub hidden_sizes: Vec<usize>,
    pub output_activation: OutputActivation,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    /// Fraction of the learning rate removed after every epoch.
    pub lr_decay_per_epoch: f64,
    pub l2_lambda: f64,
    pub batch_size: usize,
    /// Half-width of the uniform weight initialization. `None` uses
    /// `1 / sqrt(fan_in)` per layer.
    pub init_scale: Option<f64>,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![20],
            output_activation: OutputActivation::Identity,
            epochs: 150,
            initial_learning_rate: 0.05,
            lr_decay_per_epoch: 0.015,
            l2_lambda: 1e-4,
            batch_size: 1,
            init_scale: None,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.hidden_sizes.is_empty() || self.hidden_sizes.len() > 2 {
            return bad("hidden_sizes must have one or two entries");
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if !(self.initial_learning_rate > 0.0 && self.initial_learning_rate.is_finite()) {
            return bad("initial learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.lr_decay_per_epoch) {
            return bad("learning-rate decay must lie in [0, 1)");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be nonnegative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if let Some(s) = self.init_scale {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("init_scale must be nonnegative");
            }
        }
        Ok(())
    }

    /// Learning rate used during epoch `epoch` (zero-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.initial_learning_rate * (1.0 - self.lr_decay_per_epoch).powi(epoch as i32)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Dense layer with `outputs x inputs` row-major weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    pub fn weight(&self, out: usize, input: usize) -> f64 {
        self.weights[out * self.inputs + input]
    }

    fn affine_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.weights[k * self.inputs..(k + 1) * self.inputs];
            *o = self.biases[k] + dot(row, x);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// Hidden layers in order from the input.
    pub hidden: Vec<Layer>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub output_activation: OutputActivation,
}

/// A trained network and its per-epoch training loss.
#[derive(Debug, Clone)]
pub struct Trained {
    pub network: Network,
    /// Mean data loss over each epoch's minibatches plus the L2 penalty at
    /// the end of the epoch.
    pub loss_history: Vec<f64>,
}

impl Trained {
    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws a fresh network for `p` inputs. Weights are uniform on
/// `[-scale, scale]`, biases are zero.
pub fn init_network(p: usize, config: &NetworkConfig) -> Result<Network> {
    if p == 0 {
        return Err(Error::InvalidConfig("network needs at least one input".into()));
    }
    config.validate()?;
    let mut rng = seed::rng(seed::derive(config.seed, seed::domain::INIT, 0));
    let mut draw = |fan_in: usize, count: usize| -> Vec<f64> {
        let scale = config.init_scale.unwrap_or_else(|| 1.0 / (fan_in as f64).sqrt());
        (0..count)
            .map(|_| if scale == 0.0 { 0.0 } else { rng.random_range(-scale..=scale) })
            .collect()
    };
    let mut hidden = Vec::with_capacity(config.hidden_sizes.len());
    let mut fan_in = p;
    for &width in &config.hidden_sizes {
        let mut layer = Layer::zeros(fan_in, width);
        layer.weights = draw(fan_in, fan_in * width);
        hidden.push(layer);
        fan_in = width;
    }
    let output_weights = draw(fan_in, fan_in);
    Ok(Network { hidden, output_weights, output_bias: 0.0, output_activation: config.output_activation })
}

impl Network {
    pub fn n_inputs(&self) -> usize {
        self.hidden[0].inputs
    }

    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.hidden
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .chain(&self.output_weights)
            .chain(std::iter::once(&self.output_bias))
            .copied()
    }

    /// Weights only (the penalized parameters).
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.hidden.iter().flat_map(|l| l.weights.iter()).chain(&self.output_weights).copied()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs() {
            return Err(Error::Shape(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.n_inputs()
            )));
        }
        Ok(())
    }

    fn check_feature(&self, j: usize) -> Result<()> {
        if j >= self.n_inputs() {
            return Err(Error::Shape(format!("feature {j} out of range for {} inputs", self.n_inputs())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut scratch = Scratch::new(self);
        Ok(scratch.forward(self, x))
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_input(data.row(0))?;
        let mut scratch = Scratch::new(self);
        Ok(data.rows().map(|r| scratch.forward(self, r)).collect())
    }

    fn output_derivative(&self, pre: f64) -> f64 {
        match self.output_activation {
            OutputActivation::Identity => 1.0,
            OutputActivation::Sigmoid => {
                let s = sigmoid(pre);
                s * (1.0 - s)
            }
        }
    }
}

/// Per-layer pre-activations and activations for one forward pass.
struct Scratch {
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    out_pre: f64,
}

impl Scratch {
    fn new(net: &Network) -> Self {
        let pre: Vec<Vec<f64>> = net.hidden.iter().map(|l| vec![0.0; l.outputs]).collect();
        let act = pre.clone();
        Self { pre, act, out_pre: 0.0 }
    }

    fn forward(&mut self, net: &Network, x: &[f64]) -> f64 {
        for (l, layer) in net.hidden.iter().enumerate() {
            let (before, after) = self.act.split_at_mut(l);
            let input = if l == 0 { x } else { &before[l - 1] };
            layer.affine_into(input, &mut self.pre[l]);
            for (a, z) in after[0].iter_mut().zip(&self.pre[l]) {
                *a = sigmoid(*z);
            }
        }
        let last = self.act.last().expect("at least one hidden layer");
        self.out_pre = net.output_bias + dot(&net.output_weights, last);
        match net.output_activation {
            OutputActivation::Identity => self.out_pre,
            OutputActivation::Sigmoid => sigmoid(self.out_pre),
        }
    }
}

/// Closed-form input gradient of a one-hidden-layer network:
/// `g0'(w0 . a + d0) * w0 . (g1'(W1 x + d1) (*) W1[., j])`.
pub fn input_gradient_closed_form(net: &Network, x: &[f64], j: usize) -> Result<f64> {
    if net.depth() != 1 {
        return Err(Error::UnsupportedArchitecture(format!(
            "closed-form gradient needs one hidden layer, network has {}; use input_gradient_backprop",
            net.depth()
        )));
    }
    net.check_input(x)?;
    net.check_feature(j)?;
    let layer = &net.hidden[0];
    let mut alpha = vec![0.0; layer.outputs];
    layer.affine_into(x, &mut alpha);
    let mut inner = 0.0;
    let mut out_pre = net.output_bias;
    for (k, z) in alpha.iter().enumerate() {
        let s = sigmoid(*z);
        out_pre += net.output_weights[k] * s;
        inner += net.output_weights[k] * s * (1.0 - s) * layer.weight(k, j);
    }
    Ok(net.output_derivative(out_pre) * inner)
}

/// Reverse-mode input gradient for any supported depth.
pub fn input_gradient_backprop(net: &Network, x: &[f64], j: usize) -> Result<f64> {
    net.check_input(x)?;
    net.check_feature(j)?;
    let mut scratch = Scratch::new(net);
    scratch.forward(net, x);
    Ok(backprop_input(net, &scratch)[j])
}

/// Full input gradient vector by reverse-mode accumulation.
pub fn input_gradient_vector(net: &Network, x: &[f64]) -> Result<Vec<f64>> {
    net.check_input(x)?;
    let mut scratch = Scratch::new(net);
    scratch.forward(net, x);
    Ok(backprop_input(net, &scratch))
}

fn backprop_input(net: &Network, scratch: &Scratch) -> Vec<f64> {
    let d_out = net.output_derivative(scratch.out_pre);
    let last = net.depth() - 1;
    let mut delta: Vec<f64> = scratch.act[last]
        .iter()
        .zip(&net.output_weights)
        .map(|(a, w)| d_out * w * a * (1.0 - a))
        .collect();
    for l in (0..=last).rev() {
        let layer = &net.hidden[l];
        let mut upstream = vec![0.0; layer.inputs];
        for (k, d) in delta.iter().enumerate() {
            let row = &layer.weights[k * layer.inputs..(k + 1) * layer.inputs];
            for (u, w) in upstream.iter_mut().zip(row) {
                *u += d * w;
            }
        }
        if l > 0 {
            for (u, a) in upstream.iter_mut().zip(&scratch.act[l - 1]) {
                *u *= a * (1.0 - a);
            }
        }
        delta = upstream;
    }
    delta
}

/// `d mu_i / d x_ij` at every row of `data`.
pub fn feature_gradients(net: &Network, data: &Dataset, j: usize) -> Result<Vec<f64>> {
    net.check_input(data.row(0))?;
    net.check_feature(j)?;
    let mut scratch = Scratch::new(net);
    Ok(data
        .rows()
        .map(|r| {
            scratch.forward(net, r);
            if net.depth() == 1 {
                closed_form_from_scratch(net, &scratch, j)
            } else {
                backprop_input(net, &scratch)[j]
            }
        })
        .collect())
}

fn closed_form_from_scratch(net: &Network, scratch: &Scratch, j: usize) -> f64 {
    let layer = &net.hidden[0];
    let inner: f64 = scratch.act[0]
        .iter()
        .enumerate()
        .map(|(k, a)| net.output_weights[k] * a * (1.0 - a) * layer.weight(k, j))
        .sum();
    net.output_derivative(scratch.out_pre) * inner
}

/// Gradient accumulator mirroring the network's parameter layout.
struct Grads {
    hidden_w: Vec<Vec<f64>>,
    hidden_b: Vec<Vec<f64>>,
    out_w: Vec<f64>,
    out_b: f64,
}

impl Grads {
    fn new(net: &Network) -> Self {
        Self {
            hidden_w: net.hidden.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            hidden_b: net.hidden.iter().map(|l| vec![0.0; l.outputs]).collect(),
            out_w: vec![0.0; net.output_weights.len()],
            out_b: 0.0,
        }
    }

    fn clear(&mut self) {
        self.hidden_w.iter_mut().chain(self.hidden_b.iter_mut()).for_each(|v| v.fill(0.0));
        self.out_w.fill(0.0);
        self.out_b = 0.0;
    }
}

/// Trains `net` on `data` for `config.epochs` epochs.
///
/// Each epoch visits the rows in a fresh seeded order, in minibatches of
/// `config.batch_size`. The objective is the mean data loss plus
/// `l2_lambda * ||weights||^2`; biases are not penalized. The penalty is
/// applied as an implicit (proximal) step, `w <- (w - lr * g) / (1 + 2 lr lambda)`,
/// which is stable for any `lambda`.
pub fn train(net: &Network, data: &Dataset, config: &NetworkConfig) -> Result<Trained> {
    config.validate()?;
    net.check_input(data.row(0))?;
    if net.output_activation != config.output_activation {
        return Err(Error::InvalidConfig("network and config disagree on output activation".into()));
    }
    if config.output_activation == OutputActivation::Sigmoid && !data.has_binary_outcome() {
        return Err(Error::UnsupportedOutcome("sigmoid output needs a 0/1 outcome".into()));
    }
    let mut net = net.clone();
    let mut rng = seed::rng(seed::derive(config.seed, seed::domain::SHUFFLE, 0));
    let mut order: Vec<usize> = (0..data.n_rows()).collect();
    let mut scratch = Scratch::new(&net);
    let mut grads = Grads::new(&net);
    let mut deltas: Vec<Vec<f64>> = net.hidden.iter().map(|l| vec![0.0; l.outputs]).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    let y = data.y();

    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        let shrink = 1.0 / (1.0 + 2.0 * lr * config.l2_lambda);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.clear();
            for &i in batch {
                let mu = scratch.forward(&net, data.row(i));
                let (loss, d_pre) = match net.output_activation {
                    OutputActivation::Identity => ((mu - y[i]).powi(2), 2.0 * (mu - y[i])),
                    OutputActivation::Sigmoid => {
                        let m = mu.clamp(1e-15, 1.0 - 1e-15);
                        (-(y[i] * m.ln() + (1.0 - y[i]) * (1.0 - m).ln()), mu - y[i])
                    }
                };
                epoch_loss += loss;
                accumulate(&net, &scratch, data.row(i), d_pre, &mut grads, &mut deltas);
            }
            let step = lr / batch.len() as f64;
            for (l, layer) in net.hidden.iter_mut().enumerate() {
                for (w, g) in layer.weights.iter_mut().zip(&grads.hidden_w[l]) {
                    *w = (*w - step * g) * shrink;
                }
                for (b, g) in layer.biases.iter_mut().zip(&grads.hidden_b[l]) {
                    *b -= step * g;
                }
            }
            for (w, g) in net.output_weights.iter_mut().zip(&grads.out_w) {
                *w = (*w - step * g) * shrink;
            }
            net.output_bias -= step * grads.out_b;
        }
        let penalty: f64 = config.l2_lambda * net.weights().map(|w| w * w).sum::<f64>();
        let total = epoch_loss / data.n_rows() as f64 + penalty;
        if !total.is_finite() || net.parameters().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        loss_history.push(total);
    }
    Ok(Trained { network: net, loss_history })
}

fn accumulate(
    net: &Network,
    scratch: &Scratch,
    x: &[f64],
    d_pre: f64,
    grads: &mut Grads,
    deltas: &mut [Vec<f64>],
) {
    let last = net.depth() - 1;
    grads.out_b += d_pre;
    for (k, a) in scratch.act[last].iter().enumerate() {
        grads.out_w[k] += d_pre * a;
        deltas[last][k] = d_pre * net.output_weights[k] * a * (1.0 - a);
    }
    for l in (0..=last).rev() {
        let layer = &net.hidden[l];
        let input: &[f64] = if l == 0 { x } else { &scratch.act[l - 1] };
        let (lower, upper) = deltas.split_at_mut(l);
        let delta = &upper[0];
        let gw = &mut grads.hidden_w[l];
        for (k, d) in delta.iter().enumerate() {
            grads.hidden_b[l][k] += d;
            let row = &mut gw[k * layer.inputs..(k + 1) * layer.inputs];
            for (g, v) in row.iter_mut().zip(input) {
                *g += d * v;
            }
        }
        if l > 0 {
            let below = &mut lower[l - 1];
            below.fill(0.0);
            for (k, d) in delta.iter().enumerate() {
                let row = &layer.weights[k * layer.inputs..(k + 1) * layer.inputs];
                for (b, w) in below.iter_mut().zip(row) {
                    *b += d * w;
                }
            }
            for (b, a) in below.iter_mut().zip(&scratch.act[l - 1]) {
                *b *= a * (1.0 - a);
            }
        }
    }
}

/// Initializes from `config.seed` and trains.
pub fn fit(data: &Dataset, config: &NetworkConfig) -> Result<Trained> {
    let net = init_network(data.n_features(), config)?;
    train(&net, data, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_node(w1: f64, w0: f64) -> Network {
        Network {
            hidden: vec![Layer { inputs: 1, outputs: 1, weights: vec![w1], biases: vec![0.0] }],
            output_weights: vec![w0],
            output_bias: 0.0,
            output_activation: OutputActivation::Identity,
        }
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let cfg = NetworkConfig { hidden_sizes: vec![4], seed: 7, ..Default::default() };
        assert_eq!(init_network(3, &cfg).unwrap(), init_network(3, &cfg).unwrap());

        let cfg = NetworkConfig { hidden_sizes: vec![40], ..Default::default() };
        let net = init_network(5, &cfg).unwrap();
        assert_eq!((net.hidden[0].outputs, net.hidden[0].inputs), (40, 5));
        assert_eq!(net.hidden[0].weights.len(), 200);
        assert_eq!(net.output_weights.len(), 40);
        assert!(net.hidden[0].biases.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn zero_scale_gives_zero_weights() {
        let cfg = NetworkConfig { init_scale: Some(0.0), hidden_sizes: vec![3, 2], ..Default::default() };
        let net = init_network(4, &cfg).unwrap();
        assert!(net.parameters().all(|v| v == 0.0));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cfg = NetworkConfig { hidden_sizes: vec![0], ..Default::default() };
        assert!(matches!(init_network(3, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = NetworkConfig { hidden_sizes: vec![2, 2, 2], ..Default::default() };
        assert!(init_network(3, &cfg).is_err());
        assert!(init_network(0, &NetworkConfig::default()).is_err());
    }

    #[test]
    fn learning_rate_decays_geometrically() {
        let cfg = NetworkConfig { initial_learning_rate: 0.2, lr_decay_per_epoch: 0.1, ..Default::default() };
        assert_eq!(cfg.learning_rate_at(0), 0.2);
        assert!((cfg.learning_rate_at(2) - 0.2 * 0.81).abs() < 1e-15);
        assert!(cfg.learning_rate_at(3) < cfg.learning_rate_at(2));
    }

    #[test]
    fn zero_network_outputs() {
        let mut cfg = NetworkConfig { init_scale: Some(0.0), ..Default::default() };
        let net = init_network(2, &cfg).unwrap();
        assert_eq!(net.forward(&[3.0, -1.0]).unwrap(), 0.0);
        cfg.output_activation = OutputActivation::Sigmoid;
        let net = init_network(2, &cfg).unwrap();
        assert_eq!(net.forward(&[3.0, -1.0]).unwrap(), 0.5);
    }

    #[test]
    fn hand_composed_forward() {
        assert_eq!(one_node(1.0, 1.0).forward(&[0.0]).unwrap(), 0.5);
        assert!(one_node(1.0, 1.0).forward(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn closed_form_at_inflection_point() {
        let net = one_node(1.7, -0.6);
        let g = input_gradient_closed_form(&net, &[0.0], 0).unwrap();
        assert!((g - (-0.6 * 0.25 * 1.7)).abs() < 1e-15);
    }

    #[test]
    fn disconnected_feature_has_zero_gradient() {
        let cfg = NetworkConfig { hidden_sizes: vec![5], seed: 3, ..Default::default() };
        let mut net = init_network(3, &cfg).unwrap();
        for k in 0..5 {
            net.hidden[0].weights[k * 3 + 1] = 0.0;
        }
        assert_eq!(input_gradient_closed_form(&net, &[0.3, 2.0, -1.0], 1).unwrap(), 0.0);
        assert_eq!(input_gradient_backprop(&net, &[0.3, 2.0, -1.0], 1).unwrap(), 0.0);

        let cfg = NetworkConfig { hidden_sizes: vec![5, 4], seed: 3, ..Default::default() };
        let mut net = init_network(3, &cfg).unwrap();
        for k in 0..5 {
            net.hidden[0].weights[k * 3 + 2] = 0.0;
        }
        assert_eq!(input_gradient_backprop(&net, &[0.3, 2.0, -1.0], 2).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_rejects_two_layers() {
        let cfg = NetworkConfig { hidden_sizes: vec![3, 3], ..Default::default() };
        let net = init_network(2, &cfg).unwrap();
        assert!(matches!(
            input_gradient_closed_form(&net, &[0.0, 0.0], 0),
            Err(Error::UnsupportedArchitecture(_))
        ));
    }

    #[test]
    fn zero_epochs_is_identity() {
        let data = Dataset::from_columns(&[vec![0.0, 1.0, 2.0]], vec![0.0, 2.0, 4.0]).unwrap();
        let cfg = NetworkConfig { epochs: 0, ..Default::default() };
        let net = init_network(1, &cfg).unwrap();
        let trained = train(&net, &data, &cfg).unwrap();
        assert_eq!(trained.network, net);
        assert!(trained.loss_history.is_empty());
    }

    #[test]
    fn huge_penalty_shrinks_weights() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 25.0 - 1.0).collect();
        let y = x.iter().map(|v| 2.0 * v).collect();
        let data = Dataset::from_columns(&[x], y).unwrap();
        let cfg = NetworkConfig { l2_lambda: 1e6, epochs: 20, ..Default::default() };
        let trained = fit(&data, &cfg).unwrap();
        assert!(trained.network.weights().all(|w| w.abs() < 1e-2));
    }

    #[test]
    fn divergence_is_reported() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let y = x.iter().map(|v| 1e6 * v).collect();
        let data = Dataset::from_columns(&[x], y).unwrap();
        let cfg = NetworkConfig { initial_learning_rate: 50.0, l2_lambda: 0.0, ..Default::default() };
        let err = fit(&data, &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn sigmoid_output_requires_binary_outcome() {
        let data = Dataset::from_columns(&[vec![0.0, 1.0, 2.0]], vec![0.0, 0.5, 1.0]).unwrap();
        let cfg = NetworkConfig { output_activation: OutputActivation::Sigmoid, ..Default::default() };
        assert!(matches!(fit(&data, &cfg), Err(Error::UnsupportedOutcome(_))));
    }
}
