//! Fully-connected ReLU networks with exact backpropagation and Adam.
//!
//! Weights are stored row-major as `out × in`. The three dense kernels
//! (forward, input gradient, weight gradient) are strided GEMM calls.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            output_dim,
            activation,
        }
    }
}

/// ReLU hidden layers of the given widths followed by an identity output layer.
pub fn mlp_spec(input_dim: usize, hidden: &[usize], output_dim: usize) -> Vec<LayerSpec> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input_dim;
    for &width in hidden {
        specs.push(LayerSpec::new(prev, width, Activation::Relu));
        prev = width;
    }
    specs.push(LayerSpec::new(prev, output_dim, Activation::Identity));
    specs
}

pub fn validate_spec(spec: &[LayerSpec]) -> Result<()> {
    if spec.is_empty() {
        return Err(Error::Config("network needs at least one layer".into()));
    }
    for (i, layer) in spec.iter().enumerate() {
        if layer.input_dim == 0 || layer.output_dim == 0 {
            return Err(Error::Config(format!("layer {i} has a zero dimension")));
        }
        if i > 0 && spec[i - 1].output_dim != layer.input_dim {
            return Err(Error::Config(format!(
                "layer {} outputs {} but layer {i} expects {}",
                i - 1,
                spec[i - 1].output_dim,
                layer.input_dim
            )));
        }
    }
    Ok(())
}

/// Dense row-major matrix; used for batches (`rows` = batch size).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Contract(format!(
                "matrix data has {} entries, expected {rows}×{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_points(points: &[[f64; 2]]) -> Self {
        let mut data = Vec::with_capacity(points.len() * 2);
        for p in points {
            data.extend_from_slice(p);
        }
        Self {
            rows: points.len(),
            cols: 2,
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_points(&self) -> Vec<[f64; 2]> {
        debug_assert_eq!(self.cols, 2);
        self.data.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    /// `output_dim × input_dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
}

/// Everything forward retains for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    pub input: Matrix,
    /// Pre-activation of each layer.
    pub pre: Vec<Matrix>,
    /// Post-activation of each layer; the last entry is the network output.
    pub post: Vec<Matrix>,
}

impl Tape {
    pub fn output(&self) -> &Matrix {
        self.post.last().expect("tape of a non-empty network")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// `C = A·B + beta·C` for `A: m×k`, `B: k×n`, `C: m×n`, with explicit
/// (non-negative) row/column strides so transposes are free.
#[allow(clippy::too_many_arguments)]
fn gemm(
    (m, k, n): (usize, usize, usize),
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    let extent = |rows: usize, cols: usize, rs: usize, cs: usize| (rows - 1) * rs + (cols - 1) * cs;
    assert!(c.len() > extent(m, n, rsc, csc));
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                c[i * rsc + j * csc] *= beta;
            }
        }
        return;
    }
    assert!(a.len() > extent(m, k, rsa, csa));
    assert!(b.len() > extent(k, n, rsb, csb));
    // SAFETY: every index touched is within the extents asserted above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

impl Network {
    /// He-normal weights for ReLU layers (LeCun-normal for identity layers),
    /// zero biases.
    pub fn init<R: Rng + ?Sized>(spec: &[LayerSpec], rng: &mut R) -> Result<Self> {
        validate_spec(spec)?;
        let layers = spec
            .iter()
            .map(|s| {
                let gain = match s.activation {
                    Activation::Relu => 2.0,
                    Activation::Identity => 1.0,
                };
                let std = math::sqrt(gain / s.input_dim as f64);
                let weights = (0..s.input_dim * s.output_dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        z * std
                    })
                    .collect();
                Layer {
                    spec: *s,
                    weights,
                    bias: vec![0.0; s.output_dim],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn init_seeded(spec: &[LayerSpec], seed: u64) -> Result<Self> {
        Self::init(spec, &mut crate::rng::seeded(seed))
    }

    /// Builds a network from explicit parameters, checking every shape.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let spec: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        validate_spec(&spec)?;
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.spec.input_dim * l.spec.output_dim
                || l.bias.len() != l.spec.output_dim
            {
                return Err(Error::Config(format!("layer {i} parameter shapes do not match its spec")));
            }
            if !l.weights.iter().chain(&l.bias).all(|v| v.is_finite()) {
                return Err(Error::Numeric(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    pub fn spec(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].spec.output_dim
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    pub fn forward(&self, batch: &Matrix) -> Result<Tape> {
        if batch.cols != self.input_dim() {
            return Err(Error::Contract(format!(
                "batch has width {} but the network expects {}",
                batch.cols,
                self.input_dim()
            )));
        }
        if !batch.data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite value in network input".into()));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = post.last().unwrap_or(batch);
            let z = layer.affine(input);
            let a = match layer.spec.activation {
                Activation::Identity => z.clone(),
                Activation::Relu => Matrix {
                    rows: z.rows,
                    cols: z.cols,
                    data: z.data.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
                },
            };
            pre.push(z);
            post.push(a);
        }
        Ok(Tape {
            input: batch.clone(),
            pre,
            post,
        })
    }

    /// Forward pass without retaining intermediates.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        if batch.cols != self.input_dim() {
            return Err(Error::Contract(format!(
                "batch has width {} but the network expects {}",
                batch.cols,
                self.input_dim()
            )));
        }
        if !batch.data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite value in network input".into()));
        }
        let mut current = batch.clone();
        for layer in &self.layers {
            let mut z = layer.affine(&current);
            if layer.spec.activation == Activation::Relu {
                for v in &mut z.data {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            current = z;
        }
        Ok(current)
    }

    /// Gradients of the loss w.r.t. every parameter, plus the gradient w.r.t.
    /// the network input.
    pub fn backward(&self, tape: &Tape, output_grad: &Matrix) -> Result<(Gradients, Matrix)> {
        let (grads, input_grad) = self.backprop(tape, output_grad, true, true)?;
        Ok((grads.expect("parameter gradients requested"), input_grad))
    }

    /// Parameter gradients only; skips the gradient w.r.t. the input.
    pub fn param_gradients(&self, tape: &Tape, output_grad: &Matrix) -> Result<Gradients> {
        let (grads, _) = self.backprop(tape, output_grad, true, false)?;
        Ok(grads.expect("parameter gradients requested"))
    }

    /// Input gradient only; skips the weight-gradient accumulation.
    pub fn backward_input(&self, tape: &Tape, output_grad: &Matrix) -> Result<Matrix> {
        Ok(self.backprop(tape, output_grad, false, true)?.1)
    }

    fn backprop(
        &self,
        tape: &Tape,
        output_grad: &Matrix,
        want_params: bool,
        want_input_grad: bool,
    ) -> Result<(Option<Gradients>, Matrix)> {
        let out = tape.output();
        if tape.pre.len() != self.layers.len()
            || output_grad.rows != out.rows
            || output_grad.cols != out.cols
        {
            return Err(Error::Contract(format!(
                "output gradient is {}×{} but the tape output is {}×{}",
                output_grad.rows, output_grad.cols, out.rows, out.cols
            )));
        }
        let n = output_grad.rows;
        let mut grads = want_params.then(|| Gradients::zeros_like(self));
        let mut delta = output_grad.clone();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let (fan_in, fan_out) = (layer.spec.input_dim, layer.spec.output_dim);
            if layer.spec.activation == Activation::Relu {
                let z = &tape.pre[idx];
                for (d, &zv) in delta.data.iter_mut().zip(&z.data) {
                    if zv <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = if idx == 0 { &tape.input } else { &tape.post[idx - 1] };
            if let Some(g) = grads.as_mut() {
                let lg = &mut g.layers[idx];
                // dW = deltaᵀ · X
                gemm(
                    (fan_out, n, fan_in),
                    &delta.data,
                    (1, fan_out),
                    &input.data,
                    (fan_in, 1),
                    0.0,
                    &mut lg.weights,
                    (fan_in, 1),
                );
                for row in delta.data.chunks_exact(fan_out) {
                    for (b, d) in lg.bias.iter_mut().zip(row) {
                        *b += d;
                    }
                }
            }
            if idx == 0 && !want_input_grad {
                break;
            }
            // dX = delta · W
            let mut next = Matrix::zeros(n, fan_in);
            gemm(
                (n, fan_out, fan_in),
                &delta.data,
                (fan_out, 1),
                &layer.weights,
                (fan_in, 1),
                0.0,
                &mut next.data,
                (fan_in, 1),
            );
            delta = next;
        }
        Ok((grads, delta))
    }
}

impl Layer {
    fn affine(&self, input: &Matrix) -> Matrix {
        let (fan_in, fan_out) = (self.spec.input_dim, self.spec.output_dim);
        let mut out = Matrix::zeros(input.rows, fan_out);
        for row in out.data.chunks_exact_mut(fan_out) {
            row.copy_from_slice(&self.bias);
        }
        // Y = X · Wᵀ + 1·bᵀ
        gemm(
            (input.rows, fan_in, fan_out),
            &input.data,
            (fan_in, 1),
            &self.weights,
            (1, fan_in),
            1.0,
            &mut out.data,
            (fan_out, 1),
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step_count: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(net: &Network, hyper: AdamHyper) -> Self {
        Self {
            first_moment: Gradients::zeros_like(net),
            second_moment: Gradients::zeros_like(net),
            step_count: 0,
            hyper,
        }
    }

    /// One bias-corrected Adam update, in place. Rejects non-finite gradients
    /// before touching any state.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != net.layers.len()
            || grads
                .tensors()
                .zip(net.tensors())
                .any(|(g, p)| g.len() != p.len())
        {
            return Err(Error::Contract("gradient shapes do not match the network".into()));
        }
        if !grads.all_finite() {
            return Err(Error::Numeric(format!(
                "non-finite gradient at Adam step {}",
                self.step_count + 1
            )));
        }
        self.step_count += 1;
        let AdamHyper {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        let t = self.step_count as f64;
        let c1 = 1.0 - libm::pow(beta1, t);
        let c2 = 1.0 - libm::pow(beta2, t);
        let params = net.tensors_mut();
        let m = self.first_moment.tensors_mut();
        let v = self.second_moment.tensors_mut();
        for (((p, g), m), v) in params.zip(grads.tensors()).zip(m).zip(v) {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= learning_rate * m_hat / (math::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }
}

/// Convenience: `(net', state')` after one update, leaving inputs untouched.
pub fn adam_step(net: &Network, grads: &Gradients, state: &AdamState) -> Result<(Network, AdamState)> {
    let mut net = net.clone();
    let mut state = state.clone();
    state.step(&mut net, grads)?;
    Ok((net, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn small_net(seed: u64) -> Network {
        Network::init_seeded(&mlp_spec(3, &[5, 4], 2), seed).unwrap()
    }

    #[test]
    fn parameter_count_of_benchmark_shape() {
        let spec = mlp_spec(2, &[128, 128, 128], 2);
        let net = Network::init_seeded(&spec, 7).unwrap();
        let expected = (2 * 128 + 128) + 2 * (128 * 128 + 128) + (128 * 2 + 2);
        assert_eq!(net.parameter_count(), expected);
        assert!(net.tensors().all(|t| t.iter().all(|v| v.is_finite())));
        assert!(net.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_is_deterministic() {
        let spec = mlp_spec(2, &[128, 128, 128], 2);
        let a = Network::init_seeded(&spec, 7).unwrap();
        let b = Network::init_seeded(&spec, 7).unwrap();
        assert_eq!(a, b);
        let c = Network::init_seeded(&spec, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_dim_and_mismatch_are_config_errors() {
        let zero = [LayerSpec::new(2, 0, Activation::Relu), LayerSpec::new(0, 1, Activation::Identity)];
        assert!(matches!(Network::init_seeded(&zero, 1), Err(Error::Config(_))));
        let bad = [LayerSpec::new(2, 3, Activation::Relu), LayerSpec::new(4, 1, Activation::Identity)];
        assert!(matches!(Network::init_seeded(&bad, 1), Err(Error::Config(_))));
        assert!(matches!(Network::init_seeded(&[], 1), Err(Error::Config(_))));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut net = small_net(1);
        for l in &mut net.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let batch = Matrix::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.5, 0.5]).unwrap();
        let out = net.forward(&batch).unwrap();
        assert!(out.output().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = Layer {
            spec: LayerSpec::new(3, 3, Activation::Identity),
            weights: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            bias: vec![0.0; 3],
        };
        let net = Network::from_layers(vec![layer]).unwrap();
        let batch = Matrix::from_vec(2, 3, vec![1.5, -2.0, 3.25, 0.0, 7.0, -0.125]).unwrap();
        assert_eq!(net.forward(&batch).unwrap().output(), &batch);
        assert_eq!(net.predict(&batch).unwrap(), batch);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = small_net(2);
        let wrong = Matrix::zeros(1, 2);
        assert!(matches!(net.forward(&wrong), Err(Error::Contract(_))));
        let nan = Matrix::from_vec(1, 3, vec![0.0, f64::NAN, 0.0]).unwrap();
        assert!(matches!(net.forward(&nan), Err(Error::Numeric(_))));
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let net = small_net(3);
        let batch = Matrix::from_vec(2, 3, vec![0.3, -0.2, 0.9, 1.0, 2.0, -1.0]).unwrap();
        let tape = net.forward(&batch).unwrap();
        let (g, dx) = net.backward(&tape, &Matrix::zeros(2, 2)).unwrap();
        assert!(g.tensors().all(|t| t.iter().all(|&v| v == 0.0)));
        assert!(dx.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_rejects_mismatched_grad() {
        let net = small_net(3);
        let tape = net.forward(&Matrix::zeros(2, 3)).unwrap();
        assert!(matches!(net.backward(&tape, &Matrix::zeros(3, 2)), Err(Error::Contract(_))));
    }

    #[test]
    fn linear_net_weight_gradient_is_outer_product_sum() {
        // Single identity layer, loss = sum of outputs: dL/dW[o][k] = Σ_i x[i][k].
        let mut rng = seeded(11);
        let net = Network::init(&[LayerSpec::new(3, 2, Activation::Identity)], &mut rng).unwrap();
        let batch = Matrix::from_vec(3, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 4.0, 2.0, 0.0, -3.0]).unwrap();
        let tape = net.forward(&batch).unwrap();
        let ones = Matrix::from_vec(3, 2, vec![1.0; 6]).unwrap();
        let (g, _) = net.backward(&tape, &ones).unwrap();
        let col_sums = [2.0, 2.5, 4.0];
        for o in 0..2 {
            for k in 0..3 {
                assert!((g.layers[0].weights[o * 3 + k] - col_sums[k]).abs() < 1e-12);
            }
            assert!((g.layers[0].bias[o] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_zero_gradient_leaves_params() {
        let net = small_net(4);
        let state = AdamState::new(&net, AdamHyper::default());
        let zeros = Gradients::zeros_like(&net);
        let (next, state) = adam_step(&net, &zeros, &state).unwrap();
        assert_eq!(next, net);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let net = small_net(5);
        let hyper = AdamHyper {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        };
        let mut g = Gradients::zeros_like(&net);
        g.layers.iter_mut().for_each(|l| {
            l.weights.iter_mut().for_each(|v| *v = 1.0);
            l.bias.iter_mut().for_each(|v| *v = 1.0);
        });
        let (next, _) = adam_step(&net, &g, &AdamState::new(&net, hyper)).unwrap();
        for (a, b) in net.tensors().zip(next.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y - 0.001).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn adam_constant_gradient_step_approaches_lr() {
        let net = Network::from_layers(vec![Layer {
            spec: LayerSpec::new(1, 1, Activation::Identity),
            weights: vec![0.0],
            bias: vec![0.0],
        }])
        .unwrap();
        let hyper = AdamHyper {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        };
        let mut state = AdamState::new(&net, hyper);
        let mut net = net;
        let g = Gradients {
            layers: vec![LayerGrad {
                weights: vec![-3.0],
                bias: vec![0.5],
            }],
        };
        let mut last = (0.0, 0.0);
        for _ in 0..2000 {
            let before = (net.layers[0].weights[0], net.layers[0].bias[0]);
            state.step(&mut net, &g).unwrap();
            last = (net.layers[0].weights[0] - before.0, net.layers[0].bias[0] - before.1);
        }
        // Step = -lr·sign(g) at the fixed point.
        assert!((last.0 - 0.01).abs() < 1e-6, "{last:?}");
        assert!((last.1 + 0.01).abs() < 1e-6, "{last:?}");
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut net = small_net(6);
        let mut state = AdamState::new(&net, AdamHyper::default());
        let mut g = Gradients::zeros_like(&net);
        g.layers[1].bias[0] = f64::INFINITY;
        let before = net.clone();
        assert!(matches!(state.step(&mut net, &g), Err(Error::Numeric(_))));
        assert_eq!(net, before);
        assert_eq!(state.step_count, 0);
    }
}
