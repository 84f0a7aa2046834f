//! Small batched MLP with hand-written backpropagation.
//!
//! tanh on hidden layers, linear output. Weights are [out, in] row-major so
//! a batched forward is one GEMM per layer. Gradients reuse the `Layer`
//! shape, which keeps the optimizer a plain elementwise zip.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Layer {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self { w: Array2::zeros((out_dim, in_dim)), b: Array1::zeros(out_dim) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Activations recorded during a forward pass: `acts[k]` is the input to
/// layer k, `acts[last]` the network output.
pub struct Tape {
    pub acts: Vec<Array2<f64>>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("empty tape")
    }
}

impl Mlp {
    /// Variance-scaled normal init; the final layer is scaled by
    /// `output_gain` (small on the actor so initial actions hug zero).
    pub fn init(dims: &[usize], output_gain: f64, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for k in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[k], dims[k + 1]);
            let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
            let gain = if k == dims.len() - 2 { output_gain } else { 1.0 };
            let w = Array2::from_shape_fn((fan_out, fan_in), |_| {
                gain * std * rng.sample::<f64, _>(StandardNormal)
            });
            layers.push(Layer { w, b: Array1::zeros(fan_out) });
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.w.nrows()));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Batched forward; rows of `x` are samples.
    pub fn forward(&self, x: Array2<f64>) -> Tape {
        assert_eq!(x.ncols(), self.input_dim(), "input width mismatch");
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = acts[k].dot(&layer.w.t());
            z += &layer.b;
            if k != last {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        Tape { acts }
    }

    /// Single-sample forward without keeping the tape.
    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        let input = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        self.forward(input).output().row(0).to_vec()
    }

    /// Backpropagate `d_out` = dL/d(output) through the tape, returning
    /// per-layer gradients (summed over the batch, matching a loss expressed
    /// through `d_out` directly).
    pub fn backward(&self, tape: &Tape, d_out: Array2<f64>) -> Vec<Layer> {
        let n = self.layers.len();
        assert_eq!(tape.acts.len(), n + 1, "tape does not match network");
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.w.nrows(), l.w.ncols()))
            .collect();

        let mut delta = d_out; // dL/dZ of the last (linear) layer
        for k in (0..n).rev() {
            grads[k].w = delta.t().dot(&tape.acts[k]);
            grads[k].b = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut d_act = delta.dot(&self.layers[k].w);
                // tanh'(z) = 1 - tanh(z)^2, from the recorded activation.
                d_act.zip_mut_with(&tape.acts[k], |d, &a| *d *= 1.0 - a * a);
                delta = d_act;
            }
        }
        grads
    }

    pub fn zero_grads(&self) -> Vec<Layer> {
        self.layers.iter().map(|l| Layer::zeros(l.w.nrows(), l.w.ncols())).collect()
    }
}
