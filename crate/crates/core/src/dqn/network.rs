//! Fully connected ReLU network with an identity output layer, trained by
//! Adam on a Huber loss over the chosen action's Q-value.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DqnError;

/// `½e²` for `|e| ≤ 1`, `|e| − ½` beyond, with `e = q_target − q_behavior`.
pub fn huber(q_behavior: f64, q_target: f64) -> f64 {
    let e = q_target - q_behavior;
    if e.abs() <= 1.0 {
        0.5 * e * e
    } else {
        e.abs() - 0.5
    }
}

/// Derivative of [`huber`] with respect to `e`.
fn huber_slope(e: f64) -> f64 {
    e.clamp(-1.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    pub dims: Vec<usize>,
    /// `weights[l]` maps layer `l` to `l + 1`, shape `(dims[l+1], dims[l])`.
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Parameter gradients, shaped like the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// One sample for [`QNetwork::loss_gradients`].
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub input: &'a [f64],
    pub action: usize,
    pub target: f64,
}

impl QNetwork {
    /// Uniform weights in `±√(6 / fan_in)`, zero biases.
    pub fn init(dims: &[usize], seed: u64) -> Self {
        assert!(dims.len() >= 2, "a network needs an input and an output layer");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let bound = (6.0 / w[0] as f64).sqrt();
            weights.push(Array2::from_shape_fn((w[1], w[0]), |_| rng.gen_range(-bound..bound)));
            biases.push(Array1::zeros(w[1]));
        }
        QNetwork {
            dims: dims.to_vec(),
            weights,
            biases,
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        QNetwork {
            dims: dims.to_vec(),
            weights: dims.windows(2).map(|w| Array2::zeros((w[1], w[0]))).collect(),
            biases: dims.windows(2).map(|w| Array1::zeros(w[1])).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    pub fn param_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, DqnError> {
        if input.len() != self.input_dim() {
            return Err(DqnError::Dimension {
                expected: self.input_dim(),
                found: input.len(),
            });
        }
        let x = ArrayView2::from_shape((1, input.len()), input).expect("contiguous row");
        Ok(self.forward_batch(x).row(0).to_vec())
    }

    /// Rows of `inputs` are samples.
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Array2<f64> {
        let last = self.weights.len() - 1;
        let mut a = inputs.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            a = a.dot(&w.t()) + b;
            if l < last {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a
    }

    /// Mean Huber loss of the chosen actions' Q-values against their
    /// targets, and its gradients.
    pub fn loss_gradients(&self, batch: &[Sample]) -> (f64, Gradients) {
        let n = batch.len();
        let d_in = self.input_dim();
        let mut x = Array2::zeros((n, d_in));
        for (mut row, s) in x.axis_iter_mut(Axis(0)).zip(batch) {
            row.assign(&ndarray::ArrayView1::from(s.input));
        }
        // activations[l] is the input to layer l
        let last = self.weights.len() - 1;
        let mut activations = Vec::with_capacity(self.weights.len() + 1);
        activations.push(x);
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = activations[l].dot(&w.t()) + b;
            if l < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            activations.push(z);
        }
        let q = &activations[last + 1];
        let mut delta = Array2::zeros(q.raw_dim());
        let mut loss = 0.0;
        for (k, s) in batch.iter().enumerate() {
            let qk = q[[k, s.action]];
            loss += huber(qk, s.target);
            delta[[k, s.action]] = -huber_slope(s.target - qk) / n as f64;
        }
        loss /= n as f64;

        let mut gw = Vec::with_capacity(self.weights.len());
        let mut gb = Vec::with_capacity(self.weights.len());
        for l in (0..self.weights.len()).rev() {
            gw.push(delta.t().dot(&activations[l]));
            gb.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut prev = delta.dot(&self.weights[l]);
                // ReLU passes gradient where its output was positive
                Zip::from(&mut prev)
                    .and(&activations[l])
                    .for_each(|g, &a| {
                        if a <= 0.0 {
                            *g = 0.0
                        }
                    });
                delta = prev;
            }
        }
        gw.reverse();
        gb.reverse();
        (loss, Gradients { weights: gw, biases: gb })
    }

    /// Gradient of output `k` with respect to the input vector.
    pub fn input_gradient(&self, input: &[f64], k: usize) -> Vec<f64> {
        let last = self.weights.len() - 1;
        let mut acts = vec![Array1::from(input.to_vec())];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.dot(&acts[l]) + b;
            if l < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        let mut g = Array1::zeros(self.output_dim());
        g[k] = 1.0;
        for l in (0..self.weights.len()).rev() {
            let mut prev = self.weights[l].t().dot(&g);
            if l > 0 {
                Zip::from(&mut prev).and(&acts[l]).for_each(|p, &a| {
                    if a <= 0.0 {
                        *p = 0.0
                    }
                });
            }
            g = prev;
        }
        g.to_vec()
    }

    /// Copies every parameter of `other` into `self`.
    pub fn copy_from(&mut self, other: &QNetwork) -> Result<(), DqnError> {
        if self.dims != other.dims {
            return Err(DqnError::Architecture {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.assign(b);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.assign(b);
        }
        Ok(())
    }
}

/// Adam with the usual defaults for the moment decay rates.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &QNetwork, learning_rate: f64) -> Self {
        let zero = || Gradients {
            weights: net.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: net.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        };
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: zero(),
            v: zero(),
        }
    }

    pub fn step(&mut self, net: &mut QNetwork, g: &Gradients) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let lr = self.learning_rate;
        let update = |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for l in 0..net.weights.len() {
            Zip::from(&mut net.weights[l])
                .and(&g.weights[l])
                .and(&mut self.m.weights[l])
                .and(&mut self.v.weights[l])
                .for_each(update);
            Zip::from(&mut net.biases[l])
                .and(&g.biases[l])
                .and(&mut self.m.biases[l])
                .and(&mut self.v.biases[l])
                .for_each(update);
        }
    }
}
