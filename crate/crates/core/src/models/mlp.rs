use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hyper::MlpParams;
use crate::error::Result;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => math::tanh(v),
        }
    }

    /// Derivative given the pre-activation and the activation.
    fn derivative(self, pre: f64, act: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - act * act,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MlpLoss {
    CrossEntropy,
    /// `(p - y)^2 / 2` on the output probability.
    Quadratic,
}

/// One hidden layer and a sigmoid output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub activation: Activation,
    pub loss: MlpLoss,
    pub l1: f64,
    pub l2: f64,
    /// `hidden x inputs`.
    pub hidden_weights: Vec<Vec<f64>>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    /// Mean penalized training loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

impl Mlp {
    fn hidden(&self) -> usize {
        self.hidden_bias.len()
    }

    fn inputs(&self) -> usize {
        self.hidden_weights.first().map_or(0, Vec::len)
    }

    fn forward(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let pre: Vec<f64> = self
            .hidden_weights
            .iter()
            .zip(&self.hidden_bias)
            .map(|(w, b)| b + w.iter().zip(z).map(|(a, c)| a * c).sum::<f64>())
            .collect();
        let act: Vec<f64> = pre.iter().map(|v| self.activation.apply(*v)).collect();
        let logit = self.output_bias + act.iter().zip(&self.output_weights).map(|(a, w)| a * w).sum::<f64>();
        (pre, act, logit)
    }

    pub fn predict_proba(&self, z: &[f64]) -> f64 {
        math::sigmoid(self.forward(z).2)
    }

    /// Sum over hidden units of the absolute first-layer weights.
    pub fn importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.inputs()];
        for row in &self.hidden_weights {
            for (acc, w) in imp.iter_mut().zip(row) {
                *acc += w.abs();
            }
        }
        imp
    }

    /// Number of trainable values.
    pub fn parameter_count(&self) -> usize {
        self.hidden() * (self.inputs() + 2) + 1
    }

    /// Hidden weights row-major, hidden biases, output weights, output bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for row in &self.hidden_weights {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.hidden_bias);
        out.extend_from_slice(&self.output_weights);
        out.push(self.output_bias);
        out
    }

    /// Inverse of [`Mlp::parameters`].
    pub fn set_parameters(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.parameter_count(), "parameter vector length");
        let d = self.inputs();
        let mut it = flat.iter().copied();
        for row in self.hidden_weights.iter_mut() {
            for w in row.iter_mut().take(d) {
                *w = it.next().expect("length checked");
            }
        }
        for b in self.hidden_bias.iter_mut() {
            *b = it.next().expect("length checked");
        }
        for w in self.output_weights.iter_mut() {
            *w = it.next().expect("length checked");
        }
        self.output_bias = it.next().expect("length checked");
    }

    /// Adds one row's data-loss gradient into `grad`; returns its loss.
    fn accumulate(&self, z: &[f64], y: f64, grad: &mut [f64]) -> f64 {
        let (pre, act, logit) = self.forward(z);
        let p = math::sigmoid(logit);
        let (loss, d_logit) = match self.loss {
            MlpLoss::CrossEntropy => (math::logistic_loss(logit, y), p - y),
            MlpLoss::Quadratic => (0.5 * (p - y) * (p - y), (p - y) * p * (1.0 - p)),
        };
        let (d, h) = (self.inputs(), self.hidden());
        let hb = h * d;
        let ow = hb + h;
        for k in 0..h {
            grad[ow + k] += d_logit * act[k];
            let delta = d_logit * self.output_weights[k] * self.activation.derivative(pre[k], act[k]);
            if delta != 0.0 {
                let row = &mut grad[k * d..(k + 1) * d];
                for (g, v) in row.iter_mut().zip(z) {
                    *g += delta * v;
                }
                grad[hb + k] += delta;
            }
        }
        grad[ow + h] += d_logit;
        loss
    }

    fn penalty(&self) -> f64 {
        let weights = self.hidden_weights.iter().flatten().chain(&self.output_weights);
        weights.map(|w| self.l1 * w.abs() + 0.5 * self.l2 * w * w).sum()
    }

    /// Adds the weight-penalty gradient (biases are not penalized).
    fn penalty_gradient(&self, grad: &mut [f64], scale: f64) {
        let (d, h) = (self.inputs(), self.hidden());
        let mut add = |i: usize, w: f64| {
            let sign = if w > 0.0 {
                1.0
            } else if w < 0.0 {
                -1.0
            } else {
                0.0
            };
            grad[i] += scale * (self.l1 * sign + self.l2 * w);
        };
        for k in 0..h {
            for j in 0..d {
                add(k * d + j, self.hidden_weights[k][j]);
            }
        }
        for k in 0..h {
            add(h * d + h + k, self.output_weights[k]);
        }
    }

    /// Mean data loss plus the weight penalty, and its gradient in the
    /// order of [`Mlp::parameters`].
    pub fn loss_and_gradient(&self, rows: &[Vec<f64>], targets: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.parameter_count()];
        let mut loss = 0.0;
        for (z, &y) in rows.iter().zip(targets) {
            loss += self.accumulate(z, y, &mut grad);
        }
        let n = rows.len() as f64;
        for g in grad.iter_mut() {
            *g /= n;
        }
        self.penalty_gradient(&mut grad, 1.0);
        (loss / n + self.penalty(), grad)
    }

    /// Randomly initialized network.
    pub fn initialize(inputs: usize, p: &MlpParams, rng: &mut ChaCha8Rng) -> Mlp {
        let h = p.hidden_units;
        let limit = match p.activation {
            Activation::Relu => math::sqrt(6.0 / inputs as f64),
            Activation::Tanh => math::sqrt(6.0 / (inputs + h) as f64),
        };
        let out_limit = math::sqrt(6.0 / (h + 1) as f64);
        let hidden_weights = (0..h)
            .map(|_| (0..inputs).map(|_| rng.gen_range(-limit..limit)).collect())
            .collect();
        let output_weights = (0..h).map(|_| rng.gen_range(-out_limit..out_limit)).collect();
        Mlp {
            activation: p.activation,
            loss: p.loss,
            l1: p.l1,
            l2: p.l2,
            hidden_weights,
            hidden_bias: vec![0.0; h],
            output_weights,
            output_bias: 0.0,
            epoch_losses: Vec::new(),
        }
    }
}

/// Per-row SGD with momentum `adaptive_rate`, reshuffled every epoch.
pub(crate) fn fit(x: &[Vec<f64>], y: &[u8], p: &MlpParams, seed: u64) -> Result<Mlp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::initialize(x[0].len(), p, &mut rng);
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mut theta = net.parameters();
    let mut velocity = vec![0.0; theta.len()];
    let mut grad = vec![0.0; theta.len()];
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut losses = Vec::with_capacity(p.epochs);
    for _ in 0..p.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            grad.iter_mut().for_each(|g| *g = 0.0);
            net.accumulate(&x[i], targets[i], &mut grad);
            net.penalty_gradient(&mut grad, 1.0);
            for ((t, v), g) in theta.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = p.adaptive_rate * *v - p.learning_rate * g;
                *t += *v;
            }
            net.set_parameters(&theta);
        }
        losses.push(net.loss_and_gradient(x, &targets).0);
    }
    net.epoch_losses = losses;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::super::hyper::MlpParams;
    use super::*;

    fn params(activation: Activation, loss: MlpLoss) -> MlpParams {
        MlpParams {
            hidden_units: 6,
            activation,
            loss,
            epochs: 1,
            learning_rate: 0.003772,
            l1: 1e-5,
            l2: 1e-3,
            adaptive_rate: 0.2,
        }
    }

    /// Relative error of each analytic gradient entry against central
    /// differences of the loss.
    fn max_relative_error(net: &Mlp, rows: &[Vec<f64>], targets: &[f64]) -> f64 {
        let eps = 1e-5;
        let (_, analytic) = net.loss_and_gradient(rows, targets);
        let theta = net.parameters();
        let mut worst = 0.0f64;
        for k in 0..theta.len() {
            let mut plus = net.clone();
            let mut t = theta.clone();
            t[k] += eps;
            plus.set_parameters(&t);
            let mut minus = net.clone();
            t[k] -= 2.0 * eps;
            minus.set_parameters(&t);
            let numeric = (plus.loss_and_gradient(rows, targets).0 - minus.loss_and_gradient(rows, targets).0) / (2.0 * eps);
            let scale = analytic[k].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((analytic[k] - numeric).abs() / scale);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let rows = vec![
            vec![0.5, -1.2, 0.3],
            vec![-0.7, 0.4, 1.1],
            vec![1.3, 0.9, -0.6],
            vec![-1.1, -0.2, -1.4],
            vec![0.2, 1.5, 0.8],
        ];
        let targets = [1.0, 0.0, 1.0, 0.0, 1.0];
        for activation in [Activation::Relu, Activation::Tanh] {
            for loss in [MlpLoss::CrossEntropy, MlpLoss::Quadratic] {
                let mut rng = ChaCha8Rng::seed_from_u64(3);
                let net = Mlp::initialize(3, &params(activation, loss), &mut rng);
                let err = max_relative_error(&net, &rows, &targets);
                assert!(err < 1e-4, "{activation:?} {loss:?}: {err}");
            }
        }
    }

    #[test]
    fn parameters_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = Mlp::initialize(4, &params(Activation::Tanh, MlpLoss::CrossEntropy), &mut rng);
        let theta = net.parameters();
        assert_eq!(theta.len(), net.parameter_count());
        let shifted: Vec<f64> = theta.iter().map(|v| v + 1.0).collect();
        net.set_parameters(&shifted);
        assert_eq!(net.parameters(), shifted);
    }

    #[test]
    fn training_reduces_loss() {
        let data = super::super::tests::noisy_dataset(300, 3, 16);
        let st = super::super::Standardization::fit(&data.rows, 3);
        let x: Vec<Vec<f64>> = data.rows.iter().map(|r| st.apply(r)).collect();
        let p = MlpParams {
            epochs: 10,
            ..params(Activation::Relu, MlpLoss::CrossEntropy)
        };
        let net = fit(&x, &data.labels, &p, 1).unwrap();
        assert!(net.epoch_losses[9] < net.epoch_losses[0]);
    }
}
