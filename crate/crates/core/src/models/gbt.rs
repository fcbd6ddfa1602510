use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::hyper::GbtParams;
use super::normalized;
use super::tree::{grow, presort, GrowConfig, Tree};
use crate::error::Result;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GbtLoss {
    /// Binomial deviance (logistic loss).
    Deviance,
    /// AdaBoost's exponential loss.
    Exponential,
}

impl GbtLoss {
    /// Per-row loss at additive score `f` for label `y`.
    fn loss(self, f: f64, y: f64) -> f64 {
        match self {
            GbtLoss::Deviance => math::logistic_loss(f, y),
            GbtLoss::Exponential => math::exp(-(2.0 * y - 1.0) * f),
        }
    }
}

/// Additive score `init + sum(tree outputs)`, mapped through a sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub loss: GbtLoss,
    pub init: f64,
    /// Leaf values already include the learning rate.
    pub trees: Vec<Tree>,
    pub width: usize,
    /// Mean training loss before boosting and after each stage.
    pub train_loss: Vec<f64>,
}

impl GradientBoosting {
    pub fn decision(&self, z: &[f64]) -> f64 {
        self.init + self.trees.iter().map(|t| t.predict(z)).sum::<f64>()
    }

    pub fn predict_proba(&self, z: &[f64]) -> f64 {
        let f = self.decision(z);
        match self.loss {
            GbtLoss::Deviance => math::sigmoid(f),
            GbtLoss::Exponential => math::sigmoid(2.0 * f),
        }
    }

    pub fn importance(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.width];
        for t in &self.trees {
            for (acc, v) in total.iter_mut().zip(t.raw_importance(self.width)) {
                *acc += v;
            }
        }
        normalized(total)
    }
}

fn mean_loss(loss: GbtLoss, f: &[f64], y: &[f64]) -> f64 {
    f.iter().zip(y).map(|(a, b)| loss.loss(*a, *b)).sum::<f64>() / y.len() as f64
}

pub(crate) fn fit(x: &[Vec<f64>], y: &[u8], p: &GbtParams) -> Result<GradientBoosting> {
    let n = y.len();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let prior = yf.iter().sum::<f64>() / n as f64;
    let log_odds = math::ln(prior / (1.0 - prior));
    let init = match p.loss {
        GbtLoss::Deviance => log_odds,
        GbtLoss::Exponential => 0.5 * log_odds,
    };
    let sorted = presort(x);
    let cfg = GrowConfig {
        criterion: p.criterion,
        max_depth: p.max_depth,
        min_samples_split: p.min_samples_split,
        min_samples_leaf: p.min_samples_leaf,
        min_gain: 0.0,
        max_features: None,
    };
    let ones = vec![1.0; n];
    let mut f = vec![init; n];
    let mut trees = Vec::with_capacity(p.n_estimators);
    let mut train_loss = vec![mean_loss(p.loss, &f, &yf)];

    for _ in 0..p.n_estimators {
        // negative gradient of the loss in f
        let residual: Vec<f64> = match p.loss {
            GbtLoss::Deviance => f.iter().zip(&yf).map(|(fi, t)| t - math::sigmoid(*fi)).collect(),
            GbtLoss::Exponential => f
                .iter()
                .zip(&yf)
                .map(|(fi, t)| {
                    let s = 2.0 * t - 1.0;
                    s * math::exp(-s * fi)
                })
                .collect(),
        };
        let mut tree = grow(x, &residual, &ones, &sorted, &cfg, None);
        let leaf_of: Vec<usize> = x.iter().map(|r| tree.leaf_index(r)).collect();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
        for (i, &leaf) in leaf_of.iter().enumerate() {
            members[leaf].push(i);
        }
        for (leaf, rows) in members.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            // one Newton step on the leaf's rows
            let (num, den) = rows.iter().fold((0.0, 0.0), |(a, b), &i| match p.loss {
                GbtLoss::Deviance => {
                    let q = math::sigmoid(f[i]);
                    (a + yf[i] - q, b + q * (1.0 - q))
                }
                GbtLoss::Exponential => {
                    let s = 2.0 * yf[i] - 1.0;
                    let e = math::exp(-s * f[i]);
                    (a + s * e, b + e)
                }
            });
            let mut step = p.learning_rate * num / den.max(1e-12);
            let before: f64 = rows.iter().map(|&i| p.loss.loss(f[i], yf[i])).sum();
            // halve until the leaf's loss does not increase
            let mut tries = 0;
            while tries < 60 {
                let after: f64 = rows.iter().map(|&i| p.loss.loss(f[i] + step, yf[i])).sum();
                if after <= before {
                    break;
                }
                step *= 0.5;
                tries += 1;
            }
            if tries == 60 {
                step = 0.0;
            }
            tree.nodes[leaf].value = step;
        }
        let previous = *train_loss.last().expect("initial loss");
        // per-leaf sums can disagree with the full mean by rounding
        let mut shrink = 1.0;
        let (next, value) = loop {
            let cand: Vec<f64> = f.iter().zip(&leaf_of).map(|(fi, &l)| fi + shrink * tree.nodes[l].value).collect();
            let value = mean_loss(p.loss, &cand, &yf);
            if value <= previous || shrink == 0.0 {
                break (cand, value);
            }
            shrink = if shrink < 1e-12 { 0.0 } else { shrink * 0.5 };
        };
        if shrink != 1.0 {
            for node in tree.nodes.iter_mut().filter(|n| n.split.is_none()) {
                node.value *= shrink;
            }
        }
        f = next;
        train_loss.push(value);
        trees.push(tree);
    }
    Ok(GradientBoosting {
        loss: p.loss,
        init,
        trees,
        width: x[0].len(),
        train_loss,
    })
}
