use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::par;
use crate::text::{SparseVector, TokenizerConfig, Vectorizer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicAlgorithm {
    MultinomialNb,
    LogisticRegression,
    SgdSoftmax,
}

impl TopicAlgorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            TopicAlgorithm::MultinomialNb => "multinomial_nb",
            TopicAlgorithm::LogisticRegression => "logistic_regression",
            TopicAlgorithm::SgdSoftmax => "sgd_softmax",
        }
    }
}

impl fmt::Display for TopicAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopicAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multinomial_nb" | "mnb" => Ok(TopicAlgorithm::MultinomialNb),
            "logistic_regression" | "lr" => Ok(TopicAlgorithm::LogisticRegression),
            "sgd_softmax" | "sgd" => Ok(TopicAlgorithm::SgdSoftmax),
            _ => Err(Error::UnknownName {
                kind: "topic algorithm",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningSchedule {
    Constant,
    /// `eta0 / (1 + eta0 * l2 * t)` with `t` counting mini-batches.
    InverseScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicHyperparams {
    /// Additive (Laplace/Lidstone) smoothing for multinomial NB.
    pub alpha: f64,
    /// L2 penalty strength for the two discriminative models.
    pub l2: f64,
    pub learning_rate: f64,
    pub schedule: LearningSchedule,
    pub epochs: usize,
    pub batch_size: usize,
    /// Full-batch iterations for the one-vs-rest logistic fits.
    pub max_iter: usize,
    pub seed: u64,
    pub tokenizer: TokenizerConfig,
}

impl Default for TopicHyperparams {
    fn default() -> Self {
        TopicHyperparams {
            alpha: 0.01,
            l2: 1e-5,
            learning_rate: 1.0,
            schedule: LearningSchedule::InverseScaling,
            epochs: 15,
            batch_size: 16,
            max_iter: 100,
            seed: 0,
            tokenizer: TokenizerConfig::default(),
        }
    }
}

/// A fitted newsgroup classifier. Class scores are `bias[c] + weights[c]·x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub algorithm: TopicAlgorithm,
    pub vectorizer: Vectorizer,
    /// Sorted class labels.
    pub classes: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub training_accuracy: f64,
    /// Mean regularized training loss after each epoch (SGD only).
    #[serde(default)]
    pub epoch_losses: Vec<f64>,
}

/// Top class of a newsgroup prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPrediction {
    pub label: String,
    pub score: f64,
}

struct Prepared {
    vectors: Vec<SparseVector>,
    targets: Vec<usize>,
    classes: Vec<String>,
    vectorizer: Vectorizer,
}

fn prepare(docs: &[LabeledDocument], tokenizer: &TokenizerConfig) -> Result<Prepared> {
    tokenizer.validate()?;
    let tokenized: Vec<(usize, Vec<String>)> = par::map_indexed(docs.len(), |i| {
        (i, crate::text::tokenize(&docs[i].text, tokenizer))
    })
    .into_iter()
    .filter(|(_, t)| !t.is_empty())
    .collect();
    if tokenized.is_empty() {
        return Err(Error::NoDocuments);
    }
    let classes: Vec<String> = tokenized
        .iter()
        .map(|(i, _)| docs[*i].label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let token_lists: Vec<Vec<String>> = tokenized.iter().map(|(_, t)| t.clone()).collect();
    let vectorizer = Vectorizer::fit(&token_lists, tokenizer.clone())?;
    let vectors = par::map_indexed(token_lists.len(), |i| vectorizer.transform(&token_lists[i]));
    let targets = tokenized
        .iter()
        .map(|(i, _)| classes.binary_search(&docs[*i].label).expect("collected above"))
        .collect();
    Ok(Prepared {
        vectors,
        targets,
        classes,
        vectorizer,
    })
}

/// Trains a newsgroup classifier over TF-IDF vectors.
///
/// Documents that tokenize to nothing are skipped.
pub fn train_topic_classifier(
    docs: &[LabeledDocument],
    algorithm: TopicAlgorithm,
    hp: &TopicHyperparams,
) -> Result<TopicModel> {
    if hp.alpha < 0.0 || hp.l2 < 0.0 || hp.learning_rate <= 0.0 || hp.batch_size == 0 {
        return Err(Error::InvalidArgument("topic hyperparameters out of range".into()));
    }
    let data = prepare(docs, &hp.tokenizer)?;
    let n_classes = data.classes.len();
    let dim = data.vectorizer.len();
    let mut epoch_losses = Vec::new();
    let (weights, bias) = match algorithm {
        TopicAlgorithm::MultinomialNb => fit_multinomial_nb(&data, hp.alpha),
        TopicAlgorithm::LogisticRegression => fit_one_vs_rest(&data, hp),
        TopicAlgorithm::SgdSoftmax => fit_sgd_softmax(&data, hp, &mut epoch_losses),
    };
    debug_assert_eq!(weights.len(), n_classes);
    debug_assert!(weights.iter().all(|w| w.len() == dim));
    let mut model = TopicModel {
        algorithm,
        vectorizer: data.vectorizer,
        classes: data.classes,
        weights,
        bias,
        training_accuracy: 0.0,
        epoch_losses,
    };
    let correct = data
        .vectors
        .iter()
        .zip(&data.targets)
        .filter(|(x, &y)| model.argmax(&model.probabilities(x)) == y)
        .count();
    model.training_accuracy = correct as f64 / data.vectors.len() as f64;
    Ok(model)
}

fn fit_multinomial_nb(data: &Prepared, alpha: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let c = data.classes.len();
    let v = data.vectorizer.len();
    let mut mass = vec![vec![0.0; v]; c];
    let mut counts = vec![0usize; c];
    for (x, &y) in data.vectors.iter().zip(&data.targets) {
        counts[y] += 1;
        for (j, value) in x.iter() {
            mass[y][j] += value;
        }
    }
    let n = data.vectors.len() as f64;
    let bias = counts.iter().map(|&k| math::ln(k as f64 / n)).collect();
    let weights = mass
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum::<f64>() + alpha * v as f64;
            row.into_iter().map(|m| math::ln((m + alpha) / total)).collect()
        })
        .collect();
    (weights, bias)
}

/// One binary L2 logistic fit per class by accelerated full-batch gradient
/// descent. Feature vectors have unit norm, so `1 / (0.25 + l2)` is a safe
/// step.
fn fit_one_vs_rest(data: &Prepared, hp: &TopicHyperparams) -> (Vec<Vec<f64>>, Vec<f64>) {
    let v = data.vectorizer.len();
    let n = data.vectors.len() as f64;
    let step = 1.0 / (0.25 + hp.l2);
    let fits = par::map_indexed(data.classes.len(), |class| {
        let target: Vec<f64> = data.targets.iter().map(|&y| f64::from(u8::from(y == class))).collect();
        let mut w = vec![0.0; v];
        let mut b = 0.0;
        let mut w_prev = w.clone();
        let mut b_prev = b;
        let mut momentum = 1.0f64;
        for _ in 0..hp.max_iter {
            let next_momentum = (1.0 + math::sqrt(1.0 + 4.0 * momentum * momentum)) / 2.0;
            let beta = (momentum - 1.0) / next_momentum;
            let look_w: Vec<f64> = w.iter().zip(&w_prev).map(|(a, p)| a + beta * (a - p)).collect();
            let look_b = b + beta * (b - b_prev);
            let mut grad = vec![0.0; v];
            let mut grad_b = 0.0;
            for (x, t) in data.vectors.iter().zip(&target) {
                let g = math::sigmoid(look_b + x.dot(&look_w)) - t;
                grad_b += g;
                for (j, value) in x.iter() {
                    grad[j] += g * value;
                }
            }
            w_prev = core::mem::replace(
                &mut w,
                look_w
                    .iter()
                    .zip(&grad)
                    .map(|(lw, g)| lw - step * (g / n + hp.l2 * lw))
                    .collect(),
            );
            b_prev = core::mem::replace(&mut b, look_b - step * grad_b / n);
            momentum = next_momentum;
        }
        (w, b)
    });
    fits.into_iter().unzip()
}

fn softmax_loss(data: &Prepared, weights: &[Vec<f64>], bias: &[f64], l2: f64) -> f64 {
    let mut total = 0.0;
    let mut scores = vec![0.0; bias.len()];
    for (x, &y) in data.vectors.iter().zip(&data.targets) {
        for (c, s) in scores.iter_mut().enumerate() {
            *s = bias[c] + x.dot(&weights[c]);
        }
        total += math::log_sum_exp(&scores) - scores[y];
    }
    let penalty: f64 = weights.iter().flatten().map(|w| w * w).sum();
    total / data.vectors.len() as f64 + 0.5 * l2 * penalty
}

/// Softmax regression by mini-batch SGD on mean cross-entropy plus
/// `l2 / 2 * ||W||²`. Weights are stored as `scale * raw` so the L2 decay
/// costs O(1) per batch.
fn fit_sgd_softmax(
    data: &Prepared,
    hp: &TopicHyperparams,
    epoch_losses: &mut Vec<f64>,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let c = data.classes.len();
    let v = data.vectorizer.len();
    let mut raw = vec![vec![0.0; v]; c];
    let mut scale = 1.0f64;
    let mut bias = vec![0.0; c];
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut order: Vec<usize> = (0..data.vectors.len()).collect();
    let mut step_count = 0u64;
    let mut scores = vec![0.0; c];
    let mut pending: Vec<(usize, Vec<f64>)> = Vec::with_capacity(hp.batch_size);

    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            let lr = match hp.schedule {
                LearningSchedule::Constant => hp.learning_rate,
                LearningSchedule::InverseScaling => {
                    hp.learning_rate / (1.0 + hp.learning_rate * hp.l2 * step_count as f64)
                }
            };
            step_count += 1;
            pending.clear();
            for &i in batch {
                let x = &data.vectors[i];
                for (k, s) in scores.iter_mut().enumerate() {
                    *s = bias[k] + scale * x.dot(&raw[k]);
                }
                math::softmax(&mut scores);
                let mut g = scores.clone();
                g[data.targets[i]] -= 1.0;
                pending.push((i, g));
            }
            let m = batch.len() as f64;
            scale *= 1.0 - lr * hp.l2;
            for (i, g) in &pending {
                let x = &data.vectors[*i];
                for k in 0..c {
                    if g[k] == 0.0 {
                        continue;
                    }
                    let coef = lr * g[k] / m;
                    bias[k] -= coef;
                    let raw_coef = coef / scale;
                    for (j, value) in x.iter() {
                        raw[k][j] -= raw_coef * value;
                    }
                }
            }
            if scale < 1e-6 {
                for row in &mut raw {
                    for w in row.iter_mut() {
                        *w *= scale;
                    }
                }
                scale = 1.0;
            }
        }
        let current: Vec<Vec<f64>> = raw.iter().map(|row| row.iter().map(|w| w * scale).collect()).collect();
        epoch_losses.push(softmax_loss(data, &current, &bias, hp.l2));
    }
    let weights = raw
        .into_iter()
        .map(|row| row.into_iter().map(|w| w * scale).collect())
        .collect();
    (weights, bias)
}

impl TopicModel {
    /// Class probabilities, in `classes` order, summing to one.
    pub fn probabilities(&self, x: &SparseVector) -> Vec<f64> {
        let mut scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + x.dot(w))
            .collect();
        match self.algorithm {
            TopicAlgorithm::LogisticRegression => {
                for s in scores.iter_mut() {
                    *s = math::sigmoid(*s);
                }
                let total: f64 = scores.iter().sum();
                for s in scores.iter_mut() {
                    *s /= total;
                }
            }
            _ => math::softmax(&mut scores),
        }
        scores
    }

    /// Index of the largest probability; the earliest (lexicographically
    /// smallest) class wins ties.
    fn argmax(&self, probs: &[f64]) -> usize {
        let mut best = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        best
    }

    /// Top newsgroup for a text, or `None` when no in-vocabulary token
    /// survives tokenization.
    pub fn classify_text(&self, text: &str) -> Option<TopicPrediction> {
        let x = self.vectorizer.transform_text(text);
        if x.is_zero() {
            return None;
        }
        let probs = self.probabilities(&x);
        let best = self.argmax(&probs);
        Some(TopicPrediction {
            label: self.classes[best].clone(),
            score: probs[best].clamp(0.0, 1.0),
        })
    }

    /// Fraction of documents whose label is predicted. Documents without
    /// signal count as misses.
    pub fn accuracy(&self, docs: &[LabeledDocument]) -> f64 {
        if docs.is_empty() {
            return 0.0;
        }
        let hits = par::map_indexed(docs.len(), |i| {
            self.classify_text(&docs[i].text)
                .is_some_and(|p| p.label == docs[i].label)
        });
        hits.iter().filter(|h| **h).count() as f64 / docs.len() as f64
    }
}
