//! Six binary classifiers over feature rows, k-fold cross-validation and
//! random hyperparameter search.
//!
//! Every model standardizes its inputs with the per-column mean and
//! population standard deviation captured at fit time. Training sorts the
//! rows into a canonical order first, so a fit does not depend on the order
//! rows arrive in.

mod cv;
mod forest;
mod gbt;
mod glm;
pub mod hyper;
mod mlp;
mod naive_bayes;
mod search;
mod tree;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector, FEATURE_NAMES};
use crate::math;

pub use cv::{cross_val_predict, cross_validate, fold_assignment, train_test_split, CvResult, FoldMetrics, MetricSummary};
pub use forest::RandomForest;
pub use gbt::{GbtLoss, GradientBoosting};
pub use glm::{Glm, GlmFamily, GlmSolver};
pub use mlp::{Activation, Mlp, MlpLoss};
pub use naive_bayes::GaussianNb;
pub use search::{default_search_space, random_search, SearchOutcome, SearchSpace, Trial};
pub use tree::{DecisionTree, Node, SplitCriterion, Tree};

/// Version written into every serialized model.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    GaussianNb,
    GlmLogistic,
    DecisionTree,
    RandomForest,
    GradientBoostedTrees,
    Mlp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::GaussianNb,
        Algorithm::GlmLogistic,
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::GradientBoostedTrees,
        Algorithm::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::GaussianNb => "gaussian_nb",
            Algorithm::GlmLogistic => "glm_logistic",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::RandomForest => "random_forest",
            Algorithm::GradientBoostedTrees => "gradient_boosted_trees",
            Algorithm::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "algorithm",
                value: s.to_string(),
            })
    }
}

/// An algorithm, its hyperparameter overrides and the seed behind every
/// stochastic choice. Keys absent from `hyperparameters` take the defaults
/// in [`hyper`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    pub hyperparameters: BTreeMap<String, String>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        ModelSpec {
            algorithm,
            hyperparameters: BTreeMap::new(),
            seed,
        }
    }

    /// Adds an override after checking the key belongs to the algorithm.
    pub fn with(mut self, key: &str, value: &str) -> Result<Self> {
        self.set(key, value)?;
        Ok(self)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        hyper::check_key(self.algorithm, key)?;
        self.hyperparameters.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Parses every hyperparameter without fitting anything.
    pub fn validate(&self) -> Result<()> {
        hyper::resolve(self).map(|_| ())
    }

    /// Stable one-line form, `algorithm{k=v,...}#seed`.
    pub fn canonical(&self) -> String {
        let mut out = String::from(self.algorithm.as_str());
        out.push('{');
        for (i, (k, v)) in self.hyperparameters.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(k);
            out.push('=');
            out.push_str(v);
        }
        out.push('}');
        out.push('#');
        out.push_str(&self.seed.to_string());
        out
    }
}

/// Labeled rows ready for fitting. Labels are 1 for spammer, 0 otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Dataset {
    /// Checks widths, finiteness and that labels are binary.
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        for (r, row) in rows.iter().enumerate() {
            check_row(row, &feature_names, r)?;
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidArgument(alloc::format!("label {bad} is not 0 or 1")));
        }
        Ok(Dataset {
            feature_names,
            rows,
            labels,
        })
    }

    /// Rows `x1..x18` of a labeled feature matrix.
    pub fn from_matrix(matrix: &FeatureMatrix) -> Result<Self> {
        let labels = matrix.labels()?;
        let rows = matrix.rows.iter().map(|r| r.features.values.to_vec()).collect();
        Dataset::new(FEATURE_NAMES.iter().map(|n| n.to_string()).collect(), rows, labels)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// `(negatives, positives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (self.len() - pos, pos)
    }

    fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&self.rows[a], &self.rows[b]);
            ra.iter()
                .zip(rb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
                .then(self.labels[a].cmp(&self.labels[b]))
        });
        order
    }
}

fn check_row(row: &[f64], names: &[String], index: usize) -> Result<()> {
    if row.len() != names.len() {
        return Err(Error::WidthMismatch {
            expected: names.len(),
            got: row.len(),
        });
    }
    if let Some(c) = row.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: index, column: names[c].clone() });
    }
    Ok(())
}

/// Per-column `(mean, std)`; a zero std maps the column to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn fit(rows: &[Vec<f64>], width: usize) -> Self {
        let mut mean = Vec::with_capacity(width);
        let mut std = Vec::with_capacity(width);
        for j in 0..width {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            mean.push(math::mean(&col));
            std.push(math::std_dev(&col));
        }
        Standardization { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }
}

/// Learned state of one of the six algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    GaussianNb(GaussianNb),
    GlmLogistic(Glm),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    GradientBoostedTrees(GradientBoosting),
    Mlp(Mlp),
}

impl ModelParams {
    fn predict(&self, z: &[f64]) -> f64 {
        match self {
            ModelParams::GaussianNb(m) => m.predict_proba(z),
            ModelParams::GlmLogistic(m) => m.predict_proba(z),
            ModelParams::DecisionTree(m) => m.predict_proba(z),
            ModelParams::RandomForest(m) => m.predict_proba(z),
            ModelParams::GradientBoostedTrees(m) => m.predict_proba(z),
            ModelParams::Mlp(m) => m.predict_proba(z),
        }
    }

    fn importance(&self) -> Vec<f64> {
        match self {
            ModelParams::GaussianNb(m) => m.importance(),
            ModelParams::GlmLogistic(m) => m.importance(),
            ModelParams::DecisionTree(m) => m.importance(),
            ModelParams::RandomForest(m) => m.importance(),
            ModelParams::GradientBoostedTrees(m) => m.importance(),
            ModelParams::Mlp(m) => m.importance(),
        }
    }
}

/// A fitted, immutable model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model_format_version: u32,
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub standardization: Standardization,
    pub params: ModelParams,
}

impl TrainedModel {
    /// Probability of the spammer class, in `[0, 1]`.
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        check_row(row, &self.feature_names, 0)?;
        let z = self.standardization.apply(row);
        Ok(self.params.predict(&z).clamp(0.0, 1.0))
    }

    pub fn predict_proba_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| {
                check_row(r, &self.feature_names, i)?;
                Ok(self.params.predict(&self.standardization.apply(r)).clamp(0.0, 1.0))
            })
            .collect()
    }

    pub fn predict_features(&self, fv: &FeatureVector) -> Result<f64> {
        self.predict_proba(&fv.values)
    }

    /// `(feature, weight)` sorted by weight descending, then name.
    pub fn feature_importance(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.params.importance())
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

/// Importances that sum to 1, or all zero when nothing was learned.
pub(crate) fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    }
    v
}

/// Fits `spec` on `data`.
pub fn train(spec: &ModelSpec, data: &Dataset) -> Result<TrainedModel> {
    let resolved = hyper::resolve(spec)?;
    for (r, row) in data.rows.iter().enumerate() {
        check_row(row, &data.feature_names, r)?;
    }
    let (neg, pos) = data.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::SingleClass);
    }
    let canonical = data.subset(&data.canonical_order());
    let standardization = Standardization::fit(&canonical.rows, canonical.width());
    let x: Vec<Vec<f64>> = canonical.rows.iter().map(|r| standardization.apply(r)).collect();
    let y = &canonical.labels;
    let params = match resolved {
        hyper::Resolved::GaussianNb(p) => ModelParams::GaussianNb(naive_bayes::fit(&x, y, &p)?),
        hyper::Resolved::Glm(p) => ModelParams::GlmLogistic(glm::fit(&x, y, &p)?),
        hyper::Resolved::DecisionTree(p) => ModelParams::DecisionTree(tree::fit(&x, y, &p, spec.seed)?),
        hyper::Resolved::RandomForest(p) => ModelParams::RandomForest(forest::fit(&x, y, &p, spec.seed)?),
        hyper::Resolved::Gbt(p) => ModelParams::GradientBoostedTrees(gbt::fit(&x, y, &p)?),
        hyper::Resolved::Mlp(p) => ModelParams::Mlp(mlp::fit(&x, y, &p, spec.seed)?),
    };
    Ok(TrainedModel {
        model_format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        feature_names: canonical.feature_names,
        standardization,
        params,
    })
}
