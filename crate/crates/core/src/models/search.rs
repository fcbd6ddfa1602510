use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cross_validate, Algorithm, CvResult, Dataset, ModelSpec};
use crate::error::{Error, Result};

/// Candidate values per hyperparameter.
pub type SearchSpace = BTreeMap<String, Vec<String>>;

/// The published tuning grid of each algorithm, restricted to values this
/// crate implements.
pub fn default_search_space(algorithm: Algorithm) -> SearchSpace {
    let grid: &[(&str, &[&str])] = match algorithm {
        Algorithm::GaussianNb => &[("var_smoothing", &["1e-9"])],
        Algorithm::GlmLogistic => &[
            ("family", &["gaussian", "binomial"]),
            ("fit_intercept", &["true", "false"]),
            ("solver", &["irlsm", "lbfgs"]),
        ],
        Algorithm::DecisionTree => &[
            ("apply_pruning", &["true", "false"]),
            ("criterion", &["gain_ratio", "information_gain"]),
            ("max_depth", &["10", "20"]),
        ],
        Algorithm::RandomForest => &[
            ("criterion", &["gini", "entropy"]),
            ("max_depth", &["10", "20", "30", "40", "100"]),
            ("max_features", &["auto", "sqrt", "log2"]),
            ("min_samples_split", &["2", "4", "6"]),
            ("n_estimators", &["1", "2", "3"]),
        ],
        Algorithm::GradientBoostedTrees => &[
            ("criterion", &["friedman_mse", "mse"]),
            ("loss", &["deviance", "exponential"]),
            ("n_estimators", &["100", "200"]),
        ],
        Algorithm::Mlp => &[
            ("activation", &["rectifier", "tanh"]),
            ("adaptive_rate", &["0.1", "0.2", "0.3"]),
            ("epochs", &["10", "50"]),
            ("hidden_units", &["50", "100", "200"]),
            ("loss", &["quadratic", "cross_entropy"]),
        ],
    };
    grid.iter()
        .map(|(k, vs)| (k.to_string(), vs.iter().map(|v| v.to_string()).collect()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub spec: ModelSpec,
    /// The error message when training or validation failed.
    pub error: Option<String>,
    pub result: Option<CvResult>,
}

impl Trial {
    /// Mean F1, or -inf for a failed trial.
    pub fn score(&self) -> f64 {
        self.result.as_ref().map_or(f64::NEG_INFINITY, |r| r.mean.f1)
    }

    fn auc(&self) -> f64 {
        self.result
            .as_ref()
            .map(|r| r.mean.auc)
            .filter(|a| !a.is_nan())
            .unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: ModelSpec,
    pub best_result: CvResult,
    pub trials: Vec<Trial>,
}

/// Higher F1 first, then higher AUC, then the lexicographically smaller
/// canonical spec.
fn rank(a: &Trial, b: &Trial) -> Ordering {
    b.score()
        .total_cmp(&a.score())
        .then_with(|| b.auc().total_cmp(&a.auc()))
        .then_with(|| a.spec.canonical().cmp(&b.spec.canonical()))
}

/// Samples `budget` specs uniformly with replacement from the product of
/// `space`, overriding `base`, and cross-validates each one.
pub fn random_search(
    base: &ModelSpec,
    space: &SearchSpace,
    data: &Dataset,
    budget: usize,
    k: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if budget == 0 {
        return Err(Error::InvalidArgument("search budget must be at least 1".into()));
    }
    if space.is_empty() || space.values().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("search space has an empty dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut spec = base.clone();
        for (key, values) in space {
            let v = &values[rng.gen_range(0..values.len())];
            spec.set(key, v)?;
        }
        let outcome = cross_validate(&spec, data, k, true, seed);
        trials.push(match outcome {
            Ok(r) => Trial {
                spec,
                error: None,
                result: Some(r),
            },
            Err(e) => Trial {
                spec,
                error: Some(e.to_string()),
                result: None,
            },
        });
    }
    let best = trials
        .iter()
        .filter(|t| t.result.is_some())
        .min_by(|a, b| rank(a, b))
        .cloned()
        .ok_or_else(|| {
            let first = trials[0].error.clone().unwrap_or_default();
            Error::InvalidArgument(alloc::format!("every sampled spec failed; first error: {first}"))
        })?;
    Ok(SearchOutcome {
        best: best.spec,
        best_result: best.result.expect("filtered on success"),
        trials,
    })
}
