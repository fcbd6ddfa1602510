//! The defaults table, the declared key set per algorithm and value parsing.
//!
//! Every default can be overridden through [`ModelSpec::hyperparameters`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::forest::MaxFeatures;
use super::gbt::GbtLoss;
use super::glm::{GlmFamily, GlmSolver};
use super::mlp::{Activation, MlpLoss};
use super::tree::SplitCriterion;
use super::{Algorithm, ModelSpec};
use crate::error::{Error, Result};

/// Declared keys and their default values, per algorithm.
pub fn defaults(algorithm: Algorithm) -> &'static [(&'static str, &'static str)] {
    match algorithm {
        Algorithm::GaussianNb => &[("priors", "none"), ("var_smoothing", "1e-9")],
        Algorithm::GlmLogistic => &[
            ("family", "binomial"),
            ("fit_intercept", "true"),
            ("max_iter", "200"),
            ("solver", "irlsm"),
            ("tol", "1e-6"),
        ],
        Algorithm::DecisionTree => &[
            ("apply_pruning", "true"),
            ("confidence", "0.1"),
            ("criterion", "gain_ratio"),
            ("max_depth", "10"),
            ("min_samples_leaf", "5"),
            ("min_samples_split", "2"),
            ("minimal_gain", "0.05"),
        ],
        Algorithm::RandomForest => &[
            ("bootstrap", "true"),
            ("criterion", "gini"),
            ("max_depth", "20"),
            ("max_features", "sqrt"),
            ("min_samples_leaf", "5"),
            ("min_samples_split", "2"),
            ("n_estimators", "100"),
        ],
        Algorithm::GradientBoostedTrees => &[
            ("criterion", "friedman_mse"),
            ("learning_rate", "0.1"),
            ("loss", "deviance"),
            ("max_depth", "10"),
            ("min_samples_leaf", "1"),
            ("min_samples_split", "2"),
            ("n_estimators", "100"),
        ],
        Algorithm::Mlp => &[
            ("activation", "rectifier"),
            ("adaptive_rate", "0.2"),
            ("epochs", "10"),
            ("hidden_units", "100"),
            ("l1", "1e-5"),
            ("l2", "0"),
            ("learning_rate", "0.003772"),
            ("loss", "cross_entropy"),
        ],
    }
}

pub(crate) fn check_key(algorithm: Algorithm, key: &str) -> Result<()> {
    if defaults(algorithm).iter().any(|(k, _)| *k == key) {
        Ok(())
    } else {
        Err(Error::UnknownHyperparameter {
            algorithm: algorithm.as_str(),
            key: key.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbParams {
    pub var_smoothing: f64,
    /// Prior probability of the spammer class; empirical when `None`.
    pub spam_prior: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmParams {
    pub family: GlmFamily,
    pub fit_intercept: bool,
    pub solver: GlmSolver,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub criterion: SplitCriterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub apply_pruning: bool,
    pub confidence: f64,
    pub minimal_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub criterion: SplitCriterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub loss: GbtLoss,
    pub criterion: SplitCriterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden_units: usize,
    pub activation: Activation,
    pub loss: MlpLoss,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l1: f64,
    pub l2: f64,
    /// Momentum coefficient in `[0, 1)`.
    pub adaptive_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Resolved {
    GaussianNb(NbParams),
    Glm(GlmParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    Gbt(GbtParams),
    Mlp(MlpParams),
}

struct Values<'a> {
    spec: &'a ModelSpec,
}

impl Values<'_> {
    fn raw(&self, key: &str) -> &str {
        self.spec.hyperparameters.get(key).map(String::as_str).unwrap_or_else(|| {
            defaults(self.spec.algorithm)
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .expect("declared key")
        })
    }

    fn invalid(&self, key: &str, reason: &str) -> Error {
        Error::InvalidHyperparameter {
            key: key.to_string(),
            value: self.raw(key).to_string(),
            reason: reason.to_string(),
        }
    }

    fn float(&self, key: &str, min: f64, max: f64) -> Result<f64> {
        match self.raw(key).trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v >= min && v <= max => Ok(v),
            _ => Err(self.invalid(key, &alloc::format!("expected a number in [{min}, {max}]"))),
        }
    }

    fn count(&self, key: &str, min: usize) -> Result<usize> {
        match self.raw(key).trim().parse::<usize>() {
            Ok(v) if v >= min => Ok(v),
            _ => Err(self.invalid(key, &alloc::format!("expected an integer >= {min}"))),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key).trim().to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(self.invalid(key, "expected true or false")),
        }
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<T> {
        let raw = self.raw(key).trim().to_ascii_lowercase();
        options.iter().find(|(name, _)| *name == raw).map(|(_, v)| *v).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            self.invalid(key, &alloc::format!("expected one of {}", names.join(", ")))
        })
    }
}

pub(crate) fn resolve(spec: &ModelSpec) -> Result<Resolved> {
    for key in spec.hyperparameters.keys() {
        check_key(spec.algorithm, key)?;
    }
    let v = Values { spec };
    Ok(match spec.algorithm {
        Algorithm::GaussianNb => Resolved::GaussianNb(NbParams {
            var_smoothing: v.float("var_smoothing", 0.0, 1.0)?,
            spam_prior: match v.raw("priors").trim() {
                "none" => None,
                _ => Some(v.float("priors", 1e-12, 1.0 - 1e-12)?),
            },
        }),
        Algorithm::GlmLogistic => Resolved::Glm(GlmParams {
            family: v.choice("family", &[("binomial", GlmFamily::Binomial), ("gaussian", GlmFamily::Gaussian)])?,
            fit_intercept: v.flag("fit_intercept")?,
            solver: v.choice(
                "solver",
                &[("irlsm", GlmSolver::Irlsm), ("l-bfgs", GlmSolver::Lbfgs), ("lbfgs", GlmSolver::Lbfgs)],
            )?,
            max_iter: v.count("max_iter", 1)?,
            tol: v.float("tol", 0.0, 1.0)?,
        }),
        Algorithm::DecisionTree => Resolved::DecisionTree(TreeParams {
            criterion: v.choice(
                "criterion",
                &[
                    ("gain_ratio", SplitCriterion::GainRatio),
                    ("information_gain", SplitCriterion::Entropy),
                    ("entropy", SplitCriterion::Entropy),
                    ("gini", SplitCriterion::Gini),
                ],
            )?,
            max_depth: v.count("max_depth", 1)?,
            min_samples_split: v.count("min_samples_split", 2)?,
            min_samples_leaf: v.count("min_samples_leaf", 1)?,
            apply_pruning: v.flag("apply_pruning")?,
            confidence: v.float("confidence", 1e-6, 0.5)?,
            minimal_gain: v.float("minimal_gain", 0.0, f64::MAX)?,
        }),
        Algorithm::RandomForest => Resolved::RandomForest(ForestParams {
            n_estimators: v.count("n_estimators", 1)?,
            criterion: v.choice(
                "criterion",
                &[("gini", SplitCriterion::Gini), ("entropy", SplitCriterion::Entropy)],
            )?,
            max_depth: v.count("max_depth", 1)?,
            min_samples_split: v.count("min_samples_split", 2)?,
            min_samples_leaf: v.count("min_samples_leaf", 1)?,
            max_features: v.choice(
                "max_features",
                &[
                    ("sqrt", MaxFeatures::Sqrt),
                    ("auto", MaxFeatures::Sqrt),
                    ("log2", MaxFeatures::Log2),
                    ("all", MaxFeatures::All),
                ],
            )?,
            bootstrap: v.flag("bootstrap")?,
        }),
        Algorithm::GradientBoostedTrees => Resolved::Gbt(GbtParams {
            n_estimators: v.count("n_estimators", 1)?,
            learning_rate: v.float("learning_rate", 1e-9, 1.0)?,
            loss: v.choice("loss", &[("deviance", GbtLoss::Deviance), ("exponential", GbtLoss::Exponential)])?,
            criterion: v.choice(
                "criterion",
                &[("friedman_mse", SplitCriterion::FriedmanMse), ("mse", SplitCriterion::Mse)],
            )?,
            max_depth: v.count("max_depth", 1)?,
            min_samples_split: v.count("min_samples_split", 2)?,
            min_samples_leaf: v.count("min_samples_leaf", 1)?,
        }),
        Algorithm::Mlp => Resolved::Mlp(MlpParams {
            hidden_units: v.count("hidden_units", 1)?,
            activation: v.choice(
                "activation",
                &[
                    ("rectifier", Activation::Relu),
                    ("relu", Activation::Relu),
                    ("tanh", Activation::Tanh),
                ],
            )?,
            loss: v.choice(
                "loss",
                &[("cross_entropy", MlpLoss::CrossEntropy), ("quadratic", MlpLoss::Quadratic)],
            )?,
            epochs: v.count("epochs", 1)?,
            learning_rate: v.float("learning_rate", 1e-12, 10.0)?,
            l1: v.float("l1", 0.0, 1.0)?,
            l2: v.float("l2", 0.0, 1.0)?,
            adaptive_rate: v.float("adaptive_rate", 0.0, 0.99)?,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_for_every_algorithm() {
        for a in Algorithm::ALL {
            resolve(&ModelSpec::new(a, 0)).unwrap();
            let keys: Vec<&str> = defaults(a).iter().map(|(k, _)| *k).collect();
            let mut sorted = keys.clone();
            sorted.sort_unstable();
            assert_eq!(keys, sorted, "{a}");
        }
    }

    #[test]
    fn published_defaults() {
        let Resolved::Mlp(p) = resolve(&ModelSpec::new(Algorithm::Mlp, 0)).unwrap() else { panic!() };
        assert_eq!((p.hidden_units, p.epochs, p.learning_rate, p.l1), (100, 10, 0.003772, 1e-5));
        assert_eq!(p.loss, MlpLoss::CrossEntropy);
        let Resolved::RandomForest(p) = resolve(&ModelSpec::new(Algorithm::RandomForest, 0)).unwrap() else {
            panic!()
        };
        assert_eq!((p.n_estimators, p.max_depth, p.min_samples_leaf), (100, 20, 5));
        let Resolved::DecisionTree(p) = resolve(&ModelSpec::new(Algorithm::DecisionTree, 0)).unwrap() else {
            panic!()
        };
        assert_eq!((p.max_depth, p.min_samples_leaf, p.confidence, p.minimal_gain), (10, 5, 0.1, 0.05));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            (Algorithm::DecisionTree, "max_depth", "0"),
            (Algorithm::RandomForest, "max_features", "half"),
            (Algorithm::Mlp, "learning_rate", "-1"),
            (Algorithm::GlmLogistic, "fit_intercept", "maybe"),
            (Algorithm::GaussianNb, "priors", "1.5"),
        ];
        for (a, k, v) in bad {
            let spec = ModelSpec::new(a, 0).with(k, v).unwrap();
            assert!(matches!(resolve(&spec), Err(Error::InvalidHyperparameter { .. })), "{k}={v}");
        }
    }
}
