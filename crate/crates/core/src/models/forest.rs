use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hyper::ForestParams;
use super::normalized;
use super::tree::{grow, presort, GrowConfig, Tree};
use crate::error::Result;
use crate::{math, par};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    pub fn count(self, width: usize) -> usize {
        let w = width as f64;
        let k = match self {
            MaxFeatures::Sqrt => math::sqrt(w) as usize,
            MaxFeatures::Log2 => math::log2(w) as usize,
            MaxFeatures::All => width,
        };
        k.clamp(1, width.max(1))
    }
}

/// Bagged trees; tree `i` is grown from the seed `seed + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    pub width: usize,
}

impl RandomForest {
    /// Fraction of trees voting spammer.
    pub fn predict_proba(&self, z: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(z) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }

    /// Mean of the per-tree normalized importances.
    pub fn importance(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.width];
        for t in &self.trees {
            for (acc, v) in total.iter_mut().zip(normalized(t.raw_importance(self.width))) {
                *acc += v;
            }
        }
        normalized(total)
    }
}

pub(crate) fn fit(x: &[Vec<f64>], y: &[u8], p: &ForestParams, seed: u64) -> Result<RandomForest> {
    let n = y.len();
    let width = x[0].len();
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let sorted = presort(x);
    let cfg = GrowConfig {
        criterion: p.criterion,
        max_depth: p.max_depth,
        min_samples_split: p.min_samples_split,
        min_samples_leaf: p.min_samples_leaf,
        min_gain: 0.0,
        max_features: Some(p.max_features.count(width)),
    };
    let trees = par::map_indexed(p.n_estimators, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let weights = if p.bootstrap {
            let mut w = vec![0.0; n];
            for _ in 0..n {
                w[rng.gen_range(0..n)] += 1.0;
            }
            w
        } else {
            vec![1.0; n]
        };
        grow(x, &targets, &weights, &sorted, &cfg, Some(&mut rng))
    });
    Ok(RandomForest { trees, width })
}

#[cfg(test)]
mod tests {
    use super::super::tests::noisy_dataset;
    use super::super::{train, Algorithm, ModelParams, ModelSpec};
    use super::*;

    #[test]
    fn feature_counts() {
        assert_eq!(MaxFeatures::Sqrt.count(18), 4);
        assert_eq!(MaxFeatures::Log2.count(18), 4);
        assert_eq!(MaxFeatures::All.count(18), 18);
        assert_eq!(MaxFeatures::Log2.count(1), 1);
    }

    #[test]
    fn single_unbagged_tree_reproduces_decision_tree() {
        let data = noisy_dataset(300, 5, 12);
        let rf = ModelSpec::new(Algorithm::RandomForest, 5)
            .with("n_estimators", "1")
            .unwrap()
            .with("bootstrap", "false")
            .unwrap()
            .with("max_features", "all")
            .unwrap()
            .with("max_depth", "10")
            .unwrap();
        let dt = ModelSpec::new(Algorithm::DecisionTree, 5)
            .with("criterion", "gini")
            .unwrap()
            .with("apply_pruning", "false")
            .unwrap()
            .with("minimal_gain", "0")
            .unwrap();
        let a = train(&rf, &data).unwrap();
        let b = train(&dt, &data).unwrap();
        let (ModelParams::RandomForest(f), ModelParams::DecisionTree(t)) = (&a.params, &b.params) else {
            unreachable!()
        };
        assert_eq!(f.trees[0], t.tree);
        for row in &data.rows {
            let pf = a.predict_proba(row).unwrap();
            let pt = b.predict_proba(row).unwrap();
            assert_eq!(pf >= 0.5, pt >= 0.5);
        }
    }

    #[test]
    fn unanimous_trees_give_certainty() {
        let t = Tree {
            nodes: vec![super::super::tree::Node {
                value: 1.0,
                weight: 3.0,
                target_sum: 3.0,
                split: None,
            }],
        };
        let f = RandomForest {
            trees: vec![t.clone(), t.clone(), t],
            width: 2,
        };
        assert_eq!(f.predict_proba(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn seeds_change_the_forest() {
        let data = noisy_dataset(200, 4, 13);
        let spec = ModelSpec::new(Algorithm::RandomForest, 1).with("n_estimators", "5").unwrap();
        let a = train(&spec, &data).unwrap();
        let b = train(&spec, &data).unwrap();
        assert_eq!(a, b);
        let mut other = spec.clone();
        other.seed = 2;
        assert_ne!(a, train(&other, &data).unwrap());
    }
}
