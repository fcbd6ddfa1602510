//! Weighted CART-style tree induction shared by the decision tree, the
//! forest and boosting.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hyper::TreeParams;
use super::normalized;
use crate::error::Result;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gini,
    /// Information gain.
    Entropy,
    /// Information gain over split information.
    GainRatio,
    Mse,
    FriedmanMse,
}

impl SplitCriterion {
    fn is_regression(self) -> bool {
        matches!(self, SplitCriterion::Mse | SplitCriterion::FriedmanMse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Rows with `value <= threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Impurity decrease times the node's sample weight.
    pub weighted_decrease: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Prediction when the row ends here: the positive fraction for
    /// classification, the assigned output for regression.
    pub value: f64,
    pub weight: f64,
    /// Weighted sum of targets.
    pub target_sum: f64,
    pub split: Option<Split>,
}

/// Binary tree stored flat; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        while let Some(s) = &self.nodes[i].split {
            i = if row[s.feature] <= s.threshold { s.left } else { s.right };
        }
        i
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf_index(row)].value
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i].split {
                None => 0,
                Some(s) => 1 + go(t, s.left).max(go(t, s.right)),
            }
        }
        go(self, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    /// Raw weighted impurity decrease per feature.
    pub(crate) fn raw_importance(&self, width: usize) -> Vec<f64> {
        let mut imp = vec![0.0; width];
        for s in self.nodes.iter().filter_map(|n| n.split.as_ref()) {
            imp[s.feature] += s.weighted_decrease;
        }
        imp
    }
}

pub(crate) struct GrowConfig {
    pub criterion: SplitCriterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub min_gain: f64,
    /// Features examined per node; all when `None`.
    pub max_features: Option<usize>,
}

/// Row indices sorted by each feature.
pub(crate) fn presort(x: &[Vec<f64>]) -> Vec<Vec<u32>> {
    let d = x.first().map_or(0, Vec::len);
    (0..d)
        .map(|j| {
            let mut idx: Vec<u32> = (0..x.len() as u32).collect();
            idx.sort_by(|&a, &b| x[a as usize][j].total_cmp(&x[b as usize][j]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

#[derive(Clone, Copy, Default)]
struct Stats {
    w: f64,
    wy: f64,
    wyy: f64,
}

impl Stats {
    fn add(&mut self, w: f64, y: f64) {
        self.w += w;
        self.wy += w * y;
        self.wyy += w * y * y;
    }

    fn minus(&self, o: &Stats) -> Stats {
        Stats {
            w: self.w - o.w,
            wy: self.wy - o.wy,
            wyy: self.wyy - o.wyy,
        }
    }

    fn mean(&self) -> f64 {
        self.wy / self.w
    }

    fn impurity(&self, c: SplitCriterion) -> f64 {
        let m = self.mean();
        match c {
            SplitCriterion::Gini => 2.0 * m * (1.0 - m),
            SplitCriterion::Entropy | SplitCriterion::GainRatio => binary_entropy(m),
            SplitCriterion::Mse | SplitCriterion::FriedmanMse => (self.wyy / self.w - m * m).max(0.0),
        }
    }
}

fn binary_entropy(p: f64) -> f64 {
    let h = |q: f64| if q <= 0.0 { 0.0 } else { -q * math::log2(q) };
    h(p) + h(1.0 - p)
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
    decrease: f64,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    targets: &'a [f64],
    weights: &'a [f64],
    cfg: &'a GrowConfig,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

impl Builder<'_> {
    fn features(&mut self, d: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (0..d).collect();
        match (self.cfg.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                for i in 0..m {
                    let j = rng.gen_range(i..d);
                    all.swap(i, j);
                }
                all.truncate(m);
                all.sort_unstable();
                all
            }
            _ => all,
        }
    }

    fn best_split(&self, lists: &[Vec<u32>], features: &[usize], parent: &Stats) -> Option<Candidate> {
        let c = self.cfg.criterion;
        let parent_imp = parent.impurity(c);
        let min_leaf = self.cfg.min_samples_leaf as f64;
        let mut best: Option<Candidate> = None;
        for &f in features {
            let list = &lists[f];
            let mut left = Stats::default();
            for k in 0..list.len() - 1 {
                let i = list[k] as usize;
                left.add(self.weights[i], self.targets[i]);
                let a = self.x[i][f];
                let b = self.x[list[k + 1] as usize][f];
                let right = parent.minus(&left);
                if right.w < min_leaf {
                    break;
                }
                if b <= a || left.w < min_leaf {
                    continue;
                }
                let (pl, pr) = (left.w / parent.w, right.w / parent.w);
                let decrease = parent_imp - pl * left.impurity(c) - pr * right.impurity(c);
                let score = match c {
                    SplitCriterion::GainRatio => decrease / binary_entropy(pl),
                    SplitCriterion::FriedmanMse => {
                        let diff = left.mean() - right.mean();
                        pl * pr * diff * diff
                    }
                    _ => decrease,
                };
                if decrease <= 1e-12 * parent_imp || score < self.cfg.min_gain {
                    continue;
                }
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        score,
                        decrease,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, lists: Vec<Vec<u32>>, depth: usize) -> usize {
        let mut stats = Stats::default();
        for &i in &lists[0] {
            stats.add(self.weights[i as usize], self.targets[i as usize]);
        }
        let idx = self.nodes.len();
        self.nodes.push(Node {
            value: stats.mean(),
            weight: stats.w,
            target_sum: stats.wy,
            split: None,
        });
        if depth >= self.cfg.max_depth
            || stats.w < self.cfg.min_samples_split as f64
            || stats.impurity(self.cfg.criterion) <= 1e-15
            || lists[0].len() < 2
        {
            return idx;
        }
        let features = self.features(lists.len());
        let Some(best) = self.best_split(&lists, &features, &stats) else {
            return idx;
        };
        for &i in &lists[0] {
            self.goes_left[i as usize] = self.x[i as usize][best.feature] <= best.threshold;
        }
        let (mut left_lists, mut right_lists) = (Vec::with_capacity(lists.len()), Vec::with_capacity(lists.len()));
        for list in lists {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&i| self.goes_left[i as usize]);
            left_lists.push(l);
            right_lists.push(r);
        }
        let left = self.build(left_lists, depth + 1);
        let right = self.build(right_lists, depth + 1);
        self.nodes[idx].split = Some(Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            weighted_decrease: best.decrease * stats.w,
        });
        idx
    }
}

/// Grows one tree over rows with positive weight.
pub(crate) fn grow(
    x: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    presorted: &[Vec<u32>],
    cfg: &GrowConfig,
    rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    let lists: Vec<Vec<u32>> = presorted
        .iter()
        .map(|l| l.iter().copied().filter(|&i| weights[i as usize] > 0.0).collect())
        .collect();
    let mut b = Builder {
        x,
        targets,
        weights,
        cfg,
        rng,
        nodes: Vec::new(),
        goes_left: vec![false; x.len()],
    };
    b.build(lists, 0);
    Tree { nodes: b.nodes }
}

/// Inverse of the standard normal CDF (Acklam's rational approximation,
/// relative error below 1.2e-9).
pub(crate) fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < 0.02425 {
        tail(math::sqrt(-2.0 * math::ln(p)))
    } else if p > 1.0 - 0.02425 {
        -tail(math::sqrt(-2.0 * math::ln(1.0 - p)))
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Upper confidence bound on an error rate of `errors / n`.
fn pessimistic_rate(errors: f64, n: f64, z: f64) -> f64 {
    let f = errors / n;
    let z2 = z * z;
    (f + z2 / (2.0 * n) + z * math::sqrt((f / n - f * f / n + z2 / (4.0 * n * n)).max(0.0))) / (1.0 + z2 / n)
}

/// Collapses every subtree whose pessimistic error estimate is no better
/// than that of a single leaf, bottom-up.
pub(crate) fn prune(tree: &Tree, confidence: f64) -> Tree {
    let z = normal_quantile(1.0 - confidence);
    let mut nodes = tree.nodes.clone();
    fn go(nodes: &mut [Node], i: usize, z: f64) -> f64 {
        let n = nodes[i].weight;
        let errors = nodes[i].target_sum.min(n - nodes[i].target_sum);
        let as_leaf = n * pessimistic_rate(errors, n, z);
        let Some((l, r)) = nodes[i].split.as_ref().map(|s| (s.left, s.right)) else {
            return as_leaf;
        };
        let subtree = go(nodes, l, z) + go(nodes, r, z);
        if as_leaf <= subtree + 1e-9 {
            nodes[i].split = None;
            as_leaf
        } else {
            subtree
        }
    }
    go(&mut nodes, 0, z);
    compact(&nodes)
}

/// Drops unreachable nodes, renumbering depth-first.
fn compact(nodes: &[Node]) -> Tree {
    fn go(src: &[Node], i: usize, out: &mut Vec<Node>) -> usize {
        let idx = out.len();
        out.push(Node {
            split: None,
            ..src[i].clone()
        });
        if let Some(s) = &src[i].split {
            let left = go(src, s.left, out);
            let right = go(src, s.right, out);
            out[idx].split = Some(Split { left, right, ..s.clone() });
        }
        idx
    }
    let mut out = Vec::new();
    go(nodes, 0, &mut out);
    Tree { nodes: out }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub tree: Tree,
    pub width: usize,
}

impl DecisionTree {
    pub fn predict_proba(&self, z: &[f64]) -> f64 {
        self.tree.predict(z)
    }

    pub fn importance(&self) -> Vec<f64> {
        normalized(self.tree.raw_importance(self.width))
    }
}

pub(crate) fn fit(x: &[Vec<f64>], y: &[u8], p: &TreeParams, _seed: u64) -> Result<DecisionTree> {
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let weights = vec![1.0; y.len()];
    let cfg = GrowConfig {
        criterion: p.criterion,
        max_depth: p.max_depth,
        min_samples_split: p.min_samples_split,
        min_samples_leaf: p.min_samples_leaf,
        min_gain: p.minimal_gain,
        max_features: None,
    };
    let mut tree = grow(x, &targets, &weights, &presort(x), &cfg, None);
    if p.apply_pruning && !p.criterion.is_regression() {
        tree = prune(&tree, p.confidence);
    }
    Ok(DecisionTree {
        tree,
        width: x[0].len(),
    })
}
