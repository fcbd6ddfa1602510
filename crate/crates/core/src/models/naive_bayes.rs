use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::hyper::NbParams;
use crate::error::Result;
use crate::math;

/// Per-class Gaussian likelihoods with independent features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// `[negative, positive]` log priors.
    pub log_prior: [f64; 2],
    pub means: [Vec<f64>; 2],
    /// Variances after smoothing; always positive.
    pub variances: [Vec<f64>; 2],
}

pub(crate) fn fit(x: &[Vec<f64>], y: &[u8], p: &NbParams) -> Result<GaussianNb> {
    let d = x[0].len();
    let mut means = [Vec::with_capacity(d), Vec::with_capacity(d)];
    let mut variances = [Vec::with_capacity(d), Vec::with_capacity(d)];
    let mut counts = [0usize; 2];
    for &label in y {
        counts[usize::from(label)] += 1;
    }
    let mut max_var = 0.0f64;
    for j in 0..d {
        let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        let sd = math::std_dev(&col);
        max_var = max_var.max(sd * sd);
    }
    let epsilon = p.var_smoothing * max_var;
    for class in 0..2 {
        for j in 0..d {
            let col: Vec<f64> = x
                .iter()
                .zip(y)
                .filter(|(_, &label)| usize::from(label) == class)
                .map(|(r, _)| r[j])
                .collect();
            let sd = math::std_dev(&col);
            means[class].push(math::mean(&col));
            // keeps every variance positive even for constant columns
            variances[class].push((sd * sd + epsilon).max(f64::MIN_POSITIVE));
        }
    }
    let n = y.len() as f64;
    let prior1 = p.spam_prior.unwrap_or(counts[1] as f64 / n);
    Ok(GaussianNb {
        log_prior: [math::ln(1.0 - prior1), math::ln(prior1)],
        means,
        variances,
    })
}

impl GaussianNb {
    fn joint(&self, class: usize, z: &[f64]) -> f64 {
        let mut s = self.log_prior[class];
        for ((v, m), var) in z.iter().zip(&self.means[class]).zip(&self.variances[class]) {
            let diff = v - m;
            s -= 0.5 * (math::ln(2.0 * core::f64::consts::PI * var) + diff * diff / var);
        }
        s
    }

    pub fn predict_proba(&self, z: &[f64]) -> f64 {
        let j0 = self.joint(0, z);
        let j1 = self.joint(1, z);
        math::sigmoid(j1 - j0)
    }

    /// `|mean_1 - mean_0|` over the pooled class standard deviation.
    pub fn importance(&self) -> Vec<f64> {
        self.means[0]
            .iter()
            .zip(&self.means[1])
            .zip(self.variances[0].iter().zip(&self.variances[1]))
            .map(|((m0, m1), (v0, v1))| (m1 - m0).abs() / math::sqrt((v0 + v1) / 2.0))
            .collect()
    }
}
