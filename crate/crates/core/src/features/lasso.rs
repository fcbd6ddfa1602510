use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::profile::{FeatureMatrix, FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::math;

/// Weights with magnitude above this count as selected.
pub const SELECTION_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoResult {
    pub lambda: f64,
    pub selected: Vec<String>,
    /// Coefficients on standardized features, one per input column.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

impl LassoResult {
    pub fn nonzero_count(&self) -> usize {
        self.selected.len()
    }
}

/// Column means and population standard deviations; zero-variance columns
/// standardize to all zeros.
pub(crate) fn standardize_columns(columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    columns
        .iter()
        .map(|c| {
            let m = math::mean(c);
            let s = math::std_dev(c);
            if s > 0.0 {
                c.iter().map(|v| (v - m) / s).collect()
            } else {
                vec![0.0; c.len()]
            }
        })
        .collect()
}

fn objective(columns: &[Vec<f64>], y: &[f64], beta: &[f64], intercept: f64, lambda: f64) -> f64 {
    let n = y.len();
    let mut loss = 0.0;
    for i in 0..n {
        let eta = intercept + columns.iter().zip(beta).map(|(c, b)| c[i] * b).sum::<f64>();
        loss += math::logistic_loss(eta, y[i]);
    }
    loss / n as f64 + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Smallest penalty at which every coefficient is zero.
pub fn lambda_max(columns: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let std = standardize_columns(columns);
    let ybar = y.iter().sum::<f64>() / n;
    std.iter()
        .map(|c| (c.iter().zip(y).map(|(x, t)| x * (t - ybar)).sum::<f64>() / n).abs())
        .fold(0.0, f64::max)
}

/// L1-penalized logistic regression on standardized columns:
/// minimizes `mean logistic loss + lambda * ||w||_1` (intercept free) by
/// proximal Newton steps whose inner problems are solved with cyclic
/// coordinate descent.
pub fn lasso_logistic(names: &[String], columns: &[Vec<f64>], y: &[u8], lambda: f64) -> Result<LassoResult> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("lambda must be non-negative, got {lambda}")));
    }
    let n = y.len();
    if n == 0 || columns.iter().any(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            left: n,
            right: columns.first().map_or(0, Vec::len),
        });
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    let x = standardize_columns(columns);
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let d = x.len();
    let nf = n as f64;

    let ybar = yf.iter().sum::<f64>() / nf;
    let mut intercept = math::ln(ybar / (1.0 - ybar));
    let mut beta = vec![0.0; d];
    let active: Vec<bool> = x.iter().map(|c| c.iter().any(|v| *v != 0.0)).collect();
    let mut current = objective(&x, &yf, &beta, intercept, lambda);
    let mut iterations = 0;

    for _ in 0..200 {
        iterations += 1;
        // quadratic model around the current point
        let eta: Vec<f64> = (0..n)
            .map(|i| intercept + x.iter().zip(&beta).map(|(c, b)| c[i] * b).sum::<f64>())
            .collect();
        let p: Vec<f64> = eta.iter().map(|e| math::sigmoid(*e)).collect();
        let w: Vec<f64> = p.iter().map(|q| (q * (1.0 - q)).max(1e-10)).collect();
        let z: Vec<f64> = (0..n).map(|i| eta[i] + (yf[i] - p[i]) / w[i]).collect();

        let mut b_new = beta.clone();
        let mut c_new = intercept;
        let mut resid: Vec<f64> = (0..n).map(|i| z[i] - eta[i]).collect();
        let w_sum: f64 = w.iter().sum();
        let curvature: Vec<f64> = x
            .iter()
            .map(|c| c.iter().zip(&w).map(|(v, wi)| wi * v * v).sum::<f64>() / nf)
            .collect();
        for _ in 0..10_000 {
            let mut max_change = 0.0f64;
            let shift = resid.iter().zip(&w).map(|(r, wi)| r * wi).sum::<f64>() / w_sum;
            c_new += shift;
            for r in resid.iter_mut() {
                *r -= shift;
            }
            max_change = max_change.max(shift.abs());
            for j in 0..d {
                if !active[j] {
                    continue;
                }
                let col = &x[j];
                let rho = col.iter().zip(&resid).zip(&w).map(|((v, r), wi)| wi * v * r).sum::<f64>() / nf
                    + curvature[j] * b_new[j];
                let updated = soft_threshold(rho, lambda) / curvature[j];
                let delta = updated - b_new[j];
                if delta != 0.0 {
                    for (r, v) in resid.iter_mut().zip(col) {
                        *r -= delta * v;
                    }
                    b_new[j] = updated;
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change < 1e-13 {
                break;
            }
        }

        // backtrack along the proximal Newton direction
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-10 {
            let cand_b: Vec<f64> = beta.iter().zip(&b_new).map(|(o, nw)| o + t * (nw - o)).collect();
            let cand_c = intercept + t * (c_new - intercept);
            let value = objective(&x, &yf, &cand_b, cand_c, lambda);
            if value <= current + 1e-15 {
                accepted = Some((cand_b, cand_c, value));
                break;
            }
            t *= 0.5;
        }
        let Some((cand_b, cand_c, value)) = accepted else {
            break;
        };
        let change = beta
            .iter()
            .zip(&cand_b)
            .map(|(a, b)| (a - b).abs())
            .fold((intercept - cand_c).abs(), f64::max);
        beta = cand_b;
        intercept = cand_c;
        current = value;
        if change < 1e-11 {
            break;
        }
    }

    let selected = names
        .iter()
        .zip(&beta)
        .filter(|(_, b)| b.abs() > SELECTION_THRESHOLD)
        .map(|(n, _)| n.clone())
        .collect();
    Ok(LassoResult {
        lambda,
        selected,
        weights: beta,
        intercept,
        iterations,
    })
}

fn soft_threshold(value: f64, threshold: f64) -> f64 {
    if value > threshold {
        value - threshold
    } else if value < -threshold {
        value + threshold
    } else {
        0.0
    }
}

/// Lasso feature selection over `x1..x18` of a labeled matrix.
pub fn lasso_select(matrix: &FeatureMatrix, lambda: f64) -> Result<LassoResult> {
    let names: Vec<String> = FEATURE_NAMES.iter().map(|n| n.to_string()).collect();
    let columns: Vec<Vec<f64>> = (0..FEATURE_COUNT).map(|i| matrix.column(i)).collect();
    let y = matrix.labels()?;
    lasso_logistic(&names, &columns, &y, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fixture(n: usize, seed: u64) -> (Vec<String>, Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 5;
        let mut cols = vec![Vec::new(); d];
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let logit = 2.5 * row[0] - 1.0 * row[1] + 0.2 * row[2];
            y.push(u8::from(rng.gen::<f64>() < math::sigmoid(logit)));
            for (c, v) in cols.iter_mut().zip(row) {
                c.push(v);
            }
        }
        let names = (0..d).map(|i| alloc::format!("f{i}")).collect();
        (names, cols, y)
    }

    #[test]
    fn full_shrinkage_above_lambda_max() {
        let (names, cols, y) = fixture(300, 1);
        let yf: Vec<f64> = y.iter().map(|v| f64::from(*v)).collect();
        let lmax = lambda_max(&cols, &yf);
        let r = lasso_logistic(&names, &cols, &y, lmax * 1.0001).unwrap();
        assert_eq!(r.nonzero_count(), 0);
        let r = lasso_logistic(&names, &cols, &y, lmax * 0.5).unwrap();
        assert!(r.nonzero_count() >= 1);
        assert_eq!(r.selected[0], "f0");
    }

    #[test]
    fn sparsity_is_monotone_along_path() {
        let (names, cols, y) = fixture(400, 2);
        let mut last = usize::MAX;
        for k in 0..12 {
            let lambda = 0.002 * 1.6f64.powi(k);
            let r = lasso_logistic(&names, &cols, &y, lambda).unwrap();
            assert!(r.nonzero_count() <= last, "lambda {lambda}");
            last = r.nonzero_count();
        }
        assert_eq!(last, 0);
    }

    #[test]
    fn rejects_negative_lambda() {
        let (names, cols, y) = fixture(20, 3);
        assert!(lasso_logistic(&names, &cols, &y, -1.0).is_err());
    }

    #[test]
    fn constant_column_gets_zero_weight() {
        let (names, mut cols, y) = fixture(200, 4);
        cols[3] = vec![7.0; 200];
        let r = lasso_logistic(&names, &cols, &y, 0.0).unwrap();
        assert_eq!(r.weights[3], 0.0);
    }
}
