use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::profile::{FeatureMatrix, FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::math;

/// Symmetric Pearson matrix. `None` marks pairs involving a zero-variance
/// column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.values[i][j]
    }

    /// Names of columns with zero variance.
    pub fn constant_columns(&self) -> Vec<&str> {
        self.names
            .iter()
            .enumerate()
            .filter(|(i, _)| self.values[*i][*i].is_none())
            .map(|(_, n)| n.as_str())
            .collect()
    }
}

/// Pearson correlation of arbitrary columns of equal length.
pub fn pearson_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(Error::InvalidArgument("correlation needs at least two rows".into()));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch { left: n, right: c.len() });
    }
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let m = math::mean(c);
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| math::sqrt(c.iter().map(|v| v * v).sum()))
        .collect();
    let d = columns.len();
    let mut values = alloc::vec![alloc::vec![None; d]; d];
    for i in 0..d {
        if norms[i] == 0.0 {
            continue;
        }
        values[i][i] = Some(1.0);
        for j in i + 1..d {
            if norms[j] == 0.0 {
                continue;
            }
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            values[i][j] = Some(r);
            values[j][i] = Some(r);
        }
    }
    Ok(CorrelationMatrix { names, values })
}

/// Pearson correlation between `x1..x18`, optionally with the label as a
/// trailing `label` column.
pub fn pearson_correlation_matrix(matrix: &FeatureMatrix, include_label: bool) -> Result<CorrelationMatrix> {
    let mut names: Vec<String> = FEATURE_NAMES.iter().map(|n| n.to_string()).collect();
    let mut columns: Vec<Vec<f64>> = (0..FEATURE_COUNT).map(|i| matrix.column(i)).collect();
    if include_label {
        names.push("label".into());
        columns.push(matrix.labels()?.into_iter().map(f64::from).collect());
    }
    pearson_columns(names, &columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Textbook covariance over standard deviations.
    fn brute_force(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let sa = (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n).sqrt();
        let sb = (b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n).sqrt();
        cov / (sa * sb)
    }

    #[test]
    fn hand_dataset() {
        let a = vec![1.0, 2.0, 4.0, 7.0, 11.0];
        let b = vec![3.0, 1.0, 4.0, 1.0, 5.0];
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let flat = vec![2.0; 5];
        let m = pearson_columns(
            vec!["a".into(), "b".into(), "neg".into(), "flat".into()],
            &[a.clone(), b.clone(), neg, flat],
        )
        .unwrap();
        assert_eq!(m.get("a", "a"), Some(1.0));
        assert!((m.get("a", "neg").unwrap() + 1.0).abs() < 1e-15);
        assert!((m.get("a", "b").unwrap() - brute_force(&a, &b)).abs() < 1e-12);
        assert_eq!(m.get("a", "b"), m.get("b", "a"));
        assert_eq!(m.get("flat", "a"), None);
        assert_eq!(m.get("flat", "flat"), None);
        assert_eq!(m.constant_columns(), vec!["flat"]);
    }

    #[test]
    fn needs_two_rows() {
        assert!(pearson_columns(vec!["a".into()], &[vec![1.0]]).is_err());
        assert!(pearson_correlation_matrix(&FeatureMatrix::default(), false).is_err());
    }
}
