use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{train, Dataset, ModelSpec};
use crate::error::{Error, Result};
use crate::eval::{confusion, prf_metrics, roc_auc};
use crate::{math, par};

/// Metrics of one held-out fold at threshold 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub test_size: usize,
    pub test_positives: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when the fold holds a single class.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Over folds where AUC is defined; NaN when none is.
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub k: usize,
    pub stratified: bool,
    pub folds: Vec<FoldMetrics>,
    pub mean: MetricSummary,
    /// Population standard deviation across folds.
    pub std: MetricSummary,
}

/// Fold index of every row.
///
/// Stratified assignment shuffles each class separately and deals its rows
/// round-robin, continuing the deal across classes, so every fold holds
/// `floor` or `ceil` of each class's share.
pub fn fold_assignment(labels: &[u8], k: usize, stratified: bool, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > labels.len() {
        return Err(Error::KOutOfRange { k, len: labels.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = alloc::vec![0usize; labels.len()];
    if stratified {
        let mut dealt = 0usize;
        for class in [0u8, 1] {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if members.len() < k {
                return Err(Error::ClassTooSmall {
                    class,
                    count: members.len(),
                    k,
                });
            }
            members.shuffle(&mut rng);
            for i in members {
                folds[i] = dealt % k;
                dealt += 1;
            }
        }
    } else {
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(&mut rng);
        for (pos, i) in all.into_iter().enumerate() {
            folds[i] = pos % k;
        }
    }
    Ok(folds)
}

/// `(train, test)` row indices with `round(n * test_fraction)` test rows.
pub fn train_test_split(labels: &[u8], test_fraction: f64, stratified: bool, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::new();
    let groups: Vec<Vec<usize>> = if stratified {
        [0u8, 1]
            .iter()
            .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
            .collect()
    } else {
        alloc::vec![(0..labels.len()).collect()]
    };
    for mut g in groups {
        g.shuffle(&mut rng);
        let take = libm::round(g.len() as f64 * test_fraction) as usize;
        test.extend_from_slice(&g[..take]);
    }
    test.sort_unstable();
    let mut is_test = alloc::vec![false; labels.len()];
    for &i in &test {
        is_test[i] = true;
    }
    let train = (0..labels.len()).filter(|&i| !is_test[i]).collect();
    Ok((train, test))
}

fn summarize(folds: &[FoldMetrics]) -> (MetricSummary, MetricSummary) {
    let stat = |f: &dyn Fn(&FoldMetrics) -> Option<f64>| {
        let values: Vec<f64> = folds.iter().filter_map(f).collect();
        if values.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (math::mean(&values), math::std_dev(&values))
        }
    };
    let acc = stat(&|m| Some(m.accuracy));
    let pre = stat(&|m| Some(m.precision));
    let rec = stat(&|m| Some(m.recall));
    let f1 = stat(&|m| Some(m.f1));
    let auc = stat(&|m| m.auc);
    (
        MetricSummary {
            accuracy: acc.0,
            precision: pre.0,
            recall: rec.0,
            f1: f1.0,
            auc: auc.0,
        },
        MetricSummary {
            accuracy: acc.1,
            precision: pre.1,
            recall: rec.1,
            f1: f1.1,
            auc: auc.1,
        },
    )
}

/// Fits on all rows outside a fold and scores the fold; fold `f` trains
/// with seed `spec.seed + f`.
pub fn cross_validate(spec: &ModelSpec, data: &Dataset, k: usize, stratified: bool, seed: u64) -> Result<CvResult> {
    spec.validate()?;
    let folds = fold_assignment(&data.labels, k, stratified, seed)?;
    let results = par::map_indexed(k, |fold| -> Result<FoldMetrics> {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != fold).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == fold).collect();
        let mut fold_spec = spec.clone();
        fold_spec.seed = spec.seed.wrapping_add(fold as u64);
        let model = train(&fold_spec, &data.subset(&train_idx))?;
        let test = data.subset(&test_idx);
        let probs = model.predict_proba_batch(&test.rows)?;
        let m = prf_metrics(&confusion(&probs, &test.labels, 0.5)?)?;
        Ok(FoldMetrics {
            fold,
            test_size: test.len(),
            test_positives: test.class_counts().1,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            auc: roc_auc(&probs, &test.labels).ok().map(|r| r.auc),
        })
    });
    let folds: Vec<FoldMetrics> = results.into_iter().collect::<Result<_>>()?;
    let (mean, std) = summarize(&folds);
    Ok(CvResult {
        k,
        stratified,
        folds,
        mean,
        std,
    })
}

/// Out-of-fold probability of every row: each row is scored by the model
/// trained on the folds that exclude it.
pub fn cross_val_predict(spec: &ModelSpec, data: &Dataset, k: usize, stratified: bool, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let folds = fold_assignment(&data.labels, k, stratified, seed)?;
    let results = par::map_indexed(k, |fold| -> Result<Vec<(usize, f64)>> {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != fold).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == fold).collect();
        let mut fold_spec = spec.clone();
        fold_spec.seed = spec.seed.wrapping_add(fold as u64);
        let model = train(&fold_spec, &data.subset(&train_idx))?;
        let probs = model.predict_proba_batch(&data.subset(&test_idx).rows)?;
        Ok(test_idx.into_iter().zip(probs).collect())
    });
    let mut out = alloc::vec![0.0; data.len()];
    for part in results {
        for (i, p) in part? {
            out[i] = p;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tests::noisy_dataset;
    use super::super::Algorithm;
    use super::*;
    use alloc::vec;

    #[test]
    fn unstratified_folds_are_equal() {
        let labels = vec![0u8; 100];
        let folds = fold_assignment(&labels, 10, false, 1).unwrap();
        for f in 0..10 {
            assert_eq!(folds.iter().filter(|&&x| x == f).count(), 10);
        }
    }

    #[test]
    fn stratified_folds_hold_151_spammers() {
        let labels: Vec<u8> = (0..4000).map(|i| u8::from(i < 1510)).collect();
        let folds = fold_assignment(&labels, 10, true, 7).unwrap();
        for f in 0..10 {
            let spam = (0..4000).filter(|&i| folds[i] == f && labels[i] == 1).count();
            assert!((150..=152).contains(&spam), "fold {f}: {spam}");
        }
        assert_eq!(folds, fold_assignment(&labels, 10, true, 7).unwrap());
    }

    #[test]
    fn stratification_needs_k_members_per_class() {
        let labels = [1u8, 1, 0, 0, 0, 0];
        assert_eq!(
            fold_assignment(&labels, 3, true, 0).unwrap_err(),
            Error::ClassTooSmall { class: 1, count: 2, k: 3 }
        );
        assert!(fold_assignment(&labels, 1, false, 0).is_err());
    }

    #[test]
    fn split_is_80_20_and_disjoint() {
        let labels: Vec<u8> = (0..1000).map(|i| u8::from(i % 3 == 0)).collect();
        let (train, test) = train_test_split(&labels, 0.2, true, 3).unwrap();
        assert_eq!(train.len() + test.len(), 1000);
        assert!((199..=201).contains(&test.len()));
        assert!(train.iter().all(|i| test.binary_search(i).is_err()));
    }

    #[test]
    fn cross_validation_covers_every_row() {
        let data = noisy_dataset(120, 3, 17);
        let r = cross_validate(&ModelSpec::new(Algorithm::GlmLogistic, 0), &data, 5, true, 2).unwrap();
        assert_eq!(r.folds.len(), 5);
        assert_eq!(r.folds.iter().map(|f| f.test_size).sum::<usize>(), 120);
        assert!(r.mean.f1 > 0.6);
        assert!(r.std.f1 >= 0.0);
    }

    #[test]
    fn out_of_fold_scores_match_fold_models() {
        let data = noisy_dataset(90, 3, 23);
        let spec = ModelSpec::new(Algorithm::GaussianNb, 4);
        let oof = cross_val_predict(&spec, &data, 3, true, 6).unwrap();
        let folds = fold_assignment(&data.labels, 3, true, 6).unwrap();
        let train_idx: Vec<usize> = (0..90).filter(|&i| folds[i] != 1).collect();
        let mut fold_spec = spec.clone();
        fold_spec.seed = 5;
        let model = train(&fold_spec, &data.subset(&train_idx)).unwrap();
        for i in (0..90).filter(|&i| folds[i] == 1) {
            assert_eq!(oof[i], model.predict_proba(&data.rows[i]).unwrap());
        }
    }
}
