use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{apply_cost_weights, train_forest, CostConfig, ForestParams, FusedLabel, FusedModel};
use crate::error::{Error, Result};
use crate::features::{relabel_binary, Binary, LabeledDataset};
use crate::metrics::PrecisionRecall;
use crate::namekb::AnonymityLabel;
use crate::seeds;

/// Fold index per row. Each class is shuffled and dealt round-robin, with the
/// deal continuing across classes so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[AnonymityLabel], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in AnonymityLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub costs: CostConfig,
    pub folds: usize,
    pub anonymous: PrecisionRecall,
    pub identifiable: PrecisionRecall,
    /// Out-of-fold fused label for every row.
    pub predictions: Vec<FusedLabel>,
}

fn check_folds(ds: &LabeledDataset, folds: usize, classes: &[AnonymityLabel]) -> Result<()> {
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    for &c in classes {
        let n = ds.labels().iter().filter(|&&l| l == c).count();
        if n < folds {
            return Err(Error::invalid(format!(
                "only {n} {c} rows for {folds}-fold cross-validation"
            )));
        }
    }
    Ok(())
}

fn split(assignment: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != fold)
}

/// Stratified k-fold estimate of fused Anonymous and Identifiable precision
/// and recall, pooled over all out-of-fold predictions.
pub fn cross_validate(
    ds: &LabeledDataset,
    costs: CostConfig,
    params: ForestParams,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    check_folds(ds, folds, &[AnonymityLabel::Anonymous, AnonymityLabel::Identifiable])?;
    let assignment = stratified_folds(ds.labels(), folds, seeds::derive(seed, 0xF01D));
    let mut predictions = vec![FusedLabel::Unknown; ds.len()];
    for fold in 0..folds {
        let (train, test) = split(&assignment, fold);
        let model = FusedModel::train(&ds.subset(&train), costs, params, seeds::derive(seed, fold as u64))?;
        for i in test {
            predictions[i] = model.predict_row(&ds.rows()[i]).0;
        }
    }
    let score = |fused: FusedLabel, truth: AnonymityLabel| {
        PrecisionRecall::from_pairs(
            predictions
                .iter()
                .zip(ds.labels())
                .map(|(p, t)| (*p == fused, *t == truth)),
        )
    };
    Ok(CvReport {
        costs,
        folds,
        anonymous: score(FusedLabel::Anonymous, AnonymityLabel::Anonymous),
        identifiable: score(FusedLabel::Identifiable, AnonymityLabel::Identifiable),
        predictions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRPoint {
    pub cost: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Cross-validated precision/recall of the `target` binary classifier alone,
/// one point per cost, ordered by cost.
pub fn sweep_costs(
    ds: &LabeledDataset,
    cost_grid: &[f64],
    target: AnonymityLabel,
    params: ForestParams,
    folds: usize,
    seed: u64,
) -> Result<Vec<PRPoint>> {
    if cost_grid.is_empty() {
        return Err(Error::invalid("cost grid is empty"));
    }
    check_folds(ds, folds, &[target])?;
    let mut grid = cost_grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let binary = relabel_binary(ds, target);
    let assignment = stratified_folds(ds.labels(), folds, seeds::derive(seed, 0xF01D));
    let mut points = Vec::with_capacity(grid.len());
    for cost in grid {
        let weighted = apply_cost_weights(&binary, cost)?;
        let mut predicted = vec![false; ds.len()];
        for fold in 0..folds {
            let (train, test) = split(&assignment, fold);
            let model = train_forest(&weighted.subset(&train), target, params, seeds::derive(seed, fold as u64))?;
            for i in test {
                predicted[i] = model.predict(&ds.rows()[i]).0 == Binary::Positive;
            }
        }
        let pr = PrecisionRecall::from_pairs(
            predicted
                .iter()
                .zip(binary.labels())
                .map(|(p, t)| (*p, *t == Binary::Positive)),
        );
        points.push(PRPoint {
            cost,
            precision: pr.precision,
            recall: pr.recall,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureRow, NUM_FEATURES};
    use AnonymityLabel::*;

    /// Feature 0 encodes the class exactly.
    fn separable(n_per_class: usize) -> LabeledDataset {
        let mut rows: Vec<FeatureRow> = Vec::new();
        let mut labels = Vec::new();
        for (k, class) in AnonymityLabel::ALL.into_iter().enumerate() {
            for i in 0..n_per_class {
                let mut r = [0.0; NUM_FEATURES];
                r[0] = k as f64;
                r[1] = i as f64;
                rows.push(r);
                labels.push(class);
            }
        }
        LabeledDataset::new(rows, labels).unwrap()
    }

    fn small() -> ForestParams {
        ForestParams {
            n_trees: 15,
            ..Default::default()
        }
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<_> = (0..103).map(|i| AnonymityLabel::ALL[i % 4]).collect();
        let a = stratified_folds(&labels, 10, 1);
        assert_eq!(a, stratified_folds(&labels, 10, 1));
        for f in 0..10 {
            let size = a.iter().filter(|&&x| x == f).count();
            assert!((10..=11).contains(&size));
            for c in AnonymityLabel::ALL {
                let n = (0..labels.len()).filter(|&i| a[i] == f && labels[i] == c).count();
                assert!((2..=3).contains(&n));
            }
        }
    }

    #[test]
    fn separable_data_is_perfect() {
        let ds = separable(30);
        let rep = cross_validate(&ds, CostConfig::new(1.0, 1.0).unwrap(), small(), 10, 4).unwrap();
        assert_eq!((rep.anonymous.precision, rep.anonymous.recall), (1.0, 1.0));
        assert_eq!((rep.identifiable.precision, rep.identifiable.recall), (1.0, 1.0));
        let again = cross_validate(&ds, CostConfig::new(1.0, 1.0).unwrap(), small(), 10, 4).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn abstaining_classifier_has_unit_precision() {
        // Labels carry no signal and negatives are weighted overwhelmingly:
        // no tree ever votes positive.
        let mut ds = separable(20);
        ds = LabeledDataset::new(vec![[0.0; NUM_FEATURES]; ds.len()], ds.labels().to_vec()).unwrap();
        let rep = cross_validate(&ds, CostConfig::new(1e6, 1e6).unwrap(), small(), 10, 2).unwrap();
        assert_eq!(rep.anonymous.predicted, 0);
        assert_eq!((rep.anonymous.precision, rep.anonymous.recall), (1.0, 0.0));
        assert_eq!((rep.identifiable.precision, rep.identifiable.recall), (1.0, 0.0));
    }

    #[test]
    fn too_small_is_an_error() {
        let ds = separable(5);
        assert!(cross_validate(&ds, CostConfig::default(), small(), 10, 0).is_err());
    }

    #[test]
    fn sweep_on_separable_data() {
        let ds = separable(20);
        let pts = sweep_costs(&ds, &[1.0], Anonymous, small(), 10, 9).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!((pts[0].cost, pts[0].precision), (1.0, 1.0));
        assert!(pts[0].recall >= 0.9);
        assert!(sweep_costs(&ds, &[], Anonymous, small(), 10, 9).is_err());
        let pts = sweep_costs(&ds, &[4.0, 1.0, 2.0], Identifiable, small(), 10, 9).unwrap();
        let costs: Vec<f64> = pts.iter().map(|p| p.cost).collect();
        assert_eq!(costs, vec![1.0, 2.0, 4.0]);
    }
}
