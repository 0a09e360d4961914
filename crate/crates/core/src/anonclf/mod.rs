//! Two cost-sensitive binary forests (anonymous vs. not, identifiable vs. not)
//! whose votes are fused into Anonymous / Identifiable / Unknown.

mod forest;
mod validation;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use forest::{predict_binary, train_forest, ForestModel, ForestParams, Node, Tree, DEFAULT_MAX_DEPTH, DEFAULT_TREES};
pub use validation::{cross_validate, stratified_folds, sweep_costs, CvReport, PRPoint};

use crate::error::{Error, Result};
use crate::features::{extract_features, relabel_binary, Binary, FeatureRow, LabeledDataset};
use crate::ingest::AccountProfile;
use crate::namekb::{AnonymityLabel, NameKnowledgeBase};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Misclassification costs for the two binary classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    pub anonymous_cost: f64,
    pub identifiable_cost: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            anonymous_cost: 9.5,
            identifiable_cost: 6.0,
        }
    }
}

impl CostConfig {
    pub fn new(anonymous_cost: f64, identifiable_cost: f64) -> Result<Self> {
        check_cost(anonymous_cost)?;
        check_cost(identifiable_cost)?;
        Ok(CostConfig {
            anonymous_cost,
            identifiable_cost,
        })
    }
}

fn check_cost(cost: f64) -> Result<()> {
    if cost > 0.0 && cost.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("cost must be positive, got {cost}")))
    }
}

/// Multiplies every negative row's weight by `cost`, making false positives
/// expensive for the forest trained on the result.
pub fn apply_cost_weights(ds: &LabeledDataset<Binary>, cost: f64) -> Result<LabeledDataset<Binary>> {
    check_cost(cost)?;
    let mut out = ds.clone();
    out.scale_weights_where(|l| l == Binary::Negative, cost);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnonDecision {
    Anonymous,
    NonAnonymous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdentDecision {
    Identifiable,
    NonIdentifiable,
}

impl From<Binary> for AnonDecision {
    fn from(b: Binary) -> Self {
        match b {
            Binary::Positive => AnonDecision::Anonymous,
            Binary::Negative => AnonDecision::NonAnonymous,
        }
    }
}

impl From<Binary> for IdentDecision {
    fn from(b: Binary) -> Self {
        match b {
            Binary::Positive => IdentDecision::Identifiable,
            Binary::Negative => IdentDecision::NonIdentifiable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FusedLabel {
    Anonymous,
    Identifiable,
    Unknown,
}

impl FusedLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FusedLabel::Anonymous => "Anonymous",
            FusedLabel::Identifiable => "Identifiable",
            FusedLabel::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for FusedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FusedLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Anonymous" => Ok(FusedLabel::Anonymous),
            "Identifiable" => Ok(FusedLabel::Identifiable),
            "Unknown" => Ok(FusedLabel::Unknown),
            _ => Err(Error::invalid(format!("unknown fused label {s:?}"))),
        }
    }
}

/// Final label from the two binary decisions. Conflicting positives are Unknown.
pub fn fuse_labels(anon: AnonDecision, ident: IdentDecision) -> FusedLabel {
    match (anon, ident) {
        (AnonDecision::Anonymous, IdentDecision::NonIdentifiable) => FusedLabel::Anonymous,
        (AnonDecision::NonAnonymous, IdentDecision::Identifiable) => FusedLabel::Identifiable,
        (AnonDecision::NonAnonymous, IdentDecision::NonIdentifiable) => FusedLabel::Unknown,
        (AnonDecision::Anonymous, IdentDecision::Identifiable) => FusedLabel::Unknown,
    }
}

/// Both trained forests plus what they were trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedModel {
    pub version: u32,
    pub seed: u64,
    pub costs: CostConfig,
    pub anonymous: ForestModel,
    pub identifiable: ForestModel,
}

/// One account's fused label and the two positive-vote fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountPrediction {
    pub account_id: String,
    pub label: FusedLabel,
    pub anon_vote: f64,
    pub ident_vote: f64,
}

impl FusedModel {
    /// Trains both binary classifiers on a four-class dataset.
    pub fn train(ds: &LabeledDataset, costs: CostConfig, params: ForestParams, seed: u64) -> Result<Self> {
        let anon = apply_cost_weights(&relabel_binary(ds, AnonymityLabel::Anonymous), costs.anonymous_cost)?;
        let ident = apply_cost_weights(
            &relabel_binary(ds, AnonymityLabel::Identifiable),
            costs.identifiable_cost,
        )?;
        Ok(FusedModel {
            version: MODEL_FORMAT_VERSION,
            seed,
            costs,
            anonymous: train_forest(&anon, AnonymityLabel::Anonymous, params, crate::seeds::derive(seed, 1))?,
            identifiable: train_forest(
                &ident,
                AnonymityLabel::Identifiable,
                params,
                crate::seeds::derive(seed, 2),
            )?,
        })
    }

    pub fn predict_row(&self, row: &FeatureRow) -> (FusedLabel, f64, f64) {
        let (a, av) = self.anonymous.predict(row);
        let (i, iv) = self.identifiable.predict(row);
        (fuse_labels(a.into(), i.into()), av, iv)
    }

    pub fn predict_profile(&self, kb: &NameKnowledgeBase, p: &AccountProfile) -> AccountPrediction {
        let (label, anon_vote, ident_vote) = self.predict_row(&extract_features(kb, p).to_row());
        AccountPrediction {
            account_id: p.id.clone(),
            label,
            anon_vote,
            ident_vote,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: FusedModel = serde_json::from_str(&text)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "{}: model format version {} is not supported",
                path.display(),
                model.version
            )));
        }
        Ok(model)
    }
}

/// Per-account predictions in input order.
pub fn predict_accounts(
    model: &FusedModel,
    kb: &NameKnowledgeBase,
    accounts: &[AccountProfile],
) -> Vec<AccountPrediction> {
    accounts.par_iter().map(|p| model.predict_profile(kb, p)).collect()
}

pub fn classify_accounts(
    model: &FusedModel,
    kb: &NameKnowledgeBase,
    accounts: &[AccountProfile],
) -> BTreeMap<String, FusedLabel> {
    predict_accounts(model, kb, accounts)
        .into_iter()
        .map(|p| (p.account_id, p.label))
        .collect()
}

/// `account_id,label,anon_vote,ident_vote`
pub fn write_predictions_csv<W: Write>(out: W, preds: &[AccountPrediction]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["account_id", "label", "anon_vote", "ident_vote"])?;
    for p in preds {
        w.write_record([
            p.account_id.as_str(),
            p.label.as_str(),
            &p.anon_vote.to_string(),
            &p.ident_vote.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<predictions csv>", e))
}

pub fn read_predictions_csv(path: impl AsRef<Path>) -> Result<Vec<AccountPrediction>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let num = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("{}: bad vote {:?}", path.display(), field(i))))
        };
        out.push(AccountPrediction {
            account_id: field(0).to_string(),
            label: field(1).parse()?,
            anon_vote: num(2)?,
            ident_vote: num(3)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::NUM_FEATURES;

    #[test]
    fn fusion_table() {
        use AnonDecision::*;
        use IdentDecision::*;
        assert_eq!(fuse_labels(Anonymous, NonIdentifiable), FusedLabel::Anonymous);
        assert_eq!(fuse_labels(NonAnonymous, Identifiable), FusedLabel::Identifiable);
        assert_eq!(fuse_labels(NonAnonymous, NonIdentifiable), FusedLabel::Unknown);
        assert_eq!(fuse_labels(Anonymous, Identifiable), FusedLabel::Unknown);
    }

    #[test]
    fn cost_weights_hit_negatives_only() {
        let ds = LabeledDataset::new(
            vec![[0.0; NUM_FEATURES]; 3],
            vec![Binary::Positive, Binary::Negative, Binary::Negative],
        )
        .unwrap();
        assert_eq!(apply_cost_weights(&ds, 1.0).unwrap(), ds);
        let w = apply_cost_weights(&ds, 9.5).unwrap();
        assert_eq!(w.weights(), &[1.0, 9.5, 9.5]);

        let pos = LabeledDataset::new(vec![[0.0; NUM_FEATURES]; 2], vec![Binary::Positive; 2]).unwrap();
        assert_eq!(apply_cost_weights(&pos, 4.0).unwrap(), pos);
        assert!(apply_cost_weights(&ds, 0.0).is_err());
        assert!(CostConfig::new(-1.0, 2.0).is_err());
    }

    #[test]
    fn predictions_csv_round_trip() {
        let preds = vec![AccountPrediction {
            account_id: "a,1".into(),
            label: FusedLabel::Unknown,
            anon_vote: 0.25,
            ident_vote: 0.5,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_predictions_csv(fs::File::create(&path).unwrap(), &preds).unwrap();
        assert_eq!(read_predictions_csv(&path).unwrap(), preds);
    }
}
