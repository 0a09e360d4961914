//! The 16-feature profile representation and per-feature information gain.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AccountProfile;
use crate::namekb::{detect_names, matches_structural_constraint, AnonymityLabel, NameKnowledgeBase};

pub const NUM_FEATURES: usize = 16;
pub const NUM_NUMERIC: usize = 12;

/// Stand-in rank for a name or word missing from its list.
pub const SENTINEL_RANK: u64 = i64::MAX as u64;
/// Followers-to-friends ratio for accounts without friends.
pub const SENTINEL_RATIO: f64 = f64::MAX;

/// Column names, in export order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "friends_count",
    "followers_count",
    "followers_to_friends_ratio",
    "list_memberships",
    "tweets_count",
    "favorites_count",
    "name_part_count",
    "first_name_rank",
    "last_name_rank",
    "scrabble_word_count",
    "first_name_scrabble_freq_rank",
    "last_name_scrabble_freq_rank",
    "is_protected",
    "geo_enabled",
    "has_url",
    "structural_constraint_ok",
];

pub type FeatureRow = [f64; NUM_FEATURES];

pub fn is_boolean_feature(index: usize) -> bool {
    index >= NUM_NUMERIC
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub friends_count: u64,
    pub followers_count: u64,
    pub followers_to_friends_ratio: f64,
    pub list_memberships: u64,
    pub tweets_count: u64,
    pub favorites_count: u64,
    pub name_part_count: u64,
    pub first_name_rank: u64,
    pub last_name_rank: u64,
    pub scrabble_word_count: u64,
    pub first_name_scrabble_freq_rank: u64,
    pub last_name_scrabble_freq_rank: u64,
    pub is_protected: bool,
    pub geo_enabled: bool,
    pub has_url: bool,
    pub structural_constraint_ok: bool,
}

impl FeatureVector {
    pub fn to_row(&self) -> FeatureRow {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        [
            self.friends_count as f64,
            self.followers_count as f64,
            self.followers_to_friends_ratio,
            self.list_memberships as f64,
            self.tweets_count as f64,
            self.favorites_count as f64,
            self.name_part_count as f64,
            self.first_name_rank as f64,
            self.last_name_rank as f64,
            self.scrabble_word_count as f64,
            self.first_name_scrabble_freq_rank as f64,
            self.last_name_scrabble_freq_rank as f64,
            b(self.is_protected),
            b(self.geo_enabled),
            b(self.has_url),
            b(self.structural_constraint_ok),
        ]
    }

    fn csv_fields(&self) -> Vec<String> {
        let mut v: Vec<String> = [
            self.friends_count,
            self.followers_count,
        ]
        .iter()
        .map(u64::to_string)
        .collect();
        v.push(self.followers_to_friends_ratio.to_string());
        v.extend(
            [
                self.list_memberships,
                self.tweets_count,
                self.favorites_count,
                self.name_part_count,
                self.first_name_rank,
                self.last_name_rank,
                self.scrabble_word_count,
                self.first_name_scrabble_freq_rank,
                self.last_name_scrabble_freq_rank,
            ]
            .iter()
            .map(u64::to_string),
        );
        v.extend(
            [self.is_protected, self.geo_enabled, self.has_url, self.structural_constraint_ok]
                .iter()
                .map(|b| (*b as u8).to_string()),
        );
        v
    }
}

fn scrabble_freq_rank(kb: &NameKnowledgeBase, token: Option<&str>) -> u64 {
    token
        .filter(|t| kb.is_scrabble_word(t))
        .and_then(|t| kb.word_freq_rank(t))
        .map_or(SENTINEL_RANK, u64::from)
}

pub fn extract_features(kb: &NameKnowledgeBase, p: &AccountProfile) -> FeatureVector {
    let d = detect_names(kb, &p.display_name);
    let first = d.first_name.as_ref();
    let last = d.last_name.as_ref();
    let ratio = if p.friends_count == 0 {
        SENTINEL_RATIO
    } else {
        p.followers_count as f64 / p.friends_count as f64
    };
    FeatureVector {
        friends_count: p.friends_count,
        followers_count: p.followers_count,
        followers_to_friends_ratio: ratio,
        list_memberships: p.list_memberships,
        tweets_count: p.tweets_count,
        favorites_count: p.favorites_count,
        name_part_count: d.name_part_count as u64,
        first_name_rank: first.map_or(SENTINEL_RANK, |m| m.rank as u64),
        last_name_rank: last.map_or(SENTINEL_RANK, |m| m.rank as u64),
        scrabble_word_count: d.scrabble_word_count as u64,
        first_name_scrabble_freq_rank: scrabble_freq_rank(kb, first.map(|m| m.token.as_str())),
        last_name_scrabble_freq_rank: scrabble_freq_rank(kb, last.map(|m| m.token.as_str())),
        is_protected: p.is_protected,
        geo_enabled: p.geo_enabled,
        has_url: p.has_url(),
        structural_constraint_ok: matches_structural_constraint(kb, &d),
    }
}

/// Feature rows with one label and one positive weight per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<L = AnonymityLabel> {
    rows: Vec<FeatureRow>,
    labels: Vec<L>,
    weights: Vec<f64>,
}

impl<L: Copy + PartialEq> LabeledDataset<L> {
    pub fn new(rows: Vec<FeatureRow>, labels: Vec<L>) -> Result<Self> {
        let weights = vec![1.0; rows.len()];
        Self::with_weights(rows, labels, weights)
    }

    pub fn with_weights(rows: Vec<FeatureRow>, labels: Vec<L>, weights: Vec<f64>) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != weights.len() {
            return Err(Error::invalid("rows, labels and weights differ in length"));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        Ok(LabeledDataset {
            rows,
            labels,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        LabeledDataset {
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            weights: indices.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    pub fn map_labels<M, F: Fn(L) -> M>(&self, f: F) -> LabeledDataset<M> {
        LabeledDataset {
            rows: self.rows.clone(),
            labels: self.labels.iter().map(|&l| f(l)).collect(),
            weights: self.weights.clone(),
        }
    }

    pub(crate) fn scale_weights_where<F: Fn(L) -> bool>(&mut self, pred: F, factor: f64) {
        for (w, &l) in self.weights.iter_mut().zip(&self.labels) {
            if pred(l) {
                *w *= factor;
            }
        }
    }
}

impl LabeledDataset<AnonymityLabel> {
    pub fn from_profiles(kb: &NameKnowledgeBase, labeled: &[(AccountProfile, AnonymityLabel)]) -> Self {
        let rows = labeled.iter().map(|(p, _)| extract_features(kb, p).to_row()).collect();
        let labels = labeled.iter().map(|(_, l)| *l).collect();
        Self::new(rows, labels).expect("lengths match by construction")
    }
}

/// Binary relabeling of a four-class dataset around one positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Binary {
    Positive,
    Negative,
}

/// Keeps `positive` rows as positives and collapses every other class into
/// the negative label. Rows, order and weights are untouched.
pub fn relabel_binary(ds: &LabeledDataset, positive: AnonymityLabel) -> LabeledDataset<Binary> {
    ds.map_labels(|l| if l == positive { Binary::Positive } else { Binary::Negative })
}

/// Base-2 entropy of a two-way split given counts.
fn entropy2(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for c in [pos, total - pos] {
        if c > 0.0 {
            let p = c / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Maximum number of bins used to discretize a numeric feature.
pub const MAX_BINS: usize = 10;

/// Assigns each value a bin. Boolean features, and numeric features with at
/// most `MAX_BINS` distinct values, get one bin per value. Otherwise values
/// are split into `MAX_BINS` equal-frequency bins by the midpoint of their
/// rank span, so equal values always share a bin.
pub fn discretize(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut groups: Vec<(usize, usize)> = Vec::new(); // (first, last) positions in sorted order
    let mut start = 0;
    for i in 1..=n {
        if i == n || values[order[i]].total_cmp(&values[order[start]]).is_ne() {
            groups.push((start, i - 1));
            start = i;
        }
    }

    let mut bins = vec![0; n];
    let distinct = groups.len();
    for (g, &(lo, hi)) in groups.iter().enumerate() {
        let bin = if distinct <= MAX_BINS {
            g
        } else {
            ((lo + hi) * MAX_BINS) / (2 * n)
        };
        for &idx in &order[lo..=hi] {
            bins[idx] = bin;
        }
    }
    bins
}

/// Entropy reduction (bits) of "label == target" given the discretized feature.
pub fn information_gain<L: Copy + PartialEq>(
    ds: &LabeledDataset<L>,
    feature_index: usize,
    target: L,
) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::invalid("information gain of an empty dataset"));
    }
    if feature_index >= NUM_FEATURES {
        return Err(Error::invalid(format!("feature index {feature_index} out of range")));
    }
    let values: Vec<f64> = ds.rows.iter().map(|r| r[feature_index]).collect();
    let bins = discretize(&values);
    let n = ds.len() as f64;
    let mut per_bin: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    let mut pos_total = 0.0;
    for (b, l) in bins.iter().zip(&ds.labels) {
        let e = per_bin.entry(*b).or_default();
        e.1 += 1.0;
        if *l == target {
            e.0 += 1.0;
            pos_total += 1.0;
        }
    }
    let conditional: f64 = per_bin
        .values()
        .map(|&(pos, total)| total / n * entropy2(pos, total))
        .sum();
    Ok((entropy2(pos_total, n) - conditional).max(0.0))
}

/// Entropy (bits) of "label == target" over the dataset.
pub fn label_entropy<L: Copy + PartialEq>(ds: &LabeledDataset<L>, target: L) -> f64 {
    let pos = ds.labels.iter().filter(|&&l| l == target).count() as f64;
    entropy2(pos, ds.len() as f64)
}

/// Writes the feature matrix as CSV: the 16 feature columns, then `label`.
pub fn write_feature_csv<W: Write>(out: W, vectors: &[(FeatureVector, AnonymityLabel)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push("label");
    w.write_record(&header)?;
    for (fv, label) in vectors {
        let mut rec = fv.csv_fields();
        rec.push(label.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<feature csv>", e))?;
    Ok(())
}
