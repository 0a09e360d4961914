//! Binary random forest over feature rows: weighted bootstrap per tree,
//! √p candidate features per node, weighted Gini splits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Binary, FeatureRow, LabeledDataset, NUM_FEATURES};
use crate::namekb::AnonymityLabel;

pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_MAX_DEPTH: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub features_per_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: DEFAULT_TREES,
            max_depth: DEFAULT_MAX_DEPTH,
            features_per_split: (NUM_FEATURES as f64).sqrt().ceil() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        positive: f64,
        negative: f64,
    },
    /// Rows with `row[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// A tree of one node per entry, root first.
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn leaf(&self, row: &FeatureRow) -> (f64, f64) {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { positive, negative } => return (positive, negative),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Weighted majority of the reached leaf; ties vote negative.
    pub fn votes_positive(&self, row: &FeatureRow) -> bool {
        let (p, n) = self.leaf(row);
        p > n
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_trees: usize,
    pub positive_label: AnonymityLabel,
    pub feature_subset_size: usize,
    pub rng_seed: u64,
}

impl ForestModel {
    /// Fraction of trees voting positive, and the resulting label
    /// (positive only on a strict majority).
    pub fn predict(&self, row: &FeatureRow) -> (Binary, f64) {
        let pos = self.trees.iter().filter(|t| t.votes_positive(row)).count();
        let frac = if self.trees.is_empty() {
            0.0
        } else {
            pos as f64 / self.trees.len() as f64
        };
        let label = if frac > 0.5 { Binary::Positive } else { Binary::Negative };
        (label, frac)
    }
}

pub fn predict_binary(model: &ForestModel, row: &FeatureRow) -> (Binary, f64) {
    model.predict(row)
}

/// Trains `params.n_trees` trees in parallel. Tree `t` draws from its own
/// ChaCha stream `(seed, t)`, so the model does not depend on scheduling.
pub fn train_forest(
    ds: &LabeledDataset<Binary>,
    positive_label: AnonymityLabel,
    params: ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    if ds.is_empty() {
        return Err(Error::invalid("cannot train a forest on an empty dataset"));
    }
    let has = |b| ds.labels().contains(&b);
    if !has(Binary::Positive) || !has(Binary::Negative) {
        return Err(Error::invalid("training data must contain both classes"));
    }
    if params.n_trees == 0 || params.features_per_split == 0 || params.features_per_split > NUM_FEATURES {
        return Err(Error::invalid(format!("bad forest parameters {params:?}")));
    }

    let cumulative: Vec<f64> = ds
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            grow_tree(ds, &cumulative, params, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        trees,
        n_trees: params.n_trees,
        positive_label,
        feature_subset_size: params.features_per_split,
        rng_seed: seed,
    })
}

/// One bootstrap row: dataset index and how many times it was drawn.
#[derive(Clone, Copy)]
struct Sample {
    index: usize,
    count: f64,
    positive: bool,
}

fn bootstrap(ds: &LabeledDataset<Binary>, cumulative: &[f64], rng: &mut ChaCha8Rng) -> Vec<Sample> {
    let n = ds.len();
    let total = *cumulative.last().expect("nonempty");
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        let u = rng.random::<f64>() * total;
        let i = cumulative.partition_point(|&c| c <= u).min(n - 1);
        counts[i] += 1;
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| Sample {
            index: i,
            count: c as f64,
            positive: ds.labels()[i] == Binary::Positive,
        })
        .collect()
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    let q = 1.0 - p;
    1.0 - p * p - q * q
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m >= b || m < a {
        a
    } else {
        m
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split_on(rows: &[FeatureRow], samples: &mut [Sample], feature: usize) -> Option<(f64, f64)> {
    samples.sort_unstable_by(|a, b| {
        rows[a.index][feature]
            .total_cmp(&rows[b.index][feature])
            .then(a.index.cmp(&b.index))
    });
    let total: f64 = samples.iter().map(|s| s.count).sum();
    let total_pos: f64 = samples.iter().filter(|s| s.positive).map(|s| s.count).sum();
    let parent = total * gini(total_pos, total);

    let mut best: Option<(f64, f64)> = None;
    let (mut left_w, mut left_pos) = (0.0, 0.0);
    for i in 0..samples.len() - 1 {
        let s = samples[i];
        left_w += s.count;
        if s.positive {
            left_pos += s.count;
        }
        let here = rows[s.index][feature];
        let next = rows[samples[i + 1].index][feature];
        if here == next {
            continue;
        }
        let right_w = total - left_w;
        let right_pos = total_pos - left_pos;
        let child = left_w * gini(left_pos, left_w) + right_w * gini(right_pos, right_w);
        let gain = parent - child;
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, midpoint(here, next)));
        }
    }
    best
}

fn grow_tree(
    ds: &LabeledDataset<Binary>,
    cumulative: &[f64],
    params: ForestParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut samples = bootstrap(ds, cumulative, rng);
    let mut nodes = Vec::new();
    let len = samples.len();
    grow(ds.rows(), &mut samples[..len], 0, params, rng, &mut nodes);
    Tree { nodes }
}

fn grow(
    rows: &[FeatureRow],
    samples: &mut [Sample],
    depth: usize,
    params: ForestParams,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    let positive: f64 = samples.iter().filter(|s| s.positive).map(|s| s.count).sum();
    let negative: f64 = samples.iter().filter(|s| !s.positive).map(|s| s.count).sum();
    nodes.push(Node::Leaf { positive, negative });

    if positive == 0.0 || negative == 0.0 || samples.len() < 2 || depth >= params.max_depth {
        return id;
    }

    let mut order: Vec<usize> = (0..NUM_FEATURES).collect();
    order.shuffle(rng);
    let mut choice: Option<SplitChoice> = None;
    for (k, &feature) in order.iter().enumerate() {
        // Past the sampled subset, keep looking only until some split exists.
        if k >= params.features_per_split && choice.is_some() {
            break;
        }
        if let Some((gain, threshold)) = best_split_on(rows, samples, feature) {
            if choice.as_ref().is_none_or(|c| gain > c.gain) {
                choice = Some(SplitChoice {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    let Some(split) = choice else {
        return id; // every row has identical features
    };

    // Partition in place: left block first.
    let mut mid = 0;
    for i in 0..samples.len() {
        if rows[samples[i].index][split.feature] <= split.threshold {
            samples.swap(i, mid);
            mid += 1;
        }
    }
    let (left_s, right_s) = samples.split_at_mut(mid);
    let left = grow(rows, left_s, depth + 1, params, rng, nodes);
    let right = grow(rows, right_s, depth + 1, params, rng, nodes);
    nodes[id] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    id
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> FeatureRow {
        let mut r = [0.0; NUM_FEATURES];
        r[0] = v;
        r
    }

    fn threshold_set() -> LabeledDataset<Binary> {
        let values: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let labels = values
            .iter()
            .map(|&v| if v < 0.5 { Binary::Positive } else { Binary::Negative })
            .collect();
        LabeledDataset::new(values.iter().map(|&v| row(v)).collect(), labels).unwrap()
    }

    #[test]
    fn separable_threshold_is_learned() {
        let ds = threshold_set();
        let m = train_forest(&ds, AnonymityLabel::Anonymous, ForestParams::default(), 7).unwrap();
        for (r, l) in ds.rows().iter().zip(ds.labels()) {
            assert_eq!(m.predict(r).0, *l);
        }
        // Held-out probes against the threshold oracle, away from the boundary.
        for v in [0.01, 0.2, 0.44, 0.52, 0.8, 2.0] {
            let oracle = if v < 0.5 { Binary::Positive } else { Binary::Negative };
            assert_eq!(m.predict(&row(v)).0, oracle, "probe {v}");
        }
    }

    #[test]
    fn same_seed_same_model() {
        let ds = threshold_set();
        let a = train_forest(&ds, AnonymityLabel::Anonymous, ForestParams::default(), 3).unwrap();
        let b = train_forest(&ds, AnonymityLabel::Anonymous, ForestParams::default(), 3).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| train_forest(&ds, AnonymityLabel::Anonymous, ForestParams::default(), 3).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn two_rows_make_a_stump() {
        let ds = LabeledDataset::new(vec![row(0.0), row(1.0)], vec![Binary::Positive, Binary::Negative]).unwrap();
        let params = ForestParams {
            n_trees: 1,
            ..Default::default()
        };
        // Find a seed whose bootstrap draws both rows; a one-row draw is a pure leaf.
        let m = (0..64)
            .map(|s| train_forest(&ds, AnonymityLabel::Anonymous, params, s).unwrap())
            .find(|m| m.trees[0].nodes().len() > 1)
            .unwrap();
        let nodes = m.trees[0].nodes();
        assert_eq!(nodes.len(), 3);
        match nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 0.5);
            }
            _ => panic!("root should split"),
        }
        assert_eq!(m.predict(&row(0.0)).0, Binary::Positive);
        assert_eq!(m.predict(&row(1.0)).0, Binary::Negative);
    }

    #[test]
    fn vote_fraction_and_tie_rule() {
        let yes = Tree::from_nodes(vec![Node::Leaf { positive: 2.0, negative: 1.0 }]);
        let no = Tree::from_nodes(vec![Node::Leaf { positive: 1.0, negative: 1.0 }]);
        let model = |trees: Vec<Tree>| ForestModel {
            n_trees: trees.len(),
            trees,
            positive_label: AnonymityLabel::Anonymous,
            feature_subset_size: 4,
            rng_seed: 0,
        };
        let all = model(vec![yes.clone(); 100]);
        assert_eq!(all.predict(&row(0.0)), (Binary::Positive, 1.0));
        let mut half = vec![yes; 50];
        half.extend(vec![no; 50]);
        assert_eq!(model(half).predict(&row(0.0)), (Binary::Negative, 0.5));
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = LabeledDataset::new(vec![row(0.0), row(1.0)], vec![Binary::Positive; 2]).unwrap();
        assert!(train_forest(&ds, AnonymityLabel::Anonymous, ForestParams::default(), 0).is_err());
    }

    #[test]
    fn depth_is_capped() {
        // Alternating labels force deep trees.
        let n = 200;
        let ds = LabeledDataset::new(
            (0..n).map(|i| row(i as f64)).collect(),
            (0..n)
                .map(|i| if i % 2 == 0 { Binary::Positive } else { Binary::Negative })
                .collect(),
        )
        .unwrap();
        let params = ForestParams {
            n_trees: 3,
            max_depth: 5,
            ..Default::default()
        };
        let m = train_forest(&ds, AnonymityLabel::Anonymous, params, 1).unwrap();
        assert!(m.trees.iter().all(|t| t.depth() <= 5));
    }
}
