use std::collections::HashSet;
use std::io::Write;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{flush_csv, SynthConfig};
use crate::error::{Error, Result};
use crate::namekb::AnonymityLabel;
use crate::seeds;
use crate::sensitivity::Sensitivity;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub id: String,
    pub sensitivity: Sensitivity,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FollowGraph {
    pub targets: Vec<TargetTruth>,
    /// Follower ids per target, parallel to `targets`.
    pub followers: Vec<Vec<String>>,
}

impl FollowGraph {
    pub fn edge_count(&self) -> usize {
        self.followers.iter().map(Vec::len).sum()
    }
}

/// Draws distinct followers for one target. Each slot comes from `preferred`
/// with probability `bias` (while any remain unused), otherwise from the whole pool.
fn draw_followers<R: Rng>(rng: &mut R, n: usize, pool: usize, preferred: &[usize], bias: f64) -> Vec<usize> {
    let mut used = HashSet::with_capacity(n);
    let mut preferred_used = 0;
    let preferred_set: HashSet<usize> = preferred.iter().copied().collect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let from_preferred = preferred_used < preferred.len() && rng.random_bool(bias);
        let pick = if from_preferred {
            *preferred.choose(rng).unwrap()
        } else {
            rng.random_range(0..pool)
        };
        if used.insert(pick) {
            preferred_used += preferred_set.contains(&pick) as usize;
            out.push(pick);
        }
    }
    out
}

/// Targets `t000000..` with known sensitivity, each followed by accounts from
/// `profiles`. Sensitive targets lean toward anonymous followers and
/// non-sensitive targets toward identifiable ones, by `cfg.anonymity_bias`.
pub fn generate_follow_graph(profiles: &[(String, AnonymityLabel)], cfg: &SynthConfig) -> Result<FollowGraph> {
    cfg.validate()?;
    if cfg.n_targets == 0 {
        return Ok(FollowGraph::default());
    }
    let (lo, hi) = cfg.followers_per_target;
    if hi > profiles.len() {
        return Err(Error::invalid(format!(
            "targets need up to {hi} distinct followers but the pool has {}",
            profiles.len()
        )));
    }
    let of_label = |l: AnonymityLabel| -> Vec<usize> {
        profiles.iter().enumerate().filter(|(_, p)| p.1 == l).map(|(i, _)| i).collect()
    };
    let anonymous = of_label(AnonymityLabel::Anonymous);
    let identifiable = of_label(AnonymityLabel::Identifiable);

    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, 20));
    let mut graph = FollowGraph::default();
    for t in 0..cfg.n_targets {
        let sensitive = rng.random_bool(cfg.sensitive_target_fraction);
        let n = rng.random_range(lo..=hi);
        let preferred = if sensitive { &anonymous } else { &identifiable };
        let picks = draw_followers(&mut rng, n, profiles.len(), preferred, cfg.anonymity_bias);
        graph.targets.push(TargetTruth {
            id: format!("t{t:06}"),
            sensitivity: if sensitive { Sensitivity::Sensitive } else { Sensitivity::NonSensitive },
        });
        graph.followers.push(picks.into_iter().map(|i| profiles[i].0.clone()).collect());
    }
    Ok(graph)
}

/// `target_id,follower_id`, one row per edge.
pub fn write_edges_csv<W: Write>(out: W, graph: &FollowGraph) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["target_id", "follower_id"])?;
    for (t, fs) in graph.targets.iter().zip(&graph.followers) {
        for f in fs {
            csv.write_record([t.id.as_str(), f.as_str()])?;
        }
    }
    flush_csv(csv, "<edges>")
}

/// `target_id,sensitivity`
pub fn write_targets_truth_csv<W: Write>(out: W, graph: &FollowGraph) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["target_id", "sensitivity"])?;
    for t in &graph.targets {
        csv.write_record([t.id.as_str(), t.sensitivity.as_str()])?;
    }
    flush_csv(csv, "<target truth>")
}
