//! Builds a biased follow graph, classifies the followers with a forest
//! trained on separate synthetic profiles, and measures how well follower
//! anonymity ranks the sensitive targets.
//!
//! cargo run --release --example follow_graph -- [bias] [seed]

use std::collections::HashMap;

use anonmine::anonclf::{classify_accounts, CostConfig, ForestParams, FusedModel};
use anonmine::features::LabeledDataset;
use anonmine::metrics::auc;
use anonmine::namekb::NameKnowledgeBase;
use anonmine::sensitivity::{follower_fractions, Sensitivity};
use anonmine::synth::{generate_follow_graph, generate_follower_pool, generate_profiles, SynthConfig};

fn main() -> anonmine::Result<()> {
    let mut args = std::env::args().skip(1);
    let bias: f64 = args.next().map_or(0.5, |s| s.parse().expect("bias"));
    let seed: u64 = args.next().map_or(4, |s| s.parse().expect("seed"));

    let kb = NameKnowledgeBase::builtin();
    let cfg = SynthConfig { seed, n_profiles: 3_000, n_targets: 100, anonymity_bias: bias, ..Default::default() };
    let training: Vec<_> = generate_profiles(&kb, &cfg)?.into_iter().map(|p| (p.profile, p.label)).collect();
    let model = FusedModel::train(
        &LabeledDataset::from_profiles(&kb, &training),
        CostConfig::default(),
        ForestParams { n_trees: 50, ..Default::default() },
        seed,
    )?;

    let pool = generate_follower_pool(&kb, &cfg)?;
    let labels = classify_accounts(&model, &kb, &pool.iter().map(|p| p.profile.clone()).collect::<Vec<_>>());
    let truth: Vec<_> = pool.iter().map(|p| (p.profile.id.clone(), p.label)).collect();
    let graph = generate_follow_graph(&truth, &cfg)?;

    let mut scores = Vec::new();
    let mut positive = Vec::new();
    let label_of: HashMap<_, _> = labels.iter().collect();
    for (t, followers) in graph.targets.iter().zip(&graph.followers) {
        let ls: Vec<_> = followers.iter().filter_map(|f| label_of.get(f).map(|l| **l)).collect();
        let s = follower_fractions(&t.id, &ls)?;
        scores.push(s.y - s.x);
        positive.push(t.sensitivity == Sensitivity::Sensitive);
    }
    println!("{} targets, {} edges, bias {bias}", graph.targets.len(), graph.edge_count());
    println!("AUC of (anonymous - identifiable) fraction for sensitive targets: {:.3}", auc(&scores, &positive).unwrap_or(f64::NAN));
    Ok(())
}
