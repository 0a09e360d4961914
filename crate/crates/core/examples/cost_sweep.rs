//! Precision/recall trade-off of each binary forest as its misclassification
//! cost grows.
//!
//! cargo run --release --example cost_sweep -- [n_profiles] [seed]

use anonmine::anonclf::{sweep_costs, ForestParams};
use anonmine::features::LabeledDataset;
use anonmine::namekb::{AnonymityLabel, NameKnowledgeBase};
use anonmine::synth::{generate_profiles, SynthConfig};

fn main() -> anonmine::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(4_000, |s| s.parse().expect("n_profiles"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let kb = NameKnowledgeBase::builtin();
    let profiles = generate_profiles(&kb, &SynthConfig { seed, n_profiles: n, ..Default::default() })?;
    let labeled: Vec<_> = profiles.into_iter().map(|p| (p.profile, p.label)).collect();
    let ds = LabeledDataset::from_profiles(&kb, &labeled);

    let grid = [1.0, 2.0, 4.0, 8.0, 16.0];
    let params = ForestParams { n_trees: 50, ..Default::default() };
    for target in [AnonymityLabel::Anonymous, AnonymityLabel::Identifiable] {
        println!("{target}");
        for p in sweep_costs(&ds, &grid, target, params, 10, seed)? {
            println!("  cost {:>4}  precision {:.3}  recall {:.3}", p.cost, p.precision, p.recall);
        }
    }
    Ok(())
}
