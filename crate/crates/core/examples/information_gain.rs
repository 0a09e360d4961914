//! Information gain of every feature for the Anonymous and Identifiable
//! targets, highest first.
//!
//! cargo run --release --example information_gain -- [n_profiles] [seed]

use anonmine::features::{information_gain, LabeledDataset, FEATURE_NAMES};
use anonmine::namekb::{AnonymityLabel, NameKnowledgeBase};
use anonmine::synth::{generate_profiles, SynthConfig};

fn main() -> anonmine::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(5_000, |s| s.parse().expect("n_profiles"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let kb = NameKnowledgeBase::builtin();
    let profiles = generate_profiles(&kb, &SynthConfig { seed, n_profiles: n, ..Default::default() })?;
    let labeled: Vec<_> = profiles.into_iter().map(|p| (p.profile, p.label)).collect();
    let ds = LabeledDataset::from_profiles(&kb, &labeled);

    for target in [AnonymityLabel::Anonymous, AnonymityLabel::Identifiable] {
        let mut gains = FEATURE_NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| Ok((*name, information_gain(&ds, i, target)?)))
            .collect::<anonmine::Result<Vec<_>>>()?;
        gains.sort_by(|a, b| b.1.total_cmp(&a.1));
        println!("{target}");
        for (name, g) in gains {
            println!("  {g:.4}  {name}");
        }
    }
    Ok(())
}
