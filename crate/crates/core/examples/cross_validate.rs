//! Cross-validated precision and recall of the fused classifier against the
//! name-list baseline on synthetic profiles.
//!
//! cargo run --release --example cross_validate -- [n_profiles] [seed]

use std::time::Instant;

use anonmine::anonclf::{cross_validate, CostConfig, FusedLabel, ForestParams};
use anonmine::features::LabeledDataset;
use anonmine::metrics::PrecisionRecall;
use anonmine::namekb::{baseline_namelist_label, AnonymityLabel, NameKnowledgeBase};
use anonmine::synth::{generate_profiles, NameStyle, SynthConfig};

fn main() -> anonmine::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(10_000, |s| s.parse().expect("n_profiles"));
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed"));

    let kb = NameKnowledgeBase::builtin();
    let cfg = SynthConfig { seed, n_profiles: n, ..Default::default() };
    let profiles = generate_profiles(&kb, &cfg)?;
    let labeled: Vec<_> = profiles.iter().map(|p| (p.profile.clone(), p.label)).collect();
    let ds = LabeledDataset::from_profiles(&kb, &labeled);

    let start = Instant::now();
    let rep = cross_validate(&ds, CostConfig::default(), ForestParams::default(), 10, seed)?;
    println!("10-fold CV over {n} profiles in {:.1?}", start.elapsed());
    println!(
        "fused      anonymous P={:.3} R={:.3}   identifiable P={:.3} R={:.3}",
        rep.anonymous.precision, rep.anonymous.recall, rep.identifiable.precision, rep.identifiable.recall
    );

    let baseline: Vec<AnonymityLabel> = profiles.iter().map(|p| baseline_namelist_label(&kb, &p.profile)).collect();
    let score = |target: AnonymityLabel| {
        PrecisionRecall::from_pairs(baseline.iter().zip(&profiles).map(|(b, p)| (*b == target, p.label == target)))
    };
    let (ba, bi) = (score(AnonymityLabel::Anonymous), score(AnonymityLabel::Identifiable));
    println!(
        "baseline   anonymous P={:.3} R={:.3}   identifiable P={:.3} R={:.3}",
        ba.precision, ba.recall, bi.precision, bi.recall
    );

    let adversarial = profiles.iter().zip(&rep.predictions).filter(|(p, _)| p.style == NameStyle::CommonWord);
    let (caught, total) = adversarial.fold((0, 0), |(c, t), (_, l)| (c + (*l == FusedLabel::Anonymous) as usize, t + 1));
    println!("common-word anonymous names recognized by the classifier: {caught}/{total}");
    Ok(())
}
