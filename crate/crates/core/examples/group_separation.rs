//! Cumulative topic-weight ratio curves for two planted groups, compared with
//! same-group controls.
//!
//! cargo run --release --example group_separation -- [separation] [seed]

use anonmine::ldaval::{compare_groups, GroupComparison, LdaConfig};
use anonmine::synth::{generate_topic_corpus, TopicCorpusConfig};

fn main() -> anonmine::Result<()> {
    let mut args = std::env::args().skip(1);
    let separation: f64 = args.next().map_or(0.9, |s| s.parse().expect("separation"));
    let seed: u64 = args.next().map_or(2, |s| s.parse().expect("seed"));

    let tc = TopicCorpusConfig {
        n_topics: 10,
        vocab_size: 200,
        n_docs: 400,
        doc_length: 80,
        disjoint_topics: false,
        doc_mixing: 0.3,
        group_separation: separation,
        ..Default::default()
    };
    let planted = generate_topic_corpus(&tc, "S", "N", seed)?;
    let corpus = &planted.corpus;
    let s_halves = corpus.split_group("S", "A", "B", seed);
    let n_halves = corpus.split_group("N", "A", "B", seed + 1);
    let cmp = |name: &str, c, a: &str, b: &str| GroupComparison { name: name.into(), corpus: c, group_a: a.into(), group_b: b.into() };
    let curves = compare_groups(
        &[cmp("S vs N", corpus, "S", "N"), cmp("S vs S", &s_halves, "A", "B"), cmp("N vs N", &n_halves, "A", "B")],
        &LdaConfig { n_topics: 10, alpha: 0.1, max_iterations: 200, seed, enforce_monotone: false, ..Default::default() },
    )?;
    for c in &curves {
        let ratios: Vec<String> = c.ranking.iter().map(|r| format!("{:.2}", r.ratio)).collect();
        println!("{:<7} flatness {:>8.2}  ratios {}", c.name, c.flatness, ratios.join(" "));
    }
    Ok(())
}
