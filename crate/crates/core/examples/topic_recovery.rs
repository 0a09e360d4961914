//! Trains CVB0 on a planted three-topic corpus and matches the learned topics
//! to the planted ones.
//!
//! cargo run --release --example topic_recovery -- [seed]

use anonmine::ldaval::{perplexity, split_corpus, train_cvb0, LdaConfig};
use anonmine::synth::{generate_topic_corpus, topic_recovery, TopicCorpusConfig};

fn main() -> anonmine::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed"));
    let planted = generate_topic_corpus(&TopicCorpusConfig::default(), "A", "B", seed)?;
    let cfg = LdaConfig { n_topics: 3, alpha: 0.1, max_iterations: 300, seed, ..Default::default() };

    let model = train_cvb0(&planted.corpus, &cfg)?;
    let rec = topic_recovery(&planted, &model)?;
    println!("{} iterations, converged {}", model.trace.len(), model.converged);
    for (t, (j, d)) in rec.assignment.iter().zip(&rec.distances).enumerate() {
        println!("planted topic {t} -> learned topic {j}, total variation {d:.4}");
    }

    let (train, heldout) = split_corpus(&planted.corpus, 0.8, seed)?;
    for k in [1, 3, 6] {
        let m = train_cvb0(&train, &cfg.with_topics(k))?;
        println!("K={k}: held-out perplexity {:.3}", perplexity(&m, &heldout)?.perplexity);
    }
    Ok(())
}
