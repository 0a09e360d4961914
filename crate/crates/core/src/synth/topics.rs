use std::collections::HashMap;

use chrono::{DateTime, Duration, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::TopicCorpusConfig;
use crate::error::{Error, Result};
use crate::ingest::Tweet;
use crate::ldaval::{Corpus, TopicModel};
use crate::metrics::{min_cost_assignment, total_variation};

const ONSETS: &[u8] = b"bcdfghjklmnprstvwz";
const NUCLEI: &[u8] = b"aeiou";

/// The `i`-th synthetic vocabulary word: three consonant-vowel syllables,
/// distinct for every `i` below 729,000.
pub fn vocabulary_word(i: usize) -> String {
    let n = ONSETS.len() * NUCLEI.len();
    let mut out = String::with_capacity(6);
    let mut rest = i;
    for _ in 0..3 {
        let s = rest % n;
        rest /= n;
        out.push(ONSETS[s / NUCLEI.len()] as char);
        out.push(NUCLEI[s % NUCLEI.len()] as char);
    }
    out
}

/// A generated corpus together with the distributions it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    /// Generator vocabulary; `topic_word` columns follow this order.
    pub words: Vec<String>,
    pub topic_word: Vec<Vec<f64>>,
    /// One row per document, in corpus order.
    pub doc_topic: Vec<Vec<f64>>,
    pub dominant_topic: Vec<usize>,
}

fn dirichlet<R: Rng>(rng: &mut R, alpha: f64, n: usize) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("positive concentration");
    loop {
        let v: Vec<f64> = (0..n).map(|_| g.sample(rng)).collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

/// Documents drawn from the LDA generative process. Documents whose group is
/// `group_a` prefer the first half of the topics, all others the second half,
/// as controlled by `group_separation`.
pub fn generate_documents(
    cfg: &TopicCorpusConfig,
    docs: &[(String, String)],
    group_a: &str,
    seed: u64,
) -> Result<PlantedCorpus> {
    cfg.validate()?;
    let (k, v) = (cfg.n_topics, cfg.vocab_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<String> = (0..v).map(vocabulary_word).collect();

    let topic_word: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            let (lo, hi) = if cfg.disjoint_topics { (t * v / k, (t + 1) * v / k) } else { (0, v) };
            let inner = dirichlet(&mut rng, cfg.word_concentration, hi - lo);
            let mut row = vec![0.0; v];
            row[lo..hi].copy_from_slice(&inner);
            row
        })
        .collect();
    let word_dists: Vec<WeightedIndex<f64>> =
        topic_word.iter().map(|row| WeightedIndex::new(row).expect("topic has mass")).collect();

    let split = k.div_ceil(2);
    let half_a: Vec<usize> = (0..split).collect();
    let half_b: Vec<usize> = if split < k { (split..k).collect() } else { half_a.clone() };

    let mut lists = Vec::with_capacity(docs.len());
    let mut doc_topic = Vec::with_capacity(docs.len());
    let mut dominant_topic = Vec::with_capacity(docs.len());
    for (id, group) in docs {
        let own = if group == group_a { &half_a } else { &half_b };
        let dominant = if rng.random_bool(cfg.group_separation) {
            own[rng.random_range(0..own.len())]
        } else {
            rng.random_range(0..k)
        };
        let mut theta = vec![0.0; k];
        theta[dominant] = 1.0 - cfg.doc_mixing;
        if cfg.doc_mixing > 0.0 {
            for (t, x) in dirichlet(&mut rng, cfg.doc_alpha, k).into_iter().enumerate() {
                theta[t] += cfg.doc_mixing * x;
            }
        }
        let topic_dist = WeightedIndex::new(&theta).expect("document mixture has mass");
        let tokens: Vec<&str> = (0..cfg.doc_length)
            .map(|_| words[word_dists[topic_dist.sample(&mut rng)].sample(&mut rng)].as_str())
            .collect();
        lists.push((id.clone(), group.clone(), tokens));
        doc_topic.push(theta);
        dominant_topic.push(dominant);
    }
    Ok(PlantedCorpus {
        corpus: Corpus::from_token_lists(lists),
        words,
        topic_word,
        doc_topic,
        dominant_topic,
    })
}

/// `cfg.n_docs` documents `d000000..`, alternately tagged `group_a` and `group_b`.
pub fn generate_topic_corpus(cfg: &TopicCorpusConfig, group_a: &str, group_b: &str, seed: u64) -> Result<PlantedCorpus> {
    let docs: Vec<(String, String)> = (0..cfg.n_docs)
        .map(|i| (format!("d{i:06}"), if i % 2 == 0 { group_a } else { group_b }.to_string()))
        .collect();
    generate_documents(cfg, &docs, group_a, seed)
}

/// Splits each document's tokens into tweets of `words_per_tweet` words, one
/// hour apart, starting at `start`.
pub fn documents_to_tweets(corpus: &Corpus, words_per_tweet: usize, start: DateTime<Utc>) -> Vec<Tweet> {
    let per = words_per_tweet.max(1);
    let mut out = Vec::new();
    for doc in &corpus.documents {
        for (i, chunk) in doc.tokens.chunks(per).enumerate() {
            let text: Vec<&str> = chunk.iter().map(|&t| corpus.vocabulary.token(t)).collect();
            out.push(Tweet {
                account_id: doc.id.clone(),
                created_at: start + Duration::hours(i as i64),
                text: text.join(" "),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRecovery {
    /// Learned topic matched to each true topic.
    pub assignment: Vec<usize>,
    /// Total-variation distance of each matched pair.
    pub distances: Vec<f64>,
    pub max_distance: f64,
}

/// Matches true topics to learned topics by minimum total-variation cost.
/// Words the model never saw count as probability zero.
pub fn topic_recovery(planted: &PlantedCorpus, model: &TopicModel) -> Result<TopicRecovery> {
    let k_true = planted.topic_word.len();
    if model.n_topics < k_true {
        return Err(Error::invalid(format!(
            "model has {} topics, fewer than the {k_true} planted",
            model.n_topics
        )));
    }
    let index: HashMap<&str, usize> = model.vocabulary.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let learned: Vec<Vec<f64>> = model
        .topic_word
        .iter()
        .map(|row| {
            planted
                .words
                .iter()
                .map(|w| index.get(w.as_str()).map_or(0.0, |&i| row[i]))
                .collect()
        })
        .collect();
    let cost: Vec<Vec<f64>> = planted
        .topic_word
        .iter()
        .map(|t| learned.iter().map(|l| total_variation(t, l)).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    let distances: Vec<f64> = assignment.iter().enumerate().map(|(t, &j)| cost[t][j]).collect();
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(TopicRecovery { assignment, distances, max_distance })
}
