//! Ground-truth fixtures: labeled profiles, follow graphs with known target
//! sensitivity, and planted-topic corpora.
//!
//! Every generator is a pure function of its config and seed. Counter
//! distributions are log-normal; the parameters live in [`profiles`].

mod graph;
mod profiles;
mod topics;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::namekb::AnonymityLabel;

pub use graph::{generate_follow_graph, write_edges_csv, write_targets_truth_csv, FollowGraph, TargetTruth};
pub use profiles::{generate_follower_pool, generate_profiles, write_profile_truth_csv, NameStyle, Noise, SynthProfile};
pub use topics::{
    documents_to_tweets, generate_documents, generate_topic_corpus, topic_recovery, vocabulary_word, PlantedCorpus,
    TopicRecovery,
};

/// Label proportions in [`AnonymityLabel::ALL`] order.
pub const DEFAULT_LABEL_MIX: [f64; 4] = [0.513, 0.212, 0.152, 0.123];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicCorpusConfig {
    pub n_topics: usize,
    pub vocab_size: usize,
    pub n_docs: usize,
    pub doc_length: usize,
    /// Topics use disjoint blocks of the vocabulary.
    pub disjoint_topics: bool,
    /// Dirichlet concentration of word weights inside a topic's support.
    pub word_concentration: f64,
    /// Share of each document's mixture spread over all topics; 0 gives one topic per document.
    pub doc_mixing: f64,
    pub doc_alpha: f64,
    /// Probability a document's dominant topic comes from its own group's half
    /// of the topics rather than from all topics.
    pub group_separation: f64,
}

impl Default for TopicCorpusConfig {
    fn default() -> Self {
        TopicCorpusConfig {
            n_topics: 3,
            vocab_size: 30,
            n_docs: 300,
            doc_length: 50,
            disjoint_topics: true,
            word_concentration: 1.0,
            doc_mixing: 0.0,
            doc_alpha: 0.1,
            group_separation: 0.0,
        }
    }
}

impl TopicCorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_topics == 0 || self.doc_length == 0 {
            return Err(Error::Config("topic count and document length must be positive".into()));
        }
        if self.disjoint_topics && self.vocab_size < self.n_topics {
            return Err(Error::Config("disjoint topics need at least one word each".into()));
        }
        if self.vocab_size == 0 {
            return Err(Error::Config("vocabulary must be nonempty".into()));
        }
        check_probability("doc_mixing", self.doc_mixing)?;
        check_probability("group_separation", self.group_separation)?;
        if !(self.word_concentration > 0.0 && self.doc_alpha > 0.0) {
            return Err(Error::Config("Dirichlet concentrations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// Labeled profiles used for training.
    pub n_profiles: usize,
    pub label_mix: [f64; 4],
    /// Share of Anonymous profiles given common-word names found in the name lists.
    pub adversarial_fraction: f64,
    /// Share of Identifiable and Partially Anonymous profiles written as one unseparated handle.
    pub concatenated_fraction: f64,
    pub non_english_fraction: f64,
    pub ephemeral_fraction: f64,
    pub spam_fraction: f64,
    /// Accounts available to follow targets, generated like the training profiles.
    pub follower_pool: usize,
    pub n_targets: usize,
    pub followers_per_target: (usize, usize),
    pub sensitive_target_fraction: f64,
    /// Probability that a follower slot is drawn from the anonymous accounts
    /// (sensitive target) or identifiable accounts (non-sensitive target)
    /// instead of from the whole pool.
    pub anonymity_bias: f64,
    pub corpus: TopicCorpusConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_profiles: 10_000,
            label_mix: DEFAULT_LABEL_MIX,
            adversarial_fraction: 0.10,
            concatenated_fraction: 0.15,
            non_english_fraction: 0.04,
            ephemeral_fraction: 0.03,
            spam_fraction: 0.03,
            follower_pool: 5_000,
            n_targets: 200,
            followers_per_target: (500, 500),
            sensitive_target_fraction: 0.3,
            anonymity_bias: 0.5,
            corpus: TopicCorpusConfig {
                n_topics: 20,
                vocab_size: 400,
                n_docs: 0,
                doc_length: 200,
                doc_mixing: 0.3,
                group_separation: 0.8,
                ..TopicCorpusConfig::default()
            },
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.label_mix.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.label_mix.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Config(format!("label mix must be nonnegative and sum to 1, got {total}")));
        }
        for (name, p) in [
            ("adversarial_fraction", self.adversarial_fraction),
            ("concatenated_fraction", self.concatenated_fraction),
            ("sensitive_target_fraction", self.sensitive_target_fraction),
            ("anonymity_bias", self.anonymity_bias),
        ] {
            check_probability(name, p)?;
        }
        let noise = self.non_english_fraction + self.ephemeral_fraction + self.spam_fraction;
        for (name, p) in [
            ("non_english_fraction", self.non_english_fraction),
            ("ephemeral_fraction", self.ephemeral_fraction),
            ("spam_fraction", self.spam_fraction),
            ("noise fractions combined", noise),
        ] {
            check_probability(name, p)?;
        }
        let (lo, hi) = self.followers_per_target;
        if lo > hi {
            return Err(Error::Config(format!("followers_per_target range {lo}..={hi} is empty")));
        }
        self.corpus.validate()
    }
}

/// Label counts in [`AnonymityLabel::ALL`] order.
pub fn label_counts(labels: &[AnonymityLabel]) -> [usize; 4] {
    let mut counts = [0; 4];
    for l in labels {
        let i = AnonymityLabel::ALL.iter().position(|x| x == l).expect("label in ALL");
        counts[i] += 1;
    }
    counts
}

pub(crate) fn flush_csv<W: Write>(mut csv: csv::Writer<W>, what: &str) -> Result<()> {
    csv.flush().map_err(|e| Error::io(what, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SynthConfig::default().validate().unwrap();
        let total: f64 = DEFAULT_LABEL_MIX.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_configs_rejected() {
        let mut c = SynthConfig { label_mix: [0.5, 0.5, 0.5, 0.0], ..Default::default() };
        assert!(c.validate().is_err());
        c.label_mix = DEFAULT_LABEL_MIX;
        c.anonymity_bias = 1.5;
        assert!(c.validate().is_err());
        c.anonymity_bias = 0.5;
        c.followers_per_target = (10, 5);
        assert!(c.validate().is_err());
    }
}
