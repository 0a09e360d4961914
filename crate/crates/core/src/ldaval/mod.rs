//! Topic analysis used to check that two groups of accounts talk about
//! different things: per-account documents, CVB0 LDA, held-out perplexity,
//! and cumulative topic-weight ratios between groups.

mod corpus;
mod cvb0;
mod eval;
mod groups;
mod tokenize;

pub use corpus::{build_documents, Corpus, Document, DroppedDocument, Vocabulary};
pub use cvb0::{
    train_cvb0, DocResponsibilities, IterationStats, LdaConfig, TopicModel, NORMALIZATION_TOLERANCE,
    PERPLEXITY_RISE_TOLERANCE,
};
pub use eval::{perplexity, select_topic_count, split_corpus, PerplexityReport, TopicCountSelection};
pub use groups::{
    compare_groups, cumulative_topic_weights, flatness, overlap_count, ratio_ranking, top_terms,
    write_ratio_curves_csv, write_topics_csv, GroupComparison, RankedTopic, RatioCurve, TopicGroupWeights,
};
pub use tokenize::{tokenize, Tokenizer};

/// Default number of most recent tweets per account.
pub const DEFAULT_MAX_TWEETS: usize = 200;
