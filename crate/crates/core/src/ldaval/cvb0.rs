//! Zero-order collapsed variational Bayes (CVB0) inference for LDA.
//!
//! Each distinct word of a document carries one responsibility vector over
//! topics, shared by all its occurrences. An iteration recomputes every
//! responsibility from a snapshot of the previous iteration's expected counts:
//!
//! ```text
//! gamma[d,w,k] ∝ (N[k,w] - g + eta) / (N[k] - g + V*eta) * (N[d,k] - g + alpha)
//! ```
//!
//! where `g = gamma[d,w,k]` removes the current occurrence from each count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use crate::error::{Error, Result};

/// Maximum allowed rise in training perplexity between iterations.
pub const PERPLEXITY_RISE_TOLERANCE: f64 = 1e-6;
/// Normalization slack for every distribution row.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub n_topics: usize,
    pub alpha: f64,
    pub eta: f64,
    pub max_iterations: usize,
    /// Stop when training perplexity changes by less than this fraction.
    pub convergence_tol: f64,
    pub seed: u64,
    /// Fail the run when training perplexity rises by more than
    /// `PERPLEXITY_RISE_TOLERANCE`.
    pub enforce_monotone: bool,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            n_topics: 250,
            alpha: 0.01,
            eta: 0.01,
            max_iterations: 500,
            convergence_tol: 1e-6,
            seed: 0,
            enforce_monotone: true,
        }
    }
}

impl LdaConfig {
    pub fn with_topics(self, n_topics: usize) -> Self {
        LdaConfig { n_topics, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.n_topics == 0 {
            return Err(Error::invalid("LDA needs at least one topic"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!(
                "Dirichlet priors must be positive (alpha={}, eta={})",
                self.alpha, self.eta
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub training_perplexity: f64,
    /// Largest |row sum - 1| over responsibilities, doc-topic and topic-word rows.
    pub max_normalization_error: f64,
}

/// Responsibilities of one document's distinct words, `K` values per word.
#[derive(Debug, Clone, PartialEq)]
pub struct DocResponsibilities {
    pub words: Vec<(usize, u32)>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub n_topics: usize,
    pub alpha: f64,
    pub eta: f64,
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<String>,
    pub gamma: Vec<DocResponsibilities>,
    /// Per-document topic proportions.
    pub doc_topic: Vec<Vec<f64>>,
    /// Per-topic word distributions over `vocabulary`.
    pub topic_word: Vec<Vec<f64>>,
    pub trace: Vec<IterationStats>,
    pub converged: bool,
    /// True when there were fewer token occurrences than topics.
    pub more_topics_than_tokens: bool,
}

impl TopicModel {
    /// A model with the given topic-word distributions and no training state.
    pub fn from_topic_word(vocabulary: Vec<String>, topic_word: Vec<Vec<f64>>, alpha: f64, eta: f64) -> Self {
        TopicModel {
            n_topics: topic_word.len(),
            alpha,
            eta,
            vocabulary,
            doc_ids: Vec::new(),
            gamma: Vec::new(),
            doc_topic: Vec::new(),
            topic_word,
            trace: Vec::new(),
            converged: true,
            more_topics_than_tokens: false,
        }
    }
}

struct Counts {
    topic_word: Vec<f64>, // K x V
    topic: Vec<f64>,      // K
    doc_topic: Vec<f64>,  // D x K
}

fn accumulate(docs: &[DocResponsibilities], k: usize, v: usize) -> Counts {
    let mut c = Counts {
        topic_word: vec![0.0; k * v],
        topic: vec![0.0; k],
        doc_topic: vec![0.0; docs.len() * k],
    };
    for (d, doc) in docs.iter().enumerate() {
        let dk = &mut c.doc_topic[d * k..(d + 1) * k];
        for (j, &(w, n)) in doc.words.iter().enumerate() {
            let g = &doc.gamma[j * k..(j + 1) * k];
            let n = n as f64;
            for t in 0..k {
                let e = n * g[t];
                dk[t] += e;
                c.topic_word[t * v + w] += e;
            }
        }
    }
    for t in 0..k {
        c.topic[t] = c.topic_word[t * v..(t + 1) * v].iter().sum();
    }
    c
}

fn normalize(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    if s > 0.0 && s.is_finite() {
        row.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|x| *x = u);
    }
}

fn row_error(row: &[f64]) -> f64 {
    (row.iter().sum::<f64>() - 1.0).abs()
}

struct Derived {
    doc_topic: Vec<Vec<f64>>,
    topic_word: Vec<Vec<f64>>,
}

fn derive(c: &Counts, docs: &[DocResponsibilities], k: usize, v: usize, alpha: f64, eta: f64) -> Derived {
    let doc_topic = docs
        .iter()
        .enumerate()
        .map(|(d, _)| {
            let mut row: Vec<f64> = c.doc_topic[d * k..(d + 1) * k].iter().map(|x| x + alpha).collect();
            normalize(&mut row);
            row
        })
        .collect();
    let topic_word = (0..k)
        .map(|t| {
            let mut row: Vec<f64> = c.topic_word[t * v..(t + 1) * v].iter().map(|x| x + eta).collect();
            normalize(&mut row);
            row
        })
        .collect();
    Derived { doc_topic, topic_word }
}

fn training_perplexity(docs: &[DocResponsibilities], d: &Derived) -> f64 {
    let (mut ll, mut n) = (0.0, 0.0);
    for (doc, theta) in docs.iter().zip(&d.doc_topic) {
        for &(w, c) in &doc.words {
            let p: f64 = theta.iter().zip(&d.topic_word).map(|(th, phi)| th * phi[w]).sum();
            ll += c as f64 * p.ln();
            n += c as f64;
        }
    }
    (-ll / n).exp()
}

fn max_error(docs: &[DocResponsibilities], d: &Derived, k: usize) -> f64 {
    let gamma_err = docs
        .iter()
        .flat_map(|doc| doc.gamma.chunks(k).map(row_error))
        .fold(0.0, f64::max);
    let dt = d.doc_topic.iter().map(|r| row_error(r)).fold(0.0, f64::max);
    let tw = d.topic_word.iter().map(|r| row_error(r)).fold(0.0, f64::max);
    gamma_err.max(dt).max(tw)
}

/// Trains CVB0 LDA until `max_iterations` or until the relative change in
/// training perplexity drops below `convergence_tol`.
pub fn train_cvb0(corpus: &Corpus, cfg: &LdaConfig) -> Result<TopicModel> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::invalid("cannot train a topic model on an empty corpus"));
    }
    let k = cfg.n_topics;
    let v = corpus.vocabulary.len();
    let (alpha, eta) = (cfg.alpha, cfg.eta);
    let v_eta = v as f64 * eta;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut docs: Vec<DocResponsibilities> = corpus
        .documents
        .iter()
        .map(|d| {
            let words = d.counts();
            let mut gamma: Vec<f64> = (0..words.len() * k).map(|_| rng.random::<f64>() + 1e-3).collect();
            gamma.chunks_mut(k).for_each(normalize);
            DocResponsibilities { words, gamma }
        })
        .collect();

    let mut counts = accumulate(&docs, k, v);
    let mut derived = derive(&counts, &docs, k, v, alpha, eta);
    let mut prev = training_perplexity(&docs, &derived);
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=cfg.max_iterations {
        let snapshot = &counts;
        docs.par_iter_mut().enumerate().for_each(|(d, doc)| {
            let dk = &snapshot.doc_topic[d * k..(d + 1) * k];
            let mut fresh = vec![0.0; k];
            for (j, &(w, _)) in doc.words.iter().enumerate() {
                let g = &mut doc.gamma[j * k..(j + 1) * k];
                for t in 0..k {
                    let own = g[t];
                    let word_part = (snapshot.topic_word[t * v + w] - own).max(0.0) + eta;
                    let topic_part = (snapshot.topic[t] - own).max(0.0) + v_eta;
                    let doc_part = (dk[t] - own).max(0.0) + alpha;
                    fresh[t] = word_part / topic_part * doc_part;
                }
                normalize(&mut fresh);
                g.copy_from_slice(&fresh);
            }
        });
        counts = accumulate(&docs, k, v);
        derived = derive(&counts, &docs, k, v, alpha, eta);
        let perp = training_perplexity(&docs, &derived);
        trace.push(IterationStats {
            iteration,
            training_perplexity: perp,
            max_normalization_error: max_error(&docs, &derived, k),
        });
        if cfg.enforce_monotone && perp > prev + PERPLEXITY_RISE_TOLERANCE {
            return Err(Error::NotConverged(format!(
                "training perplexity rose from {prev} to {perp} at iteration {iteration}"
            )));
        }
        let rel = (prev - perp).abs() / prev;
        prev = perp;
        if rel < cfg.convergence_tol {
            converged = true;
            break;
        }
    }

    Ok(TopicModel {
        n_topics: k,
        alpha,
        eta,
        vocabulary: corpus.vocabulary.tokens().to_vec(),
        doc_ids: corpus.documents.iter().map(|d| d.id.clone()).collect(),
        gamma: docs,
        doc_topic: derived.doc_topic,
        topic_word: derived.topic_word,
        trace,
        converged,
        more_topics_than_tokens: k > corpus.total_tokens(),
    })
}
