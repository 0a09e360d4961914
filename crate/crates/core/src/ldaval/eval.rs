use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::cvb0::{train_cvb0, LdaConfig, TopicModel};
use crate::error::{Error, Result};
use crate::seeds;

const FOLD_IN_ITERATIONS: usize = 200;
const FOLD_IN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub perplexity: f64,
    pub tokens_scored: usize,
    pub tokens_folded_in: usize,
    /// Held-out tokens missing from the model's vocabulary.
    pub unseen_dropped: usize,
}

/// Estimates a document's topic proportions from `tokens` with the topics held fixed.
fn fold_in(model: &TopicModel, tokens: &[usize]) -> Vec<f64> {
    let k = model.n_topics;
    let alpha = model.alpha;
    let mut counts: HashMap<usize, u32> = HashMap::new();
    for &t in tokens {
        *counts.entry(t).or_default() += 1;
    }
    let mut words: Vec<(usize, u32)> = counts.into_iter().collect();
    words.sort_unstable();

    let mut gamma = vec![1.0 / k as f64; words.len() * k];
    let mut dk = vec![0.0; k];
    let refresh = |gamma: &[f64], dk: &mut [f64]| {
        dk.iter_mut().for_each(|x| *x = 0.0);
        for (j, &(_, n)) in words.iter().enumerate() {
            for t in 0..k {
                dk[t] += n as f64 * gamma[j * k + t];
            }
        }
    };
    refresh(&gamma, &mut dk);
    for _ in 0..FOLD_IN_ITERATIONS {
        let mut change: f64 = 0.0;
        let mut fresh = vec![0.0; k];
        for (j, &(w, _)) in words.iter().enumerate() {
            let g = &gamma[j * k..(j + 1) * k];
            for t in 0..k {
                fresh[t] = model.topic_word[t][w] * ((dk[t] - g[t]).max(0.0) + alpha);
            }
            let s: f64 = fresh.iter().sum();
            for t in 0..k {
                fresh[t] /= s;
                change = change.max((fresh[t] - gamma[j * k + t]).abs());
            }
            gamma[j * k..(j + 1) * k].copy_from_slice(&fresh);
        }
        refresh(&gamma, &mut dk);
        if change < FOLD_IN_TOL {
            break;
        }
    }
    let total = tokens.len() as f64 + k as f64 * alpha;
    dk.iter().map(|x| (x + alpha) / total).collect()
}

/// Document-completion perplexity: the first half of each held-out document
/// is folded in, the second half is scored.
pub fn perplexity(model: &TopicModel, heldout: &Corpus) -> Result<PerplexityReport> {
    if heldout.is_empty() {
        return Err(Error::invalid("held-out set is empty"));
    }
    let index: HashMap<&str, usize> = model
        .vocabulary
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let mut report = PerplexityReport {
        perplexity: 0.0,
        tokens_scored: 0,
        tokens_folded_in: 0,
        unseen_dropped: 0,
    };
    let mut log_lik = 0.0;
    for doc in &heldout.documents {
        let mapped: Vec<usize> = doc
            .tokens
            .iter()
            .filter_map(|&t| index.get(heldout.vocabulary.token(t)).copied())
            .collect();
        report.unseen_dropped += doc.tokens.len() - mapped.len();
        let half = mapped.len() / 2;
        let (context, scored) = mapped.split_at(half);
        let theta = fold_in(model, context);
        for &w in scored {
            let p: f64 = theta.iter().zip(&model.topic_word).map(|(th, phi)| th * phi[w]).sum();
            log_lik += p.ln();
        }
        report.tokens_folded_in += context.len();
        report.tokens_scored += scored.len();
    }
    if report.tokens_scored == 0 {
        return Err(Error::invalid("no held-out tokens left to score"));
    }
    report.perplexity = (-log_lik / report.tokens_scored as f64).exp();
    Ok(report)
}

/// Deterministic document split: `train_fraction` of the shuffled documents
/// for training, the rest held out. Both sides keep at least one document.
pub fn split_corpus(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if corpus.len() < 2 {
        return Err(Error::invalid("need at least two documents to split"));
    }
    let mut idx: Vec<usize> = (0..corpus.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((corpus.len() as f64 * train_fraction).round() as usize).clamp(1, corpus.len() - 1);
    Ok((corpus.subset(&idx[..n_train]), corpus.subset(&idx[n_train..])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCountSelection {
    pub chosen: usize,
    /// `(K, held-out perplexity)` for every candidate, in candidate order.
    pub curve: Vec<(usize, f64)>,
}

/// Trains one model per candidate on an 80% split and keeps the candidate with
/// the lowest held-out perplexity (ties go to the smaller K).
pub fn select_topic_count(corpus: &Corpus, candidates: &[usize], cfg: &LdaConfig) -> Result<TopicCountSelection> {
    if candidates.is_empty() {
        return Err(Error::invalid("no topic-count candidates"));
    }
    let (train, heldout) = split_corpus(corpus, 0.8, seeds::derive(cfg.seed, 0x5B17))?;
    let mut curve = Vec::with_capacity(candidates.len());
    for &k in candidates {
        let model = train_cvb0(&train, &cfg.with_topics(k))?;
        curve.push((k, perplexity(&model, &heldout)?.perplexity));
    }
    let chosen = curve
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|c| c.0)
        .expect("nonempty");
    Ok(TopicCountSelection { chosen, curve })
}
