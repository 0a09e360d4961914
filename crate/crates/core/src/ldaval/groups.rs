use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::cvb0::{train_cvb0, LdaConfig, TopicModel};
use crate::error::{Error, Result};
use crate::metrics::percentile;

/// Per-topic sums of document-topic proportions for two groups of documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicGroupWeights {
    pub group_a: String,
    pub group_b: String,
    pub docs_a: usize,
    pub docs_b: usize,
    pub weight_a: Vec<f64>,
    pub weight_b: Vec<f64>,
    /// `weight_a / weight_b`, infinite when `weight_b` is zero.
    pub ratio: Vec<f64>,
}

impl TopicGroupWeights {
    pub fn n_topics(&self) -> usize {
        self.ratio.len()
    }

    /// Builds weights directly from per-topic sums.
    pub fn from_weights(group_a: &str, group_b: &str, weight_a: Vec<f64>, weight_b: Vec<f64>) -> Self {
        let ratio = weight_a
            .iter()
            .zip(&weight_b)
            .map(|(a, b)| if *b == 0.0 { f64::INFINITY } else { a / b })
            .collect();
        TopicGroupWeights {
            group_a: group_a.into(),
            group_b: group_b.into(),
            docs_a: 0,
            docs_b: 0,
            weight_a,
            weight_b,
            ratio,
        }
    }
}

/// Sums each topic's proportion over the documents of `group_a` and of `group_b`.
/// `model` must have been trained on `corpus`.
pub fn cumulative_topic_weights(
    model: &TopicModel,
    corpus: &Corpus,
    group_a: &str,
    group_b: &str,
) -> Result<TopicGroupWeights> {
    if model.doc_topic.len() != corpus.len() {
        return Err(Error::invalid("model and corpus have different document counts"));
    }
    let k = model.n_topics;
    let (mut wa, mut wb) = (vec![0.0; k], vec![0.0; k]);
    let (mut na, mut nb) = (0, 0);
    for (doc, theta) in corpus.documents.iter().zip(&model.doc_topic) {
        let target = if doc.group == group_a {
            na += 1;
            &mut wa
        } else if doc.group == group_b {
            nb += 1;
            &mut wb
        } else {
            continue;
        };
        target.iter_mut().zip(theta).for_each(|(w, t)| *w += t);
    }
    for (name, n) in [(group_a, na), (group_b, nb)] {
        if n == 0 {
            return Err(Error::invalid(format!("group {name:?} has no documents")));
        }
    }
    let mut w = TopicGroupWeights::from_weights(group_a, group_b, wa, wb);
    w.docs_a = na;
    w.docs_b = nb;
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedTopic {
    pub topic: usize,
    pub ratio: f64,
    pub weight_a: f64,
    pub weight_b: f64,
}

/// Topics by decreasing ratio. Infinite ratios come first, ordered by their
/// numerator; remaining ties go by topic index.
pub fn ratio_ranking(w: &TopicGroupWeights) -> Vec<RankedTopic> {
    let mut out: Vec<RankedTopic> = (0..w.n_topics())
        .map(|topic| RankedTopic {
            topic,
            ratio: w.ratio[topic],
            weight_a: w.weight_a[topic],
            weight_b: w.weight_b[topic],
        })
        .collect();
    out.sort_by(|a, b| {
        let by_ratio = b.ratio.total_cmp(&a.ratio);
        let inf_tie = if a.ratio.is_infinite() && b.ratio.is_infinite() {
            b.weight_a.total_cmp(&a.weight_a)
        } else {
            Ordering::Equal
        };
        by_ratio.then(inf_tie).then(a.topic.cmp(&b.topic))
    });
    out
}

/// Topics whose ratio lies in `[lo, hi]`.
pub fn overlap_count(w: &TopicGroupWeights, lo: f64, hi: f64) -> Result<usize> {
    if lo > hi {
        return Err(Error::invalid(format!("empty ratio band [{lo}, {hi}]")));
    }
    Ok(w.ratio.iter().filter(|&&r| lo <= r && r <= hi).count())
}

/// The `n` most probable words of `topic`, ties broken alphabetically.
pub fn top_terms(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>> {
    let Some(row) = model.topic_word.get(topic) else {
        return Err(Error::invalid(format!("topic {topic} out of range")));
    };
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| {
        row[b]
            .total_cmp(&row[a])
            .then_with(|| model.vocabulary[a].cmp(&model.vocabulary[b]))
    });
    Ok(idx.into_iter().take(n).map(|i| model.vocabulary[i].clone()).collect())
}

/// 90th over 10th percentile of the ratios: 1 for a perfectly flat curve.
pub fn flatness(ratios: &[f64]) -> f64 {
    match (percentile(ratios, 0.9), percentile(ratios, 0.1)) {
        (Some(hi), Some(lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// One corpus with its two group tags, to be compared.
#[derive(Debug, Clone)]
pub struct GroupComparison<'a> {
    pub name: String,
    pub corpus: &'a Corpus,
    pub group_a: String,
    pub group_b: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub name: String,
    pub weights: TopicGroupWeights,
    pub ranking: Vec<RankedTopic>,
    pub flatness: f64,
    pub model: TopicModel,
}

/// Runs train, weigh and rank independently for each comparison with the same config.
pub fn compare_groups(comparisons: &[GroupComparison<'_>], cfg: &LdaConfig) -> Result<Vec<RatioCurve>> {
    comparisons
        .iter()
        .map(|c| {
            let model = train_cvb0(c.corpus, cfg)?;
            let weights = cumulative_topic_weights(&model, c.corpus, &c.group_a, &c.group_b)?;
            let ranking = ratio_ranking(&weights);
            let flatness = flatness(&weights.ratio);
            Ok(RatioCurve {
                name: c.name.clone(),
                weights,
                ranking,
                flatness,
                model,
            })
        })
        .collect()
}

/// `topic,weight_<a>,weight_<b>,ratio,top_terms` in ranking order.
pub fn write_topics_csv<W: Write>(out: W, model: &TopicModel, w: &TopicGroupWeights, n_terms: usize) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record([
        "topic".to_string(),
        format!("weight_{}", w.group_a),
        format!("weight_{}", w.group_b),
        "ratio".to_string(),
        "top_terms".to_string(),
    ])?;
    for r in ratio_ranking(w) {
        csv.write_record([
            r.topic.to_string(),
            r.weight_a.to_string(),
            r.weight_b.to_string(),
            r.ratio.to_string(),
            top_terms(model, r.topic, n_terms)?.join(" "),
        ])?;
    }
    csv.flush().map_err(|e| Error::io("<topics csv>", e))
}

/// Long-format ratio curves: `curve,rank,topic,ratio`.
pub fn write_ratio_curves_csv<W: Write>(out: W, curves: &[RatioCurve]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["curve", "rank", "topic", "ratio"])?;
    for c in curves {
        for (rank, r) in c.ranking.iter().enumerate() {
            csv.write_record([c.name.clone(), rank.to_string(), r.topic.to_string(), r.ratio.to_string()])?;
        }
    }
    csv.flush().map_err(|e| Error::io("<ratio csv>", e))
}
