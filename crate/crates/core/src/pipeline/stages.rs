use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use chrono::{TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{create_dir, create_file, require, svg, write_json, write_string, HyperplaneMode, PipelineConfig};
use crate::anonclf::{
    cross_validate, predict_accounts, read_predictions_csv, sweep_costs, write_predictions_csv, CostConfig,
    FusedLabel, FusedModel,
};
use crate::error::{Error, Result};
use crate::features::{extract_features, information_gain, write_feature_csv, LabeledDataset, FEATURE_NAMES, NUM_FEATURES};
use crate::ingest::{parse_account_records, parse_tweets, sanitize, write_jsonl, AccountProfile, SanitizationReport};
use crate::ldaval::{
    build_documents, compare_groups, cumulative_topic_weights, overlap_count, ratio_ranking, select_topic_count,
    train_cvb0, write_ratio_curves_csv, write_topics_csv, GroupComparison, RatioCurve, Tokenizer, TopicModel,
    PERPLEXITY_RISE_TOLERANCE,
};
use crate::metrics::{auc, PrecisionRecall};
use crate::namekb::{baseline_namelist_label, AnonymityLabel};
use crate::seeds;
use crate::sensitivity::{
    classify_sensitivity, fit_linear_svm, follower_fractions, rank_extremes, write_scatter_csv, write_scores_csv,
    FollowerStats, Hyperplane, Sensitivity, SensitivityScore, SvmPoint,
};
use crate::synth::{
    documents_to_tweets, generate_documents, generate_follow_graph, generate_follower_pool, generate_profiles,
    label_counts, write_edges_csv, write_profile_truth_csv, write_targets_truth_csv,
};

pub(crate) const SENSITIVE: &str = "Sensitive";
pub(crate) const NON_SENSITIVE: &str = "NonSensitive";

fn label_map(labels: &[AnonymityLabel]) -> BTreeMap<String, usize> {
    AnonymityLabel::ALL
        .iter()
        .zip(label_counts(labels))
        .map(|(l, n)| (l.to_string(), n))
        .collect()
}

/// Reads two named columns of a headed CSV into an ordered map.
fn read_column_pair(path: &Path, key: &str, value: &str) -> Result<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column {name:?}"),
        })
    };
    let (k, v) = (col(key)?, col(value)?);
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        out.insert(rec.get(k).unwrap_or_default().to_string(), rec.get(v).unwrap_or_default().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub seed: u64,
    pub profiles: usize,
    pub profile_labels: BTreeMap<String, usize>,
    pub follower_pool: usize,
    pub targets: usize,
    pub sensitive_targets: usize,
    pub edges: usize,
    pub tweets: usize,
}

/// Writes every synthetic input file and its ground truth.
pub fn cmd_synth(cfg: &PipelineConfig) -> Result<SynthSummary> {
    let dir = cfg.data_dir();
    create_dir(&dir)?;
    let kb = cfg.knowledge_base()?;
    let sc = &cfg.synth;

    let profiles = generate_profiles(&kb, sc)?;
    write_jsonl(dir.join("accounts.jsonl"), profiles.iter().map(|p| &p.profile))?;
    write_profile_truth_csv(create_file(&dir.join("truth_accounts.csv"))?, &profiles)?;

    let pool = generate_follower_pool(&kb, sc)?;
    write_jsonl(dir.join("followers.jsonl"), pool.iter().map(|p| &p.profile))?;
    write_profile_truth_csv(create_file(&dir.join("truth_followers.csv"))?, &pool)?;

    let pool_labels: Vec<(String, AnonymityLabel)> = pool.iter().map(|p| (p.profile.id.clone(), p.label)).collect();
    let graph = generate_follow_graph(&pool_labels, sc)?;
    write_edges_csv(create_file(&dir.join("edges.csv"))?, &graph)?;
    write_targets_truth_csv(create_file(&dir.join("truth_targets.csv"))?, &graph)?;

    let docs: Vec<(String, String)> =
        graph.targets.iter().map(|t| (t.id.clone(), t.sensitivity.as_str().to_string())).collect();
    let planted = generate_documents(&sc.corpus, &docs, Sensitivity::Sensitive.as_str(), seeds::derive(sc.seed, 30))?;
    let start = Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    let tweets = documents_to_tweets(&planted.corpus, 10, start);
    write_jsonl(dir.join("tweets.jsonl"), &tweets)?;
    let mut w = csv::Writer::from_writer(create_file(&dir.join("truth_documents.csv"))?);
    w.write_record(["target_id", "group", "dominant_topic"])?;
    for (doc, t) in planted.corpus.documents.iter().zip(&planted.dominant_topic) {
        w.write_record([doc.id.as_str(), doc.group.as_str(), &t.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("truth_documents.csv"), e))?;

    let labels: Vec<AnonymityLabel> = profiles.iter().map(|p| p.label).collect();
    let summary = SynthSummary {
        seed: sc.seed,
        profiles: profiles.len(),
        profile_labels: label_map(&labels),
        follower_pool: pool.len(),
        targets: graph.targets.len(),
        sensitive_targets: graph.targets.iter().filter(|t| t.sensitivity == Sensitivity::Sensitive).count(),
        edges: graph.edge_count(),
        tweets: tweets.len(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub accounts_read: usize,
    pub malformed_lines: usize,
    pub sanitization: SanitizationReport,
    pub unlabeled: usize,
    pub training_rows: usize,
    pub training_labels: BTreeMap<String, usize>,
    pub costs: CostConfig,
    pub folds: usize,
    pub fused_anonymous: PrecisionRecall,
    pub fused_identifiable: PrecisionRecall,
    pub baseline_anonymous: PrecisionRecall,
    pub baseline_identifiable: PrecisionRecall,
}

fn write_pr_rows<W: Write>(w: &mut csv::Writer<W>, method: &str, costs: &str, class: &str, pr: &PrecisionRecall) -> Result<()> {
    w.write_record([
        method,
        costs,
        class,
        &pr.precision.to_string(),
        &pr.recall.to_string(),
        &pr.true_positives.to_string(),
        &pr.predicted.to_string(),
        &pr.actual.to_string(),
    ])?;
    Ok(())
}

/// Trains the fused classifier on labeled accounts and reports its
/// cross-validated quality, a cost sweep, and per-feature information gain.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainSummary> {
    let data = cfg.data_dir();
    let parsed = parse_account_records(require(&data.join("accounts.jsonl"))?)?;
    let labels = read_column_pair(require(&data.join("truth_accounts.csv"))?, "id", "label")?;
    let dir = cfg.stage_dir("train");
    create_dir(&dir)?;
    let kb = cfg.knowledge_base()?;

    let (clean, sanitization) = sanitize(&parsed.records);
    let mut labeled: Vec<(AccountProfile, AnonymityLabel)> = Vec::with_capacity(clean.len());
    let mut unlabeled = 0;
    for p in clean {
        match labels.get(&p.id) {
            Some(l) => {
                let label = l.parse()?;
                labeled.push((p, label));
            }
            None => unlabeled += 1,
        }
    }
    if labeled.is_empty() {
        return Err(Error::invalid(format!("{}: no labeled accounts survive sanitization", data.display())));
    }
    let ds = LabeledDataset::from_profiles(&kb, &labeled);

    let mut w = csv::Writer::from_writer(create_file(&dir.join("information_gain.csv"))?);
    w.write_record(["feature", "gain_anonymous", "gain_identifiable"])?;
    for (f, name) in FEATURE_NAMES.iter().enumerate().take(NUM_FEATURES) {
        let a = information_gain(&ds, f, AnonymityLabel::Anonymous)?;
        let i = information_gain(&ds, f, AnonymityLabel::Identifiable)?;
        w.write_record([name.to_string(), a.to_string(), i.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("information_gain.csv"), e))?;

    let vectors: Vec<_> = labeled.iter().map(|(p, l)| (extract_features(&kb, p), *l)).collect();
    write_feature_csv(create_file(&dir.join("features.csv"))?, &vectors)?;

    let cv = cross_validate(&ds, cfg.costs, cfg.forest, cfg.train.folds, cfg.seed)?;
    let baseline: Vec<AnonymityLabel> = labeled.iter().map(|(p, _)| baseline_namelist_label(&kb, p)).collect();
    let base = |target: AnonymityLabel| {
        PrecisionRecall::from_pairs(baseline.iter().zip(&labeled).map(|(b, (_, t))| (*b == target, *t == target)))
    };
    let (base_a, base_i) = (base(AnonymityLabel::Anonymous), base(AnonymityLabel::Identifiable));

    let costs = format!("{},{}", cfg.costs.anonymous_cost, cfg.costs.identifiable_cost);
    let mut w = csv::Writer::from_writer(create_file(&dir.join("cv_report.csv"))?);
    w.write_record(["method", "costs", "class", "precision", "recall", "true_positives", "predicted", "actual"])?;
    write_pr_rows(&mut w, "fused", &costs, "Anonymous", &cv.anonymous)?;
    write_pr_rows(&mut w, "fused", &costs, "Identifiable", &cv.identifiable)?;
    write_pr_rows(&mut w, "baseline", "", "Anonymous", &base_a)?;
    write_pr_rows(&mut w, "baseline", "", "Identifiable", &base_i)?;
    w.flush().map_err(|e| Error::io(dir.join("cv_report.csv"), e))?;

    let mut w = csv::Writer::from_writer(create_file(&dir.join("cost_sweep.csv"))?);
    w.write_record(["classifier", "cost", "precision", "recall"])?;
    let mut series = Vec::new();
    for target in [AnonymityLabel::Anonymous, AnonymityLabel::Identifiable] {
        let pts = sweep_costs(&ds, &cfg.train.cost_grid, target, cfg.forest, cfg.train.folds, cfg.seed)?;
        for p in &pts {
            w.write_record([target.to_string(), p.cost.to_string(), p.precision.to_string(), p.recall.to_string()])?;
        }
        series.push((target.to_string(), pts.iter().map(|p| (p.recall, p.precision)).collect()));
    }
    w.flush().map_err(|e| Error::io(dir.join("cost_sweep.csv"), e))?;
    write_string(
        &dir.join("cost_sweep.svg"),
        &svg::line_chart("Precision vs recall over cost", "recall", "precision", &series),
    )?;

    let model = FusedModel::train(&ds, cfg.costs, cfg.forest, cfg.seed)?;
    model.save(dir.join("model.json"))?;

    let summary = TrainSummary {
        accounts_read: parsed.records.len(),
        malformed_lines: parsed.skipped,
        sanitization,
        unlabeled,
        training_rows: ds.len(),
        training_labels: label_map(ds.labels()),
        costs: cfg.costs,
        folds: cfg.train.folds,
        fused_anonymous: cv.anonymous,
        fused_identifiable: cv.identifiable,
        baseline_anonymous: base_a,
        baseline_identifiable: base_i,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifySummary {
    pub accounts_read: usize,
    pub malformed_lines: usize,
    pub sanitization: SanitizationReport,
    pub classified: usize,
    pub labels: BTreeMap<String, usize>,
    /// Agreement with ground truth when a truth file is present.
    pub truth_anonymous: Option<PrecisionRecall>,
    pub truth_identifiable: Option<PrecisionRecall>,
}

/// Applies the trained classifier to the sanitized follower dump.
pub fn cmd_classify(cfg: &PipelineConfig) -> Result<ClassifySummary> {
    let data = cfg.data_dir();
    let model = FusedModel::load(require(&cfg.stage_dir("train").join("model.json"))?)?;
    let parsed = parse_account_records(require(&data.join("followers.jsonl"))?)?;
    let dir = cfg.stage_dir("classify");
    create_dir(&dir)?;
    let kb = cfg.knowledge_base()?;

    let (clean, sanitization) = sanitize(&parsed.records);
    let preds = predict_accounts(&model, &kb, &clean);
    write_predictions_csv(create_file(&dir.join("follower_labels.csv"))?, &preds)?;

    let mut labels: BTreeMap<String, usize> =
        [FusedLabel::Anonymous, FusedLabel::Identifiable, FusedLabel::Unknown].iter().map(|l| (l.to_string(), 0)).collect();
    for p in &preds {
        *labels.entry(p.label.to_string()).or_default() += 1;
    }
    let truth_path = data.join("truth_followers.csv");
    let (truth_anonymous, truth_identifiable) = if truth_path.exists() {
        let truth = read_column_pair(&truth_path, "id", "label")?;
        let score = |fused: FusedLabel, label: &str| {
            PrecisionRecall::from_pairs(
                preds
                    .iter()
                    .filter_map(|p| truth.get(&p.account_id).map(|t| (p.label == fused, t == label))),
            )
        };
        (Some(score(FusedLabel::Anonymous, "Anonymous")), Some(score(FusedLabel::Identifiable, "Identifiable")))
    } else {
        (None, None)
    };

    let summary = ClassifySummary {
        accounts_read: parsed.records.len(),
        malformed_lines: parsed.skipped,
        sanitization,
        classified: preds.len(),
        labels,
        truth_anonymous,
        truth_identifiable,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub targets: usize,
    pub scored: usize,
    pub below_min_followers: usize,
    pub min_followers: usize,
    pub hyperplane_source: String,
    pub hyperplane: Hyperplane,
    pub seed_accounts_used: usize,
    pub seed_training_accuracy: Option<f64>,
    pub sensitive: usize,
    pub non_sensitive: usize,
    pub truth_auc: Option<f64>,
    pub truth_accuracy: Option<f64>,
}

fn choose_hyperplane(
    cfg: &PipelineConfig,
    stats: &[FollowerStats],
    truth: &BTreeMap<String, Sensitivity>,
) -> Result<(Hyperplane, String, Vec<SvmPoint>)> {
    let sc = &cfg.score;
    let refit = match sc.hyperplane {
        HyperplaneMode::Default => false,
        HyperplaneMode::Refit => true,
        HyperplaneMode::Auto => !truth.is_empty(),
    };
    if !refit {
        return Ok((sc.default_hyperplane, "default".into(), Vec::new()));
    }
    if truth.is_empty() {
        return Err(Error::invalid("hyperplane refit needs seed labels"));
    }
    // Stats are in target-id order, so the seeds are the first labeled targets by id.
    let seeds: Vec<SvmPoint> = stats
        .iter()
        .filter_map(|s| truth.get(&s.account_id).map(|&label| SvmPoint { x: s.x, y: s.y, label }))
        .take(sc.seed_accounts)
        .collect();
    let h = fit_linear_svm(&seeds, sc.c)?;
    Ok((h, "refit".into(), seeds))
}

/// Scores every target with enough active followers and writes plot data.
pub fn cmd_score(cfg: &PipelineConfig) -> Result<ScoreSummary> {
    let data = cfg.data_dir();
    let edges_path = require(&data.join("edges.csv"))?.to_path_buf();
    let preds = read_predictions_csv(require(&cfg.stage_dir("classify").join("follower_labels.csv"))?)?;
    let dir = cfg.stage_dir("score");
    create_dir(&dir)?;

    let label_of: HashMap<&str, FusedLabel> = preds.iter().map(|p| (p.account_id.as_str(), p.label)).collect();
    let mut followers: BTreeMap<String, Vec<FusedLabel>> = BTreeMap::new();
    let mut r = csv::Reader::from_path(&edges_path)?;
    for rec in r.records() {
        let rec = rec?;
        let (t, f) = (rec.get(0).unwrap_or_default(), rec.get(1).unwrap_or_default());
        let entry = followers.entry(t.to_string()).or_default();
        if let Some(&l) = label_of.get(f) {
            entry.push(l);
        }
    }

    let mut stats = Vec::new();
    let mut skipped = csv::Writer::from_writer(create_file(&dir.join("below_min_followers.csv"))?);
    skipped.write_record(["target_id", "active_followers"])?;
    let mut below = 0;
    for (target, labels) in &followers {
        if labels.len() < cfg.score.min_followers || labels.is_empty() {
            skipped.write_record([target.as_str(), &labels.len().to_string()])?;
            below += 1;
        } else {
            stats.push(follower_fractions(target, labels)?);
        }
    }
    skipped.flush().map_err(|e| Error::io(dir.join("below_min_followers.csv"), e))?;

    let truth_path = cfg.score.seed_labels.clone().unwrap_or_else(|| data.join("truth_targets.csv"));
    let truth: BTreeMap<String, Sensitivity> = if truth_path.exists() {
        read_column_pair(&truth_path, "target_id", "sensitivity")?
            .into_iter()
            .map(|(k, v)| v.parse().map(|s| (k, s)))
            .collect::<Result<_>>()?
    } else {
        BTreeMap::new()
    };
    let (hyperplane, source, seeds) = choose_hyperplane(cfg, &stats, &truth)?;

    let rows: Vec<(FollowerStats, SensitivityScore)> =
        stats.iter().map(|s| (s.clone(), classify_sensitivity(&hyperplane, s))).collect();
    write_scores_csv(create_file(&dir.join("scores.csv"))?, &rows)?;

    let labeled_points: Vec<(String, SvmPoint)> = stats
        .iter()
        .filter_map(|s| truth.get(&s.account_id).map(|&label| (s.account_id.clone(), SvmPoint { x: s.x, y: s.y, label })))
        .collect();
    write_scatter_csv(create_file(&dir.join("scatter.csv"))?, &labeled_points)?;

    let mut w = csv::Writer::from_writer(create_file(&dir.join("hyperplane_line.csv"))?);
    w.write_record(["x", "y"])?;
    for i in 0..=20 {
        let x = i as f64 / 20.0;
        w.write_record([x.to_string(), (hyperplane.slope * x + hyperplane.intercept).to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("hyperplane_line.csv"), e))?;
    write_json(&dir.join("hyperplane.json"), &hyperplane)?;

    let scores: Vec<SensitivityScore> = rows.iter().map(|r| r.1.clone()).collect();
    let (top, bottom) = rank_extremes(&scores, cfg.score.extremes);
    let mut w = csv::Writer::from_writer(create_file(&dir.join("extremes.csv"))?);
    w.write_record(["end", "rank", "account_id", "signed_distance"])?;
    for (end, list) in [(SENSITIVE, &top), (NON_SENSITIVE, &bottom)] {
        for (i, s) in list.iter().enumerate() {
            w.write_record([end, &(i + 1).to_string(), s.account_id.as_str(), &s.signed_distance.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(dir.join("extremes.csv"), e))?;

    if cfg.score.svg {
        let class = |l: Sensitivity| -> Vec<(f64, f64)> {
            labeled_points.iter().filter(|p| p.1.label == l).map(|p| (p.1.x, p.1.y)).collect()
        };
        let classes = if labeled_points.is_empty() {
            vec![("targets".to_string(), stats.iter().map(|s| (s.x, s.y)).collect())]
        } else {
            vec![(SENSITIVE.to_string(), class(Sensitivity::Sensitive)), (NON_SENSITIVE.to_string(), class(Sensitivity::NonSensitive))]
        };
        let chart = svg::scatter(
            "Follower fractions per target",
            "identifiable fraction (x)",
            "anonymous fraction (y)",
            &classes,
            Some((hyperplane.slope, hyperplane.intercept)),
        );
        write_string(&dir.join("scatter.svg"), &chart)?;
    }

    let seed_training_accuracy = (!seeds.is_empty()).then(|| {
        seeds.iter().filter(|p| hyperplane.classify(p.x, p.y) == p.label).count() as f64 / seeds.len() as f64
    });
    let judged: Vec<(f64, bool, bool)> = rows
        .iter()
        .filter_map(|(s, sc)| {
            truth
                .get(&s.account_id)
                .map(|t| (sc.signed_distance, *t == Sensitivity::Sensitive, sc.label == Sensitivity::Sensitive))
        })
        .collect();
    let truth_auc = auc(
        &judged.iter().map(|j| j.0).collect::<Vec<_>>(),
        &judged.iter().map(|j| j.1).collect::<Vec<_>>(),
    );
    let truth_accuracy =
        (!judged.is_empty()).then(|| judged.iter().filter(|j| j.1 == j.2).count() as f64 / judged.len() as f64);

    let sensitive = scores.iter().filter(|s| s.label == Sensitivity::Sensitive).count();
    let summary = ScoreSummary {
        targets: followers.len(),
        scored: rows.len(),
        below_min_followers: below,
        min_followers: cfg.score.min_followers,
        hyperplane_source: source,
        hyperplane,
        seed_accounts_used: seeds.len(),
        seed_training_accuracy,
        sensitive,
        non_sensitive: rows.len() - sensitive,
        truth_auc,
        truth_accuracy,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub name: String,
    pub flatness: f64,
    pub topics_in_half_to_double: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Iterations whose training perplexity rose by more than the tolerance.
    pub perplexity_rises: usize,
    pub max_perplexity_rise: f64,
}

fn rises(model: &TopicModel) -> (usize, f64) {
    model.trace.windows(2).fold((0, 0.0), |(n, worst), w| {
        let rise = w[1].training_perplexity - w[0].training_perplexity;
        if rise > PERPLEXITY_RISE_TOLERANCE {
            (n + 1, f64::max(worst, rise))
        } else {
            (n, worst)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaSummary {
    pub documents: usize,
    pub dropped_documents: usize,
    pub vocabulary: usize,
    pub tokens: usize,
    pub groups: BTreeMap<String, usize>,
    pub perplexity_curve: Vec<(usize, f64)>,
    pub chosen_topics: usize,
    pub curves: Vec<CurveSummary>,
}

/// Topic analysis of the scored targets' tweets, comparing the sensitive and
/// non-sensitive groups with same-group controls.
pub fn cmd_lda(cfg: &PipelineConfig) -> Result<LdaSummary> {
    let data = cfg.data_dir();
    let tweets = parse_tweets(require(&data.join("tweets.jsonl"))?)?;
    let scores_path = cfg.stage_dir("score").join("scores.csv");
    let groups = read_column_pair(require(&scores_path)?, "account_id", "label")?;
    let dir = cfg.stage_dir("lda");
    create_dir(&dir)?;
    let lc = &cfg.lda;

    let accounts: Vec<(String, String)> = groups.into_iter().collect();
    let (corpus, dropped) = build_documents(&accounts, &tweets.records, lc.max_tweets, &Tokenizer::default())?;
    let mut w = csv::Writer::from_writer(create_file(&dir.join("dropped_documents.csv"))?);
    w.write_record(["account_id", "tweets_seen"])?;
    for d in &dropped {
        w.write_record([d.account_id.as_str(), &d.tweets_seen.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("dropped_documents.csv"), e))?;

    let selection = select_topic_count(&corpus, &lc.candidates, &lc.model)?;
    let mut w = csv::Writer::from_writer(create_file(&dir.join("perplexity.csv"))?);
    w.write_record(["n_topics", "heldout_perplexity"])?;
    for (k, p) in &selection.curve {
        w.write_record([k.to_string(), p.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("perplexity.csv"), e))?;

    let model_cfg = lc.model.with_topics(selection.chosen);
    let model = train_cvb0(&corpus, &model_cfg)?;
    let mut w = csv::Writer::from_writer(create_file(&dir.join("trace.csv"))?);
    w.write_record(["iteration", "training_perplexity", "max_normalization_error"])?;
    for t in &model.trace {
        w.write_record([t.iteration.to_string(), t.training_perplexity.to_string(), t.max_normalization_error.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("trace.csv"), e))?;

    let weights = cumulative_topic_weights(&model, &corpus, SENSITIVE, NON_SENSITIVE)?;
    write_topics_csv(create_file(&dir.join("topics.csv"))?, &model, &weights, lc.top_terms)?;
    let cross = RatioCurve {
        name: format!("{SENSITIVE} vs {NON_SENSITIVE}"),
        ranking: ratio_ranking(&weights),
        flatness: crate::ldaval::flatness(&weights.ratio),
        weights,
        model,
    };

    let halves: Vec<_> = [SENSITIVE, NON_SENSITIVE]
        .iter()
        .enumerate()
        .filter(|(_, g)| corpus.group_size(g) >= 2)
        .map(|(i, g)| (g.to_string(), corpus.split_group(g, "A", "B", seeds::derive(cfg.seed, 40 + i as u64))))
        .collect();
    let comparisons: Vec<GroupComparison> = halves
        .iter()
        .map(|(g, c)| GroupComparison { name: format!("{g} vs {g}"), corpus: c, group_a: "A".into(), group_b: "B".into() })
        .collect();
    let mut curves = vec![cross];
    curves.extend(compare_groups(&comparisons, &model_cfg)?);
    write_ratio_curves_csv(create_file(&dir.join("ratio_curves.csv"))?, &curves)?;
    let curve_summaries: Vec<CurveSummary> = curves
        .iter()
        .map(|c| {
            let (perplexity_rises, max_perplexity_rise) = rises(&c.model);
            Ok(CurveSummary {
                name: c.name.clone(),
                flatness: c.flatness,
                topics_in_half_to_double: overlap_count(&c.weights, 0.5, 2.0)?,
                iterations: c.model.trace.len(),
                converged: c.model.converged,
                perplexity_rises,
                max_perplexity_rise,
            })
        })
        .collect::<Result<_>>()?;

    if lc.svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = curves
            .iter()
            .map(|c| {
                let pts = c.ranking.iter().enumerate().map(|(i, r)| (i as f64, r.ratio.log10())).collect();
                (c.name.clone(), pts)
            })
            .collect();
        write_string(
            &dir.join("ratio_curves.svg"),
            &svg::line_chart("Cumulative topic weight ratios", "topic rank", "log10 ratio", &series),
        )?;
        let curve: Vec<(f64, f64)> = selection.curve.iter().map(|&(k, p)| (k as f64, p)).collect();
        write_string(
            &dir.join("perplexity.svg"),
            &svg::line_chart("Held-out perplexity", "topics", "perplexity", &[("perplexity".into(), curve)]),
        )?;
    }

    let summary = LdaSummary {
        documents: corpus.len(),
        dropped_documents: dropped.len(),
        vocabulary: corpus.vocabulary.len(),
        tokens: corpus.total_tokens(),
        groups: [SENSITIVE, NON_SENSITIVE].iter().map(|g| (g.to_string(), corpus.group_size(g))).collect(),
        perplexity_curve: selection.curve.clone(),
        chosen_topics: selection.chosen,
        curves: curve_summaries,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}
