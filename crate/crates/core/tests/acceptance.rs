//! Acceptance harness: one PASS/FAIL line per criterion.
//!
//! cargo test --release --test acceptance            all criteria
//! cargo test --release --test acceptance -- 4 7     only criteria 4 and 7

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anonmine::anonclf::{cross_validate, fuse_labels, sweep_costs, AnonDecision, CostConfig, ForestParams, FusedLabel, FusedModel, IdentDecision};
use anonmine::features::{information_gain, LabeledDataset, NUM_FEATURES};
use anonmine::ingest::sanitize;
use anonmine::ldaval::{
    compare_groups, overlap_count, perplexity, split_corpus, train_cvb0, GroupComparison, LdaConfig,
    NORMALIZATION_TOLERANCE,
};
use anonmine::namekb::{baseline_namelist_label, AnonymityLabel, NameKnowledgeBase};
use anonmine::pipeline::{self, Overrides, PipelineConfig};
use anonmine::sensitivity::{
    classify_sensitivity, fit_linear_svm, follower_fractions, Hyperplane, Sensitivity, SvmPoint,
};
use anonmine::synth::{
    generate_follow_graph, generate_follower_pool, generate_profiles, generate_topic_corpus, SynthConfig,
    TopicCorpusConfig,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (usize, &'static str, u64, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: anonmine::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn precision_of(pred: &[bool], truth: &[bool]) -> f64 {
    let predicted = pred.iter().filter(|&&p| p).count();
    let hit = pred.iter().zip(truth).filter(|(p, t)| **p && **t).count();
    if predicted == 0 {
        1.0
    } else {
        hit as f64 / predicted as f64
    }
}

fn recall_of(pred: &[bool], truth: &[bool]) -> f64 {
    let actual = truth.iter().filter(|&&t| t).count();
    let hit = pred.iter().zip(truth).filter(|(p, t)| **p && **t).count();
    hit as f64 / actual.max(1) as f64
}

/// Pairwise AUC, ties counted as one half.
fn pairwise_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            pairs += 1.0;
            wins += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
        }
    }
    wins / pairs
}

fn entropy_bits(pos: usize, n: usize) -> f64 {
    [pos, n - pos]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

fn criterion_1() -> Check {
    use AnonDecision as A;
    use IdentDecision as I;
    let table = [
        (A::Anonymous, I::NonIdentifiable, FusedLabel::Anonymous),
        (A::NonAnonymous, I::Identifiable, FusedLabel::Identifiable),
        (A::NonAnonymous, I::NonIdentifiable, FusedLabel::Unknown),
        (A::Anonymous, I::Identifiable, FusedLabel::Unknown),
    ];
    let wrong: Vec<String> = table
        .iter()
        .filter(|(a, i, want)| fuse_labels(*a, *i) != *want)
        .map(|(a, i, want)| format!("{a:?}+{i:?} -> {:?}, want {want:?}", fuse_labels(*a, *i)))
        .collect();
    ensure(wrong.is_empty(), if wrong.is_empty() { "4/4 combinations match".into() } else { wrong.join("; ") })
}

fn criterion_2() -> Check {
    let kb = NameKnowledgeBase::builtin();
    let cfg = SynthConfig { seed: 2, n_profiles: 10_000, ..Default::default() };
    let profiles = lib(generate_profiles(&kb, &cfg))?;
    let labeled: Vec<_> = profiles.iter().map(|p| (p.profile.clone(), p.label)).collect();
    let ds = LabeledDataset::from_profiles(&kb, &labeled);
    let rep = lib(cross_validate(&ds, CostConfig::default(), ForestParams::default(), 10, cfg.seed))?;

    let truth = |l: AnonymityLabel| -> Vec<bool> { profiles.iter().map(|p| p.label == l).collect() };
    let fused = |l: FusedLabel| -> Vec<bool> { rep.predictions.iter().map(|&p| p == l).collect() };
    let (ta, ti) = (truth(AnonymityLabel::Anonymous), truth(AnonymityLabel::Identifiable));
    let pa = precision_of(&fused(FusedLabel::Anonymous), &ta);
    let ra = recall_of(&fused(FusedLabel::Anonymous), &ta);
    let pi = precision_of(&fused(FusedLabel::Identifiable), &ti);
    let base: Vec<bool> =
        profiles.iter().map(|p| baseline_namelist_label(&kb, &p.profile) == AnonymityLabel::Anonymous).collect();
    let pb = precision_of(&base, &ta);
    ensure(
        pa >= 0.90 && pi >= 0.90 && ra >= 0.20 && pb < pa,
        format!("fused anonymous P={pa:.3} R={ra:.3}, identifiable P={pi:.3}; baseline anonymous P={pb:.3}"),
    )
}

fn criterion_3() -> Check {
    let kb = NameKnowledgeBase::builtin();
    let grid = [1.0, 2.0, 4.0, 8.0, 16.0];
    let seeds = [11u64, 12, 13, 14, 15];
    let mut mean = vec![0.0; grid.len()];
    for &seed in &seeds {
        let profiles = lib(generate_profiles(&kb, &SynthConfig { seed, ..Default::default() }))?;
        let labeled: Vec<_> = profiles.into_iter().map(|p| (p.profile, p.label)).collect();
        let ds = LabeledDataset::from_profiles(&kb, &labeled);
        let pts = lib(sweep_costs(&ds, &grid, AnonymityLabel::Anonymous, ForestParams::default(), 10, seed))?;
        for (m, p) in mean.iter_mut().zip(&pts) {
            *m += p.precision / seeds.len() as f64;
        }
    }
    let worst_drop = mean.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    let curve: Vec<String> = grid.iter().zip(&mean).map(|(c, m)| format!("{c}:{m:.4}")).collect();
    ensure(worst_drop <= 0.05, format!("mean anonymous precision {} (largest drop {worst_drop:.4})", curve.join(" ")))
}

fn criterion_4() -> Check {
    let pt = |x, y, label| SvmPoint { x, y, label };
    let two = [pt(0.0, 1.0, Sensitivity::Sensitive), pt(1.0, 0.0, Sensitivity::NonSensitive)];
    let h = lib(fit_linear_svm(&two, 5000.0))?;
    let symmetric = (h.slope - 1.0).abs() <= 1e-3 && h.intercept.abs() <= 1e-3;

    // Sensitive accounts top-left, non-sensitive bottom-right.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cloud: Vec<SvmPoint> = (0..67)
        .map(|i| {
            if i % 3 == 0 {
                pt(rng.random_range(0.05..0.45), rng.random_range(0.08..0.45), Sensitivity::Sensitive)
            } else {
                pt(rng.random_range(0.35..0.9), rng.random_range(0.0..0.05), Sensitivity::NonSensitive)
            }
        })
        .collect();
    let fitted = lib(fit_linear_svm(&cloud, 5000.0))?;
    let correct = cloud.iter().filter(|p| fitted.classify(p.x, p.y) == p.label).count();

    let d = Hyperplane::default();
    let shipped = d.classify(0.1, 0.5) == Sensitivity::Sensitive && d.classify(0.5, 0.01) == Sensitivity::NonSensitive;
    ensure(
        symmetric && correct == cloud.len() && shipped,
        format!(
            "two-point y={:.6}x{:+.6}; cloud {correct}/{} correct; shipped line ok={shipped}",
            h.slope,
            h.intercept,
            cloud.len()
        ),
    )
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let all = [FusedLabel::Anonymous, FusedLabel::Identifiable, FusedLabel::Unknown];
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = rng.random_range(1..=2000);
        let labels: Vec<FusedLabel> = (0..n).map(|_| *all.choose(&mut rng).unwrap()).collect();
        let s = lib(follower_fractions(&format!("t{i}"), &labels))?;
        worst = worst.max((s.x + s.y + s.unknown_fraction - 1.0).abs());
    }
    ensure(worst <= 1e-12, format!("largest |x+y+unknown-1| over 1000 multisets = {worst:.2e}"))
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let values = [0.0, 1.0, 2.5, 7.0];
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for _ in 0..50 {
        let n_rows = rng.random_range(1..=8);
        let n_feat = rng.random_range(1..=3);
        let mut rows = vec![[0.0; NUM_FEATURES]; n_rows];
        for r in rows.iter_mut() {
            for v in r.iter_mut().take(n_feat) {
                *v = *values.choose(&mut rng).unwrap();
            }
        }
        let labels: Vec<AnonymityLabel> = (0..n_rows).map(|_| *AnonymityLabel::ALL.choose(&mut rng).unwrap()).collect();
        let target = *AnonymityLabel::ALL.choose(&mut rng).unwrap();
        let ds = lib(LabeledDataset::new(rows.clone(), labels.clone()))?;
        for f in 0..n_feat {
            // Brute force: H(Y) - sum_v P(X=v) H(Y | X=v) over exact values.
            let mut by_value: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
            for (r, l) in rows.iter().zip(&labels) {
                let e = by_value.entry(r[f].to_bits()).or_default();
                e.1 += 1;
                e.0 += (*l == target) as usize;
            }
            let pos = labels.iter().filter(|&&l| l == target).count();
            let cond: f64 =
                by_value.values().map(|&(p, c)| c as f64 / n_rows as f64 * entropy_bits(p, c)).sum();
            let oracle = entropy_bits(pos, n_rows) - cond;
            let got = lib(information_gain(&ds, f, target))?;
            worst = worst.max((got - oracle).abs());
            checks += 1;
        }
    }
    ensure(worst <= 1e-9, format!("{checks} feature checks on 50 datasets, largest error {worst:.2e}"))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn criterion_7() -> Check {
    let planted = lib(generate_topic_corpus(&TopicCorpusConfig::default(), "A", "B", 7))?;
    let cfg = LdaConfig { n_topics: 3, max_iterations: 500, seed: 7, enforce_monotone: true, ..Default::default() };
    let model = lib(train_cvb0(&planted.corpus, &cfg))?;

    // Brute-force best matching of planted to learned topics by total variation.
    let index: HashMap<&str, usize> = model.vocabulary.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let tv = |t: usize, j: usize| -> f64 {
        planted
            .words
            .iter()
            .enumerate()
            .map(|(w, word)| {
                let learned = index.get(word.as_str()).map_or(0.0, |&i| model.topic_word[j][i]);
                (planted.topic_word[t][w] - learned).abs()
            })
            .sum::<f64>()
            / 2.0
    };
    let best = permutations(3)
        .into_iter()
        .map(|perm| perm.iter().enumerate().map(|(t, &j)| tv(t, j)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);

    let (train, heldout) = lib(split_corpus(&planted.corpus, 0.8, 7))?;
    let p1 = lib(perplexity(&lib(train_cvb0(&train, &cfg.with_topics(1)))?, &heldout))?.perplexity;
    let p3 = lib(perplexity(&lib(train_cvb0(&train, &cfg))?, &heldout))?.perplexity;

    let norm_ok = model.trace.iter().all(|s| s.max_normalization_error <= NORMALIZATION_TOLERANCE)
        && model.doc_topic.iter().chain(&model.topic_word).all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    let worst_rise = model
        .trace
        .windows(2)
        .map(|w| w[1].training_perplexity - w[0].training_perplexity)
        .fold(f64::NEG_INFINITY, f64::max);
    ensure(
        best <= 0.15 && p3 < p1 && norm_ok && worst_rise <= 1e-6,
        format!(
            "matched max TV {best:.4}; perplexity K=3 {p3:.3} vs K=1 {p1:.3}; normalization ok={norm_ok}; \
             {} iterations, largest rise {worst_rise:.2e}",
            model.trace.len()
        ),
    )
}

fn group_corpus(separation: f64) -> TopicCorpusConfig {
    TopicCorpusConfig {
        n_topics: 10,
        vocab_size: 200,
        n_docs: 400,
        doc_length: 80,
        disjoint_topics: false,
        doc_mixing: 0.3,
        group_separation: separation,
        ..Default::default()
    }
}

fn criterion_8() -> Check {
    let lda = LdaConfig { n_topics: 10, alpha: 0.1, max_iterations: 300, seed: 8, enforce_monotone: false, ..Default::default() };
    let planted = lib(generate_topic_corpus(&group_corpus(0.9), "S", "N", 8))?;
    let c = &planted.corpus;
    let (ss, nn) = (c.split_group("S", "A", "B", 81), c.split_group("N", "A", "B", 82));
    let cmp = |name: &str, corpus, a: &str, b: &str| GroupComparison { name: name.into(), corpus, group_a: a.into(), group_b: b.into() };
    let curves = lib(compare_groups(&[cmp("S/N", c, "S", "N"), cmp("S/S", &ss, "A", "B"), cmp("N/N", &nn, "A", "B")], &lda))?;
    let (cross, same_s, same_n) = (curves[0].flatness, curves[1].flatness, curves[2].flatness);
    let separated = cross >= 2.0 * same_s && cross >= 2.0 * same_n;

    let identical = lib(generate_topic_corpus(&group_corpus(0.0), "S", "N", 9))?;
    let curve = lib(compare_groups(&[cmp("S/N", &identical.corpus, "S", "N")], &lda))?;
    let inside = lib(overlap_count(&curve[0].weights, 0.5, 2.0))?;
    let n = curve[0].weights.n_topics();
    ensure(
        separated && inside * 10 >= n * 9,
        format!(
            "flatness cross {cross:.2}, same-group {same_s:.2} and {same_n:.2}; identical groups {inside}/{n} ratios in [0.5, 2]"
        ),
    )
}

fn detector_auc(kb: &NameKnowledgeBase, model: &FusedModel, bias: f64) -> Result<(f64, usize), String> {
    let cfg = SynthConfig { seed: 9, n_targets: 1000, followers_per_target: (100, 100), anonymity_bias: bias, ..Default::default() };
    let pool = lib(generate_follower_pool(kb, &cfg))?;
    let truth: Vec<_> = pool.iter().map(|p| (p.profile.id.clone(), p.label)).collect();
    let graph = lib(generate_follow_graph(&truth, &cfg))?;
    let (active, _) = sanitize(&pool.iter().map(|p| p.profile.clone()).collect::<Vec<_>>());
    let labels: HashMap<String, FusedLabel> =
        active.iter().map(|p| (p.id.clone(), model.predict_profile(kb, p).label)).collect();

    let h = Hyperplane::default();
    let mut scores = Vec::new();
    let mut positive = Vec::new();
    for (t, followers) in graph.targets.iter().zip(&graph.followers) {
        let ls: Vec<FusedLabel> = followers.iter().filter_map(|f| labels.get(f).copied()).collect();
        let stats = lib(follower_fractions(&t.id, &ls))?;
        scores.push(classify_sensitivity(&h, &stats).signed_distance);
        positive.push(t.sensitivity == Sensitivity::Sensitive);
    }
    Ok((pairwise_auc(&scores, &positive), graph.targets.len()))
}

fn criterion_9() -> Check {
    let kb = NameKnowledgeBase::builtin();
    let training = lib(generate_profiles(&kb, &SynthConfig { seed: 90, n_profiles: 5_000, ..Default::default() }))?;
    let labeled: Vec<_> = training.into_iter().map(|p| (p.profile, p.label)).collect();
    let ds = LabeledDataset::from_profiles(&kb, &labeled);
    let model = lib(FusedModel::train(&ds, CostConfig::default(), ForestParams::default(), 90))?;
    let (null, n) = detector_auc(&kb, &model, 0.0)?;
    let (biased, _) = detector_auc(&kb, &model, 0.5)?;
    ensure(
        (0.4..=0.6).contains(&null) && biased >= 0.95,
        format!("{n} targets: AUC {null:.3} with no bias, {biased:.3} with bias 0.5"),
    )
}

fn pipeline_run(out: &Path) -> anonmine::Result<()> {
    let overrides = Overrides { seed: Some(10), out: Some(out.to_path_buf()), ..Default::default() };
    let cfg = PipelineConfig::default().apply(&overrides)?;
    pipeline::cmd_synth(&cfg)?;
    pipeline::cmd_train(&cfg)?;
    pipeline::cmd_classify(&cfg)?;
    pipeline::cmd_score(&cfg)?;
    pipeline::cmd_lda(&cfg)?;
    pipeline::cmd_report(&cfg)?;
    Ok(())
}

fn csv_files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for stage in std::fs::read_dir(root).unwrap().flatten() {
        for f in std::fs::read_dir(stage.path()).unwrap().flatten() {
            if f.path().extension().is_some_and(|e| e == "csv") {
                out.push(f.path().strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_10() -> Check {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let start = Instant::now();
    lib(pipeline_run(a.path()))?;
    let first = start.elapsed();
    lib(pipeline_run(b.path()))?;

    let files = csv_files(a.path());
    let differing: Vec<String> = files
        .iter()
        .filter(|f| std::fs::read(a.path().join(f)).ok() != std::fs::read(b.path().join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("synth/summary.json")).unwrap()).unwrap();
    let shape = summary["targets"] == 200 && summary["edges"] == 200 * 500;
    ensure(
        differing.is_empty() && shape && first < Duration::from_secs(600),
        format!(
            "{} targets, {} edges; {} CSVs compared, {} differ {differing:?}; one run {:.1?}",
            summary["targets"],
            summary["edges"],
            files.len(),
            differing.len(),
            first
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "fusion table exhaustive", 1, criterion_1),
        (2, "synthetic classifier quality", 600, criterion_2),
        (3, "cost sweep monotone trend", 900, criterion_3),
        (4, "SVM correctness", 10, criterion_4),
        (5, "fraction conservation", 60, criterion_5),
        (6, "information gain oracle", 60, criterion_6),
        (7, "LDA recovery", 120, criterion_7),
        (8, "group separation", 300, criterion_8),
        (9, "null-model sanity", 300, criterion_9),
        (10, "end-to-end determinism and scale", 1200, criterion_10),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (ok, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        failed += !ok as usize;
        let timing = if in_time { format!("{elapsed:.1?}") } else { format!("{elapsed:.1?}, over the {limit}s limit") };
        println!("{} criterion {id:>2} {name}: {detail} [{timing}]", if ok { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
