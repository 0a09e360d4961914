use anonmine::anonclf::{fuse_labels, read_predictions_csv, write_predictions_csv, AccountPrediction, AnonDecision, FusedLabel, IdentDecision};
use anonmine::features::{discretize, information_gain, label_entropy, LabeledDataset, MAX_BINS, NUM_FEATURES};
use anonmine::ldaval::tokenize;
use anonmine::metrics::{auc, min_cost_assignment, total_variation};
use anonmine::namekb::{name_parts, AnonymityLabel};
use anonmine::sensitivity::{
    classify_sensitivity, follower_fractions, read_scores_csv, write_scores_csv, Hyperplane, Sensitivity,
};
use proptest::prelude::*;

fn fused() -> impl Strategy<Value = FusedLabel> {
    prop_oneof![Just(FusedLabel::Anonymous), Just(FusedLabel::Identifiable), Just(FusedLabel::Unknown)]
}

fn label() -> impl Strategy<Value = AnonymityLabel> {
    prop::sample::select(AnonymityLabel::ALL.to_vec())
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum::<f64>() + 1e-12;
        v.into_iter().map(|x| x / s).collect()
    })
}

fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == cost.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(cost[row][j] + go(cost, row + 1, used));
                used[j] = false;
            }
        }
        best
    }
    go(cost, 0, &mut vec![false; cost[0].len()])
}

proptest! {
    #[test]
    fn fusion_never_claims_both(a in any::<bool>(), i in any::<bool>()) {
        let anon = if a { AnonDecision::Anonymous } else { AnonDecision::NonAnonymous };
        let ident = if i { IdentDecision::Identifiable } else { IdentDecision::NonIdentifiable };
        let want = match (a, i) {
            (true, false) => FusedLabel::Anonymous,
            (false, true) => FusedLabel::Identifiable,
            _ => FusedLabel::Unknown,
        };
        prop_assert_eq!(fuse_labels(anon, ident), want);
    }

    #[test]
    fn fractions_are_counts(labels in prop::collection::vec(fused(), 1..300)) {
        let s = follower_fractions("t", &labels).unwrap();
        let n = labels.len() as f64;
        let count = |l| labels.iter().filter(|&&x| x == l).count() as f64;
        prop_assert_eq!(s.x, count(FusedLabel::Identifiable) / n);
        prop_assert_eq!(s.y, count(FusedLabel::Anonymous) / n);
        prop_assert!((s.x + s.y + s.unknown_fraction - 1.0).abs() <= 1e-12);
        prop_assert_eq!(s.n_followers, labels.len());
    }

    #[test]
    fn signed_distance_agrees_with_label(x in 0.0f64..1.0, y in 0.0f64..1.0, slope in -2.0f64..2.0, intercept in -0.5f64..0.5) {
        let h = Hyperplane { slope, intercept, ..Default::default() };
        let stats = follower_fractions("t", &[FusedLabel::Unknown]).map(|mut s| { s.x = x; s.y = y; s }).unwrap();
        let score = classify_sensitivity(&h, &stats);
        prop_assert_eq!(score.label == Sensitivity::Sensitive, y > slope * x + intercept);
        prop_assert_eq!(score.signed_distance > 0.0, score.label == Sensitivity::Sensitive);
    }

    #[test]
    fn equal_values_share_a_bin(values in prop::collection::vec(prop::sample::select(vec![0.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0, 34.0, 55.0, 89.0, 144.0, 233.0]), 1..60)) {
        let bins = discretize(&values);
        prop_assert!(bins.iter().all(|&b| b < MAX_BINS.max(values.len())));
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] == values[j] {
                    prop_assert_eq!(bins[i], bins[j]);
                }
                if values[i] < values[j] {
                    prop_assert!(bins[i] <= bins[j]);
                }
            }
        }
    }

    #[test]
    fn information_gain_is_bounded(
        cells in prop::collection::vec((0u8..20, label()), 1..80),
        target in label(),
    ) {
        let rows: Vec<[f64; NUM_FEATURES]> = cells.iter().map(|(v, _)| { let mut r = [0.0; NUM_FEATURES]; r[0] = *v as f64; r }).collect();
        let labels: Vec<AnonymityLabel> = cells.iter().map(|c| c.1).collect();
        let ds = LabeledDataset::new(rows, labels).unwrap();
        let g = information_gain(&ds, 0, target).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert!(g <= label_entropy(&ds, target) + 1e-12);
        // A constant feature carries no information.
        prop_assert!(information_gain(&ds, 1, target).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn total_variation_is_a_bounded_metric(p in distribution(6), q in distribution(6), r in distribution(6)) {
        let (pq, qp) = (total_variation(&p, &q), total_variation(&q, &p));
        prop_assert!((pq - qp).abs() <= 1e-15);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&pq));
        prop_assert!(total_variation(&p, &p) <= 1e-15);
        prop_assert!(pq <= total_variation(&p, &r) + total_variation(&r, &q) + 1e-12);
    }

    #[test]
    fn assignment_is_optimal(rows in 1usize..5, extra in 0usize..3, seed in prop::collection::vec(0.0f64..10.0, 40)) {
        let cols = rows + extra;
        let cost: Vec<Vec<f64>> = (0..rows).map(|i| (0..cols).map(|j| seed[(i * cols + j) % seed.len()] + (i * j) as f64 * 0.01).collect()).collect();
        let a = min_cost_assignment(&cost);
        prop_assert_eq!(a.len(), rows);
        let mut seen = a.clone();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), rows);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        prop_assert!((total - brute_force_assignment(&cost)).abs() <= 1e-9);
    }

    #[test]
    fn auc_matches_pair_counting(pairs in prop::collection::vec((0u8..10, any::<bool>()), 2..60)) {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let positive: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let (mut wins, mut n) = (0.0, 0.0);
        for a in pairs.iter().filter(|p| p.1) {
            for b in pairs.iter().filter(|p| !p.1) {
                n += 1.0;
                wins += if a.0 > b.0 { 1.0 } else if a.0 == b.0 { 0.5 } else { 0.0 };
            }
        }
        match auc(&scores, &positive) {
            Some(v) => prop_assert!((v - wins / n).abs() <= 1e-12),
            None => prop_assert_eq!(n, 0.0),
        }
    }

    #[test]
    fn name_parts_are_clean(name in "\\PC{0,40}") {
        for part in name_parts(&name) {
            prop_assert!(!part.is_empty());
            prop_assert!(!part.chars().any(char::is_whitespace));
            prop_assert_eq!(part.to_lowercase(), part.clone());
        }
    }

    #[test]
    fn tokens_are_lowercase_words(text in "[ a-zA-Z0-9#@'.:/_-]{0,80}") {
        for t in tokenize(&text) {
            prop_assert!(t.chars().count() >= 3);
            prop_assert!(t.chars().all(char::is_alphanumeric));
            prop_assert_eq!(t.to_lowercase(), t.clone());
        }
    }

    #[test]
    fn predictions_roundtrip(rows in prop::collection::vec(("[a-z0-9_]{1,8}", fused(), 0.0f64..1.0, 0.0f64..1.0), 0..20)) {
        let preds: Vec<AccountPrediction> = rows
            .into_iter()
            .map(|(id, label, a, i)| AccountPrediction { account_id: id, label, anon_vote: a, ident_vote: i })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_predictions_csv(std::fs::File::create(&path).unwrap(), &preds).unwrap();
        prop_assert_eq!(read_predictions_csv(&path).unwrap(), preds);
    }

    #[test]
    fn scores_roundtrip(labels in prop::collection::vec(prop::collection::vec(fused(), 1..30), 0..10)) {
        let h = Hyperplane::default();
        let rows: Vec<_> = labels
            .iter()
            .enumerate()
            .map(|(i, ls)| {
                let s = follower_fractions(&format!("t{i}"), ls).unwrap();
                let sc = classify_sensitivity(&h, &s);
                (s, sc)
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_scores_csv(std::fs::File::create(&path).unwrap(), &rows).unwrap();
        prop_assert_eq!(read_scores_csv(&path).unwrap(), rows);
    }
}
