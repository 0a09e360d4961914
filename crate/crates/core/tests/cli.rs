use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 21

[synth]
n_profiles = 1500
n_targets = 40
follower_pool = 2000
followers_per_target = [250, 300]

[forest]
n_trees = 20

[train]
folds = 3
cost_grid = [1.0, 4.0]

[score]
seed_accounts = 20

[lda]
candidates = [3, 5]
"#;

fn anonmine(args: &[&str], env_config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_anonmine"));
    cmd.args(args).env_remove("ANONMINE_CONFIG");
    if let Some(c) = env_config {
        cmd.env("ANONMINE_CONFIG", c);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn every_stage_runs_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    fs::write(&config, SMALL).unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let cfg_s = config.to_str().unwrap();

    let synth: serde_json::Value =
        serde_json::from_str(&ok(&anonmine(&["synth", "--config", cfg_s, "--out", out_s], None))).unwrap();
    assert_eq!(synth["profiles"], 1500);
    assert_eq!(synth["targets"], 40);

    // The config may also come from the environment.
    let train: serde_json::Value =
        serde_json::from_str(&ok(&anonmine(&["train", "--out", out_s, "--costs", "8,4"], Some(&config)))).unwrap();
    assert_eq!(train["costs"]["anonymous_cost"], 8.0);
    assert_eq!(train["folds"], 3);

    ok(&anonmine(&["classify", "--config", cfg_s, "--out", out_s], None));
    let score: serde_json::Value = serde_json::from_str(&ok(&anonmine(
        &["score", "--config", cfg_s, "--out", out_s, "--min-followers", "100"],
        None,
    )))
    .unwrap();
    assert_eq!(score["min_followers"], 100);
    assert_eq!(score["scored"], 40);

    let lda: serde_json::Value =
        serde_json::from_str(&ok(&anonmine(&["lda", "--config", cfg_s, "--out", out_s, "--k", "4"], None))).unwrap();
    assert_eq!(lda["chosen_topics"], 4);

    let report = ok(&anonmine(&["report", "--config", cfg_s, "--out", out_s], None));
    let md = fs::read_to_string(report.trim()).unwrap();
    assert!(!md.contains("missing stage"));
    for f in ["train/cv_report.csv", "score/scores.csv", "lda/topics.csv", "classify/follower_labels.csv"] {
        assert!(md.contains(f), "{f} not listed");
        let mut r = csv::Reader::from_path(out.join(f)).unwrap();
        assert!(!r.headers().unwrap().is_empty());
    }
}

#[test]
fn bad_arguments_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out_s = dir.path().to_str().unwrap();

    let bad_costs = anonmine(&["train", "--costs", "3", "--out", out_s], None);
    assert!(!bad_costs.status.success());
    assert!(String::from_utf8_lossy(&bad_costs.stderr).contains("a,i"));

    let negative = anonmine(&["train", "--costs", "-1,2", "--out", out_s], None);
    assert!(!negative.status.success());

    let missing = anonmine(&["train", "--out", out_s], None);
    assert!(!missing.status.success());
    let msg = String::from_utf8_lossy(&missing.stderr);
    assert!(msg.contains("accounts.jsonl"), "{msg}");

    let config = dir.path().join("bad.toml");
    fs::write(&config, "[synth]\nn_profile = 3\n").unwrap();
    let unknown_key = anonmine(&["synth", "--out", out_s], Some(&config));
    assert!(!unknown_key.status.success());
    assert!(String::from_utf8_lossy(&unknown_key.stderr).contains("n_profile"));
}
