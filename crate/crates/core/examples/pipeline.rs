//! Runs every pipeline stage on a small synthetic dataset and prints the
//! generated report.
//!
//! cargo run --release --example pipeline -- [out_dir]

use anonmine::pipeline::{self, PipelineConfig};

fn main() -> anonmine::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "anonmine-example-out".into());
    let mut cfg = PipelineConfig::default();
    cfg.paths.out = out.into();
    cfg.synth.n_profiles = 2_000;
    cfg.synth.n_targets = 60;
    cfg.synth.followers_per_target = (250, 400);
    cfg.forest.n_trees = 40;
    cfg.train.folds = 5;
    cfg.train.cost_grid = vec![1.0, 4.0, 16.0];
    cfg.lda.candidates = vec![5, 10];
    cfg.score.seed_accounts = 30;

    pipeline::cmd_synth(&cfg)?;
    pipeline::cmd_train(&cfg)?;
    pipeline::cmd_classify(&cfg)?;
    pipeline::cmd_score(&cfg)?;
    pipeline::cmd_lda(&cfg)?;
    let report = pipeline::cmd_report(&cfg)?;
    print!("{}", std::fs::read_to_string(&report).map_err(|e| anonmine::Error::Io { path: report, source: e })?);
    Ok(())
}
