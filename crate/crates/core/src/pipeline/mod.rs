//! The batch pipeline behind the command-line tool. Each `cmd_*` runs one
//! stage, reads the previous stages' files under the output root, and writes
//! its own directory:
//!
//! ```text
//! <out>/synth     accounts, followers, follow edges, tweets, truth_*.csv
//! <out>/train     model.json, cross-validation report, cost sweep, information gain
//! <out>/classify  follower labels
//! <out>/score     follower fractions, sensitivity scores, hyperplane, plot data
//! <out>/lda       perplexity curve, topics, ratio curves
//! <out>/report    report.md
//! ```

mod report;
mod stages;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anonclf::{CostConfig, ForestParams};
use crate::error::{Error, Result};
use crate::ingest::DEFAULT_MIN_FOLLOWERS;
use crate::ldaval::{LdaConfig, DEFAULT_MAX_TWEETS};
use crate::namekb::{load_kb_paths, KbPaths, NameKnowledgeBase};
use crate::sensitivity::{Hyperplane, DEFAULT_C};
use crate::synth::SynthConfig;

pub use report::cmd_report;
pub use stages::{cmd_classify, cmd_lda, cmd_score, cmd_synth, cmd_train};

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "ANONMINE_CONFIG";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Root of all stage directories.
    pub out: PathBuf,
    /// Directory holding the input files; `<out>/synth` when unset.
    pub data: Option<PathBuf>,
    /// Directory with `first_names.csv`, `last_names.csv`, `scrabble_words.txt`
    /// and `word_freq.csv`; the bundled lists when unset.
    pub knowledge_base: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub folds: usize,
    pub cost_grid: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { folds: 10, cost_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HyperplaneMode {
    /// Refit when seed labels are available, otherwise use the shipped line.
    #[default]
    Auto,
    Default,
    Refit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub min_followers: usize,
    pub hyperplane: HyperplaneMode,
    /// Line used in `default` mode (and in `auto` mode without seed labels).
    pub default_hyperplane: Hyperplane,
    pub c: f64,
    /// Number of labeled targets (by id order) used to refit the line.
    pub seed_accounts: usize,
    /// CSV `target_id,sensitivity`; `<data>/truth_targets.csv` when unset.
    pub seed_labels: Option<PathBuf>,
    /// Size of each end of the ranked extremes list.
    pub extremes: usize,
    pub svg: bool,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            min_followers: DEFAULT_MIN_FOLLOWERS,
            hyperplane: HyperplaneMode::Auto,
            default_hyperplane: Hyperplane::default(),
            c: DEFAULT_C,
            seed_accounts: 67,
            seed_labels: None,
            extremes: 10,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaStageConfig {
    pub model: LdaConfig,
    /// Topic counts tried by perplexity; a fixed `--k` replaces the list.
    pub candidates: Vec<usize>,
    pub max_tweets: usize,
    pub top_terms: usize,
    pub svg: bool,
}

impl Default for LdaStageConfig {
    fn default() -> Self {
        LdaStageConfig {
            // Rises are counted in the stage summary instead; small same-group
            // halves oscillate slightly near convergence.
            model: LdaConfig { max_iterations: 300, enforce_monotone: false, ..LdaConfig::default() },
            candidates: vec![5, 10, 20, 40],
            max_tweets: DEFAULT_MAX_TWEETS,
            top_terms: 15,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Global seed, copied into every stage.
    pub seed: u64,
    pub paths: PathsConfig,
    pub synth: SynthConfig,
    pub costs: CostConfig,
    pub forest: ForestParams,
    pub train: TrainConfig,
    pub score: ScoreConfig,
    pub lda: LdaStageConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            paths: PathsConfig { out: PathBuf::from("anonmine-out"), ..Default::default() },
            synth: SynthConfig::default(),
            costs: CostConfig::default(),
            forest: ForestParams::default(),
            train: TrainConfig::default(),
            score: ScoreConfig::default(),
            lda: LdaStageConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub costs: Option<CostConfig>,
    pub k: Option<usize>,
    pub min_followers: Option<usize>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path`, or the file named by `ANONMINE_CONFIG`, or falls back to defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        match path.map(Path::to_path_buf).or(env) {
            Some(p) => {
                let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
            None => Ok(Self::default()),
        }
    }

    /// Applies flag overrides, then copies the global seed into every stage.
    pub fn apply(mut self, o: &Overrides) -> Result<Self> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.paths.out = out.clone();
        }
        if let Some(c) = o.costs {
            self.costs = c;
        }
        if let Some(k) = o.k {
            self.lda.candidates = vec![k];
        }
        if let Some(m) = o.min_followers {
            self.score.min_followers = m;
        }
        self.synth.seed = self.seed;
        self.lda.model.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        CostConfig::new(self.costs.anonymous_cost, self.costs.identifiable_cost)?;
        self.synth.validate()?;
        if self.train.folds < 2 {
            return Err(Error::Config("train.folds must be at least 2".into()));
        }
        if self.train.cost_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::Config("train.cost_grid entries must be positive".into()));
        }
        if self.lda.candidates.is_empty() || self.lda.candidates.contains(&0) {
            return Err(Error::Config("lda.candidates must be nonempty positive topic counts".into()));
        }
        if !(self.score.c > 0.0) {
            return Err(Error::Config("score.c must be positive".into()));
        }
        Ok(())
    }

    pub fn data_dir(&self) -> PathBuf {
        self.paths.data.clone().unwrap_or_else(|| self.stage_dir("synth"))
    }

    pub fn stage_dir(&self, stage: &str) -> PathBuf {
        self.paths.out.join(stage)
    }

    pub fn knowledge_base(&self) -> Result<NameKnowledgeBase> {
        match &self.paths.knowledge_base {
            Some(dir) => load_kb_paths(&KbPaths::in_dir(dir)),
            None => Ok(NameKnowledgeBase::builtin()),
        }
    }
}

/// Fails with the path when a required input is missing.
pub(crate) fn require(path: &Path) -> Result<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "required input is missing")))
    }
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn create_file(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path).map(std::io::BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_string(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_string(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let c = PipelineConfig::from_toml("seed = 4\n[costs]\nanonymous_cost = 3.0\n[lda]\ncandidates = [2, 3]\n").unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.costs.anonymous_cost, 3.0);
        assert_eq!(c.costs.identifiable_cost, CostConfig::default().identifiable_cost);
        assert_eq!(c.lda.candidates, vec![2, 3]);
        assert_eq!(c.score, ScoreConfig::default());
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn flags_win_and_seed_propagates() {
        let c = PipelineConfig::from_toml("seed = 4\n[synth]\nseed = 99\n").unwrap();
        let o = Overrides { seed: Some(11), k: Some(7), min_followers: Some(5), ..Default::default() };
        let c = c.apply(&o).unwrap();
        assert_eq!((c.seed, c.synth.seed, c.lda.model.seed), (11, 11, 11));
        assert_eq!(c.lda.candidates, vec![7]);
        assert_eq!(c.score.min_followers, 5);
        let bad = Overrides { costs: Some(CostConfig { anonymous_cost: -1.0, identifiable_cost: 1.0 }), ..Default::default() };
        assert!(PipelineConfig::default().apply(&bad).is_err());
    }

    #[test]
    fn default_config_roundtrips_through_toml() {
        let c = PipelineConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(PipelineConfig::from_toml(&text).unwrap(), c);
    }
}
