//! Layered run configuration: built-in defaults, then a TOML file, then
//! environment variables, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use workitem_szz::eval::{OffsetMode, RecallMode};
use workitem_szz::methods::TestPathPolicy;
use workitem_szz::predict::{PredictConfig, RunOptions};
use workitem_szz::szz::FallbackSelector;
use workitem_szz::workitem::Factor;

pub const ENV_CACHE_DIR: &str = "WORKITEM_SZZ_CACHE_DIR";
pub const ENV_PARALLELISM: &str = "WORKITEM_SZZ_PARALLELISM";

/// Everything a config file may set. Each key mirrors a command-line flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub factor: Option<Factor>,
    pub factors: Option<Vec<Factor>>,
    pub lookback_days: Option<u32>,
    pub max_commits: Option<usize>,
    pub fallback: Option<FallbackSelector>,
    pub issue_filter: Option<bool>,
    pub one_commit_filter: Option<bool>,
    pub offset: Option<OffsetMode>,
    pub parallelism: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub recall_mode: Option<RecallMode>,
    pub test_paths: Option<TestPathPolicy>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Values from the command line; `None` means "not given".
#[derive(Debug, Default, Clone)]
pub struct FlagConfig {
    pub factor: Option<Factor>,
    pub factors: Option<Vec<Factor>>,
    pub lookback_days: Option<u32>,
    pub max_commits: Option<usize>,
    pub fallback: Option<FallbackSelector>,
    pub issue_filter: Option<bool>,
    pub one_commit_filter: Option<bool>,
    pub offset: Option<OffsetMode>,
    pub parallelism: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub recall_mode: Option<RecallMode>,
}

/// The configuration actually used, echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConfig {
    #[serde(flatten)]
    pub predict: PredictConfig,
    pub offset: OffsetMode,
    pub parallelism: usize,
    pub cache_dir: PathBuf,
    pub recall_mode: RecallMode,
    pub test_paths: TestPathPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<Factor>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusions: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<PathBuf>,
}

impl EffectiveConfig {
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            parallelism: self.parallelism,
            cache_dir: self.cache_dir.clone(),
            offset: self.offset,
        }
    }
}

fn default_cache_dir() -> PathBuf {
    match std::env::var_os("XDG_CACHE_HOME").or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").into_os_string())) {
        Some(base) => PathBuf::from(base).join("workitem-szz"),
        None => std::env::temp_dir().join("workitem-szz-cache"),
    }
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Reads an environment override, treating an empty value as unset.
fn env_value(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

pub fn resolve(file: FileConfig, flags: FlagConfig) -> Result<EffectiveConfig> {
    let defaults = PredictConfig::default();
    let env_parallelism = match env_value(ENV_PARALLELISM) {
        Some(v) => Some(
            v.trim()
                .parse::<usize>()
                .with_context(|| format!("{ENV_PARALLELISM}={v} is not a positive integer"))?,
        ),
        None => None,
    };
    let env_cache = env_value(ENV_CACHE_DIR).map(PathBuf::from);

    let predict = PredictConfig {
        factor: flags.factor.or(file.factor).unwrap_or(defaults.factor),
        lookback_days: flags.lookback_days.or(file.lookback_days).unwrap_or(defaults.lookback_days),
        fallback: flags.fallback.or(file.fallback).unwrap_or(defaults.fallback),
        issue_filter: flags.issue_filter.or(file.issue_filter).unwrap_or(defaults.issue_filter),
        one_commit_filter: flags
            .one_commit_filter
            .or(file.one_commit_filter)
            .unwrap_or(defaults.one_commit_filter),
        max_commits: flags.max_commits.or(file.max_commits).unwrap_or(defaults.max_commits),
    };
    predict.validate()?;
    let parallelism = flags
        .parallelism
        .or(env_parallelism)
        .or(file.parallelism)
        .unwrap_or_else(default_parallelism);
    if parallelism == 0 {
        bail!("parallelism must be positive");
    }
    let factors = flags.factors.or(file.factors);
    if factors.as_ref().is_some_and(|f| f.is_empty()) {
        bail!("factor list is empty");
    }
    Ok(EffectiveConfig {
        predict,
        offset: flags.offset.or(file.offset).unwrap_or_default(),
        parallelism,
        cache_dir: flags.cache_dir.or(env_cache).or(file.cache_dir).unwrap_or_else(default_cache_dir),
        recall_mode: flags.recall_mode.or(file.recall_mode).unwrap_or_default(),
        test_paths: file.test_paths.unwrap_or_default(),
        factors,
        out_dir: flags.out_dir.or(file.out_dir),
        exclusions: flags.exclusions.or(file.exclusions),
        candidates: flags.candidates.or(file.candidates),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str(
            "factor = 0.5\nlookback_days = 10\nfallback = \"b-latest\"\noffset = \"legacy\"\nparallelism = 3\n",
        )
        .unwrap();
        let flags = FlagConfig {
            factor: Some(Factor::new(0.9).unwrap()),
            parallelism: Some(2),
            ..Default::default()
        };
        let c = resolve(file, flags).unwrap();
        assert_eq!(c.predict.factor, Factor::new(0.9).unwrap());
        assert_eq!(c.predict.lookback_days, 10);
        assert_eq!(c.predict.fallback, FallbackSelector::BLatest);
        assert_eq!(c.offset, OffsetMode::Legacy);
        assert_eq!(c.parallelism, 2);
    }

    #[test]
    fn defaults() {
        let c = resolve(FileConfig::default(), FlagConfig { parallelism: Some(1), cache_dir: Some("/c".into()), ..Default::default() }).unwrap();
        assert_eq!(c.predict, PredictConfig::default());
        assert_eq!(c.offset, OffsetMode::Q2);
        assert_eq!(c.recall_mode, RecallMode::OracleBics);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(toml::from_str::<FileConfig>("factr = 0.5").is_err());
        assert!(toml::from_str::<FileConfig>("factor = 1.5").is_err());
        assert!(toml::from_str::<FileConfig>("offset = 2.0").is_err());
        let zero = FlagConfig { lookback_days: Some(0), parallelism: Some(1), ..Default::default() };
        assert!(resolve(FileConfig::default(), zero).is_err());
    }

    #[test]
    fn test_path_policy_from_file() {
        let file: FileConfig = toml::from_str(
            "[test_paths]\ndir_segments = [\"qa\"]\nfile_patterns = [\"*Check.cs\"]\n",
        )
        .unwrap();
        let c = resolve(file, FlagConfig { parallelism: Some(1), ..Default::default() }).unwrap();
        assert!(c.test_paths.is_test_path("qa/x.cs"));
        assert!(!c.test_paths.is_test_path("tests/x.cs"));
    }
}
