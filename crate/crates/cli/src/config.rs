use std::fs;
use std::path::{Path, PathBuf};

use cla_core::community::CommunityConfig;
use cla_core::envcore::GameSpec;
use cla_core::inference::{MapConfig, MapVariant, DEFAULT_BACKOFF_THRESHOLD};
use cla_core::semantics::DistanceConfig;
use serde::Deserialize;

/// A game given inline or as a path to a game JSON file (relative paths
/// resolve against the config file's directory).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GameRef {
    Path(PathBuf),
    Inline(GameSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceSection {
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub variant: MapVariant,
    #[serde(default)]
    pub smoothing: f64,
    #[serde(default = "default_backoff")]
    pub backoff_threshold: f64,
}

impl Default for InferenceSection {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            variant: MapVariant::default(),
            smoothing: 0.0,
            backoff_threshold: DEFAULT_BACKOFF_THRESHOLD,
        }
    }
}

impl InferenceSection {
    pub fn map_config(&self) -> MapConfig {
        MapConfig {
            alpha: self.alpha,
            variant: self.variant,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_episodes")]
    pub n_episodes: usize,
    #[serde(default)]
    pub community_seed: u64,
    #[serde(default)]
    pub collect_seed: u64,
    #[serde(default = "default_eval_seed")]
    pub eval_seed: u64,
    #[serde(default = "default_oracle_cases")]
    pub oracle_cases: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_episodes: default_episodes(),
            community_seed: 0,
            collect_seed: 0,
            eval_seed: default_eval_seed(),
            oracle_cases: default_oracle_cases(),
            out: default_out(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_backoff() -> f64 {
    DEFAULT_BACKOFF_THRESHOLD
}
fn default_episodes() -> usize {
    1000
}
fn default_eval_seed() -> u64 {
    1
}
fn default_oracle_cases() -> usize {
    100
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    game: GameRef,
    #[serde(default)]
    community: CommunityConfig,
    #[serde(default)]
    inference: InferenceSection,
    distances: Option<DistanceConfig>,
    #[serde(default)]
    run: RunSection,
}

/// A loaded experiment: the game is resolved and `distances`, when given,
/// has replaced the community's own distance settings.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub community: CommunityConfig,
    pub inference: InferenceSection,
    pub run: RunSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("no config given: pass --config or set CLA_CONFIG")]
    Missing,
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })
        };
        let invalid = |p: &Path, message: String| ConfigError::Invalid {
            path: p.to_path_buf(),
            message,
        };
        let raw: RawConfig = serde_json::from_str(&read(path)?).map_err(|e| invalid(path, e.to_string()))?;
        let game = match raw.game {
            GameRef::Inline(g) => g,
            GameRef::Path(p) => {
                let p = if p.is_relative() {
                    path.parent().unwrap_or(Path::new(".")).join(p)
                } else {
                    p
                };
                GameSpec::from_json(&read(&p)?).map_err(|e| invalid(&p, e.to_string()))?
            }
        };
        let mut community = raw.community;
        if let Some(d) = raw.distances {
            community.distances = d;
        }
        community.validate().map_err(|e| invalid(path, e.to_string()))?;
        raw.inference
            .map_config()
            .validate()
            .map_err(|e| invalid(path, e.to_string()))?;
        if !(0.0..=1.0).contains(&raw.inference.backoff_threshold) {
            return Err(invalid(path, "backoff_threshold outside [0, 1]".into()));
        }
        if !(raw.inference.smoothing >= 0.0) {
            return Err(invalid(path, "smoothing must be non-negative".into()));
        }
        Ok(Self {
            game,
            community,
            inference: raw.inference,
            run: raw.run,
        })
    }
}
