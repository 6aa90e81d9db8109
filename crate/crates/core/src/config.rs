//! Run configuration: flat `key=value` files with `#` comments.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpus::Category;
use crate::eval::{BugfixFilter, Filter};
use crate::generator::{DecodeOptions, DEFAULT_THRESHOLD};
use crate::nmt::TrainingConfig;

pub const SEED_ENV: &str = "PATCHLOOM_SEED";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value, found {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for {key}: {message}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        message: String,
    },
    #[error("{SEED_ENV}={0:?} is not an unsigned integer")]
    BadSeedEnv(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub repo_path: Option<PathBuf>,
    pub since: Option<i32>,
    pub until: Option<i32>,
    pub test_year: Option<i32>,
    pub min_count: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub threshold: f64,
    pub decode: DecodeOptions,
    pub train: TrainingConfig,
    pub filter: Filter,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            repo_path: None,
            since: None,
            until: None,
            test_year: None,
            min_count: 1,
            output_dir: PathBuf::from("out"),
            seed: 1,
            threshold: DEFAULT_THRESHOLD,
            decode: DecodeOptions::default(),
            train: TrainingConfig::default(),
            filter: Filter::default(),
            jobs: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "repo",
    "since",
    "until",
    "test_year",
    "min_count",
    "output_dir",
    "seed",
    "threshold",
    "beam_size",
    "max_len",
    "top_k",
    "learning_rate",
    "minibatch_words",
    "dropout",
    "beta1",
    "beta2",
    "epsilon",
    "decay_factor",
    "max_epochs",
    "embed",
    "hidden",
    "clip_norm",
    "lexicon_lambda",
    "dev_fraction",
    "patience",
    "category",
    "bugfix",
    "jobs",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("{e} (key {key})"))
}

impl RunConfig {
    /// Set one key. Errors carry a message without position.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "repo" => self.repo_path = Some(PathBuf::from(value)),
            "since" => self.since = Some(parse(key, value)?),
            "until" => self.until = Some(parse(key, value)?),
            "test_year" => self.test_year = Some(parse(key, value)?),
            "min_count" => self.min_count = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "beam_size" => self.decode.beam_size = parse(key, value)?,
            "max_len" => self.decode.max_len = parse(key, value)?,
            "top_k" => self.decode.top_k = parse(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "minibatch_words" => self.train.minibatch_words = parse(key, value)?,
            "dropout" => self.train.dropout = parse(key, value)?,
            "beta1" => self.train.beta1 = parse(key, value)?,
            "beta2" => self.train.beta2 = parse(key, value)?,
            "epsilon" => self.train.epsilon = parse(key, value)?,
            "decay_factor" => self.train.decay_factor = parse(key, value)?,
            "max_epochs" => self.train.max_epochs = parse(key, value)?,
            "embed" => self.train.embed = parse(key, value)?,
            "hidden" => self.train.hidden = parse(key, value)?,
            "clip_norm" => self.train.clip_norm = parse(key, value)?,
            "lexicon_lambda" => self.train.lexicon_lambda = parse(key, value)?,
            "dev_fraction" => self.train.dev_fraction = parse(key, value)?,
            "patience" => {
                self.train.patience = match value {
                    "none" | "" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "category" => {
                self.filter.category = match value {
                    "all" => None,
                    v => Some(v.parse::<Category>()?),
                }
            }
            "bugfix" => self.filter.bugfix = value.parse::<BugfixFilter>()?,
            "jobs" => self.jobs = Some(parse(key, value)?),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Model training uses the run seed.
    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    /// Apply `PATCHLOOM_SEED` if set.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        self.apply_seed_env(std::env::var(SEED_ENV).ok().as_deref())
    }

    pub fn apply_seed_env(&mut self, value: Option<&str>) -> Result<(), ConfigError> {
        if let Some(v) = value {
            self.seed = v.trim().parse().map_err(|_| ConfigError::BadSeedEnv(v.to_string()))?;
        }
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        cfg.set(key, value).map_err(|message| ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
            message,
        })?;
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}
