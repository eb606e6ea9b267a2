//! Run configuration: JSON file merged under command-line flags.
//!
//! Precedence is flags over file over built-in defaults. The file path comes
//! from `--config` or, when absent, the `DISTRET_CONFIG` environment
//! variable.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use distret::encoder::EncoderConfig;
use distret::error::Error;
use distret::training::TrainConfig;

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "DISTRET_CONFIG";

/// The JSON file schema; everything is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
struct FileConfig {
    corpus_path: Option<PathBuf>,
    model_path: Option<PathBuf>,
    index_path: Option<PathBuf>,
    encoder: Option<EncoderConfig>,
    train: Option<TrainConfig>,
    cutoffs: Option<Vec<usize>>,
    bench_batch_size: Option<usize>,
}

/// Effective configuration after merging.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus_path: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub index_path: Option<PathBuf>,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub cutoffs: Vec<usize>,
    pub bench_batch_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus_path: None,
            model_path: None,
            index_path: None,
            encoder: EncoderConfig::default(),
            train: TrainConfig::default(),
            cutoffs: vec![1, 10],
            bench_batch_size: 128,
        }
    }
}

impl RunConfig {
    /// Load the file named by `--config` or `DISTRET_CONFIG`, if any, and
    /// merge it over the defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, Error> {
        let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let path = explicit.map(Path::to_path_buf).or(env_path);
        let mut config = Self::default();
        if let Some(path) = path {
            let text = fs::read_to_string(&path).map_err(|e| Error::InvalidArgument {
                message: format!("cannot read config {}: {e}", path.display()),
            })?;
            let file: FileConfig =
                serde_json::from_str(&text).map_err(|e| Error::InvalidArgument {
                    message: format!("invalid config {}: {e}", path.display()),
                })?;
            config.corpus_path = file.corpus_path.or(config.corpus_path);
            config.model_path = file.model_path.or(config.model_path);
            config.index_path = file.index_path.or(config.index_path);
            if let Some(encoder) = file.encoder {
                config.encoder = encoder;
            }
            if let Some(train) = file.train {
                config.train = train;
            }
            if let Some(cutoffs) = file.cutoffs {
                config.cutoffs = cutoffs;
            }
            if let Some(batch) = file.bench_batch_size {
                config.bench_batch_size = batch;
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), Error> {
        if self.cutoffs.is_empty() {
            return Err(Error::InvalidArgument {
                message: "cutoffs must be non-empty".into(),
            });
        }
        if self.cutoffs[0] == 0 || self.cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument {
                message: "cutoffs must be positive and strictly increasing".into(),
            });
        }
        if self.bench_batch_size == 0 {
            return Err(Error::InvalidArgument {
                message: "bench_batch_size must be positive".into(),
            });
        }
        Ok(())
    }

    /// One seed drives initialization, shuffling, and query generation.
    pub fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(seed) = seed {
            self.encoder.seed = seed;
            self.train.shuffle_seed = seed;
        }
    }

    pub fn require(
        flag: Option<PathBuf>,
        fallback: &Option<PathBuf>,
        what: &str,
        hint: &str,
    ) -> Result<PathBuf, Error> {
        flag.or_else(|| fallback.clone())
            .ok_or_else(|| Error::InvalidArgument {
                message: format!("{what} required ({hint})"),
            })
    }
}
