//! Text embedding: hashed n-gram features through a trainable linear map.
//!
//! The encoder contract is the [`TextEncoder`] trait — anything that turns a
//! fused text into an m-dimensional vector can back the index, evaluation,
//! and context modules. The built-in [`HashedEncoder`] lowercases and splits
//! text into word n-grams, hashes them into `hash_dim` buckets with 64-bit
//! FNV-1a, L2-normalizes the counts, and applies a learned `embed_dim x
//! hash_dim` projection. Relevance between two embeddings is their cosine.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::persist;
use crate::rng::SplitMix64;
use crate::Result;

/// Norms below this have no usable direction for cosine scoring.
pub const NORM_EPSILON: f64 = 1e-12;

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Configuration of the hashed n-gram encoder. Fields omitted from a JSON
/// config take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    /// Sparse feature bucket count D.
    pub hash_dim: usize,
    /// Embedding dimension m.
    pub embed_dim: usize,
    /// Word n-gram orders, strictly increasing (1 = unigrams).
    pub ngram_orders: Vec<usize>,
    /// Seed for parameter initialization.
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            hash_dim: 1 << 16,
            embed_dim: 64,
            ngram_orders: vec![1, 2],
            seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hash_dim == 0 || self.embed_dim == 0 {
            return Err(Error::invalid("hash_dim and embed_dim must be positive"));
        }
        if self.embed_dim > self.hash_dim {
            return Err(Error::invalid(format!(
                "embed_dim {} exceeds hash_dim {}",
                self.embed_dim, self.hash_dim
            )));
        }
        if self.ngram_orders.is_empty() {
            return Err(Error::invalid("ngram_orders must be non-empty"));
        }
        if self.ngram_orders.windows(2).any(|w| w[0] >= w[1]) || self.ngram_orders[0] == 0 {
            return Err(Error::invalid(
                "ngram_orders must be positive and strictly increasing",
            ));
        }
        Ok(())
    }
}

/// Learned parameters: the `embed_dim x hash_dim` projection.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub projection: Matrix,
}

impl EncoderParams {
    /// Initialize with entries i.i.d. uniform on [-1/sqrt(D), 1/sqrt(D)] from
    /// the config seed. The small scale keeps initial cosines near zero.
    pub fn init(config: &EncoderConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SplitMix64::new(config.seed);
        let scale = 1.0 / (config.hash_dim as f64).sqrt();
        let data = (0..config.embed_dim * config.hash_dim)
            .map(|_| rng.next_symmetric(scale))
            .collect();
        Ok(Self {
            projection: Matrix::from_vec(config.embed_dim, config.hash_dim, data),
        })
    }

    pub fn embed_dim(&self) -> usize {
        self.projection.rows()
    }

    pub fn hash_dim(&self) -> usize {
        self.projection.cols()
    }
}

/// L2-normalized bag of hashed n-grams.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFeatures {
    /// Strictly increasing bucket ids in [0, hash_dim).
    pub indices: Vec<usize>,
    /// Positive values, same length as `indices`.
    pub values: Vec<f64>,
}

impl SparseFeatures {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }
}

/// Dense embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Lowercase and split on every character that is not alphanumeric or an
/// underscore, dropping empty fragments.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Hash token n-grams into `hash_dim` buckets and L2-normalize the counts.
///
/// N-grams are the tokens joined by `_`, hashed with 64-bit FNV-1a and
/// reduced modulo `hash_dim`. Counts from colliding n-grams accumulate.
pub fn featurize(tokens: &[String], config: &EncoderConfig) -> SparseFeatures {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for &order in &config.ngram_orders {
        if order == 0 || order > tokens.len() {
            continue;
        }
        for window in tokens.windows(order) {
            let gram = window.join("_");
            let bucket = (persist::fnv1a64(gram.as_bytes()) % config.hash_dim as u64) as usize;
            *counts.entry(bucket).or_insert(0.0) += 1.0;
        }
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    let (indices, values) = if norm > 0.0 {
        counts.into_iter().map(|(i, v)| (i, v / norm)).unzip()
    } else {
        (Vec::new(), Vec::new())
    };
    SparseFeatures { indices, values }
}

/// Apply the linear map: `e = projection . x`. Errors on empty features — a
/// zero vector has no cosine direction.
pub fn encode(params: &EncoderParams, features: &SparseFeatures) -> Result<Embedding> {
    if features.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&max) = features.indices.last() {
        if max >= params.hash_dim() {
            return Err(Error::invalid(format!(
                "feature index {max} out of range for hash_dim {}",
                params.hash_dim()
            )));
        }
    }
    let m = params.embed_dim();
    let mut values = vec![0.0; m];
    for (r, out) in values.iter_mut().enumerate() {
        let row = params.projection.row(r);
        let mut acc = 0.0;
        for (idx, val) in features.iter() {
            acc += row[idx] * val;
        }
        *out = acc;
    }
    Ok(Embedding { values })
}

/// Cosine similarity. Errors if either operand's norm is below
/// [`NORM_EPSILON`].
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    debug_assert_eq!(a.dim(), b.dim());
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let (na, nb) = (na.sqrt(), nb.sqrt());
    if na < NORM_EPSILON || nb < NORM_EPSILON {
        return Err(Error::ZeroNorm {
            context: "cosine operand".into(),
        });
    }
    Ok(dot / (na * nb))
}

/// Anything that maps text to a fixed-dimension embedding can serve the
/// index, evaluation, bench, and context modules.
pub trait TextEncoder {
    fn embed_dim(&self) -> usize;
    fn encode_text(&self, text: &str) -> Result<Embedding>;
}

/// The built-in trainable encoder: hashed n-gram features plus a linear
/// projection.
#[derive(Debug, Clone)]
pub struct HashedEncoder {
    pub config: EncoderConfig,
    pub params: EncoderParams,
}

impl HashedEncoder {
    pub fn new(config: EncoderConfig, params: EncoderParams) -> Result<Self> {
        config.validate()?;
        if params.embed_dim() != config.embed_dim || params.hash_dim() != config.hash_dim {
            return Err(Error::invalid("params shape does not match config"));
        }
        Ok(Self { config, params })
    }

    /// Fresh encoder with seeded random initialization.
    pub fn init(config: EncoderConfig) -> Result<Self> {
        let params = EncoderParams::init(&config)?;
        Ok(Self { config, params })
    }

    pub fn featurize_text(&self, text: &str) -> SparseFeatures {
        featurize(&tokenize(text), &self.config)
    }
}

impl TextEncoder for HashedEncoder {
    fn embed_dim(&self) -> usize {
        self.config.embed_dim
    }

    fn encode_text(&self, text: &str) -> Result<Embedding> {
        encode(&self.params, &self.featurize_text(text))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    format: String,
    version: u32,
    config: EncoderConfig,
    rows: usize,
    cols: usize,
    log_tau: f64,
    step_count: u64,
}

const MODEL_FORMAT: &str = "distret-model";
const MODEL_VERSION: u32 = 1;

/// A persisted encoder: config, projection, and the trained temperature
/// state. Round-trips bit-exactly — the projection is stored as raw
/// little-endian f64 bytes after a one-line JSON header.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub encoder: HashedEncoder,
    /// Temperature is kept in log space; tau = exp(log_tau).
    pub log_tau: f64,
    pub step_count: u64,
}

impl Checkpoint {
    pub fn tau(&self) -> f64 {
        self.log_tau.exp()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(file);
        let header = ModelHeader {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.encoder.config.clone(),
            rows: self.encoder.params.embed_dim(),
            cols: self.encoder.params.hash_dim(),
            log_tau: self.log_tau,
            step_count: self.step_count,
        };
        persist::write_json_line(&mut writer, &header, path)?;
        persist::write_f64_block(&mut writer, self.encoder.params.projection.as_slice(), path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let header: ModelHeader = persist::read_json_line(&mut reader, path)?;
        if header.format != MODEL_FORMAT || header.version != MODEL_VERSION {
            return Err(Error::FileFormat {
                path: path.to_owned(),
                message: format!(
                    "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                    header.format, header.version
                ),
            });
        }
        if header.rows != header.config.embed_dim || header.cols != header.config.hash_dim {
            return Err(Error::FileFormat {
                path: path.to_owned(),
                message: "matrix shape does not match config".into(),
            });
        }
        let data = persist::read_f64_block(&mut reader, header.rows * header.cols, path)?;
        let params = EncoderParams {
            projection: Matrix::from_vec(header.rows, header.cols, data),
        };
        Ok(Self {
            encoder: HashedEncoder::new(header.config, params)?,
            log_tau: header.log_tau,
            step_count: header.step_count,
        })
    }
}
