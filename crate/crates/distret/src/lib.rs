//! Distribution-aware dense retrieval for statistical tool corpora.
//!
//! The pipeline: ingest a knowledge base of functions annotated with data
//! profiles ([`corpus`]), embed fused text through a trainable hashed n-gram
//! encoder ([`encoder`]), fine-tune it contrastively with in-batch negatives
//! ([`training`]), serve exact top-k cosine retrieval ([`index`]), and score
//! retrieval quality, agent success, and encoding throughput ([`evaluation`],
//! [`bench`]). [`context`] assembles retrieved entries into a documentation
//! block an LLM agent can consume.

pub mod bench;
pub mod context;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod index;
mod persist;
pub mod rng;
pub mod synthetic;
pub mod training;

pub use corpus::{Corpus, DataProfile, FunctionEntry, QueryRecord};
pub use encoder::{Embedding, EncoderConfig, EncoderParams, HashedEncoder, TextEncoder};
pub use error::Error;
pub use evaluation::MetricsReport;
pub use index::{RankedResult, VectorStore};
pub use training::{TrainConfig, TrainState, TrainingTriple};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
