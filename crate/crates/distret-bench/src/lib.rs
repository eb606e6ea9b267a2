//! Shared fixtures for the criterion benchmarks.

use distret::encoder::{EncoderConfig, HashedEncoder};
use distret::synthetic::demo_corpus;
use distret::training::generate_synthetic_triples;
use distret::Corpus;

pub fn bench_corpus(entries: usize) -> Corpus {
    demo_corpus(entries, 7).expect("corpus generates")
}

pub fn bench_encoder() -> HashedEncoder {
    HashedEncoder::init(EncoderConfig::default()).expect("encoder initializes")
}

/// Fused query texts drawn from the synthetic generator.
pub fn fused_queries(corpus: &Corpus, per_entry: usize) -> Vec<String> {
    generate_synthetic_triples(corpus, per_entry, 3)
        .expect("triples generate")
        .iter()
        .map(|t| distret::corpus::fuse_query_text(&t.query).expect("query fuses"))
        .collect()
}
