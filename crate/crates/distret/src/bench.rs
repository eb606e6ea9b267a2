//! Encoding latency and throughput measurement.
//!
//! Latency is the mean wall-clock time to encode one fused query under
//! sequential execution: `L = T_seq / |Q| * 1000` ms. Throughput processes
//! the queries in batches and reports `QPS = |Q| / T_batch`. Both timers
//! cover encoding only — corpus loading and index building are never inside
//! the timed region — and each measurement is preceded by an untimed warmup
//! pass over up to 32 queries to keep cold-start jitter out of the numbers.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::encoder::TextEncoder;
use crate::error::Error;
use crate::Result;

/// Timing results; the derived fields are computed from the stored raw
/// timings by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub query_count: usize,
    pub t_seq_seconds: f64,
    /// `t_seq_seconds / query_count * 1000`
    pub latency_ms: f64,
    pub batch_size: usize,
    pub t_batch_seconds: f64,
    /// `query_count / t_batch_seconds`
    pub qps: f64,
}

impl BenchReport {
    pub fn new(
        query_count: usize,
        t_seq_seconds: f64,
        batch_size: usize,
        t_batch_seconds: f64,
    ) -> Self {
        Self {
            query_count,
            t_seq_seconds,
            latency_ms: t_seq_seconds / query_count as f64 * 1000.0,
            batch_size,
            t_batch_seconds,
            qps: query_count as f64 / t_batch_seconds,
        }
    }
}

fn warmup<E: TextEncoder>(encoder: &E, fused: &[String]) -> Result<()> {
    for (i, text) in fused.iter().take(32.min(fused.len())).enumerate() {
        encode_indexed(encoder, text, i)?;
    }
    Ok(())
}

fn encode_indexed<E: TextEncoder>(encoder: &E, text: &str, index: usize) -> Result<f64> {
    let embedding = encoder
        .encode_text(text)
        .map_err(|e| Error::InvalidArgument {
            message: format!("encoding query {index} failed: {e}"),
        })?;
    Ok(embedding.values[0])
}

/// Sequential timing: returns `(t_seq_seconds, latency_ms)`.
pub fn measure_latency<E: TextEncoder>(encoder: &E, fused: &[String]) -> Result<(f64, f64)> {
    if fused.is_empty() {
        return Err(Error::invalid(
            "latency measurement needs at least one query",
        ));
    }
    warmup(encoder, fused)?;
    let mut sink = 0.0;
    let start = Instant::now();
    for (i, text) in fused.iter().enumerate() {
        sink += encode_indexed(encoder, text, i)?;
    }
    let t_seq = start.elapsed().as_secs_f64();
    black_box(sink);
    Ok((t_seq, t_seq / fused.len() as f64 * 1000.0))
}

/// Batched timing: returns `(t_batch_seconds, qps)`. The final batch may be
/// short; every query is encoded exactly once.
pub fn measure_qps<E: TextEncoder>(
    encoder: &E,
    fused: &[String],
    batch_size: usize,
) -> Result<(f64, f64)> {
    if fused.is_empty() {
        return Err(Error::invalid(
            "throughput measurement needs at least one query",
        ));
    }
    if batch_size == 0 {
        return Err(Error::invalid("batch_size must be positive"));
    }
    warmup(encoder, fused)?;
    let mut sink = 0.0;
    let start = Instant::now();
    let mut next = 0usize;
    for batch in fused.chunks(batch_size) {
        for text in batch {
            sink += encode_indexed(encoder, text, next)?;
            next += 1;
        }
    }
    let t_batch = start.elapsed().as_secs_f64();
    black_box(sink);
    Ok((t_batch, fused.len() as f64 / t_batch))
}

/// Run both measurements and assemble the report.
pub fn run_bench<E: TextEncoder>(
    encoder: &E,
    fused: &[String],
    batch_size: usize,
) -> Result<BenchReport> {
    let (t_seq, _) = measure_latency(encoder, fused)?;
    let (t_batch, _) = measure_qps(encoder, fused, batch_size)?;
    Ok(BenchReport::new(fused.len(), t_seq, batch_size, t_batch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, HashedEncoder};

    fn sample_queries(n: usize) -> Vec<String> {
        (0..n)
            .map(|i| {
                format!(
                    "query {i}: fit a robust model to sparse count data with offsets \
                     and report goodness of fit diagnostics"
                )
            })
            .collect()
    }

    fn small_encoder() -> HashedEncoder {
        HashedEncoder::init(EncoderConfig {
            hash_dim: 1024,
            embed_dim: 16,
            ngram_orders: vec![1, 2],
            seed: 1,
        })
        .unwrap()
    }

    #[test]
    fn report_formulas_hold_by_construction() {
        let report = BenchReport::new(500, 2.0, 128, 0.5);
        assert_eq!(report.latency_ms, 4.0);
        assert_eq!(report.qps, 1000.0);
        // stored fields recompute exactly
        assert_eq!(
            report.latency_ms,
            report.t_seq_seconds / report.query_count as f64 * 1000.0
        );
        assert_eq!(
            report.qps,
            report.query_count as f64 / report.t_batch_seconds
        );
    }

    #[test]
    fn measurements_produce_positive_timings() {
        let encoder = small_encoder();
        let queries = sample_queries(64);
        let report = run_bench(&encoder, &queries, 16).unwrap();
        assert_eq!(report.query_count, 64);
        assert!(report.t_seq_seconds > 0.0);
        assert!(report.t_batch_seconds > 0.0);
        assert!(report.latency_ms > 0.0);
        assert!(report.qps > 0.0);
    }

    #[test]
    fn failing_query_reports_its_index() {
        let encoder = small_encoder();
        let mut queries = sample_queries(3);
        queries[2] = "???".into(); // tokenizes to nothing
        let err = measure_latency(&encoder, &queries).unwrap_err();
        match err {
            Error::InvalidArgument { message } => assert!(message.contains("query 2")),
            other => panic!("expected indexed failure, got {other:?}"),
        }
    }

    #[test]
    fn empty_query_list_is_rejected() {
        let encoder = small_encoder();
        assert!(measure_latency(&encoder, &[]).is_err());
        assert!(measure_qps(&encoder, &[], 8).is_err());
        assert!(measure_qps(&encoder, &sample_queries(2), 0).is_err());
    }
}
