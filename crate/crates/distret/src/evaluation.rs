//! Retrieval quality metrics and agent success bookkeeping.
//!
//! Each evaluation query has exactly one ground-truth entry, so relevance is
//! binary and the ideal DCG within any cutoff that contains the item is 1:
//! NDCG@k collapses to `1/log2(rank+1)` and MRR@k to `1/rank`, both zero when
//! the item is missing from the top k. Aggregates are unweighted means over
//! queries.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{fuse_query_text, QueryRecord};
use crate::encoder::TextEncoder;
use crate::error::Error;
use crate::index::{search, RankedResult, VectorStore};
use crate::Result;

/// One labeled evaluation query.
#[derive(Debug, Clone)]
pub struct EvalQuery {
    pub record: QueryRecord,
    pub ground_truth: String,
}

/// Per-cutoff averages, all in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffMetrics {
    pub recall: f64,
    pub ndcg: f64,
    pub mrr: f64,
}

/// Aggregated metrics for a query set, keyed by cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub cutoffs: BTreeMap<usize, CutoffMetrics>,
    pub query_count: usize,
}

impl MetricsReport {
    /// `{"1": {"recall": ..}, "10": {..}, "query_count": n}`
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, m) in &self.cutoffs {
            map.insert(k.to_string(), serde_json::to_value(m).expect("metrics"));
        }
        map.insert("query_count".into(), self.query_count.into());
        serde_json::Value::Object(map)
    }
}

fn rank_of(results: &[RankedResult], ground_truth: &str) -> Option<usize> {
    results
        .iter()
        .find(|r| r.fc_id == ground_truth)
        .map(|r| r.rank)
}

/// 1 if the ground truth appears at rank <= k, else 0.
pub fn recall_at_k(results: &[RankedResult], ground_truth: &str, k: usize) -> f64 {
    match rank_of(results, ground_truth) {
        Some(rank) if rank <= k => 1.0,
        _ => 0.0,
    }
}

/// `1/log2(rank+1)` within the cutoff, else 0.
pub fn ndcg_at_k(results: &[RankedResult], ground_truth: &str, k: usize) -> f64 {
    match rank_of(results, ground_truth) {
        Some(rank) if rank <= k => 1.0 / ((rank + 1) as f64).log2(),
        _ => 0.0,
    }
}

/// `1/rank` within the cutoff, else 0.
pub fn mrr_at_k(results: &[RankedResult], ground_truth: &str, k: usize) -> f64 {
    match rank_of(results, ground_truth) {
        Some(rank) if rank <= k => 1.0 / rank as f64,
        _ => 0.0,
    }
}

/// Retrieve every query against the store and average the per-query metrics
/// at each requested cutoff.
pub fn evaluate<E: TextEncoder>(
    store: &VectorStore,
    encoder: &E,
    queries: &[EvalQuery],
    cutoffs: &[usize],
) -> Result<MetricsReport> {
    if queries.is_empty() {
        return Err(Error::invalid("evaluation requires at least one query"));
    }
    if cutoffs.is_empty() || cutoffs.contains(&0) {
        return Err(Error::invalid("cutoffs must be positive"));
    }
    let max_k = *cutoffs.iter().max().expect("non-empty");

    let mut sums: BTreeMap<usize, (f64, f64, f64)> =
        cutoffs.iter().map(|&k| (k, (0.0, 0.0, 0.0))).collect();
    for query in queries {
        if !store.contains(&query.ground_truth) {
            return Err(Error::UnresolvedTarget {
                fc_id: query.ground_truth.clone(),
            });
        }
        let fused = fuse_query_text(&query.record)?;
        let embedding = encoder.encode_text(&fused)?;
        let results = search(store, &embedding, max_k)?;
        for (&k, acc) in sums.iter_mut() {
            acc.0 += recall_at_k(&results, &query.ground_truth, k);
            acc.1 += ndcg_at_k(&results, &query.ground_truth, k);
            acc.2 += mrr_at_k(&results, &query.ground_truth, k);
        }
    }

    let n = queries.len() as f64;
    let cutoffs = sums
        .into_iter()
        .map(|(k, (recall, ndcg, mrr))| {
            (
                k,
                CutoffMetrics {
                    recall: recall / n,
                    ndcg: ndcg / n,
                    mrr: mrr / n,
                },
            )
        })
        .collect();
    Ok(MetricsReport {
        cutoffs,
        query_count: queries.len(),
    })
}

/// Outcome of one end-to-end agent task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentTaskResult {
    pub task_id: String,
    pub agent_output: String,
    pub ground_truth: String,
    pub matched: bool,
}

impl AgentTaskResult {
    /// Judge an output against its ground truth with [`answers_match`].
    pub fn judge(
        task_id: impl Into<String>,
        agent_output: impl Into<String>,
        ground_truth: impl Into<String>,
    ) -> Self {
        let agent_output = agent_output.into();
        let ground_truth = ground_truth.into();
        let matched = answers_match(&agent_output, &ground_truth);
        Self {
            task_id: task_id.into(),
            agent_output,
            ground_truth,
            matched,
        }
    }
}

/// Numeric-tolerant exact match: when both sides parse as finite decimals the
/// verdict is `|a - g| <= 1e-4 * |g|`; otherwise the trimmed strings must be
/// identical.
pub fn answers_match(agent_output: &str, ground_truth: &str) -> bool {
    let a_text = agent_output.trim();
    let g_text = ground_truth.trim();
    match (a_text.parse::<f64>(), g_text.parse::<f64>()) {
        (Ok(a), Ok(g)) if a.is_finite() && g.is_finite() => (a - g).abs() <= 1e-4 * g.abs(),
        _ => a_text == g_text,
    }
}

/// Fraction of tasks whose output matched.
pub fn success_rate(results: &[AgentTaskResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::invalid("success rate requires at least one task"));
    }
    let matched = results.iter().filter(|r| r.matched).count();
    Ok(matched as f64 / results.len() as f64)
}

#[derive(Debug, Deserialize)]
struct AgentTaskLine {
    task_id: String,
    agent_output: String,
    ground_truth: String,
}

/// Load agent task outcomes from JSON Lines of
/// `{"task_id", "agent_output", "ground_truth"}`, judging each line.
pub fn load_agent_tasks(path: impl AsRef<Path>) -> Result<Vec<AgentTaskResult>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    agent_tasks_from_reader(BufReader::new(file))
}

/// Reader-based variant of [`load_agent_tasks`].
pub fn agent_tasks_from_reader(reader: impl Read) -> Result<Vec<AgentTaskResult>> {
    let reader = BufReader::new(reader);
    let mut tasks = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let parsed: AgentTaskLine =
            serde_json::from_str(&text).map_err(|e| Error::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        tasks.push(AgentTaskResult::judge(
            parsed.task_id,
            parsed.agent_output,
            parsed.ground_truth,
        ));
    }
    Ok(tasks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    /// Ranking with the ground truth planted at `gt_rank` (1-based), or
    /// absent when `gt_rank` is None.
    fn ranking(len: usize, gt_rank: Option<usize>) -> (Vec<RankedResult>, String) {
        let gt = "GT::target".to_string();
        let results = (1..=len)
            .map(|rank| RankedResult {
                rank,
                fc_id: if Some(rank) == gt_rank {
                    gt.clone()
                } else {
                    format!("Other{rank}::fn")
                },
                score: 1.0 - rank as f64 * 1e-3,
            })
            .collect();
        (results, gt)
    }

    #[test]
    fn recall_respects_the_cutoff() {
        let (results, gt) = ranking(10, Some(3));
        assert_eq!(recall_at_k(&results, &gt, 10), 1.0);
        assert_eq!(recall_at_k(&results, &gt, 2), 0.0);
        assert_eq!(recall_at_k(&results, &gt, 3), 1.0);
    }

    #[test]
    fn recall_at_one_is_top1_accuracy() {
        let (hit, gt_hit) = ranking(5, Some(1));
        let (miss, gt_miss) = ranking(5, Some(2));
        assert_eq!(recall_at_k(&hit, &gt_hit, 1), 1.0);
        assert_eq!(recall_at_k(&miss, &gt_miss, 1), 0.0);
    }

    #[test]
    fn ndcg_hand_values() {
        let (r1, gt1) = ranking(10, Some(1));
        assert!((ndcg_at_k(&r1, &gt1, 10) - 1.0).abs() < 1e-12);
        let (r2, gt2) = ranking(10, Some(2));
        // 1/log2(3)
        assert!((ndcg_at_k(&r2, &gt2, 10) - 0.630_930).abs() < 1e-6);
        let (absent, gt_absent) = ranking(10, None);
        assert_eq!(ndcg_at_k(&absent, &gt_absent, 10), 0.0);
    }

    #[test]
    fn mrr_hand_values() {
        let (r4, gt4) = ranking(10, Some(4));
        assert_eq!(mrr_at_k(&r4, &gt4, 10), 0.25);
        let (r1, gt1) = ranking(10, Some(1));
        assert_eq!(mrr_at_k(&r1, &gt1, 10), 1.0);
        let (absent, gt) = ranking(10, None);
        assert_eq!(mrr_at_k(&absent, &gt, 10), 0.0);
    }

    /// Brute-force reference implementations used for parity checks: scan
    /// the list for the ground truth instead of trusting stored ranks.
    fn oracle_metrics(results: &[RankedResult], gt: &str, k: usize) -> (f64, f64, f64) {
        let mut found = None;
        for (pos, r) in results.iter().enumerate() {
            if r.fc_id == gt {
                found = Some(pos + 1);
                break;
            }
        }
        match found {
            Some(rank) if rank <= k => {
                let recall = 1.0;
                let ndcg = 1.0 / ((rank + 1) as f64).log2();
                let mrr = 1.0 / rank as f64;
                (recall, ndcg, mrr)
            }
            _ => (0.0, 0.0, 0.0),
        }
    }

    #[test]
    fn metrics_match_oracle_on_random_instances() {
        let mut rng = SplitMix64::new(31);
        for _ in 0..1000 {
            let len = 1 + rng.next_below(30);
            let present = rng.next_below(4) > 0;
            let gt_rank = present.then(|| 1 + rng.next_below(len));
            let (results, gt) = ranking(len, gt_rank);
            let k = 1 + rng.next_below(35);
            let (recall, ndcg, mrr) = oracle_metrics(&results, &gt, k);
            assert_eq!(recall_at_k(&results, &gt, k), recall);
            assert_eq!(ndcg_at_k(&results, &gt, k), ndcg);
            assert_eq!(mrr_at_k(&results, &gt, k), mrr);
        }
    }

    #[test]
    fn metric_bounds_and_ordering() {
        let mut rng = SplitMix64::new(32);
        for _ in 0..300 {
            let len = 1 + rng.next_below(20);
            let gt_rank = (rng.next_below(3) > 0).then(|| 1 + rng.next_below(len));
            let (results, gt) = ranking(len, gt_rank);
            let k = 1 + rng.next_below(25);
            let recall = recall_at_k(&results, &gt, k);
            let ndcg = ndcg_at_k(&results, &gt, k);
            let mrr = mrr_at_k(&results, &gt, k);
            for v in [recall, ndcg, mrr] {
                assert!((0.0..=1.0).contains(&v));
            }
            assert!(mrr <= recall);
            // recall non-decreasing in k
            assert!(recall_at_k(&results, &gt, k + 1) >= recall);
        }
    }

    #[test]
    fn ndcg_and_mrr_decrease_with_rank() {
        for k in [5usize, 10] {
            let mut prev_ndcg = f64::INFINITY;
            let mut prev_mrr = f64::INFINITY;
            for rank in 1..=k {
                let (results, gt) = ranking(k, Some(rank));
                let ndcg = ndcg_at_k(&results, &gt, k);
                let mrr = mrr_at_k(&results, &gt, k);
                assert!(ndcg < prev_ndcg);
                assert!(mrr < prev_mrr);
                prev_ndcg = ndcg;
                prev_mrr = mrr;
            }
        }
    }

    #[test]
    fn success_rate_counts_matches() {
        let mut tasks: Vec<AgentTaskResult> = (0..12)
            .map(|i| AgentTaskResult::judge(format!("t{i}"), "1.0", "1.0"))
            .collect();
        tasks.extend((0..4).map(|i| AgentTaskResult::judge(format!("m{i}"), "2.0", "1.0")));
        assert_eq!(success_rate(&tasks).unwrap(), 0.75);
        let misses: Vec<AgentTaskResult> = (0..16)
            .map(|i| AgentTaskResult::judge(format!("x{i}"), "a", "b"))
            .collect();
        assert_eq!(success_rate(&misses).unwrap(), 0.0);
    }

    #[test]
    fn comparator_tolerance_boundary() {
        // relative error ~2.2e-4 exceeds the 1e-4 tolerance
        assert!(!answers_match("-0.2185472", "-0.2185"));
        // well inside the tolerance
        assert!(answers_match("-0.21851", "-0.2185"));
        // non-numeric falls back to exact trimmed equality
        assert!(answers_match("  converged  ", "converged"));
        assert!(!answers_match("Converged", "converged"));
        // zero ground truth only matches exact zero
        assert!(answers_match("0.0", "0"));
        assert!(!answers_match("1e-9", "0"));
    }

    #[test]
    fn agent_tasks_parse_and_judge() {
        let lines = r#"{"task_id": "t1", "agent_output": "-0.2185472", "ground_truth": "-0.2185"}
{"task_id": "t2", "agent_output": "3.14159", "ground_truth": "3.141592"}"#;
        let tasks = agent_tasks_from_reader(lines.as_bytes()).unwrap();
        assert!(!tasks[0].matched);
        assert!(tasks[1].matched);
    }

    /// Test double for the encoder contract: maps fused query text to fixed
    /// embeddings so ranks can be pinned exactly.
    struct LookupEncoder {
        dim: usize,
        map: std::collections::HashMap<String, Vec<f64>>,
    }

    impl crate::encoder::TextEncoder for LookupEncoder {
        fn embed_dim(&self) -> usize {
            self.dim
        }

        fn encode_text(&self, text: &str) -> crate::Result<crate::encoder::Embedding> {
            let values = self
                .map
                .get(text)
                .cloned()
                .ok_or(crate::error::Error::EmptyInput)?;
            Ok(crate::encoder::Embedding { values })
        }
    }

    fn pinned_rank_setup() -> (crate::index::VectorStore, LookupEncoder, Vec<EvalQuery>) {
        use crate::corpus::{fuse_query_text, DataProfile, QueryRecord};

        // 12 orthogonal document rows; with k = 10 a ground truth can sit
        // beyond the cutoff
        let dim = 12;
        let ids: Vec<String> = (0..dim).map(|i| format!("Pkg{i:02}::fn{i}")).collect();
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                let mut row = vec![0.0; dim];
                row[i] = 1.0;
                row
            })
            .collect();
        let store = crate::index::VectorStore::from_rows(ids.clone(), rows, dim).unwrap();

        let make_record = |text: &str| QueryRecord::new(text, DataProfile::default()).unwrap();
        let rank1 = make_record("hits rank one");
        // positive score on every row except row 0 leaves the ground truth
        // at rank 12, outside the top 10
        let absent = make_record("misses the cutoff");
        let rank2 = make_record("lands at rank two");

        let mut map = std::collections::HashMap::new();
        let mut rank1_emb = vec![0.0; dim];
        rank1_emb[0] = 1.0;
        map.insert(fuse_query_text(&rank1).unwrap(), rank1_emb);
        let absent_emb: Vec<f64> = (0..dim)
            .map(|i| if i == 0 { 0.0 } else { 1.0 - 0.01 * i as f64 })
            .collect();
        map.insert(fuse_query_text(&absent).unwrap(), absent_emb);
        let mut rank2_emb = vec![0.0; dim];
        rank2_emb[5] = 1.0;
        rank2_emb[0] = 0.8;
        map.insert(fuse_query_text(&rank2).unwrap(), rank2_emb);

        let queries = vec![
            EvalQuery {
                record: rank1,
                ground_truth: ids[0].clone(),
            },
            EvalQuery {
                record: absent,
                ground_truth: ids[0].clone(),
            },
            EvalQuery {
                record: rank2,
                ground_truth: ids[0].clone(),
            },
        ];
        (store, LookupEncoder { dim, map }, queries)
    }

    #[test]
    fn evaluate_averages_rank1_and_absent_to_one_half() {
        let (store, encoder, queries) = pinned_rank_setup();
        let report = evaluate(&store, &encoder, &queries[..2], &[1, 10]).unwrap();
        assert_eq!(report.query_count, 2);
        let at10 = report.cutoffs[&10];
        assert_eq!(at10.recall, 0.5);
        assert_eq!(at10.mrr, 0.5);
        assert_eq!(at10.ndcg, 0.5);
    }

    #[test]
    fn evaluate_all_rank1_gives_perfect_metrics() {
        let (store, encoder, queries) = pinned_rank_setup();
        let report = evaluate(&store, &encoder, &queries[..1], &[1, 10]).unwrap();
        for metrics in report.cutoffs.values() {
            assert_eq!(metrics.recall, 1.0);
            assert_eq!(metrics.ndcg, 1.0);
            assert_eq!(metrics.mrr, 1.0);
        }
    }

    #[test]
    fn evaluate_single_rank2_query_hand_values() {
        let (store, encoder, queries) = pinned_rank_setup();
        let report = evaluate(&store, &encoder, &queries[2..], &[1, 10]).unwrap();
        let at10 = report.cutoffs[&10];
        assert!((at10.ndcg - 0.630_930).abs() < 1e-6);
        assert_eq!(at10.mrr, 0.5);
        assert_eq!(report.cutoffs[&1].recall, 0.0);
    }

    #[test]
    fn evaluate_rejects_unresolvable_ground_truth() {
        let (store, encoder, mut queries) = pinned_rank_setup();
        queries[0].ground_truth = "Ghost::fn".into();
        let err = evaluate(&store, &encoder, &queries[..1], &[1]).unwrap_err();
        match err {
            Error::UnresolvedTarget { fc_id } => assert_eq!(fc_id, "Ghost::fn"),
            other => panic!("expected unresolved target, got {other:?}"),
        }
    }

    #[test]
    fn report_json_shape() {
        let mut cutoffs = BTreeMap::new();
        cutoffs.insert(
            1,
            CutoffMetrics {
                recall: 0.5,
                ndcg: 0.5,
                mrr: 0.5,
            },
        );
        cutoffs.insert(
            10,
            CutoffMetrics {
                recall: 1.0,
                ndcg: 0.8,
                mrr: 0.75,
            },
        );
        let report = MetricsReport {
            cutoffs,
            query_count: 4,
        };
        let json = report.to_json();
        assert_eq!(json["query_count"], 4);
        assert_eq!(json["10"]["recall"], 1.0);
        assert_eq!(json["1"]["mrr"], 0.5);
    }
}
