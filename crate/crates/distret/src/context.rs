//! Assembly of the retrieved-documentation block for an LLM agent.
//!
//! Top-k retrieval hits are joined back to their corpus entries and rendered
//! as a deterministic plain-text block: a header line, then per item a
//! `N. [ID: fc_id] (score: s)` line followed by indented usage, profile,
//! description, and example sections. Scores are cosine similarities.

use serde::Serialize;

use crate::corpus::{fuse_query_text, Corpus, DataProfile, QueryRecord};
use crate::encoder::TextEncoder;
use crate::error::Error;
use crate::index::{search, VectorStore};
use crate::Result;

/// First line of every rendered block.
pub const CONTEXT_HEADER: &str = "Retrieved R Documentation";

/// Marker appended when a description is cut at the character budget.
pub const TRUNCATION_MARKER: &str = " ...[truncated]";

/// Rendering and assembly knobs.
#[derive(Debug, Clone)]
pub struct ContextOptions {
    /// Maximum characters of description carried per item.
    pub description_budget: usize,
}

impl Default for ContextOptions {
    fn default() -> Self {
        Self {
            description_budget: 1200,
        }
    }
}

/// One retrieved item with the metadata an agent needs to call the function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextItem {
    pub rank: usize,
    pub score: f64,
    pub fc_id: String,
    pub package_name: String,
    pub function_name: String,
    pub description: String,
    pub data_profile: DataProfile,
    pub usage_guidance: String,
    pub example_code: String,
    pub task_type: String,
}

/// The assembled payload: the echoed query plus ranked items.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolContext {
    pub query_echo: String,
    pub k_requested: usize,
    pub items: Vec<ContextItem>,
}

fn truncate_description(text: &str, budget: usize) -> String {
    let trimmed = text.trim();
    if trimmed.chars().count() <= budget {
        return trimmed.to_string();
    }
    let cut: String = trimmed.chars().take(budget).collect();
    format!("{}{}", cut.trim_end(), TRUNCATION_MARKER)
}

/// Fuse and encode the query, search the store, and join every hit back to
/// its corpus entry. Fails if a store id is missing from the corpus.
pub fn build_tool_context<E: TextEncoder>(
    store: &VectorStore,
    corpus: &Corpus,
    encoder: &E,
    record: &QueryRecord,
    k: usize,
    options: &ContextOptions,
) -> Result<ToolContext> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let fused = fuse_query_text(record)?;
    let embedding = encoder.encode_text(&fused)?;
    let hits = search(store, &embedding, k)?;
    let mut items = Vec::with_capacity(hits.len());
    for hit in hits {
        let entry = corpus.get(&hit.fc_id).ok_or_else(|| Error::StoreMismatch {
            fc_id: hit.fc_id.clone(),
        })?;
        items.push(ContextItem {
            rank: hit.rank,
            score: hit.score,
            fc_id: entry.fc_id.clone(),
            package_name: entry.package_name().to_string(),
            function_name: entry.function_name().to_string(),
            description: truncate_description(&entry.ground_truth_doc, options.description_budget),
            data_profile: entry.data_profile.clone(),
            usage_guidance: entry.usage_guidance.clone(),
            example_code: entry.example_code.clone(),
            task_type: entry.task_type.clone(),
        });
    }
    Ok(ToolContext {
        query_echo: record.query_text.clone(),
        k_requested: k,
        items,
    })
}

fn push_indented(out: &mut String, indent: &str, text: &str) {
    for line in text.lines() {
        out.push_str(indent);
        out.push_str(line);
        out.push('\n');
    }
}

/// Render the block. Empty example sections are omitted rather than rendered
/// blank; rendering the same context twice yields identical strings.
pub fn render_context_block(context: &ToolContext) -> String {
    let mut out = format!(
        "{CONTEXT_HEADER} (top {} of {} requested) for: {}\n",
        context.items.len(),
        context.k_requested,
        context.query_echo
    );
    for item in &context.items {
        out.push_str(&format!(
            "{}. [ID: {}] (score: {:.6})\n",
            item.rank, item.fc_id, item.score
        ));
        out.push_str(&format!("   Usage: {}\n", item.usage_guidance));
        out.push_str(&format!("   Task: {}\n", item.task_type));
        out.push_str(&format!(
            "   Data profile: {}\n",
            item.data_profile.to_canonical_text()
        ));
        out.push_str("   Description:\n");
        push_indented(&mut out, "     ", &item.description);
        if !item.example_code.trim().is_empty() {
            out.push_str("   Example:\n");
            push_indented(&mut out, "     ", &item.example_code);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, HashedEncoder};
    use crate::index::build_index;
    use crate::synthetic::demo_corpus;

    fn setup() -> (Corpus, VectorStore, HashedEncoder) {
        let corpus = demo_corpus(12, 6).unwrap();
        let encoder = HashedEncoder::init(EncoderConfig {
            hash_dim: 4096,
            embed_dim: 32,
            ngram_orders: vec![1, 2],
            seed: 2,
        })
        .unwrap();
        let store = build_index(&corpus, &encoder).unwrap();
        (corpus, store, encoder)
    }

    fn query_for(corpus: &Corpus, idx: usize) -> QueryRecord {
        let entry = &corpus.entries()[idx];
        QueryRecord::new(
            format!("need {} for this dataset", entry.task_type),
            entry.data_profile.clone(),
        )
        .unwrap()
    }

    #[test]
    fn items_join_back_to_corpus_entries() {
        let (corpus, store, encoder) = setup();
        let record = query_for(&corpus, 0);
        let ctx = build_tool_context(
            &store,
            &corpus,
            &encoder,
            &record,
            3,
            &ContextOptions::default(),
        )
        .unwrap();
        assert_eq!(ctx.items.len(), 3);
        assert_eq!(ctx.k_requested, 3);
        for item in &ctx.items {
            let entry = corpus.get(&item.fc_id).unwrap();
            assert_eq!(item.usage_guidance, entry.usage_guidance);
            assert_eq!(item.task_type, entry.task_type);
            assert_eq!(item.package_name, entry.package_name());
            assert_eq!(item.function_name, entry.function_name());
        }
        // ranks ascending, scores non-increasing
        for pair in ctx.items.windows(2) {
            assert_eq!(pair[1].rank, pair[0].rank + 1);
            assert!(pair[1].score <= pair[0].score);
        }
    }

    #[test]
    fn zero_k_is_rejected() {
        let (corpus, store, encoder) = setup();
        let record = query_for(&corpus, 0);
        assert!(matches!(
            build_tool_context(
                &store,
                &corpus,
                &encoder,
                &record,
                0,
                &ContextOptions::default()
            ),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn store_corpus_mismatch_names_the_id() {
        let (corpus, _, encoder) = setup();
        let other = demo_corpus(12, 99).unwrap();
        let store = build_index(&other, &encoder).unwrap();
        let record = query_for(&corpus, 0);
        let err = build_tool_context(
            &store,
            &corpus,
            &encoder,
            &record,
            1,
            &ContextOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::StoreMismatch { .. }));
    }

    #[test]
    fn render_has_one_id_marker_per_item() {
        let (corpus, store, encoder) = setup();
        let record = query_for(&corpus, 1);
        let ctx = build_tool_context(
            &store,
            &corpus,
            &encoder,
            &record,
            1,
            &ContextOptions::default(),
        )
        .unwrap();
        let block = render_context_block(&ctx);
        assert!(block.starts_with(CONTEXT_HEADER));
        assert_eq!(block.matches("[ID:").count(), 1);
        assert_eq!(block, render_context_block(&ctx));
    }

    #[test]
    fn empty_example_section_is_omitted() {
        let (corpus, store, encoder) = setup();
        let record = query_for(&corpus, 2);
        let mut ctx = build_tool_context(
            &store,
            &corpus,
            &encoder,
            &record,
            1,
            &ContextOptions::default(),
        )
        .unwrap();
        ctx.items[0].example_code = String::new();
        let block = render_context_block(&ctx);
        assert!(!block.contains("Example:"));
    }

    #[test]
    fn description_is_truncated_with_marker() {
        let long = "x".repeat(2000);
        let cut = truncate_description(&long, 100);
        assert!(cut.ends_with(TRUNCATION_MARKER));
        assert!(cut.chars().count() <= 100 + TRUNCATION_MARKER.chars().count());
        let short = truncate_description("short text", 100);
        assert_eq!(short, "short text");
    }

    #[test]
    fn context_serializes_to_json() {
        let (corpus, store, encoder) = setup();
        let record = query_for(&corpus, 3);
        let ctx = build_tool_context(
            &store,
            &corpus,
            &encoder,
            &record,
            2,
            &ContextOptions::default(),
        )
        .unwrap();
        let json = serde_json::to_value(&ctx).unwrap();
        assert_eq!(json["items"].as_array().unwrap().len(), 2);
        assert!(json["items"][0]["fc_id"].is_string());
    }
}
